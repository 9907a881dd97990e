use crate::bezier::{sample_path, CubicBezier, Path, SpeedProfile, TimedTrajectory};
use crate::config::PlannerConfig;
use crate::geometry::Vec2;
use crate::par;
use crate::scenario::{AgentKind, AgentState, Scenario};

use super::{interacting_agents, Prediction};

/// Constant-velocity prediction of a non-ego agent over `horizon` seconds.
///
/// Lane-bound vehicles follow their lane centerline (and successors) and the forecast
/// stops where the lane network ends. Pedestrians and lane-less agents move in a
/// straight line along their heading.
pub fn predict_oru(agent: &AgentState, scenario: &Scenario, horizon: f64, dt: f64) -> Prediction {
    debug_assert!(!agent.is_ego());
    let trajectory = if agent.speed <= 0.0 || agent.kind == AgentKind::StaticObstacle {
        TimedTrajectory::stationary(agent.position, agent.heading, dt, horizon)
    } else {
        let reach = agent.speed * horizon;
        let lane_path = (agent.kind != AgentKind::Pedestrian)
            .then(|| agent.lane.as_deref().and_then(|id| scenario.lane(id)))
            .flatten()
            .and_then(|lane| lane.project(agent.position).ok().map(|c| (lane, c)))
            .map(|(lane, c)| lane_centerline_path(scenario, lane, c.s, reach))
            .filter(|p| !p.segments().is_empty());
        let path = lane_path.unwrap_or_else(|| {
            let end = agent.position + Vec2::from_heading(agent.heading) * reach;
            Path::new(vec![CubicBezier::line(agent.position, end)])
        });
        sample_path(&path, SpeedProfile::new(agent.speed, 0.0, agent.speed), dt, horizon)
    };
    Prediction {
        agent_id: agent.id.clone(),
        kind: agent.kind,
        length: agent.length,
        width: agent.width,
        horizon: trajectory.duration(),
        trajectory,
    }
}

/// Predictions for every agent within range of the ego, in scenario order.
pub fn predict_all(scenario: &Scenario, agents: &[AgentState], config: &PlannerConfig) -> Vec<Prediction> {
    let ego = agents.iter().find(|a| a.is_ego()).expect("snapshot has an ego");
    let targets: Vec<&AgentState> = interacting_agents(agents, ego, config).collect();
    par::map(&targets, |a| predict_oru(a, scenario, config.horizon_s, config.dt))
}

/// Centerline from `(lane, s0)` forward over `reach` m as straight cubic pieces.
pub(crate) fn lane_centerline_path(
    scenario: &Scenario,
    lane: &crate::scenario::Lane,
    s0: f64,
    reach: f64,
) -> Path {
    Path::new(centerline_segments(scenario, lane, s0, reach))
}

pub(crate) fn centerline_segments(
    scenario: &Scenario,
    lane: &crate::scenario::Lane,
    s0: f64,
    reach: f64,
) -> Vec<CubicBezier> {
    let mut segs = Vec::new();
    for (l, from, to) in scenario.lane_chain(lane, s0, reach) {
        // split at polyline vertices so each piece is straight
        let mut cuts = vec![from];
        let mut station = 0.0;
        for w in l.centerline.windows(2) {
            station += w[0].distance(w[1]);
            if station > from + 1e-9 && station < to - 1e-9 {
                cuts.push(station);
            }
        }
        cuts.push(to);
        for c in cuts.windows(2) {
            if c[1] - c[0] > 1e-9 {
                segs.push(CubicBezier::line(l.point_at(c[0]).0, l.point_at(c[1]).0));
            }
        }
    }
    segs
}
