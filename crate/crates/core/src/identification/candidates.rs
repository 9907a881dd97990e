use crate::bezier::{sample_path, CubicBezier, Path, SpeedProfile, TimedTrajectory};
use crate::config::PlannerConfig;
use crate::geometry::Vec2;
use crate::par;
use crate::scenario::{AgentKind, Lane, LightColor, Scenario, Side};

use super::prediction::centerline_segments;
use super::{InfeasibilityReason, Maneuver, ManeuverCandidate, Situation};

/// Nearest non-pedestrian object ahead of the ego in a given lane.
#[derive(Clone, Debug, PartialEq)]
pub struct LeadVehicle {
    pub agent_id: String,
    /// Bumper-to-bumper distance (m).
    pub gap: f64,
    pub speed: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopKind {
    RedLight,
    Crosswalk,
    Obstacle,
}

/// Arc length on the ego lane that the ego front must not pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopTarget {
    pub s: f64,
    pub kind: StopKind,
}

/// Lead object in `lane`, looking ahead of station `s_ego`.
pub fn lead_vehicle(situation: &Situation<'_>, lane: &Lane, s_ego: f64) -> Option<LeadVehicle> {
    let ego_len = situation.ego.length;
    situation
        .predictions
        .iter()
        .filter(|p| p.kind != AgentKind::Pedestrian)
        .filter_map(|p| {
            let first = p.trajectory.first();
            let c = lane.project(first.position).ok()?;
            if c.offset.abs() >= 0.5 * lane.width || c.s <= s_ego {
                return None;
            }
            Some(LeadVehicle {
                agent_id: p.agent_id.clone(),
                gap: c.s - s_ego - 0.5 * (ego_len + p.length),
                speed: first.speed,
            })
        })
        .min_by(|a, b| a.gap.total_cmp(&b.gap))
}

/// Stop constraints ahead of the ego on its current lane, nearest first.
pub fn stop_targets(situation: &Situation<'_>, config: &PlannerConfig) -> Vec<StopTarget> {
    let lane = situation.lane;
    let front = situation.coord.s + 0.5 * situation.ego.length;
    let margin = config.maneuver.stop_margin;
    let mut out = Vec::new();
    for light in situation.scenario.lights.iter().filter(|l| l.lane == lane.id) {
        if front > light.stop_line_s {
            continue;
        }
        let n = (config.horizon_s / config.dt).round() as usize;
        let red_soon = (0..=n).any(|k| light_color(light, situation.time, k as f64 * config.dt) == LightColor::Red);
        if red_soon {
            out.push(StopTarget {
                s: light.stop_line_s - margin,
                kind: StopKind::RedLight,
            });
        }
    }
    for &i in &situation.blocked_crosswalks {
        let cw = &situation.scenario.crosswalks[i];
        if cw.lanes.iter().any(|id| *id == lane.id) && front <= cw.span[0] {
            out.push(StopTarget {
                s: cw.span[0] - margin,
                kind: StopKind::Crosswalk,
            });
        }
    }
    if let Some(lead) = lead_vehicle(situation, lane, situation.coord.s) {
        if lead.speed < 0.1 {
            out.push(StopTarget {
                s: front + lead.gap - config.safety.d_min,
                kind: StopKind::Obstacle,
            });
        }
    }
    out.sort_by(|a, b| a.s.total_cmp(&b.s));
    out
}

/// Light color seen `dt_ahead` seconds after plan time `now`. A light that is red now
/// is assumed to stay red over the whole horizon.
pub(crate) fn light_color(light: &crate::scenario::TrafficLight, now: f64, dt_ahead: f64) -> LightColor {
    match light.color_at(now) {
        LightColor::Red => LightColor::Red,
        LightColor::Green => light.color_at(now + dt_ahead),
    }
}

fn path_reach(situation: &Situation<'_>, config: &PlannerConfig) -> f64 {
    situation.ego.speed.max(situation.speed_limit()) * config.horizon_s + 20.0
}

/// Point and heading `d` meters down the lane network from `(lane, s0)`, with the lane
/// and station where it ends.
fn chain_pose<'a>(scenario: &'a Scenario, lane: &'a Lane, s0: f64, d: f64) -> (Vec2, f64, &'a Lane, f64) {
    let chain = scenario.lane_chain(lane, s0, d);
    let &(l, _, to) = chain.last().expect("chain is never empty");
    let (p, h) = l.point_at(to);
    (p, h, l, to)
}

/// Path along the ego lane. When the ego is off the centerline it first merges back
/// onto it with a cubic curve.
fn keep_lane_path(situation: &Situation<'_>, config: &PlannerConfig) -> Path {
    let reach = path_reach(situation, config);
    let ego = situation.ego;
    let lane = situation.lane;
    let c = situation.coord;
    let heading_err = crate::geometry::wrap_angle(ego.heading - lane.heading_at(c.s)).abs();
    if c.offset.abs() <= 0.05 && heading_err <= 0.02 {
        return Path::new(centerline_segments(situation.scenario, lane, c.s, reach));
    }
    let d = (2.0 * ego.speed).clamp(10.0, 0.5 * reach);
    let (p3, h3, l3, s3) = chain_pose(situation.scenario, lane, c.s, d);
    let p0 = ego.position;
    let merge = CubicBezier::new(
        p0,
        p0 + Vec2::from_heading(ego.heading) * (d / 3.0),
        p3 - Vec2::from_heading(h3) * (d / 3.0),
        p3,
    );
    let mut segs = vec![merge];
    segs.extend(centerline_segments(situation.scenario, l3, s3, reach - d));
    Path::new(segs)
}

/// Wraps a trajectory as a feasible candidate for the ego of `situation`.
pub fn candidate_for(
    situation: &Situation<'_>,
    maneuver: Maneuver,
    trajectory: TimedTrajectory,
    target_lane: &str,
    commit_duration: Option<f64>,
) -> ManeuverCandidate {
    ManeuverCandidate {
        maneuver,
        v_begin: situation.ego.speed,
        v_end: trajectory.last().speed,
        trajectory,
        target_lane: target_lane.to_string(),
        feasible: true,
        infeasibility: None,
        ego_length: situation.ego.length,
        ego_width: situation.ego.width,
        commit_duration,
    }
}

/// Longitudinal profile for a keep-lane maneuver.
fn keep_lane_profile(situation: &Situation<'_>, config: &PlannerConfig, maneuver: Maneuver) -> SpeedProfile {
    let v = situation.ego.speed;
    let m = &config.maneuver;
    match maneuver {
        Maneuver::KeepLaneAccelerate => SpeedProfile::new(v, m.keep_accel, situation.speed_limit().max(v)),
        Maneuver::KeepLaneDecelerate => {
            let lead = lead_vehicle(situation, situation.lane, situation.coord.s).filter(|l| l.speed < v);
            let floor = lead.as_ref().map_or(0.0, |l| l.speed);
            // match a slower lead over the horizon when there is room to do it gently
            let decel = match &lead {
                Some(l) => {
                    let dv = v - l.speed;
                    let closed = 0.5 * dv * config.horizon_s;
                    if l.gap - closed > config.safety.d_min {
                        m.keep_decel.min(dv / config.horizon_s)
                    } else {
                        m.keep_decel
                    }
                }
                None => m.keep_decel,
            };
            SpeedProfile::new(v, -decel.max(1e-3), v).with_floor(floor)
        }
        Maneuver::Stop => {
            let front = situation.coord.s + 0.5 * situation.ego.length;
            let decel = match stop_targets(situation, config).first() {
                Some(t) if t.s - front > 0.01 => (v * v / (2.0 * (t.s - front))).min(m.stop_decel_max),
                _ => m.stop_decel_max,
            };
            SpeedProfile::new(v, -decel.max(1e-3), v)
        }
        _ => SpeedProfile::new(v, 0.0, v),
    }
}

/// Trajectory along the ego lane under an arbitrary longitudinal profile.
pub fn keep_lane_trajectory(situation: &Situation<'_>, config: &PlannerConfig, profile: SpeedProfile) -> TimedTrajectory {
    let ego = situation.ego;
    let path = keep_lane_path(situation, config);
    // past the end of the lane network there is nowhere to go
    if (ego.speed <= 0.0 && profile.accel <= 0.0) || path.segments().is_empty() {
        TimedTrajectory::stationary(ego.position, ego.heading, config.dt, config.horizon_s)
    } else {
        sample_path(&path, profile, config.dt, config.horizon_s)
    }
}

/// Builds the candidate for one keep-lane maneuver (KLA, KLS, KLD or Stop).
pub fn keep_lane_candidate(situation: &Situation<'_>, config: &PlannerConfig, maneuver: Maneuver) -> ManeuverCandidate {
    debug_assert!(!maneuver.is_lane_change());
    let profile = keep_lane_profile(situation, config, maneuver);
    let trajectory = keep_lane_trajectory(situation, config, profile);
    candidate_for(situation, maneuver, trajectory, &situation.lane.id, None)
}

fn no_lane(situation: &Situation<'_>, config: &PlannerConfig, maneuver: Maneuver, target: &str) -> ManeuverCandidate {
    let ego = situation.ego;
    let traj = TimedTrajectory::stationary(ego.position, ego.heading, config.dt, config.horizon_s);
    let mut c = candidate_for(situation, maneuver, traj, target, None);
    c.mark_infeasible(InfeasibilityReason::NoLane);
    c
}

/// Lane-change candidate toward `side`, or a `NoLane` placeholder.
pub fn lane_change_candidate(situation: &Situation<'_>, config: &PlannerConfig, side: Side) -> ManeuverCandidate {
    let maneuver = match side {
        Side::Left => Maneuver::ChangeLaneLeft,
        Side::Right => Maneuver::ChangeLaneRight,
    };
    let scenario = situation.scenario;
    let ego = situation.ego;
    let m = &config.maneuver;
    let Some(target) = situation.lane.neighbor(side).and_then(|id| scenario.lane(id)) else {
        return no_lane(situation, config, maneuver, &situation.lane.id);
    };
    let ct = match target.project(ego.position) {
        Ok(c) if ego.speed >= m.lane_change_min_speed => c,
        _ => return no_lane(situation, config, maneuver, &target.id),
    };
    let t_lc = m.lane_change_duration_s;
    let nominal = (ego.speed * t_lc).max(m.lane_change_min_length);
    let mut length = nominal;
    if let Some(lead) = lead_vehicle(situation, situation.lane, situation.coord.s) {
        // the lead's position when the ego is halfway across
        let half_gap = lead.gap + lead.speed * 0.5 * t_lc - config.safety.d_min;
        if half_gap < 0.5 * nominal {
            let shortest = (0.8 * ego.speed * t_lc).max(m.lane_change_min_length);
            length = (2.0 * half_gap).max(shortest).min(nominal);
        }
    }
    let (p3, h3, l3, s3) = chain_pose(scenario, target, ct.s, length);
    let p0 = ego.position;
    let handle = m.lane_change_handle * length;
    let curve = CubicBezier::new(
        p0,
        p0 + Vec2::from_heading(ego.heading) * handle,
        p3 - Vec2::from_heading(h3) * handle,
        p3,
    );
    let curve_len = curve.arc_length();
    let reach = path_reach(situation, config);
    let mut segs = vec![curve];
    segs.extend(centerline_segments(scenario, l3, s3, (reach - length).max(0.0)));
    let v = ego.speed;
    let trajectory = sample_path(&Path::new(segs), SpeedProfile::new(v, 0.0, v), config.dt, config.horizon_s);
    let commit = trajectory
        .samples
        .iter()
        .find(|s| s.s >= curve_len - 1e-6)
        .map_or(trajectory.duration(), |s| s.t);
    candidate_for(situation, maneuver, trajectory, &target.id, Some(commit))
}

/// One candidate per maneuver, in canonical order. Lane changes without an adjacent
/// lane (or below the minimum lane-change speed) come back marked `NoLane`.
pub fn enumerate_candidates(situation: &Situation<'_>, config: &PlannerConfig) -> Vec<ManeuverCandidate> {
    par::map(&Maneuver::ALL, |&m| match m {
        Maneuver::ChangeLaneLeft => lane_change_candidate(situation, config, Side::Left),
        Maneuver::ChangeLaneRight => lane_change_candidate(situation, config, Side::Right),
        _ => keep_lane_candidate(situation, config, m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identification::{predict_all, Prediction};
    use crate::scenario::{load_scenario, AgentState};

    fn two_lanes(ego_speed: f64, extra_agents: &str) -> Scenario {
        let doc = format!(
            r#"{{
            "lanes": [
              {{"id": "r", "centerline": [[0, 0], [1000, 0]], "width": 3.5, "speed_limit": 13.9,
                "left_neighbor": "l", "left_boundary": "dashed"}},
              {{"id": "l", "centerline": [[0, 3.5], [1000, 3.5]], "width": 3.5, "speed_limit": 13.9,
                "right_neighbor": "r", "right_boundary": "dashed"}}
            ],
            "agents": [{{"id": "ego", "kind": "ego", "position": [50, 0], "speed": {ego_speed},
                        "length": 4.5, "width": 1.8, "lane": "r", "mass": 1500}}{extra_agents}],
            "apriori_lane": "r", "profile": "regular", "duration_s": 10
        }}"#
        );
        load_scenario(doc.as_bytes()).unwrap()
    }

    fn with_situation<T>(s: &Scenario, f: impl FnOnce(&Situation<'_>, &PlannerConfig) -> T) -> T {
        let cfg = PlannerConfig::default();
        let preds: Vec<Prediction> = predict_all(s, &s.agents, &cfg);
        let ego: &AgentState = s.ego();
        let sit = Situation::new(s, 0.0, ego, &preds).unwrap();
        f(&sit, &cfg)
    }

    #[test]
    fn six_candidates_in_order() {
        let s = two_lanes(10.0, "");
        let cands = with_situation(&s, enumerate_candidates);
        let order: Vec<Maneuver> = cands.iter().map(|c| c.maneuver).collect();
        assert_eq!(order, Maneuver::ALL);
        assert_eq!(cands[1].infeasibility, Some(InfeasibilityReason::NoLane));
        assert!(cands[0].feasible);
        assert_eq!(cands[0].target_lane, "l");
    }

    #[test]
    fn keep_lane_speeds() {
        let s = two_lanes(10.0, "");
        let cands = with_situation(&s, enumerate_candidates);
        let kla = &cands[Maneuver::KeepLaneAccelerate.index()];
        assert!((kla.v_end - 13.9).abs() < 1e-9);
        let kls = &cands[Maneuver::KeepLaneSameSpeed.index()];
        assert!((kls.trajectory.distance() - 40.0).abs() < 1e-6);
        let kld = &cands[Maneuver::KeepLaneDecelerate.index()];
        assert!((kld.v_end - 4.0).abs() < 1e-9);
        let stop = &cands[Maneuver::Stop.index()];
        assert!(stop.v_end.abs() < 1e-9);
        assert!(stop.trajectory.samples.windows(2).all(|w| w[0].accel_lon >= -3.0 - 1e-9));
    }

    #[test]
    fn lane_change_ends_on_target_centerline() {
        let s = two_lanes(10.0, "");
        let cands = with_situation(&s, enumerate_candidates);
        let cll = &cands[0];
        let commit = cll.commit_duration.unwrap();
        assert!((commit - 3.0).abs() < 0.15, "{commit}");
        assert!((cll.trajectory.last().position.y - 3.5).abs() < 1e-6);
        let peak = cll.trajectory.samples.iter().map(|x| x.accel_lat.abs()).fold(0.0, f64::max);
        assert!(peak < 1.8, "{peak}");
    }

    #[test]
    fn stop_targets_obstacle() {
        let s = two_lanes(
            10.0,
            r#", {"id": "box", "kind": "static_obstacle", "position": [90, 0], "speed": 0,
                 "length": 2, "width": 2, "lane": "r"}"#,
        );
        let stop = with_situation(&s, |sit, cfg| {
            let t = stop_targets(sit, cfg);
            assert_eq!(t.len(), 1);
            // front at 52.25, obstacle rear at 89, minus 5 m
            assert!((t[0].s - 84.0).abs() < 1e-9);
            keep_lane_candidate(sit, cfg, Maneuver::Stop)
        });
        // v^2 / (2 * 31.75) = 1.575 m/s^2; the stop takes longer than the horizon
        assert!((stop.trajectory.samples[0].accel_lon + 100.0 / 63.5).abs() < 1e-9);
        assert!((stop.v_end - (10.0 - 4.0 * 100.0 / 63.5)).abs() < 1e-9);
    }

    #[test]
    fn kld_floor_is_lead_speed() {
        let s = two_lanes(
            12.0,
            r#", {"id": "lead", "kind": "vehicle", "position": [120, 0], "speed": 10,
                 "length": 4.5, "width": 1.8, "lane": "r"}"#,
        );
        let kld = with_situation(&s, |sit, cfg| keep_lane_candidate(sit, cfg, Maneuver::KeepLaneDecelerate));
        assert!((kld.v_end - 10.0).abs() < 1e-9);
    }
}
