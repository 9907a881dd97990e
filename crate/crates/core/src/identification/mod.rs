//! Scenario recognition and identification: predict surrounding road users, build one
//! candidate trajectory per discrete maneuver, and filter them down to the feasible set.

mod candidates;
mod feasibility;
mod prediction;
mod ttc;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bezier::TimedTrajectory;
use crate::config::PlannerConfig;
use crate::geometry::{Obb, Vec2};
use crate::scenario::{AgentKind, AgentState, Lane, LaneCoord, Scenario};

pub use candidates::{
    candidate_for, enumerate_candidates, keep_lane_candidate, keep_lane_trajectory, lane_change_candidate, lead_vehicle, stop_targets,
    LeadVehicle, StopKind, StopTarget,
};
pub use feasibility::{assess_feasibility, feasibility_filter, FeasibilityOutcome};
pub use prediction::{predict_all, predict_oru};
pub use ttc::{footprint_at, time_to_collision};

/// The discrete action set, in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Maneuver {
    #[serde(rename = "CLL")]
    ChangeLaneLeft,
    #[serde(rename = "CLR")]
    ChangeLaneRight,
    #[serde(rename = "KLA")]
    KeepLaneAccelerate,
    #[serde(rename = "KLS")]
    KeepLaneSameSpeed,
    #[serde(rename = "KLD")]
    KeepLaneDecelerate,
    #[serde(rename = "STOP")]
    Stop,
}

impl Maneuver {
    pub const ALL: [Maneuver; 6] = [
        Maneuver::ChangeLaneLeft,
        Maneuver::ChangeLaneRight,
        Maneuver::KeepLaneAccelerate,
        Maneuver::KeepLaneSameSpeed,
        Maneuver::KeepLaneDecelerate,
        Maneuver::Stop,
    ];

    pub const COUNT: usize = 6;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        match self {
            Maneuver::ChangeLaneLeft => "CLL",
            Maneuver::ChangeLaneRight => "CLR",
            Maneuver::KeepLaneAccelerate => "KLA",
            Maneuver::KeepLaneSameSpeed => "KLS",
            Maneuver::KeepLaneDecelerate => "KLD",
            Maneuver::Stop => "STOP",
        }
    }

    pub fn is_lane_change(self) -> bool {
        matches!(self, Maneuver::ChangeLaneLeft | Maneuver::ChangeLaneRight)
    }
}

impl fmt::Display for Maneuver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Maneuver {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Maneuver::ALL
            .into_iter()
            .find(|m| m.code() == s)
            .ok_or_else(|| format!("unknown maneuver `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfeasibilityReason {
    CollisionRisk,
    RuleViolation,
    NoLane,
}

/// Constant-velocity forecast of one road user.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub agent_id: String,
    pub kind: AgentKind,
    pub length: f64,
    pub width: f64,
    pub trajectory: TimedTrajectory,
    pub horizon: f64,
}

impl Prediction {
    pub fn footprint(&self, k: usize) -> Obb {
        let s = &self.trajectory.samples[k.min(self.trajectory.samples.len() - 1)];
        Obb::new(s.position, s.heading, self.length, self.width)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManeuverCandidate {
    pub maneuver: Maneuver,
    pub trajectory: TimedTrajectory,
    pub target_lane: String,
    /// Speed at the start of the maneuver (m/s).
    pub v_begin: f64,
    /// Speed at the end of the trajectory (m/s).
    pub v_end: f64,
    pub feasible: bool,
    pub infeasibility: Option<InfeasibilityReason>,
    pub ego_length: f64,
    pub ego_width: f64,
    /// For lane changes, trajectory time at which the ego settles on the target lane.
    pub commit_duration: Option<f64>,
}

impl ManeuverCandidate {
    pub fn footprint(&self, k: usize) -> Obb {
        footprint_at(&self.trajectory, k, self.ego_length, self.ego_width)
    }

    pub(crate) fn mark_infeasible(&mut self, reason: InfeasibilityReason) {
        self.feasible = false;
        self.infeasibility = Some(reason);
    }
}

/// Everything the identification phase needs to know about the current instant.
#[derive(Clone, Debug)]
pub struct Situation<'a> {
    pub scenario: &'a Scenario,
    pub time: f64,
    pub ego: &'a AgentState,
    pub lane: &'a Lane,
    pub coord: LaneCoord,
    pub predictions: &'a [Prediction],
    /// Indices into `scenario.crosswalks` that a pedestrian occupies now or within the horizon.
    pub blocked_crosswalks: Vec<usize>,
}

impl<'a> Situation<'a> {
    /// Returns `None` when the ego is not on any lane.
    pub fn new(
        scenario: &'a Scenario,
        time: f64,
        ego: &'a AgentState,
        predictions: &'a [Prediction],
    ) -> Option<Self> {
        let (lane, coord) = ego
            .lane
            .as_deref()
            .and_then(|id| scenario.lane(id))
            .and_then(|l| l.project(ego.position).ok().map(|c| (l, c)))
            .filter(|(l, c)| c.offset.abs() <= 0.5 * l.width)
            .or_else(|| scenario.locate(ego.position))?;
        let blocked_crosswalks = scenario
            .crosswalks
            .iter()
            .enumerate()
            .filter(|(_, cw)| crosswalk_blocked(scenario, cw, predictions))
            .map(|(i, _)| i)
            .collect();
        Some(Situation {
            scenario,
            time,
            ego,
            lane,
            coord,
            predictions,
            blocked_crosswalks,
        })
    }

    pub fn speed_limit(&self) -> f64 {
        self.lane.speed_limit
    }
}

/// Rectangles covering a crosswalk on each of its lanes.
pub fn crosswalk_regions(scenario: &Scenario, cw: &crate::scenario::Crosswalk) -> Vec<Obb> {
    cw.lanes
        .iter()
        .filter_map(|id| scenario.lane(id))
        .map(|l| l.region(cw.span[0], cw.span[1]))
        .collect()
}

/// How far ahead of a standing pedestrian to look for a crosswalk they are waiting at (m).
pub const CURB_PROBE: f64 = 2.5;

fn crosswalk_blocked(scenario: &Scenario, cw: &crate::scenario::Crosswalk, predictions: &[Prediction]) -> bool {
    let regions = crosswalk_regions(scenario, cw);
    let hits = |o: &Obb| regions.iter().any(|r| r.overlaps(o));
    predictions.iter().filter(|p| p.kind == AgentKind::Pedestrian).any(|p| {
        let first = &p.trajectory.samples[0];
        // someone standing at the curb and facing the crossing is about to use it
        let waiting = first.speed < 0.1 && {
            let probe = p.footprint(0);
            hits(&Obb { center: probe.center + Vec2::from_heading(probe.heading) * CURB_PROBE, ..probe })
        };
        waiting || (0..p.trajectory.samples.len()).any(|k| hits(&p.footprint(k)))
    })
}

/// Agents within the configured interaction range of the ego, excluding the ego.
pub fn interacting_agents<'a>(
    agents: &'a [AgentState],
    ego: &AgentState,
    config: &PlannerConfig,
) -> impl Iterator<Item = &'a AgentState> + 'a {
    let ego_pos = ego.position;
    let range = config.interaction_range;
    agents
        .iter()
        .filter(move |a| !a.is_ego() && a.position.distance(ego_pos) <= range)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maneuver_set_has_six_members_in_order() {
        assert_eq!(Maneuver::ALL.len(), Maneuver::COUNT);
        for (i, m) in Maneuver::ALL.iter().enumerate() {
            assert_eq!(m.index(), i);
            assert_eq!(m.code().parse::<Maneuver>().unwrap(), *m);
        }
    }
}
