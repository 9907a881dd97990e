//! Profit evaluation and maneuver selection, and the per-tick planning pipeline.

use std::collections::BTreeMap;

use crate::bezier::{sample_path, CubicBezier, Path, SpeedProfile};
use crate::config::PlannerConfig;
use crate::geometry::Vec2;
use crate::identification::{
    enumerate_candidates, feasibility_filter, predict_all, InfeasibilityReason, Maneuver, ManeuverCandidate,
    Prediction, Situation,
};
use crate::par;
use crate::resources::{evaluate, ResourceAssessment, WeightTable, RESOURCE_COUNT};
use crate::scenario::{AgentState, DriverProfile, Scenario};

/// Profits closer than this are considered equal.
pub const TIE_EPS: f64 = 1e-9;

/// Weighted sum of resource values.
pub fn profit(assessment: &ResourceAssessment, weights: &WeightTable) -> f64 {
    weighted_sum(&assessment.mu, &weights.weights)
}

pub fn weighted_sum(mu: &[f64; RESOURCE_COUNT], weights: &[f64; RESOURCE_COUNT]) -> f64 {
    mu.iter().zip(weights).map(|(m, w)| m * w).sum()
}

/// Position in the fixed tie-break order (lower wins).
pub fn tie_rank(m: Maneuver) -> usize {
    match m {
        Maneuver::KeepLaneSameSpeed => 0,
        Maneuver::KeepLaneAccelerate => 1,
        Maneuver::KeepLaneDecelerate => 2,
        Maneuver::ChangeLaneLeft => 3,
        Maneuver::ChangeLaneRight => 4,
        Maneuver::Stop => 5,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Choice {
    pub chosen: Maneuver,
    pub value: f64,
    pub tie_break_applied: bool,
}

/// Argmax over `(maneuver, profit)` pairs. Ties go to `previous` if it is among the
/// best, then to the fixed order.
pub fn decide(profits: &[(Maneuver, f64)], previous: Option<Maneuver>) -> Option<Choice> {
    let best = profits.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<Maneuver> = profits.iter().filter(|p| best - p.1 < TIE_EPS).map(|p| p.0).collect();
    let chosen = match previous.filter(|p| tied.contains(p)) {
        Some(p) => p,
        None => *tied.iter().min_by_key(|m| tie_rank(**m))?,
    };
    let value = profits.iter().find(|p| p.0 == chosen).map(|p| p.1)?;
    Some(Choice {
        chosen,
        value,
        tie_break_applied: tied.len() > 1,
    })
}

/// Inputs of one planning instant.
#[derive(Clone, Copy, Debug)]
pub struct WorldSnapshot<'a> {
    /// Static map, lights and mission; agent states in it are ignored.
    pub scenario: &'a Scenario,
    pub agents: &'a [AgentState],
    pub time: f64,
    pub previous: Option<Maneuver>,
    pub profile: DriverProfile,
}

impl WorldSnapshot<'_> {
    pub fn ego(&self) -> &AgentState {
        self.agents.iter().find(|a| a.is_ego()).expect("snapshot has an ego")
    }
}

#[derive(Clone, Debug)]
pub struct Decision {
    pub chosen: Maneuver,
    /// Profit of every feasible maneuver.
    pub profits: BTreeMap<Maneuver, f64>,
    /// Resource assessment of every candidate that has a trajectory.
    pub assessments: BTreeMap<Maneuver, ResourceAssessment>,
    pub candidates: Vec<ManeuverCandidate>,
    pub tie_break_applied: bool,
    pub timestamp: f64,
    /// Set when nothing was feasible and Stop was forced.
    pub fallback: Option<InfeasibilityReason>,
}

impl Decision {
    pub fn chosen_candidate(&self) -> &ManeuverCandidate {
        self.candidate(self.chosen).expect("chosen maneuver has a candidate")
    }

    pub fn candidate(&self, m: Maneuver) -> Option<&ManeuverCandidate> {
        self.candidates.iter().find(|c| c.maneuver == m)
    }

    pub fn chosen_assessment(&self) -> Option<&ResourceAssessment> {
        self.assessments.get(&self.chosen)
    }
}

/// Raw μ for each candidate that has a trajectory, with states relative to the
/// maneuver being executed (`previous`, or keep-lane-same-speed).
pub fn assess_candidates(
    candidates: &[ManeuverCandidate],
    situation: &Situation<'_>,
    config: &PlannerConfig,
    previous: Option<Maneuver>,
) -> BTreeMap<Maneuver, ResourceAssessment> {
    let evaluated: Vec<&ManeuverCandidate> = candidates
        .iter()
        .filter(|c| c.infeasibility != Some(InfeasibilityReason::NoLane))
        .collect();
    let mus: Vec<[f64; RESOURCE_COUNT]> = par::map(&evaluated, |c| evaluate(c, situation, config));
    let current_maneuver = previous.unwrap_or(Maneuver::KeepLaneSameSpeed);
    let current = evaluated
        .iter()
        .zip(&mus)
        .find(|(c, _)| c.maneuver == current_maneuver)
        .map(|(_, mu)| *mu);
    evaluated
        .iter()
        .zip(mus)
        .map(|(c, mu)| {
            (
                c.maneuver,
                ResourceAssessment::new(c.maneuver, mu, &config.thresholds, current.as_ref()),
            )
        })
        .collect()
}

/// One full planning step: predict, enumerate, filter, evaluate, decide.
pub fn plan_tick(snapshot: &WorldSnapshot<'_>, config: &PlannerConfig) -> Decision {
    let predictions = predict_all(snapshot.scenario, snapshot.agents, config);
    plan_with_predictions(snapshot, &predictions, config)
}

pub fn plan_with_predictions(snapshot: &WorldSnapshot<'_>, predictions: &[Prediction], config: &PlannerConfig) -> Decision {
    let weights = WeightTable::for_profile(snapshot.profile);
    plan_weighted(snapshot, predictions, config, &weights.weights)
}

/// The planning pipeline with an arbitrary weight vector over the resources.
pub fn plan_weighted(
    snapshot: &WorldSnapshot<'_>,
    predictions: &[Prediction],
    config: &PlannerConfig,
    weights: &[f64; RESOURCE_COUNT],
) -> Decision {
    let ego = snapshot.ego();
    let Some(situation) = Situation::new(snapshot.scenario, snapshot.time, ego, predictions) else {
        return off_road_stop(ego, snapshot.time, config);
    };
    let mut candidates = enumerate_candidates(&situation, config);
    let outcome = feasibility_filter(&mut candidates, &situation, config);
    let assessments = assess_candidates(&candidates, &situation, config, snapshot.previous);
    let profits: BTreeMap<Maneuver, f64> = outcome
        .feasible
        .iter()
        .map(|m| (*m, weighted_sum(&assessments[m].mu, weights)))
        .collect();
    let table: Vec<(Maneuver, f64)> = profits.iter().map(|(m, v)| (*m, *v)).collect();
    let choice = decide(&table, snapshot.previous).expect("feasible set is never empty");
    Decision {
        chosen: choice.chosen,
        profits,
        assessments,
        candidates,
        tie_break_applied: choice.tie_break_applied,
        timestamp: snapshot.time,
        fallback: outcome.fallback,
    }
}

/// Straight-line braking when the ego is not on any lane.
fn off_road_stop(ego: &AgentState, time: f64, config: &PlannerConfig) -> Decision {
    let reach = ego.speed * config.horizon_s + 1.0;
    let path = Path::new(vec![CubicBezier::line(
        ego.position,
        ego.position + Vec2::from_heading(ego.heading) * reach,
    )]);
    let trajectory = sample_path(
        &path,
        SpeedProfile::new(ego.speed, -config.maneuver.stop_decel_max, ego.speed),
        config.dt,
        config.horizon_s,
    );
    let candidate = ManeuverCandidate {
        maneuver: Maneuver::Stop,
        v_begin: ego.speed,
        v_end: trajectory.last().speed,
        trajectory,
        target_lane: ego.lane.clone().unwrap_or_default(),
        feasible: true,
        infeasibility: None,
        ego_length: ego.length,
        ego_width: ego.width,
        commit_duration: None,
    };
    Decision {
        chosen: Maneuver::Stop,
        profits: BTreeMap::from([(Maneuver::Stop, 0.0)]),
        assessments: BTreeMap::new(),
        candidates: vec![candidate],
        tie_break_applied: false,
        timestamp: time,
        fallback: Some(InfeasibilityReason::NoLane),
    }
}
