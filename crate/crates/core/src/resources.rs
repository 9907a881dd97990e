//! Resource evaluation: ROC weights per driver profile, the six value functions and
//! resource-state classification.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::{ComfortParams, PlannerConfig, SafetyParams, StateThresholds};
use crate::error::WeightError;
use crate::geometry::{Aabb, Obb, Vec2};
use crate::identification::{Maneuver, ManeuverCandidate, Prediction, Situation};
use crate::scenario::{DriverProfile, Lane};

pub const RESOURCE_COUNT: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceType {
    Safety,
    Comfort,
    Objective,
    AprioriLane,
    Energy,
    Crowdedness,
}

impl ResourceType {
    pub const ALL: [ResourceType; RESOURCE_COUNT] = [
        ResourceType::Safety,
        ResourceType::Comfort,
        ResourceType::Objective,
        ResourceType::AprioriLane,
        ResourceType::Energy,
        ResourceType::Crowdedness,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ResourceType::Safety => "safety",
            ResourceType::Comfort => "comfort",
            ResourceType::Objective => "objective",
            ResourceType::AprioriLane => "apriori_lane",
            ResourceType::Energy => "energy",
            ResourceType::Crowdedness => "crowdedness",
        }
    }
}

impl fmt::Display for ResourceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ranks (1 = most important) per driver profile, indexed by [`ResourceType`].
pub fn profile_ranking(profile: DriverProfile) -> [u8; RESOURCE_COUNT] {
    match profile {
        DriverProfile::Regular => [1, 2, 3, 4, 5, 6],
        DriverProfile::Aggressive => [2, 3, 1, 4, 5, 6],
        DriverProfile::FuelEfficient => [2, 3, 5, 4, 1, 6],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightTable {
    pub ranks: [u8; RESOURCE_COUNT],
    pub weights: [f64; RESOURCE_COUNT],
}

impl WeightTable {
    pub fn for_profile(profile: DriverProfile) -> WeightTable {
        roc_weights(profile_ranking(profile)).expect("built-in rankings are permutations")
    }

    pub fn weight(&self, r: ResourceType) -> f64 {
        self.weights[r.index()]
    }
}

/// Rank-order-centroid weight of rank `k` among `n`.
pub fn roc_weight(k: usize, n: usize) -> f64 {
    (k..=n).map(|j| 1.0 / j as f64).sum::<f64>() / n as f64
}

/// Weight table for a ranking given per resource (in [`ResourceType`] order).
pub fn roc_weights(ranking: [u8; RESOURCE_COUNT]) -> Result<WeightTable, WeightError> {
    let mut seen = [false; RESOURCE_COUNT];
    for &r in &ranking {
        let i = (r as usize).wrapping_sub(1);
        if i >= RESOURCE_COUNT || seen[i] {
            return Err(WeightError::InvalidRanking(ranking.to_vec()));
        }
        seen[i] = true;
    }
    let weights = ranking.map(|r| roc_weight(r as usize, RESOURCE_COUNT));
    Ok(WeightTable { ranks: ranking, weights })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceState {
    Desired,
    Acquired,
    Threatened,
    Loss,
}

impl ResourceState {
    pub const ALL: [ResourceState; 4] = [
        ResourceState::Desired,
        ResourceState::Acquired,
        ResourceState::Threatened,
        ResourceState::Loss,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ResourceState::Desired => "desired",
            ResourceState::Acquired => "acquired",
            ResourceState::Threatened => "threatened",
            ResourceState::Loss => "loss",
        }
    }
}

/// State of a resource at value `mu`; `mu_current` is the same resource under the
/// maneuver being executed now.
pub fn classify_state(mu: f64, thresholds: &StateThresholds, mu_current: Option<f64>) -> ResourceState {
    if mu < thresholds.loss {
        ResourceState::Loss
    } else if mu < thresholds.acquired {
        ResourceState::Threatened
    } else if mu_current.is_some_and(|c| c < thresholds.acquired) {
        ResourceState::Desired
    } else {
        ResourceState::Acquired
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceAssessment {
    pub maneuver: Maneuver,
    pub mu: [f64; RESOURCE_COUNT],
    pub states: [ResourceState; RESOURCE_COUNT],
}

impl ResourceAssessment {
    pub fn new(maneuver: Maneuver, mu: [f64; RESOURCE_COUNT], thresholds: &StateThresholds, current: Option<&[f64; RESOURCE_COUNT]>) -> Self {
        let mu = mu.map(clamp01);
        let states = std::array::from_fn(|i| classify_state(mu[i], thresholds, current.map(|c| c[i])));
        ResourceAssessment { maneuver, mu, states }
    }

    pub fn mu(&self, r: ResourceType) -> f64 {
        self.mu[r.index()]
    }

    pub fn state(&self, r: ResourceType) -> ResourceState {
        self.states[r.index()]
    }
}

pub fn clamp01(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// Gap ratios of one object seen from an ego pose. Returns `(r_lon, r_lat)`.
pub fn gap_ratios(
    ego_pos: Vec2,
    ego_heading: f64,
    ego_speed: f64,
    (ego_len, ego_wid): (f64, f64),
    obj_pos: Vec2,
    obj_speed: f64,
    (obj_len, obj_wid): (f64, f64),
    params: &SafetyParams,
) -> (f64, f64) {
    let fwd = Vec2::from_heading(ego_heading);
    let rel = obj_pos - ego_pos;
    let lon = rel.dot(fwd);
    let d_lon = (lon.abs() - 0.5 * (ego_len + obj_len)).max(0.0);
    let d_lat = fwd.cross(rel).abs();
    let governing_speed = if lon >= 0.0 { ego_speed } else { obj_speed };
    let required_lon = governing_speed * params.time_headway + params.d_min;
    let required_lat = 0.5 * (ego_wid + obj_wid) + params.lateral_margin;
    (d_lon / required_lon, d_lat / required_lat)
}

/// Longitudinal and lateral safety margin of the candidate against every prediction;
/// the worst object at the worst sample governs.
pub fn mu_safety(candidate: &ManeuverCandidate, predictions: &[Prediction], params: &SafetyParams) -> f64 {
    let mut mu: f64 = 1.0;
    for p in predictions {
        let m = p.trajectory.samples.len();
        for (k, e) in candidate.trajectory.samples.iter().enumerate() {
            let o = &p.trajectory.samples[k.min(m - 1)];
            let (r_lon, r_lat) = gap_ratios(
                e.position,
                e.heading,
                e.speed,
                (candidate.ego_length, candidate.ego_width),
                o.position,
                o.speed,
                (p.length, p.width),
                params,
            );
            mu = mu.min(clamp01(r_lon.max(r_lat)));
        }
    }
    mu
}

fn falloff(x: f64, comfort: f64, max: f64) -> f64 {
    if x <= comfort {
        1.0
    } else {
        clamp01((max - x) / (max - comfort))
    }
}

/// Comfort of a single acceleration pair.
pub fn comfort_of(a_lon: f64, a_lat: f64, params: &ComfortParams) -> f64 {
    let lon = if a_lon >= 0.0 {
        falloff(a_lon, params.lon_accel_comfort, params.lon_max)
    } else {
        falloff(-a_lon, params.lon_brake_comfort, params.lon_max)
    };
    lon.min(falloff(a_lat.abs(), params.lat_comfort, params.lat_max))
}

pub fn mu_comfort(candidate: &ManeuverCandidate, params: &ComfortParams) -> f64 {
    let samples = &candidate.trajectory.samples;
    // the last sample repeats the previous tick's acceleration
    let n = samples.len().saturating_sub(1).max(1);
    samples[..n.min(samples.len())]
        .iter()
        .map(|s| comfort_of(s.accel_lon, s.accel_lat, params))
        .fold(1.0, f64::min)
}

pub fn mu_objective(candidate: &ManeuverCandidate, speed_limit: f64, horizon: f64) -> f64 {
    clamp01(candidate.trajectory.distance() / (speed_limit * horizon))
}

/// Lateral distance between the a-priori lane centerline and the centerline of the
/// lane the candidate ends on.
pub fn apriori_offset(candidate: &ManeuverCandidate, target: Option<&Lane>, apriori: &Lane) -> f64 {
    let end = candidate.trajectory.last().position;
    let center = target
        .and_then(|l| l.project(end).ok().map(|c| l.point_at(c.s).0))
        .unwrap_or(end);
    apriori.project(center).map_or(f64::INFINITY, |c| c.offset.abs())
}

pub fn mu_apriori(delta_y: f64, lane_width: f64) -> f64 {
    clamp01(1.0 - delta_y / (2.0 * lane_width))
}

/// Kinetic energy spent to go from `v_a` to `v_b` (kJ). Slowing down costs nothing.
pub fn delta_kinetic_energy(mass: f64, v_a: f64, v_b: f64) -> f64 {
    if v_b > v_a {
        0.5 * mass * (v_b - v_a).powi(2) / 1000.0
    } else {
        0.0
    }
}

/// Energy normalizer (kJ).
pub fn energy_reference(mass: f64, config: &PlannerConfig) -> f64 {
    0.5 * mass * (config.energy_accel_ref * config.horizon_s).powi(2) / 1000.0
}

pub fn mu_energy(candidate: &ManeuverCandidate, mass: f64, e_ref: f64) -> f64 {
    1.0 - clamp01(delta_kinetic_energy(mass, candidate.v_begin, candidate.v_end) / e_ref)
}

fn corridor(obbs: impl Iterator<Item = Obb>, margin: f64) -> (Vec<Obb>, Vec<Aabb>, Aabb) {
    let boxes: Vec<Obb> = obbs.map(|o| o.inflated(margin)).collect();
    let aabbs: Vec<Aabb> = boxes.iter().map(Obb::aabb).collect();
    let hull = aabbs.iter().fold(Aabb::EMPTY, |a, b| a.union(*b));
    (boxes, aabbs, hull)
}

/// Number of predictions whose swept footprint touches the candidate's swept footprint.
pub fn crowded_count(candidate: &ManeuverCandidate, predictions: &[Prediction], margin: f64) -> usize {
    let n = candidate.trajectory.samples.len();
    let (ego, ego_aabb, ego_hull) = corridor((0..n).map(|k| candidate.footprint(k)), margin);
    predictions
        .iter()
        .filter(|p| {
            let m = p.trajectory.samples.len();
            let (obj, obj_aabb, obj_hull) = corridor((0..m).map(|k| p.footprint(k)), 0.0);
            if !ego_hull.intersects(&obj_hull) {
                return false;
            }
            obj.iter().zip(&obj_aabb).any(|(o, oa)| {
                oa.intersects(&ego_hull)
                    && ego.iter().zip(&ego_aabb).any(|(e, ea)| ea.intersects(oa) && e.overlaps(o))
            })
        })
        .count()
}

pub fn mu_crowdedness(count: usize, n_ref: f64) -> f64 {
    1.0 - clamp01(count as f64 / n_ref)
}

/// Raw μ vector of one candidate.
pub fn evaluate(candidate: &ManeuverCandidate, situation: &Situation<'_>, config: &PlannerConfig) -> [f64; RESOURCE_COUNT] {
    let scenario = situation.scenario;
    let apriori = crate::scenario::resolve_apriori_lane(scenario, situation.ego);
    let mass = situation.ego.mass.unwrap_or(crate::scenario::DEFAULT_MASS);
    let dy = apriori_offset(candidate, scenario.lane(&candidate.target_lane), apriori);
    let mut mu = [0.0; RESOURCE_COUNT];
    mu[ResourceType::Safety.index()] = mu_safety(candidate, situation.predictions, &config.safety);
    mu[ResourceType::Comfort.index()] = mu_comfort(candidate, &config.comfort);
    mu[ResourceType::Objective.index()] = mu_objective(candidate, situation.speed_limit(), config.horizon_s);
    mu[ResourceType::AprioriLane.index()] = mu_apriori(dy, apriori.width);
    mu[ResourceType::Energy.index()] = mu_energy(candidate, mass, energy_reference(mass, config));
    mu[ResourceType::Crowdedness.index()] = mu_crowdedness(
        crowded_count(candidate, situation.predictions, config.crowdedness.corridor_margin),
        config.crowdedness.n_ref,
    );
    mu
}
