use crate::config::PlannerConfig;
use crate::par;
use crate::scenario::{LightColor, Marking, Side};

use super::candidates::light_color;
use super::{crosswalk_regions, time_to_collision, InfeasibilityReason, Maneuver, ManeuverCandidate, Situation};

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityOutcome {
    /// Feasible maneuvers in canonical order; never empty.
    pub feasible: Vec<Maneuver>,
    /// Set when every candidate failed and Stop was kept anyway; holds Stop's own reason.
    pub fallback: Option<InfeasibilityReason>,
}

/// Why `candidate` cannot be executed, checked in the order lane availability,
/// collision risk, traffic rules. `None` means feasible.
pub fn assess_feasibility(
    candidate: &ManeuverCandidate,
    situation: &Situation<'_>,
    config: &PlannerConfig,
) -> Option<InfeasibilityReason> {
    if candidate.infeasibility == Some(InfeasibilityReason::NoLane) {
        return Some(InfeasibilityReason::NoLane);
    }
    let min_ttc = situation
        .predictions
        .iter()
        .map(|p| time_to_collision(candidate, p))
        .fold(f64::INFINITY, f64::min);
    if min_ttc < config.ttc_min {
        return Some(InfeasibilityReason::CollisionRisk);
    }
    if violates_rules(candidate, situation, config) {
        return Some(InfeasibilityReason::RuleViolation);
    }
    None
}

fn violates_rules(c: &ManeuverCandidate, situation: &Situation<'_>, config: &PlannerConfig) -> bool {
    let scenario = situation.scenario;
    let lane = situation.lane;
    let tol = config.speed_tolerance;
    let side = match c.maneuver {
        Maneuver::ChangeLaneLeft => Some(Side::Left),
        Maneuver::ChangeLaneRight => Some(Side::Right),
        _ => None,
    };
    if side.is_some_and(|s| lane.marking(s) == Marking::Solid) {
        return true;
    }
    if c.maneuver == Maneuver::KeepLaneAccelerate && c.v_begin >= lane.speed_limit - tol {
        return true;
    }
    for s in &c.trajectory.samples {
        let limit = scenario.locate(s.position).map_or(lane.speed_limit, |(l, _)| l.speed_limit);
        if s.speed > limit.max(c.v_begin) + tol {
            return true;
        }
    }
    // red stop lines
    for light in &scenario.lights {
        let Some(l) = scenario.lane(&light.lane) else { continue };
        let front_s = |k: usize| {
            let front = c.footprint(k).front();
            l.project(front).ok().filter(|co| co.offset.abs() <= 0.5 * l.width).map(|co| co.s)
        };
        if front_s(0).is_some_and(|s| s > light.stop_line_s) {
            continue;
        }
        for k in 1..c.trajectory.samples.len() {
            let t = c.trajectory.samples[k].t;
            if front_s(k).is_some_and(|s| s > light.stop_line_s)
                && light_color(light, situation.time, t) == LightColor::Red
            {
                return true;
            }
        }
    }
    // crosswalks occupied by pedestrians
    for &i in &situation.blocked_crosswalks {
        let regions = crosswalk_regions(scenario, &scenario.crosswalks[i]);
        let inside = |k: usize| {
            let fp = c.footprint(k);
            regions.iter().any(|r| r.overlaps(&fp))
        };
        if !inside(0) && (1..c.trajectory.samples.len()).any(inside) {
            return true;
        }
    }
    // a lane change cannot be replanned before it settles, so the ego must still
    // be able to halt for whatever is ahead once it does
    if let Some(tc) = c.commit_duration {
        let samples = &c.trajectory.samples;
        let k = samples.iter().position(|s| s.t >= tc - 1e-9).unwrap_or(samples.len() - 1);
        let reach = samples[k].speed.powi(2) / (2.0 * config.maneuver.stop_decel_max);
        let front = c.footprint(k).front();
        let station = |lane_id: &str| {
            let l = scenario.lane(lane_id)?;
            l.project(front).ok().filter(|co| co.offset.abs() <= 0.5 * l.width).map(|co| co.s)
        };
        let overruns = |s: Option<f64>, limit: f64| s.is_some_and(|s| s <= limit && s + reach > limit);
        for light in &scenario.lights {
            if light_color(light, situation.time, samples[k].t) == LightColor::Red
                && overruns(station(&light.lane), light.stop_line_s)
            {
                return true;
            }
        }
        for &i in &situation.blocked_crosswalks {
            let cw = &scenario.crosswalks[i];
            if cw.lanes.iter().any(|id| overruns(station(id), cw.span[0])) {
                return true;
            }
        }
    }
    false
}

/// Marks each candidate feasible or not. If none survives, Stop is kept as the
/// fallback and the reason it failed is reported.
pub fn feasibility_filter(
    candidates: &mut [ManeuverCandidate],
    situation: &Situation<'_>,
    config: &PlannerConfig,
) -> FeasibilityOutcome {
    let reasons = par::map(candidates, |c| assess_feasibility(c, situation, config));
    for (c, r) in candidates.iter_mut().zip(reasons) {
        match r {
            Some(r) => c.mark_infeasible(r),
            None => {
                c.feasible = true;
                c.infeasibility = None;
            }
        }
    }
    let feasible: Vec<Maneuver> = candidates.iter().filter(|c| c.feasible).map(|c| c.maneuver).collect();
    if !feasible.is_empty() {
        return FeasibilityOutcome { feasible, fallback: None };
    }
    let stop = candidates
        .iter_mut()
        .find(|c| c.maneuver == Maneuver::Stop)
        .expect("candidate set contains Stop");
    let reason = stop.infeasibility.take();
    stop.feasible = true;
    FeasibilityOutcome {
        feasible: vec![Maneuver::Stop],
        fallback: reason,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identification::{enumerate_candidates, predict_all};
    use crate::scenario::{load_scenario, Scenario};

    fn scenario(extra: &str, lights: &str, right_boundary: &str) -> Scenario {
        let doc = format!(
            r#"{{
            "lanes": [
              {{"id": "r", "centerline": [[0, 0], [1000, 0]], "width": 3.5, "speed_limit": 13.9,
                "left_neighbor": "l", "left_boundary": "{right_boundary}"}},
              {{"id": "l", "centerline": [[0, 3.5], [1000, 3.5]], "width": 3.5, "speed_limit": 13.9,
                "right_neighbor": "r", "right_boundary": "{right_boundary}"}}
            ],
            "agents": [{{"id": "ego", "kind": "ego", "position": [50, 0], "speed": 10,
                        "length": 4.5, "width": 1.8, "lane": "r", "mass": 1500}}{extra}],
            "lights": [{lights}],
            "apriori_lane": "r", "profile": "regular", "duration_s": 10
        }}"#
        );
        load_scenario(doc.as_bytes()).unwrap()
    }

    fn run(s: &Scenario) -> (Vec<ManeuverCandidate>, FeasibilityOutcome) {
        let cfg = PlannerConfig::default();
        let preds = predict_all(s, &s.agents, &cfg);
        let sit = Situation::new(s, 0.0, s.ego(), &preds).unwrap();
        let mut c = enumerate_candidates(&sit, &cfg);
        let out = feasibility_filter(&mut c, &sit, &cfg);
        (c, out)
    }

    #[test]
    fn free_road() {
        let (c, out) = run(&scenario("", "", "dashed"));
        assert_eq!(out.fallback, None);
        assert!(out.feasible.contains(&Maneuver::ChangeLaneLeft));
        assert!(!out.feasible.contains(&Maneuver::ChangeLaneRight));
        assert!(c.iter().all(|c| c.feasible == c.infeasibility.is_none()));
    }

    #[test]
    fn solid_line_blocks_lane_change() {
        let (c, _) = run(&scenario("", "", "solid"));
        assert_eq!(c[0].infeasibility, Some(InfeasibilityReason::RuleViolation));
    }

    #[test]
    fn close_obstacle_is_collision_risk() {
        let (c, out) = run(&scenario(
            r#", {"id": "box", "kind": "static_obstacle", "position": [75, 0], "speed": 0,
                 "length": 2, "width": 2, "lane": "r"}"#,
            "",
            "dashed",
        ));
        assert_eq!(c[Maneuver::KeepLaneSameSpeed.index()].infeasibility, Some(InfeasibilityReason::CollisionRisk));
        assert_eq!(c[Maneuver::KeepLaneAccelerate.index()].infeasibility, Some(InfeasibilityReason::CollisionRisk));
        assert!(out.feasible.contains(&Maneuver::Stop));
    }

    #[test]
    fn red_light_forbids_crossing() {
        let (c, _) = run(&scenario(
            "",
            r#"{"id": "tl", "position": [80, -3], "lane": "r", "stop_line_s": 80,
               "schedule": [{"color": "red", "duration_s": 20}, {"color": "green", "duration_s": 20}]}"#,
            "dashed",
        ));
        assert_eq!(c[Maneuver::KeepLaneSameSpeed.index()].infeasibility, Some(InfeasibilityReason::RuleViolation));
        assert!(c[Maneuver::Stop.index()].feasible);
    }

    #[test]
    fn fallback_keeps_stop() {
        let (c, out) = run(&scenario(
            r#", {"id": "box", "kind": "static_obstacle", "position": [56, 0], "speed": 0,
                 "length": 2, "width": 2, "lane": "r"},
               {"id": "car", "kind": "vehicle", "position": [50, 3.5], "speed": 10,
                 "length": 4.5, "width": 1.8, "lane": "l"}"#,
            "",
            "dashed",
        ));
        assert_eq!(out.feasible, vec![Maneuver::Stop]);
        assert_eq!(out.fallback, Some(InfeasibilityReason::CollisionRisk));
        assert!(c[Maneuver::Stop.index()].feasible);
    }
}
