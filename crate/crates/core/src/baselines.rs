//! Comparison planners: MOBIL lane changing on top of IDM car following, and a
//! utility planner with equal weights over four resources.

use serde::{Deserialize, Serialize};

use crate::config::{IdmParams, MobilParams, PlannerConfig};
use crate::identification::{Maneuver, Situation};
use crate::planner::{decide, weighted_sum, Choice};
use crate::resources::{ResourceAssessment, ResourceType, RESOURCE_COUNT};
use crate::scenario::{AgentState, Lane, LightColor, Marking, Side};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lateral {
    NoLaneChange,
    ChangeLaneLeft,
    ChangeLaneRight,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineDecision {
    pub lateral: Lateral,
    /// Longitudinal command, within `[-b_max, a_max]`.
    pub accel: f64,
}

impl BaselineDecision {
    /// Maneuver label used in logs.
    pub fn maneuver(&self, speed: f64) -> Maneuver {
        match self.lateral {
            Lateral::ChangeLaneLeft => Maneuver::ChangeLaneLeft,
            Lateral::ChangeLaneRight => Maneuver::ChangeLaneRight,
            Lateral::NoLaneChange if speed < 0.1 && self.accel <= 0.0 => Maneuver::Stop,
            Lateral::NoLaneChange if self.accel > 0.05 => Maneuver::KeepLaneAccelerate,
            Lateral::NoLaneChange if self.accel < -0.05 => Maneuver::KeepLaneDecelerate,
            Lateral::NoLaneChange => Maneuver::KeepLaneSameSpeed,
        }
    }
}

/// Intelligent-driver-model acceleration. `lead` is `(bumper gap, lead speed)`.
pub fn idm_accel(v: f64, v_desired: f64, lead: Option<(f64, f64)>, p: &IdmParams) -> f64 {
    let free = 1.0 - (v / v_desired.max(1e-6)).powf(p.delta);
    match lead {
        None => p.a_max * free,
        Some((gap, _)) if gap <= 1e-3 => -p.b_max,
        Some((gap, v_lead)) => {
            let dv = v - v_lead;
            let s_star = p.min_gap + (v * p.time_headway + v * dv / (2.0 * (p.a_max * p.b_comfort).sqrt())).max(0.0);
            p.a_max * (free - (s_star / gap).powi(2))
        }
    }
}

/// A body seen in one lane: station of its center, length and speed.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Body {
    s: f64,
    half_len: f64,
    speed: f64,
}

fn bodies_in_lane(lane: &Lane, agents: &[AgentState], skip_ego: bool) -> Vec<Body> {
    agents
        .iter()
        .filter(|a| !(skip_ego && a.is_ego()))
        .filter_map(|a| {
            let c = lane.project(a.position).ok()?;
            let reach = 0.5 * (lane.width + a.width);
            (c.offset.abs() < reach.min(0.5 * lane.width + 0.5)).then_some(Body {
                s: c.s,
                half_len: 0.5 * a.length,
                speed: a.speed,
            })
        })
        .collect()
}

/// Stop lines and occupied crosswalks ahead of `s_front` on `lane`, as stationary bodies.
fn virtual_obstacles(situation: &Situation<'_>, lane: &Lane, s_front: f64) -> Vec<Body> {
    let scenario = situation.scenario;
    let mut out = Vec::new();
    for light in scenario.lights.iter().filter(|l| l.lane == lane.id) {
        if light.color_at(situation.time) == LightColor::Red && s_front <= light.stop_line_s {
            out.push(Body {
                s: light.stop_line_s,
                half_len: 0.0,
                speed: 0.0,
            });
        }
    }
    for &i in &situation.blocked_crosswalks {
        let cw = &scenario.crosswalks[i];
        if cw.lanes.iter().any(|id| *id == lane.id) && s_front <= cw.span[0] {
            out.push(Body {
                s: cw.span[0],
                half_len: 0.0,
                speed: 0.0,
            });
        }
    }
    out
}

fn gap_to(s: f64, half_len: f64, b: &Body) -> f64 {
    (b.s - s).abs() - half_len - b.half_len
}

fn leader(bodies: &[Body], s: f64) -> Option<&Body> {
    bodies.iter().filter(|b| b.s > s).min_by(|a, b| a.s.total_cmp(&b.s))
}

fn follower(bodies: &[Body], s: f64) -> Option<&Body> {
    bodies.iter().filter(|b| b.s <= s).max_by(|a, b| a.s.total_cmp(&b.s))
}

/// IDM acceleration of a body at `s` following the nearest of `bodies` ahead.
fn follow(me: &Body, bodies: &[Body], v0: f64, p: &IdmParams) -> f64 {
    let lead = leader(bodies, me.s).map(|l| (gap_to(me.s, me.half_len, l), l.speed));
    idm_accel(me.speed, v0, lead, p)
}

/// MOBIL lane-change decision with IDM longitudinal control.
pub fn mobil_decide(situation: &Situation<'_>, agents: &[AgentState], config: &PlannerConfig) -> BaselineDecision {
    let idm = &config.idm;
    let mobil: &MobilParams = &config.mobil;
    let ego = situation.ego;
    let lane = situation.lane;
    let me = Body {
        s: situation.coord.s,
        half_len: 0.5 * ego.length,
        speed: ego.speed,
    };
    let mut current = bodies_in_lane(lane, agents, true);
    current.extend(virtual_obstacles(situation, lane, me.s + me.half_len));
    let a_c = follow(&me, &current, lane.speed_limit, idm);
    let clamp = |a: f64| a.clamp(-idm.b_max, idm.a_max);

    let mut best: Option<(f64, Lateral, f64)> = None;
    if ego.speed >= config.maneuver.lane_change_min_speed {
        for (side, lateral) in [(Side::Left, Lateral::ChangeLaneLeft), (Side::Right, Lateral::ChangeLaneRight)] {
            if lane.marking(side) == Marking::Solid {
                continue;
            }
            let Some(target) = lane.neighbor(side).and_then(|id| situation.scenario.lane(id)) else { continue };
            let Ok(ct) = target.project(ego.position) else { continue };
            let me_t = Body { s: ct.s, ..me };
            let mut others = bodies_in_lane(target, agents, true);
            others.extend(virtual_obstacles(situation, target, me_t.s + me_t.half_len));
            // no room at all
            if others.iter().any(|b| gap_to(me_t.s, me_t.half_len, b) < 0.0) {
                continue;
            }
            let a_c_new = follow(&me_t, &others, target.speed_limit, idm);
            // new follower
            let (n_gain, n_new) = match follower(&others, me_t.s) {
                Some(n) => {
                    let before = follow(n, &others, target.speed_limit, idm);
                    let mut with_me = others.clone();
                    with_me.push(me_t);
                    let after = follow(n, &with_me, target.speed_limit, idm);
                    (after - before, after)
                }
                None => (0.0, 0.0),
            };
            if n_new < -mobil.b_safe {
                continue;
            }
            // old follower
            let o_gain = match follower(&current, me.s) {
                Some(o) => {
                    let mut with_me = current.clone();
                    with_me.push(me);
                    let before = follow(o, &with_me, lane.speed_limit, idm);
                    let after = follow(o, &current, lane.speed_limit, idm);
                    after - before
                }
                None => 0.0,
            };
            let incentive = a_c_new - a_c + mobil.politeness * (n_gain + o_gain);
            if incentive > mobil.threshold && best.map_or(true, |b| incentive > b.0) {
                best = Some((incentive, lateral, a_c_new));
            }
        }
    }
    match best {
        Some((_, lateral, a)) => BaselineDecision {
            lateral,
            accel: clamp(a),
        },
        None => BaselineDecision {
            lateral: Lateral::NoLaneChange,
            accel: clamp(a_c),
        },
    }
}

/// Equal weights over Safety, AprioriLane, Objective and Comfort; zero elsewhere.
pub fn utility_weights() -> [f64; RESOURCE_COUNT] {
    let mut w = [0.0; RESOURCE_COUNT];
    for r in [
        ResourceType::Safety,
        ResourceType::AprioriLane,
        ResourceType::Objective,
        ResourceType::Comfort,
    ] {
        w[r.index()] = 0.25;
    }
    w
}

/// Utility planner choice over already-filtered assessments.
pub fn utility_decide(feasible: &[&ResourceAssessment], previous: Option<Maneuver>) -> Option<Choice> {
    let w = utility_weights();
    let table: Vec<(Maneuver, f64)> = feasible.iter().map(|a| (a.maneuver, weighted_sum(&a.mu, &w))).collect();
    decide(&table, previous)
}
