//! Deterministic closed-loop simulation: the ego executes planner decisions while other
//! road users follow scripted behaviors.

mod log;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use log::{csv_header, read_csv, write_csv, Event, EventKind, TickRecord};

use crate::baselines::{mobil_decide, utility_weights, BaselineDecision, Lateral};
use crate::bezier::{SpeedProfile, TimedTrajectory};
use crate::config::PlannerConfig;
use crate::geometry::Vec2;
use crate::identification::{
    candidate_for, keep_lane_candidate, keep_lane_trajectory, lane_change_candidate, predict_all, Maneuver,
    ManeuverCandidate, Prediction, Situation,
};
use crate::par::{self, Execution};
use crate::planner::{plan_weighted, Decision, WorldSnapshot};
use crate::resources::{delta_kinetic_energy, evaluate, mu_safety, ResourceAssessment, ResourceState, WeightTable, RESOURCE_COUNT};
use crate::scenario::{AgentState, Behavior, DriverProfile, LightColor, Marking, Scenario, Side};

/// Speed above the limit tolerated before a violation is raised (m/s).
pub const SPEEDING_TOLERANCE: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlannerKind {
    #[serde(rename = "cor-mp")]
    CorMp,
    #[serde(rename = "mobil")]
    Mobil,
    #[serde(rename = "utility")]
    Utility,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [PlannerKind::CorMp, PlannerKind::Mobil, PlannerKind::Utility];

    pub fn id(self) -> &'static str {
        match self {
            PlannerKind::CorMp => "cor-mp",
            PlannerKind::Mobil => "mobil",
            PlannerKind::Utility => "utility",
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for PlannerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlannerKind::ALL
            .into_iter()
            .find(|p| p.id() == s)
            .ok_or_else(|| format!("unknown planner `{s}` (expected cor-mp, mobil or utility)"))
    }
}

/// Complete output of one simulation.
#[derive(Clone, Debug)]
pub struct SimLog {
    pub planner: PlannerKind,
    pub profile: DriverProfile,
    pub dt: f64,
    pub records: Vec<TickRecord>,
    pub events: Vec<Event>,
    /// Wall-clock duration of every planning call (ms). Not part of the CSV.
    pub latencies_ms: Vec<f64>,
    /// All agents at the start of every tick, aligned with `records`.
    pub frames: Vec<Vec<AgentState>>,
}

impl SimLog {
    pub fn incidents(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| e.kind.is_incident())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        write_csv(&self.records, &mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

/// Values copied into every record while a decision is in force.
#[derive(Clone, Debug)]
struct DecisionRow {
    profits: [Option<f64>; 6],
    feasible: [bool; 6],
    mu: [f64; RESOURCE_COUNT],
    states: [ResourceState; RESOURCE_COUNT],
}

impl DecisionRow {
    fn from_decision(d: &Decision) -> Self {
        let mut profits = [None; 6];
        let mut feasible = [false; 6];
        for (m, v) in &d.profits {
            profits[m.index()] = Some(*v);
            feasible[m.index()] = true;
        }
        let (mu, states) = match d.chosen_assessment() {
            Some(a) => (a.mu, a.states),
            None => ([0.0; RESOURCE_COUNT], [ResourceState::Loss; RESOURCE_COUNT]),
        };
        DecisionRow {
            profits,
            feasible,
            mu,
            states,
        }
    }
}

#[derive(Clone, Debug)]
struct ActivePlan {
    maneuver: Maneuver,
    trajectory: TimedTrajectory,
    index: usize,
    /// Sample index at which a lane change is complete.
    commit_index: Option<usize>,
    row: DecisionRow,
}

impl ActivePlan {
    fn committed(&self) -> bool {
        self.commit_index.is_some_and(|c| self.index < c)
    }

    fn exhausted(&self) -> bool {
        self.index + 1 >= self.trajectory.samples.len()
    }
}

/// Mutable world of one simulation.
#[derive(Clone, Debug)]
pub struct WorldState {
    pub tick: usize,
    pub t: f64,
    pub agents: Vec<AgentState>,
    initial: Vec<AgentState>,
    plan: Option<ActivePlan>,
    contacts: BTreeSet<String>,
    active_rules: BTreeSet<&'static str>,
    /// Ego front station on each light's lane at the previous tick.
    light_front: Vec<Option<f64>>,
}

impl WorldState {
    pub fn new(scenario: &Scenario) -> Self {
        let agents = scenario.agents.clone();
        let mut w = WorldState {
            tick: 0,
            t: 0.0,
            initial: agents.clone(),
            agents,
            plan: None,
            contacts: BTreeSet::new(),
            active_rules: BTreeSet::new(),
            light_front: Vec::new(),
        };
        w.light_front = scenario.lights.iter().map(|l| w.front_station(scenario, &l.lane)).collect();
        w
    }

    pub fn ego(&self) -> &AgentState {
        self.agents.iter().find(|a| a.is_ego()).expect("world has an ego")
    }

    fn ego_mut(&mut self) -> &mut AgentState {
        self.agents.iter_mut().find(|a| a.is_ego()).expect("world has an ego")
    }

    pub fn current_maneuver(&self) -> Option<Maneuver> {
        self.plan.as_ref().map(|p| p.maneuver)
    }

    fn front_station(&self, scenario: &Scenario, lane_id: &str) -> Option<f64> {
        let lane = scenario.lane(lane_id)?;
        let c = lane.project(self.ego().footprint().front()).ok()?;
        (c.offset.abs() <= 0.5 * lane.width).then_some(c.s)
    }
}

/// Rule-violation and collision predicates on the current world, without episode
/// bookkeeping. Returns rule names and ids of agents in contact with the ego.
pub fn detect_violations(world: &WorldState, scenario: &Scenario) -> (Vec<&'static str>, Vec<String>) {
    let ego = world.ego();
    let fp = ego.footprint();
    let contacts = world
        .agents
        .iter()
        .filter(|a| !a.is_ego() && a.footprint().overlaps(&fp))
        .map(|a| a.id.clone())
        .collect();
    let mut rules = Vec::new();
    if let Some((lane, _)) = scenario.locate(ego.position) {
        if ego.speed > lane.speed_limit + SPEEDING_TOLERANCE {
            rules.push("speeding");
        }
        let half = 0.5 * lane.width + 1e-6;
        let crosses = fp.corners().iter().any(|&c| match lane.project(c) {
            Ok(co) if co.offset > half => lane.marking(Side::Left) == Marking::Solid,
            Ok(co) if co.offset < -half => lane.marking(Side::Right) == Marking::Solid,
            _ => false,
        });
        if crosses {
            rules.push("solid_line");
        }
    }
    for (i, light) in scenario.lights.iter().enumerate() {
        let now = world.front_station(scenario, &light.lane);
        if let (Some(before), Some(now)) = (world.light_front.get(i).copied().flatten(), now) {
            if before <= light.stop_line_s && now > light.stop_line_s && light.color_at(world.t) == LightColor::Red {
                rules.push("red_light");
            }
        }
    }
    (rules, contacts)
}

fn speed_from_profile(points: &[[f64; 2]], t: f64) -> f64 {
    match points {
        [] => 0.0,
        [first, ..] if t <= first[0] => first[1],
        [.., last] if t >= last[0] => last[1],
        _ => {
            let i = points.iter().position(|p| p[0] > t).expect("t is inside the range");
            let (a, b) = (points[i - 1], points[i]);
            a[1] + (b[1] - a[1]) * (t - a[0]) / (b[0] - a[0])
        }
    }
}

/// Moves a non-ego agent by one tick according to its behavior.
fn advance_agent(agent: &mut AgentState, initial: &AgentState, scenario: &Scenario, t: f64, dt: f64) {
    let (ds, v_next) = match &agent.behavior {
        Behavior::Constant => (agent.speed * dt, agent.speed),
        Behavior::SpeedProfile { points } => {
            let (v0, v1) = (speed_from_profile(points, t), speed_from_profile(points, t + dt));
            (0.5 * (v0 + v1) * dt, v1)
        }
        Behavior::Crossing { start_s, speed, distance } => {
            let walked = |tt: f64| ((tt - start_s) * speed).clamp(0.0, *distance);
            let next = walked(t + dt);
            agent.position = initial.position + Vec2::from_heading(initial.heading) * next;
            let moving = next > walked(t) || (t + dt >= *start_s && next < *distance);
            agent.speed = if moving { *speed } else { 0.0 };
            return;
        }
    };
    agent.speed = v_next;
    if ds <= 0.0 {
        return;
    }
    let on_lane = agent
        .lane
        .as_deref()
        .and_then(|id| scenario.lane(id))
        .and_then(|l| l.project(agent.position).ok().map(|c| (l, c)));
    match on_lane {
        Some((lane, c)) => {
            let chain = scenario.lane_chain(lane, c.s, ds);
            let covered: f64 = chain.iter().map(|(_, a, b)| b - a).sum();
            let &(l, _, to) = chain.last().expect("chain is never empty");
            let (p, h) = l.point_at(to + (ds - covered).max(0.0));
            agent.position = p + Vec2::from_heading(h).perp() * c.offset;
            agent.heading = h;
            agent.lane = Some(l.id.clone());
        }
        None => agent.position = agent.position + Vec2::from_heading(agent.heading) * ds,
    }
}

/// Advances every agent by `dt`: the ego to its next planned sample, others per behavior.
pub fn step(world: &mut WorldState, scenario: &Scenario, dt: f64) {
    world.light_front = scenario.lights.iter().map(|l| world.front_station(scenario, &l.lane)).collect();
    let t = world.t;
    for (agent, init) in world.agents.iter_mut().zip(&world.initial) {
        if !agent.is_ego() {
            advance_agent(agent, init, scenario, t, dt);
        }
    }
    let next = world.plan.as_mut().and_then(|p| {
        p.index += 1;
        p.trajectory.samples.get(p.index).copied()
    });
    let ego = world.ego_mut();
    match next {
        Some(s) => {
            ego.position = s.position;
            ego.heading = s.heading;
            ego.speed = s.speed;
        }
        None => ego.speed = 0.0,
    }
    if let Some((lane, _)) = scenario.locate(ego.position) {
        ego.lane = Some(lane.id.clone());
    }
    world.tick += 1;
    world.t = world.tick as f64 * dt;
}

/// Profile in force: the command-line value, then the config, then the scenario.
pub fn resolve_profile(scenario: &Scenario, config: &PlannerConfig, cli: Option<DriverProfile>) -> DriverProfile {
    cli.or(config.profile).unwrap_or(scenario.profile)
}

/// Number of records a run of `duration` seconds produces.
pub fn tick_count(duration: f64, dt: f64) -> usize {
    ((duration / dt) - 1e-9).ceil().max(0.0) as usize
}

struct PlanOutput {
    plan: ActivePlan,
    fallback: bool,
}

fn plan_for(
    kind: PlannerKind,
    snapshot: &WorldSnapshot<'_>,
    predictions: &[Prediction],
    config: &PlannerConfig,
) -> PlanOutput {
    let weights = match kind {
        PlannerKind::Utility => utility_weights(),
        _ => WeightTable::for_profile(snapshot.profile).weights,
    };
    let ego = snapshot.ego();
    if kind == PlannerKind::Mobil {
        if let Some(sit) = Situation::new(snapshot.scenario, snapshot.time, ego, predictions) {
            return mobil_plan(&sit, snapshot.agents, config);
        }
    }
    let decision = plan_weighted(snapshot, predictions, config, &weights);
    let c = decision.chosen_candidate();
    PlanOutput {
        plan: ActivePlan {
            maneuver: decision.chosen,
            commit_index: commit_index(c),
            trajectory: c.trajectory.clone(),
            index: 0,
            row: DecisionRow::from_decision(&decision),
        },
        fallback: decision.fallback.is_some(),
    }
}

fn commit_index(c: &ManeuverCandidate) -> Option<usize> {
    c.commit_duration.map(|d| (d / c.trajectory.dt).round() as usize)
}

fn mobil_plan(sit: &Situation<'_>, agents: &[AgentState], config: &PlannerConfig) -> PlanOutput {
    let d = mobil_decide(sit, agents, config);
    let ego = sit.ego;
    let side = match d.lateral {
        Lateral::ChangeLaneLeft => Some(Side::Left),
        Lateral::ChangeLaneRight => Some(Side::Right),
        Lateral::NoLaneChange => None,
    };
    let lane_change = side
        .map(|s| lane_change_candidate(sit, config, s))
        .filter(|c| c.infeasibility.is_none());
    let candidate = lane_change.unwrap_or_else(|| {
        let profile = SpeedProfile::new(ego.speed, d.accel, sit.speed_limit().max(ego.speed));
        let trajectory = keep_lane_trajectory(sit, config, profile);
        let label = BaselineDecision {
            lateral: Lateral::NoLaneChange,
            ..d
        }
        .maneuver(ego.speed);
        candidate_for(sit, label, trajectory, &sit.lane.id, None)
    });
    let mu = evaluate(&candidate, sit, config);
    let a = ResourceAssessment::new(candidate.maneuver, mu, &config.thresholds, None);
    let mut feasible = [false; 6];
    feasible[candidate.maneuver.index()] = true;
    PlanOutput {
        plan: ActivePlan {
            maneuver: candidate.maneuver,
            commit_index: commit_index(&candidate),
            trajectory: candidate.trajectory,
            index: 0,
            row: DecisionRow {
                profits: [None; 6],
                feasible,
                mu: a.mu,
                states: a.states,
            },
        },
        fallback: false,
    }
}

/// Runs `scenario` to completion under `config` with the given planner and profile.
pub fn run(scenario: &Scenario, config: &PlannerConfig, kind: PlannerKind, profile: DriverProfile) -> SimLog {
    let dt = config.dt;
    let n = tick_count(scenario.duration_s, dt);
    let replan = config.replan_ticks();
    let mass = scenario.ego_mass();
    let mut world = WorldState::new(scenario);
    let mut log = SimLog {
        planner: kind,
        profile,
        dt,
        records: Vec::with_capacity(n),
        events: Vec::new(),
        latencies_ms: Vec::new(),
        frames: Vec::with_capacity(n),
    };
    let mut ke_closed = 0.0;
    let mut seg_v0 = world.ego().speed;

    for _ in 0..n {
        let mut tick_events: Vec<EventKind> = Vec::new();

        // incidents, once per episode
        let (rules, contacts) = detect_violations(&world, scenario);
        for id in &contacts {
            if !world.contacts.contains(id) {
                tick_events.push(EventKind::Collision { agent: id.clone() });
            }
        }
        world.contacts = contacts.into_iter().collect();
        let rules: BTreeSet<&'static str> = rules.into_iter().collect();
        for r in &rules {
            if !world.active_rules.contains(r) || *r == "red_light" {
                tick_events.push(EventKind::RuleViolation { rule: r.to_string() });
            }
        }
        world.active_rules = rules;

        // lane-change completion; decide afresh right away instead of coasting to the next slot
        let settled = world.plan.as_ref().is_some_and(|p| p.commit_index == Some(p.index));
        if settled {
            let m = world.plan.as_ref().map(|p| p.maneuver).expect("settled plan");
            tick_events.push(EventKind::ManeuverCompleted { maneuver: m });
        }

        // planning
        let due = world.tick % replan == 0;
        let needs = match &world.plan {
            None => true,
            Some(p) => settled || p.exhausted() || (due && !p.committed()),
        };
        let mut replanned = false;
        if needs || (due && world.plan.as_ref().is_some_and(ActivePlan::committed)) {
            let started = Instant::now();
            let snapshot = WorldSnapshot {
                scenario,
                agents: &world.agents,
                time: world.t,
                previous: world.current_maneuver(),
                profile,
            };
            let predictions = predict_all(scenario, &world.agents, config);
            let new_plan = if needs {
                Some(plan_for(kind, &snapshot, &predictions, config))
            } else {
                abort_check(&world, &snapshot, &predictions, config)
            };
            log.latencies_ms.push(started.elapsed().as_secs_f64() * 1e3);
            if let Some(out) = new_plan {
                let previous = world.current_maneuver();
                if !needs {
                    tick_events.push(EventKind::LaneChangeAborted);
                }
                if out.fallback {
                    tick_events.push(EventKind::StopFallback);
                }
                if previous != Some(out.plan.maneuver) {
                    tick_events.push(EventKind::ManeuverStarted {
                        maneuver: out.plan.maneuver,
                    });
                }
                let v = world.ego().speed;
                ke_closed += delta_kinetic_energy(mass, seg_v0, v);
                seg_v0 = v;
                world.plan = Some(out.plan);
                replanned = true;
            }
        }

        // record
        let ego = world.ego().clone();
        let plan = world.plan.as_ref().expect("a plan exists after planning");
        let accel = plan.trajectory.samples.get(plan.index).map_or(0.0, |s| s.accel_lon);
        for kind in &tick_events {
            log.events.push(Event {
                tick: world.tick,
                t: world.t,
                kind: kind.clone(),
            });
        }
        log.records.push(TickRecord {
            tick: world.tick,
            t: world.t,
            x: ego.position.x,
            y: ego.position.y,
            heading: ego.heading,
            speed: ego.speed,
            accel,
            lane: ego.lane.clone().unwrap_or_default(),
            maneuver: plan.maneuver,
            replanned,
            profits: plan.row.profits,
            feasible: plan.row.feasible,
            mu: plan.row.mu,
            states: plan.row.states,
            ke_kj: ke_closed + delta_kinetic_energy(mass, seg_v0, ego.speed),
            events: tick_events.iter().map(EventKind::label).collect(),
        });
        log.frames.push(world.agents.clone());

        step(&mut world, scenario, dt);
    }
    log
}

/// While a lane change is committed: abort to keep-lane-decelerate if the safety of the
/// remaining trajectory has been lost.
fn abort_check(
    world: &WorldState,
    snapshot: &WorldSnapshot<'_>,
    predictions: &[Prediction],
    config: &PlannerConfig,
) -> Option<PlanOutput> {
    let plan = world.plan.as_ref()?;
    let ego = snapshot.ego();
    let sit = Situation::new(snapshot.scenario, snapshot.time, ego, predictions)?;
    let rest = candidate_for(&sit, plan.maneuver, plan.trajectory.tail(plan.index), &sit.lane.id, None);
    if mu_safety(&rest, predictions, &config.safety) >= config.thresholds.loss {
        return None;
    }
    let kld = keep_lane_candidate(&sit, config, Maneuver::KeepLaneDecelerate);
    let mu = evaluate(&kld, &sit, config);
    let a = ResourceAssessment::new(kld.maneuver, mu, &config.thresholds, None);
    Some(PlanOutput {
        plan: ActivePlan {
            maneuver: Maneuver::KeepLaneDecelerate,
            trajectory: kld.trajectory,
            index: 0,
            commit_index: None,
            row: DecisionRow {
                mu: a.mu,
                states: a.states,
                ..plan.row.clone()
            },
        },
        fallback: false,
    })
}

/// One simulation job for [`run_batch`].
#[derive(Clone, Copy, Debug)]
pub struct Job<'a> {
    pub scenario: &'a Scenario,
    pub planner: PlannerKind,
    pub profile: DriverProfile,
}

/// Runs independent simulations, in parallel when `exec` allows. Output order follows `jobs`.
pub fn run_batch(jobs: &[Job<'_>], config: &PlannerConfig, exec: Execution) -> Vec<SimLog> {
    par::map_with(exec, jobs, |j| {
        par::with_execution(exec, || run(j.scenario, config, j.planner, j.profile))
    })
}
