//! Static world model: lanes, agents, traffic lights, crosswalks and mission context.
//!
//! A [`Scenario`] is immutable once loaded and is shared read-only by the planner and
//! the simulator. Lanes are polylines; all lane-relative quantities (arc length `s`,
//! signed lateral offset, left positive) come from [`Lane::project`].

use std::collections::HashSet;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, ScenarioError};
use crate::geometry::{Obb, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marking {
    Dashed,
    Solid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lane {
    pub id: String,
    pub centerline: Vec<Vec2>,
    pub width: f64,
    pub speed_limit: f64,
    #[serde(default)]
    pub left_neighbor: Option<String>,
    #[serde(default)]
    pub right_neighbor: Option<String>,
    #[serde(default = "solid")]
    pub left_boundary: Marking,
    #[serde(default = "solid")]
    pub right_boundary: Marking,
    #[serde(default)]
    pub successor: Option<String>,
}

fn solid() -> Marking {
    Marking::Solid
}

/// Position of a point in a lane's frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaneCoord {
    /// Arc length along the centerline (m); may be slightly negative or exceed the
    /// lane length for points projected past the ends.
    pub s: f64,
    /// Signed perpendicular distance from the centerline, left positive (m).
    pub offset: f64,
}

impl Lane {
    /// Straight two-point lane, mostly for fixtures.
    pub fn straight(id: &str, start: Vec2, end: Vec2, width: f64, speed_limit: f64) -> Self {
        Lane {
            id: id.to_string(),
            centerline: vec![start, end],
            width,
            speed_limit,
            left_neighbor: None,
            right_neighbor: None,
            left_boundary: Marking::Solid,
            right_boundary: Marking::Solid,
            successor: None,
        }
    }

    pub fn length(&self) -> f64 {
        self.centerline.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    /// Centerline point and heading at arc length `s`; extrapolates linearly
    /// beyond either end.
    pub fn point_at(&self, s: f64) -> (Vec2, f64) {
        let pts = &self.centerline;
        let last = pts.len() - 2;
        let mut start = 0.0;
        for (i, w) in pts.windows(2).enumerate() {
            let len = w[0].distance(w[1]);
            if s <= start + len || i == last {
                let dir = (w[1] - w[0]) * (1.0 / len);
                return (w[0] + dir * (s - start), dir.heading());
            }
            start += len;
        }
        unreachable!("centerline has at least two points")
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        self.point_at(s).1
    }

    /// Projects `p` onto the centerline.
    ///
    /// Fails when the foot point lies more than one lane width beyond either end.
    pub fn project(&self, p: Vec2) -> Result<LaneCoord, GeometryError> {
        let pts = &self.centerline;
        let n_seg = pts.len() - 1;
        let mut best: Option<(f64, LaneCoord)> = None;
        let mut station = 0.0;
        for (i, w) in pts.windows(2).enumerate() {
            let d = w[1] - w[0];
            let len2 = d.dot(d);
            let len = len2.sqrt();
            let mut t = (p - w[0]).dot(d) / len2;
            if i > 0 {
                t = t.max(0.0);
            }
            if i + 1 < n_seg {
                t = t.min(1.0);
            }
            let foot = w[0] + d * t;
            let dist = p.distance(foot);
            let coord = LaneCoord {
                s: station + t * len,
                offset: (d * (1.0 / len)).cross(p - foot),
            };
            if best.map_or(true, |(bd, _)| dist < bd) {
                best = Some((dist, coord));
            }
            station += len;
        }
        let (_, coord) = best.expect("centerline has at least two points");
        let overshoot = if coord.s < 0.0 {
            -coord.s
        } else {
            coord.s - station
        };
        if overshoot > self.width {
            return Err(GeometryError::ProjectionFailed {
                lane: self.id.clone(),
                distance: overshoot,
            });
        }
        Ok(coord)
    }

    /// Rectangle covering the lane between `s_begin` and `s_end` (straight-segment
    /// approximation around the midpoint).
    pub fn region(&self, s_begin: f64, s_end: f64) -> Obb {
        let (c, h) = self.point_at(0.5 * (s_begin + s_end));
        Obb::new(c, h, s_end - s_begin, self.width)
    }

    pub fn marking(&self, side: Side) -> Marking {
        match side {
            Side::Left => self.left_boundary,
            Side::Right => self.right_boundary,
        }
    }

    pub fn neighbor(&self, side: Side) -> Option<&str> {
        match side {
            Side::Left => self.left_neighbor.as_deref(),
            Side::Right => self.right_neighbor.as_deref(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Signed perpendicular distance of `point` from the centerline of `lane`, left positive.
pub fn lateral_offset(point: Vec2, lane: &Lane) -> Result<f64, GeometryError> {
    lane.project(point).map(|c| c.offset)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Ego,
    Vehicle,
    Pedestrian,
    StaticObstacle,
}

/// Scripted motion for a non-ego agent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Behavior {
    /// Holds the initial speed, following its lane when it has one.
    #[default]
    Constant,
    /// Piecewise-linear speed over time, `[t_s, speed]` pairs, held flat outside the range.
    SpeedProfile { points: Vec<[f64; 2]> },
    /// Stands still until `start_s`, then walks `distance` m along its heading at `speed`.
    Crossing { start_s: f64, speed: f64, distance: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentState {
    pub id: String,
    pub kind: AgentKind,
    pub position: Vec2,
    #[serde(default)]
    pub heading: f64,
    #[serde(default)]
    pub speed: f64,
    pub length: f64,
    pub width: f64,
    #[serde(default)]
    pub lane: Option<String>,
    /// Vehicle mass in kg; required for the ego.
    #[serde(default)]
    pub mass: Option<f64>,
    #[serde(default)]
    pub behavior: Behavior,
}

impl AgentState {
    pub fn footprint(&self) -> Obb {
        Obb::new(self.position, self.heading, self.length, self.width)
    }

    pub fn is_ego(&self) -> bool {
        self.kind == AgentKind::Ego
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightColor {
    Red,
    Green,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightPhase {
    pub color: LightColor,
    pub duration_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficLight {
    pub id: String,
    pub position: Vec2,
    /// Lane whose stop line this light controls.
    pub lane: String,
    pub stop_line_s: f64,
    pub schedule: Vec<LightPhase>,
}

impl TrafficLight {
    pub fn cycle_length(&self) -> f64 {
        self.schedule.iter().map(|p| p.duration_s).sum()
    }

    /// Color at absolute time `t`; the schedule repeats from `t = 0`.
    pub fn color_at(&self, t: f64) -> LightColor {
        let mut phase_t = t.rem_euclid(self.cycle_length());
        for p in &self.schedule {
            if phase_t < p.duration_s {
                return p.color;
            }
            phase_t -= p.duration_s;
        }
        self.schedule.last().map(|p| p.color).unwrap_or(LightColor::Green)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Crosswalk {
    pub id: String,
    pub lanes: Vec<String>,
    /// `[s_begin, s_end]` along each covered lane (m).
    pub span: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriverProfile {
    Regular,
    Aggressive,
    #[serde(alias = "fuel-efficient")]
    FuelEfficient,
}

impl DriverProfile {
    pub const ALL: [DriverProfile; 3] = [
        DriverProfile::Regular,
        DriverProfile::Aggressive,
        DriverProfile::FuelEfficient,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DriverProfile::Regular => "regular",
            DriverProfile::Aggressive => "aggressive",
            DriverProfile::FuelEfficient => "fuel-efficient",
        }
    }
}

impl fmt::Display for DriverProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DriverProfile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "regular" => Ok(DriverProfile::Regular),
            "aggressive" => Ok(DriverProfile::Aggressive),
            "fuel-efficient" | "fuel_efficient" => Ok(DriverProfile::FuelEfficient),
            other => Err(format!(
                "unknown profile `{other}` (expected regular, aggressive or fuel-efficient)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub lanes: Vec<Lane>,
    pub agents: Vec<AgentState>,
    #[serde(default)]
    pub lights: Vec<TrafficLight>,
    #[serde(default)]
    pub crosswalks: Vec<Crosswalk>,
    pub apriori_lane: String,
    pub profile: DriverProfile,
    pub duration_s: f64,
}

/// Parses and validates a scenario document.
/// Ego mass used when the scenario does not give one (kg).
pub const DEFAULT_MASS: f64 = 1500.0;

pub fn load_scenario<R: Read>(source: R) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = serde_json::from_reader(source)?;
    scenario.validate()?;
    Ok(scenario)
}

/// The mission-given a-priori lane. It does not depend on where the ego is.
pub fn resolve_apriori_lane<'a>(scenario: &'a Scenario, _ego: &AgentState) -> &'a Lane {
    scenario
        .lane(&scenario.apriori_lane)
        .expect("validated scenario has its a-priori lane")
}

impl Scenario {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
        let file = std::fs::File::open(path)?;
        load_scenario(std::io::BufReader::new(file))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn lane(&self, id: &str) -> Option<&Lane> {
        self.lanes.iter().find(|l| l.id == id)
    }

    pub fn ego_index(&self) -> usize {
        self.agents
            .iter()
            .position(AgentState::is_ego)
            .expect("validated scenario has an ego")
    }

    pub fn ego(&self) -> &AgentState {
        &self.agents[self.ego_index()]
    }

    pub fn ego_mass(&self) -> f64 {
        self.ego().mass.unwrap_or(DEFAULT_MASS)
    }

    /// Lane whose centerline is laterally closest to `p`, among lanes `p` projects onto.
    pub fn locate(&self, p: Vec2) -> Option<(&Lane, LaneCoord)> {
        self.lanes
            .iter()
            .filter_map(|l| l.project(p).ok().map(|c| (l, c)))
            .min_by(|a, b| a.1.offset.abs().total_cmp(&b.1.offset.abs()))
    }

    /// Lanes traversed from `(lane, s0)` forward over `reach` meters, following successors.
    /// Each entry is `(lane, s_from, s_to)`.
    pub fn lane_chain<'a>(&'a self, lane: &'a Lane, s0: f64, reach: f64) -> Vec<(&'a Lane, f64, f64)> {
        let mut out = Vec::new();
        let mut cur = lane;
        let mut from = s0;
        let mut left = reach;
        let mut visited = HashSet::new();
        loop {
            let len = cur.length();
            let next = if visited.insert(cur.id.as_str()) {
                cur.successor.as_deref().and_then(|id| self.lane(id))
            } else {
                None
            };
            match next {
                Some(next) if from + left > len => {
                    if from < len {
                        out.push((cur, from, len));
                        left -= len - from;
                        from = 0.0;
                    } else {
                        from -= len;
                    }
                    cur = next;
                }
                Some(_) => {
                    out.push((cur, from, from + left));
                    return out;
                }
                None => {
                    out.push((cur, from, (from + left).min(len).max(from)));
                    return out;
                }
            }
        }
    }

    /// Checks every structural invariant; errors name the offending field.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.lanes.is_empty() {
            return Err(ScenarioError::invalid("lanes", "at least one lane is required"));
        }
        let mut ids = HashSet::new();
        for (i, lane) in self.lanes.iter().enumerate() {
            let at = |f: &str| format!("lanes[{i}].{f}");
            if !ids.insert(lane.id.as_str()) {
                return Err(ScenarioError::invalid(at("id"), format!("duplicate lane id `{}`", lane.id)));
            }
            if !(lane.width > 0.0 && lane.width.is_finite()) {
                return Err(ScenarioError::invalid(at("width"), "width must be > 0"));
            }
            if !(lane.speed_limit > 0.0 && lane.speed_limit.is_finite()) {
                return Err(ScenarioError::invalid(at("speed_limit"), "speed limit must be > 0"));
            }
            if lane.centerline.len() < 2 {
                return Err(ScenarioError::invalid(at("centerline"), "needs at least two points"));
            }
            for (j, w) in lane.centerline.windows(2).enumerate() {
                if !w[0].is_finite() || !w[1].is_finite() {
                    return Err(ScenarioError::invalid(format!("lanes[{i}].centerline[{j}]"), "non-finite point"));
                }
                if w[0].distance(w[1]) <= 1e-9 {
                    return Err(ScenarioError::invalid(
                        format!("lanes[{i}].centerline[{}]", j + 1),
                        "arc length must be strictly increasing",
                    ));
                }
            }
        }
        for (i, lane) in self.lanes.iter().enumerate() {
            for (field, side) in [("left_neighbor", Side::Left), ("right_neighbor", Side::Right)] {
                if let Some(n) = lane.neighbor(side) {
                    let Some(other) = self.lane(n) else {
                        return Err(ScenarioError::invalid(format!("lanes[{i}].{field}"), format!("unknown lane `{n}`")));
                    };
                    let back = match side {
                        Side::Left => other.right_neighbor.as_deref(),
                        Side::Right => other.left_neighbor.as_deref(),
                    };
                    if back != Some(lane.id.as_str()) {
                        return Err(ScenarioError::invalid(
                            format!("lanes[{i}].{field}"),
                            format!("lane `{n}` does not point back at `{}`", lane.id),
                        ));
                    }
                }
            }
            if let Some(s) = &lane.successor {
                if self.lane(s).is_none() {
                    return Err(ScenarioError::invalid(format!("lanes[{i}].successor"), format!("unknown lane `{s}`")));
                }
            }
        }

        let mut agent_ids = HashSet::new();
        let mut egos = 0;
        for (i, a) in self.agents.iter().enumerate() {
            let at = |f: &str| format!("agents[{i}].{f}");
            if !agent_ids.insert(a.id.as_str()) {
                return Err(ScenarioError::invalid(at("id"), format!("duplicate agent id `{}`", a.id)));
            }
            if !a.position.is_finite() || !a.heading.is_finite() {
                return Err(ScenarioError::invalid(at("position"), "non-finite pose"));
            }
            if !(a.speed >= 0.0 && a.speed.is_finite()) {
                return Err(ScenarioError::invalid(at("speed"), "speed must be >= 0"));
            }
            if !(a.length > 0.0) {
                return Err(ScenarioError::invalid(at("length"), "length must be > 0"));
            }
            if !(a.width > 0.0) {
                return Err(ScenarioError::invalid(at("width"), "width must be > 0"));
            }
            if let Some(l) = &a.lane {
                if self.lane(l).is_none() {
                    return Err(ScenarioError::invalid(at("lane"), format!("unknown lane `{l}`")));
                }
            }
            if a.is_ego() {
                egos += 1;
                if !a.mass.is_some_and(|m| m > 0.0) {
                    return Err(ScenarioError::invalid(at("mass"), "ego mass must be > 0"));
                }
                if a.lane.is_none() {
                    return Err(ScenarioError::invalid(at("lane"), "ego must start on a lane"));
                }
            }
            match &a.behavior {
                Behavior::Constant => {}
                Behavior::SpeedProfile { points } => {
                    if points.is_empty() {
                        return Err(ScenarioError::invalid(at("behavior.points"), "empty speed profile"));
                    }
                    for (j, p) in points.iter().enumerate() {
                        if !(p[1] >= 0.0) || (j > 0 && !(p[0] > points[j - 1][0])) {
                            return Err(ScenarioError::invalid(
                                format!("agents[{i}].behavior.points[{j}]"),
                                "times must increase and speeds be >= 0",
                            ));
                        }
                    }
                }
                Behavior::Crossing { start_s, speed, distance } => {
                    if !(*speed > 0.0 && *distance >= 0.0 && *start_s >= 0.0) {
                        return Err(ScenarioError::invalid(at("behavior"), "crossing needs speed > 0, distance >= 0, start_s >= 0"));
                    }
                }
            }
        }
        if egos != 1 {
            return Err(ScenarioError::invalid("agents", format!("exactly one ego required, found {egos}")));
        }

        for (i, light) in self.lights.iter().enumerate() {
            let at = |f: &str| format!("lights[{i}].{f}");
            let Some(lane) = self.lane(&light.lane) else {
                return Err(ScenarioError::invalid(at("lane"), format!("unknown lane `{}`", light.lane)));
            };
            if light.schedule.is_empty() {
                return Err(ScenarioError::invalid(at("schedule"), "schedule must be non-empty"));
            }
            if let Some(j) = light.schedule.iter().position(|p| !(p.duration_s > 0.0)) {
                return Err(ScenarioError::invalid(format!("lights[{i}].schedule[{j}].duration_s"), "durations must be > 0"));
            }
            if !(0.0..=lane.length()).contains(&light.stop_line_s) {
                return Err(ScenarioError::invalid(at("stop_line_s"), "stop line outside the lane"));
            }
        }
        for (i, cw) in self.crosswalks.iter().enumerate() {
            if cw.lanes.is_empty() {
                return Err(ScenarioError::invalid(format!("crosswalks[{i}].lanes"), "covers no lane"));
            }
            for (j, l) in cw.lanes.iter().enumerate() {
                if self.lane(l).is_none() {
                    return Err(ScenarioError::invalid(format!("crosswalks[{i}].lanes[{j}]"), format!("unknown lane `{l}`")));
                }
            }
            if !(cw.span[0] < cw.span[1]) {
                return Err(ScenarioError::invalid(format!("crosswalks[{i}].span"), "s_begin must be < s_end"));
            }
        }
        if self.lane(&self.apriori_lane).is_none() {
            return Err(ScenarioError::invalid("apriori_lane", format!("unknown lane `{}`", self.apriori_lane)));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(ScenarioError::invalid("duration_s", "duration must be > 0"));
        }
        Ok(())
    }
}
