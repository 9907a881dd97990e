//! Simulation log records, events and their CSV / JSON serialization.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::identification::Maneuver;
use crate::resources::{ResourceState, ResourceType, RESOURCE_COUNT};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    Collision { agent: String },
    RuleViolation { rule: String },
    ManeuverStarted { maneuver: Maneuver },
    ManeuverCompleted { maneuver: Maneuver },
    LaneChangeAborted,
    StopFallback,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Collision { .. } => "collision",
            EventKind::RuleViolation { .. } => "rule_violation",
            EventKind::ManeuverStarted { .. } => "maneuver_started",
            EventKind::ManeuverCompleted { .. } => "maneuver_completed",
            EventKind::LaneChangeAborted => "lane_change_aborted",
            EventKind::StopFallback => "stop_fallback",
        }
    }

    /// Compact label used in the CSV `events` column.
    pub fn label(&self) -> String {
        match self {
            EventKind::Collision { agent } => format!("collision:{agent}"),
            EventKind::RuleViolation { rule } => format!("rule_violation:{rule}"),
            EventKind::ManeuverStarted { maneuver } => format!("maneuver_started:{maneuver}"),
            EventKind::ManeuverCompleted { maneuver } => format!("maneuver_completed:{maneuver}"),
            other => other.name().to_string(),
        }
    }

    pub fn is_incident(&self) -> bool {
        matches!(self, EventKind::Collision { .. } | EventKind::RuleViolation { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub tick: usize,
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// One row of the log: the ego state at the start of a tick and the decision in force.
#[derive(Clone, Debug, PartialEq)]
pub struct TickRecord {
    pub tick: usize,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub accel: f64,
    pub lane: String,
    pub maneuver: Maneuver,
    /// True when a new decision was taken at this tick.
    pub replanned: bool,
    /// Profit per maneuver in canonical order; `None` when infeasible.
    pub profits: [Option<f64>; 6],
    pub feasible: [bool; 6],
    pub mu: [f64; RESOURCE_COUNT],
    pub states: [ResourceState; RESOURCE_COUNT],
    /// Cumulative kinetic energy spent so far (kJ).
    pub ke_kj: f64,
    /// Labels of events raised at this tick.
    pub events: Vec<String>,
}

/// Frozen CSV header.
pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = ["tick", "t", "x", "y", "heading", "speed", "accel", "lane", "maneuver", "replan"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(Maneuver::ALL.iter().map(|m| format!("v_{}", m.code().to_lowercase())));
    h.extend(Maneuver::ALL.iter().map(|m| format!("feasible_{}", m.code().to_lowercase())));
    h.extend(ResourceType::ALL.iter().map(|r| format!("mu_{r}")));
    h.extend(ResourceType::ALL.iter().map(|r| format!("state_{r}")));
    h.push("ke_kj".into());
    h.push("events".into());
    h
}

fn state_from_str(s: &str) -> Option<ResourceState> {
    ResourceState::ALL.into_iter().find(|x| x.as_str() == s)
}

impl TickRecord {
    fn to_row(&self) -> Vec<String> {
        let mut r = vec![
            self.tick.to_string(),
            format!("{:.1}", self.t),
            format!("{:.4}", self.x),
            format!("{:.4}", self.y),
            format!("{:.5}", self.heading),
            format!("{:.4}", self.speed),
            format!("{:.4}", self.accel),
            self.lane.clone(),
            self.maneuver.code().to_string(),
            u8::from(self.replanned).to_string(),
        ];
        r.extend(self.profits.iter().map(|p| p.map_or(String::new(), |v| format!("{v:.6}"))));
        r.extend(self.feasible.iter().map(|f| u8::from(*f).to_string()));
        r.extend(self.mu.iter().map(|m| format!("{m:.6}")));
        r.extend(self.states.iter().map(|s| s.as_str().to_string()));
        r.push(format!("{:.4}", self.ke_kj));
        r.push(self.events.join(";"));
        r
    }

    fn from_row(row: &csv::StringRecord) -> Result<Self, String> {
        let field = |i: usize| row.get(i).ok_or_else(|| format!("missing column {i}"));
        let num = |i: usize| -> Result<f64, String> { field(i)?.parse::<f64>().map_err(|e| format!("column {i}: {e}")) };
        let n = Maneuver::COUNT;
        let base = 10;
        let profits = std::array::from_fn(|k| field(base + k).ok().filter(|s| !s.is_empty()).and_then(|s| s.parse().ok()));
        let feasible = std::array::from_fn(|k| field(base + n + k).is_ok_and(|s| s == "1"));
        let mut mu = [0.0; RESOURCE_COUNT];
        let mut states = [ResourceState::Acquired; RESOURCE_COUNT];
        for k in 0..RESOURCE_COUNT {
            mu[k] = num(base + 2 * n + k)?;
            states[k] = state_from_str(field(base + 2 * n + RESOURCE_COUNT + k)?).ok_or("bad state")?;
        }
        let ke = base + 2 * n + 2 * RESOURCE_COUNT;
        let events = field(ke + 1)?;
        Ok(TickRecord {
            tick: field(0)?.parse().map_err(|e| format!("tick: {e}"))?,
            t: num(1)?,
            x: num(2)?,
            y: num(3)?,
            heading: num(4)?,
            speed: num(5)?,
            accel: num(6)?,
            lane: field(7)?.to_string(),
            maneuver: field(8)?.parse()?,
            replanned: field(9)? == "1",
            profits,
            feasible,
            mu,
            states,
            ke_kj: num(ke)?,
            events: if events.is_empty() {
                Vec::new()
            } else {
                events.split(';').map(String::from).collect()
            },
        })
    }
}

pub fn write_csv<W: Write>(records: &[TickRecord], w: W) -> Result<(), csv::Error> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w);
    out.write_record(csv_header())?;
    for r in records {
        out.write_record(r.to_row())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<TickRecord>, String> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers().map_err(|e| e.to_string())?;
    if header.iter().collect::<Vec<_>>() != csv_header() {
        return Err("unexpected CSV header".into());
    }
    rd.records()
        .map(|row| row.map_err(|e| e.to_string()).and_then(|row| TickRecord::from_row(&row)))
        .collect()
}
