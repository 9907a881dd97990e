//! Run artifacts: CSV log, events and metrics JSON, timeline SVG, comparison report.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::metrics::{compute_metrics, Metrics};
use crate::plot::emit_timeline_plot;
use crate::sim::{Event, SimLog};

#[derive(Serialize)]
struct EventsDoc<'a> {
    scenario: &'a str,
    planner: &'a str,
    profile: &'a str,
    dt: f64,
    ticks: usize,
    events: &'a [Event],
}

#[derive(Serialize)]
struct MetricsDoc<'a> {
    scenario: &'a str,
    planner: &'a str,
    profile: &'a str,
    #[serde(flatten)]
    metrics: &'a Metrics,
}

pub fn metrics_of(log: &SimLog) -> Metrics {
    compute_metrics(&log.records, log.dt, &log.latencies_ms)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// Writes `log.csv`, `events.json`, `metrics.json` and `timeline.svg` into `dir`.
pub fn write_run(dir: &Path, scenario: &str, log: &SimLog) -> io::Result<Metrics> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("log.csv"), log.to_csv_string())?;
    let planner = log.planner.id();
    let profile = log.profile.as_str();
    write_json(
        &dir.join("events.json"),
        &EventsDoc {
            scenario,
            planner,
            profile,
            dt: log.dt,
            ticks: log.records.len(),
            events: &log.events,
        },
    )?;
    let metrics = metrics_of(log);
    write_json(
        &dir.join("metrics.json"),
        &MetricsDoc {
            scenario,
            planner,
            profile,
            metrics: &metrics,
        },
    )?;
    fs::write(dir.join("timeline.svg"), emit_timeline_plot(&[(planner, &log.records)], log.dt))?;
    Ok(metrics)
}

#[derive(Serialize)]
struct Divergence {
    ticks: usize,
    first_t: Option<f64>,
}

#[derive(Serialize)]
struct CompareDoc<'a> {
    scenario: &'a str,
    profile: &'a str,
    planners: BTreeMap<&'a str, &'a Metrics>,
    /// Ticks at which each baseline's maneuver differs from the first planner's.
    divergence: BTreeMap<&'a str, Divergence>,
}

/// Per-planner artifacts in `dir/<planner>/`, plus `report.json` and a combined `timeline.svg`.
pub fn write_comparison(dir: &Path, scenario: &str, logs: &[SimLog]) -> io::Result<Vec<Metrics>> {
    fs::create_dir_all(dir)?;
    let metrics = logs
        .iter()
        .map(|l| write_run(&dir.join(l.planner.id()), scenario, l))
        .collect::<io::Result<Vec<_>>>()?;
    let mut divergence = BTreeMap::new();
    if let Some(reference) = logs.first() {
        for l in &logs[1..] {
            let diff: Vec<f64> = reference
                .records
                .iter()
                .zip(&l.records)
                .filter(|(a, b)| a.maneuver != b.maneuver)
                .map(|(a, _)| a.t)
                .collect();
            divergence.insert(
                l.planner.id(),
                Divergence {
                    ticks: diff.len(),
                    first_t: diff.first().copied(),
                },
            );
        }
    }
    let doc = CompareDoc {
        scenario,
        profile: logs.first().map_or("", |l| l.profile.as_str()),
        planners: logs.iter().zip(&metrics).map(|(l, m)| (l.planner.id(), m)).collect(),
        divergence,
    };
    write_json(&dir.join("report.json"), &doc)?;
    let rows: Vec<(&str, &[crate::sim::TickRecord])> = logs.iter().map(|l| (l.planner.id(), &l.records[..])).collect();
    let dt = logs.first().map_or(0.1, |l| l.dt);
    fs::write(dir.join("timeline.svg"), emit_timeline_plot(&rows, dt))?;
    Ok(metrics)
}
