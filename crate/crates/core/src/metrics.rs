//! Summary metrics of a simulation log.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::identification::Maneuver;
use crate::resources::{ResourceState, ResourceType};
use crate::sim::TickRecord;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub count: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

impl LatencyStats {
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        Some(LatencyStats {
            count: s.len(),
            mean_ms: s.iter().sum::<f64>() / s.len() as f64,
            median_ms: percentile(&s, 0.5),
            p99_ms: percentile(&s, 0.99),
            max_ms: s[s.len() - 1],
        })
    }
}

/// Nearest-rank percentile of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub ticks: usize,
    pub duration_s: f64,
    pub avg_speed: f64,
    /// Signed mean of the longitudinal acceleration.
    pub avg_accel: f64,
    pub collisions: usize,
    pub rule_violations: usize,
    pub lane_changes_left: usize,
    pub lane_changes_right: usize,
    /// Kinetic energy spent over the run (kJ).
    pub energy_kj: f64,
    /// Seconds spent in each state, per resource, for the maneuver in force.
    pub time_in_state: BTreeMap<String, BTreeMap<String, f64>>,
    pub latency: Option<LatencyStats>,
}

fn count_prefix(records: &[TickRecord], prefix: &str) -> usize {
    records
        .iter()
        .flat_map(|r| &r.events)
        .filter(|e| e.starts_with(prefix))
        .count()
}

/// Metrics over all records; `latencies_ms` may be empty (e.g. when re-reading a CSV).
pub fn compute_metrics(records: &[TickRecord], dt: f64, latencies_ms: &[f64]) -> Metrics {
    let n = records.len();
    let mean = |f: fn(&TickRecord) -> f64| if n == 0 { 0.0 } else { records.iter().map(f).sum::<f64>() / n as f64 };
    let mut time_in_state = BTreeMap::new();
    for (i, r) in ResourceType::ALL.iter().enumerate() {
        let mut per: BTreeMap<String, f64> = ResourceState::ALL.iter().map(|s| (s.as_str().to_string(), 0.0)).collect();
        for rec in records {
            *per.get_mut(rec.states[i].as_str()).expect("all states present") += dt;
        }
        for v in per.values_mut() {
            *v = (*v * 1e6).round() / 1e6;
        }
        time_in_state.insert(r.as_str().to_string(), per);
    }
    Metrics {
        ticks: n,
        duration_s: n as f64 * dt,
        avg_speed: mean(|r| r.speed),
        avg_accel: mean(|r| r.accel),
        collisions: count_prefix(records, "collision"),
        rule_violations: count_prefix(records, "rule_violation"),
        lane_changes_left: count_prefix(records, &format!("maneuver_started:{}", Maneuver::ChangeLaneLeft)),
        lane_changes_right: count_prefix(records, &format!("maneuver_started:{}", Maneuver::ChangeLaneRight)),
        energy_kj: records.last().map_or(0.0, |r| r.ke_kj),
        time_in_state,
        latency: LatencyStats::from_samples(latencies_ms),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resources::RESOURCE_COUNT;

    fn rec(tick: usize, speed: f64, accel: f64, events: &[&str]) -> TickRecord {
        TickRecord {
            tick,
            t: tick as f64 * 0.1,
            x: 0.0,
            y: 0.0,
            heading: 0.0,
            speed,
            accel,
            lane: "l".into(),
            maneuver: Maneuver::KeepLaneSameSpeed,
            replanned: false,
            profits: [None; 6],
            feasible: [false; 6],
            mu: [1.0; RESOURCE_COUNT],
            states: [ResourceState::Acquired; RESOURCE_COUNT],
            ke_kj: 0.0,
            events: events.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn constant_speed() {
        let rs: Vec<_> = (0..100).map(|k| rec(k, 10.0, 0.0, &[])).collect();
        let m = compute_metrics(&rs, 0.1, &[]);
        assert!((m.avg_speed - 10.0).abs() < 1e-12);
        assert_eq!(m.avg_accel, 0.0);
        assert!((m.time_in_state["safety"]["acquired"] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn one_collision() {
        let mut rs: Vec<_> = (0..10).map(|k| rec(k, 10.0, 0.0, &[])).collect();
        rs[4].events.push("collision:obj".into());
        assert_eq!(compute_metrics(&rs, 0.1, &[]).collisions, 1);
    }

    #[test]
    fn ramp_then_hold() {
        // 10 s at 1 m/s^2, then 10 s holding 10 m/s
        let rs: Vec<_> = (0..200)
            .map(|k| if k < 100 { rec(k, k as f64 * 0.1, 1.0, &[]) } else { rec(k, 10.0, 0.0, &[]) })
            .collect();
        assert!((compute_metrics(&rs, 0.1, &[]).avg_accel - 0.5).abs() < 1e-12);
    }

    #[test]
    fn latency_percentiles() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = LatencyStats::from_samples(&xs).unwrap();
        assert_eq!(s.median_ms, 50.0);
        assert_eq!(s.p99_ms, 99.0);
        assert_eq!(s.max_ms, 100.0);
    }
}
