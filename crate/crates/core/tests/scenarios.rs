use std::fs;
use std::path::{Path, PathBuf};

use cormp::par::Execution;
use cormp::sim::{run, run_batch, Job, PlannerKind};
use cormp::{load_scenario, DriverProfile, Maneuver, PlannerConfig, Scenario};

fn dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn all() -> Vec<(String, Scenario)> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|f| {
            let name = f.file_stem().unwrap().to_string_lossy().into_owned();
            let sc = load_scenario(fs::File::open(&f).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
            (name, sc)
        })
        .collect()
}

fn load(name: &str) -> Scenario {
    load_scenario(fs::File::open(dir().join(format!("{name}.json"))).unwrap()).unwrap()
}

#[test]
fn every_scenario_is_clean_under_every_profile() {
    let config = PlannerConfig::default();
    for (name, sc) in all() {
        for profile in [DriverProfile::Regular, DriverProfile::Aggressive, DriverProfile::FuelEfficient] {
            let log = run(&sc, &config, PlannerKind::CorMp, profile);
            let incidents: Vec<_> = log.incidents().map(|e| e.kind.label()).collect();
            assert!(incidents.is_empty(), "{name} {profile:?}: {incidents:?}");
        }
    }
}

#[test]
fn baselines_run_everywhere() {
    let config = PlannerConfig::default();
    for (name, sc) in all() {
        for kind in [PlannerKind::Mobil, PlannerKind::Utility] {
            let log = run(&sc, &config, kind, sc.profile);
            let ticks = (sc.duration_s / config.dt).round() as usize;
            assert_eq!(log.records.len(), ticks, "{name} {kind:?}");
            assert!(log.records.iter().all(|r| r.x.is_finite() && r.speed >= 0.0), "{name} {kind:?}");
        }
    }
}

#[test]
fn solid_marking_is_never_crossed() {
    let sc = load("no_passing");
    let config = PlannerConfig::default();
    for kind in [PlannerKind::CorMp, PlannerKind::Mobil, PlannerKind::Utility] {
        let log = run(&sc, &config, kind, sc.profile);
        assert!(log.records.iter().all(|r| !r.maneuver.is_lane_change()), "{kind:?}");
    }
}

#[test]
fn empty_road_reaches_the_limit() {
    let sc = load("empty_road");
    let log = run(&sc, &PlannerConfig::default(), PlannerKind::CorMp, sc.profile);
    let limit = sc.lanes[0].speed_limit;
    let last = log.records.last().unwrap();
    assert!((last.speed - limit).abs() < 0.5, "{} vs {limit}", last.speed);
    assert_eq!(log.records[0].maneuver, Maneuver::KeepLaneAccelerate);
}

#[test]
fn overtake_returns_to_the_original_lane() {
    let sc = load("overtake_static");
    let log = run(&sc, &PlannerConfig::default(), PlannerKind::CorMp, sc.profile);
    let first = &log.records[0].lane;
    let changed = log.records.iter().any(|r| &r.lane != first);
    assert!(changed);
    assert_eq!(&log.records.last().unwrap().lane, first);
}

#[test]
fn sequential_and_parallel_batches_agree() {
    let scenarios = all();
    let jobs: Vec<Job> = scenarios
        .iter()
        .take(4)
        .flat_map(|(_, sc)| {
            [PlannerKind::CorMp, PlannerKind::Mobil].map(|planner| Job { scenario: sc, planner, profile: sc.profile })
        })
        .collect();
    let config = PlannerConfig::default();
    let seq = run_batch(&jobs, &config, Execution::Sequential);
    let par = run_batch(&jobs, &config, Execution::Parallel);
    for (a, b) in seq.iter().zip(&par) {
        assert_eq!(a.records, b.records);
        assert_eq!(a.events, b.events);
    }
}
