use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"))
}

fn cormp(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cormp"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("CORMP_CONFIG")
        .output()
        .unwrap()
}

#[test]
fn clean_run_exits_zero_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("slow_lead");
    let out = cormp(&["run", path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["log.csv", "events.json", "metrics.json", "timeline.svg"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let metrics: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["scenario"], "slow_lead");
    assert_eq!(metrics["planner"], "cor-mp");
    assert_eq!(metrics["collisions"], 0);
    let csv = fs::read_to_string(dir.path().join("log.csv")).unwrap();
    assert!(csv.starts_with("tick,t,x,y,heading,speed,accel,lane,maneuver,replan,"));
    assert!(csv.contains("\r\n"));
}

#[test]
fn compare_writes_one_directory_per_planner() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("overtake_static");
    let out = cormp(&["compare", path.to_str().unwrap(), "--profile", "aggressive"], dir.path());
    assert!(matches!(out.status.code(), Some(0 | 2)), "{}", String::from_utf8_lossy(&out.stderr));
    for p in ["cor-mp", "mobil", "utility"] {
        assert!(dir.path().join(p).join("log.csv").is_file());
    }
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["profile"], "aggressive");
    assert!(report["planners"]["mobil"]["avg_speed"].is_number());
}

#[test]
fn bad_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(cormp(&["run", missing.to_str().unwrap()], dir.path()).status.code(), Some(1));

    let broken = dir.path().join("broken.json");
    fs::write(&broken, r#"{"lanes": []}"#).unwrap();
    let out = cormp(&["run", broken.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    let path = scenario("slow_lead");
    let out = cormp(&["run", path.to_str().unwrap(), "--planner", "oracle"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let config = dir.path().join("cfg.json");
    fs::write(&config, r#"{"horizon": 4}"#).unwrap();
    let out = cormp(&["run", path.to_str().unwrap(), "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn incidents_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    // starts well above the limit, so the first tick is already a violation
    let doc = r#"{
      "lanes": [{"id": "a", "centerline": [[0, 0], [500, 0]], "width": 3.5, "speed_limit": 5}],
      "agents": [{"id": "ego", "kind": "ego", "position": [10, 0], "speed": 15,
                  "length": 4.5, "width": 1.8, "lane": "a", "mass": 1500}],
      "lights": [], "crosswalks": [],
      "apriori_lane": "a", "profile": "regular", "duration_s": 3
    }"#;
    let path = dir.path().join("fast.json");
    fs::write(&path, doc).unwrap();
    let out = cormp(&["run", path.to_str().unwrap()], &dir.path().join("run"));
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
    let events = fs::read_to_string(dir.path().join("run/events.json")).unwrap();
    assert!(events.contains("speeding"));
}

#[test]
fn config_profile_is_overridden_by_flag() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    fs::write(&config, r#"{"profile": "fuel_efficient"}"#).unwrap();
    let path = scenario("empty_road");
    let run = |extra: &[&str], sub: &str| {
        let mut args = vec!["run", path.to_str().unwrap(), "--config", config.to_str().unwrap()];
        args.extend_from_slice(extra);
        let out = cormp(&args, &dir.path().join(sub));
        assert_eq!(out.status.code(), Some(0));
        let m: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join(sub).join("metrics.json")).unwrap()).unwrap();
        m["profile"].as_str().unwrap().to_string()
    };
    assert_eq!(run(&[], "a"), "fuel-efficient");
    assert_eq!(run(&["--profile", "aggressive"], "b"), "aggressive");
}
