use std::path::Path;
use std::process::{Command, Output};

use bellkit::chsh::NullConvention;
use bellkit::engine::{run, ExperimentConfig, Physics, SettingSource};
use bellkit::quantum::{make_bell_state, tsirelson_settings, BellSign};

fn bellkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellkit")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, trials: u64) -> String {
    let config = ExperimentConfig::new(
        Physics::Quantum {
            state: make_bell_state(BellSign::Plus),
            settings: tsirelson_settings(),
        },
        SettingSource::IidUniform,
        trials,
        1,
    )
    .with_efficiency(0.9, 0.85);
    let path = dir.join("c.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn bound_prints_ceiling() {
    let o = bellkit(&["bound", "--eta", "0.75"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("3.333333"), "{text}");
    assert!(text.contains("loophole OPEN"));

    let o = bellkit(&["--json", "bound", "--eta", "0.9"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["loophole_open"], false);
    assert!((v["bound"].as_f64().unwrap() - (4.0 / 0.9 - 2.0)).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_csv = dir.path().join("bad.csv");
    std::fs::write(&bad_csv, "trial,setting_a,setting_b,outcome_a,outcome_b,heralded\n0,0,7,1,1,1\n").unwrap();
    let bad_json = dir.path().join("bad.json");
    std::fs::write(&bad_json, "{ not json").unwrap();
    let missing = dir.path().join("missing.csv");
    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec!["scenario", "bohm"], 2),
        (vec!["frobnicate"], 2),
        (vec!["bound"], 2),
        (vec!["bound", "--eta", "abc"], 2),
        (vec!["analyze", "--log", "x.csv", "--convention", "sideways"], 2),
        (vec!["bound", "--eta", "1.5"], 3),
        (vec!["analyze", "--log", bad_csv.to_str().unwrap()], 3),
        (vec!["analyze", "--log", missing.to_str().unwrap()], 3),
        (vec!["simulate", "--config", bad_json.to_str().unwrap()], 3),
        (vec!["audit", "--events", bad_json.to_str().unwrap()], 3),
        (vec!["synthesize", "foc", "--targets", "1.5,0,0,0"], 4),
        (vec!["synthesize", "detection", "--eta", "0"], 3),
        (vec!["synthesize", "foc", "--restarts", "0"], 2),
        (vec!["synthesize", "foc", "--targets", "0.5,0.5,0.5"], 2),
    ];
    for (args, code) in cases {
        let o = bellkit(&args);
        assert_eq!(o.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = bellkit(&["scenario", "bohm"]);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("cosmic-quasar"), "{err}");
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 5000);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = bellkit(&["simulate", "--config", &config, "--seed", "7", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let first = std::fs::read(&a).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap());
    assert_eq!(first.iter().filter(|c| **c == b'\n').count(), 5001);

    let o = bellkit(&["simulate", "--config", &config, "--seed", "8"]);
    assert_ne!(o.stdout, first);
}

#[test]
fn angles_flag_takes_degrees() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 20_000);
    let log = dir.path().join("aligned.csv");
    let o = bellkit(&["simulate", "--config", &config, "--angles", "0,0,0,0", "--out", log.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    // aligned analyzers on |HV⟩ + |VH⟩ always disagree
    let o = bellkit(&["--json", "analyze", "--log", log.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for c in v["chsh"]["correlations"].as_array().unwrap() {
        assert_eq!(c["value"].as_f64().unwrap(), -1.0);
    }
    assert!(v["sigma"].is_null());
    let o = bellkit(&["simulate", "--config", &config, "--angles", "0,45"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_matches_library_run() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_config(dir.path(), 2000);
    let out = dir.path().join("run.csv");
    bellkit(&["simulate", "--config", &config_path, "--seed", "3", "--out", out.to_str().unwrap()]);
    let mut config: ExperimentConfig = serde_json::from_str(&std::fs::read_to_string(&config_path).unwrap()).unwrap();
    config.seed = 3;
    let log = run(&config).unwrap();
    let read = bellkit::engine::read_csv_path(&out).unwrap();
    assert_eq!(read.records, log.records);
}

#[test]
fn replications_write_one_file_each() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 100);
    let out = dir.path().join("rep.csv");
    let o = bellkit(&[
        "simulate", "--config", &config, "--out", out.to_str().unwrap(), "--replications", "3", "--jobs", "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let files: Vec<Vec<u8>> = (0..3).map(|k| std::fs::read(dir.path().join(format!("rep_{k}.csv"))).unwrap()).collect();
    assert_ne!(files[0], files[1]);

    // worker count does not change the logs
    let o = bellkit(&[
        "simulate", "--config", &config, "--out", out.to_str().unwrap(), "--replications", "3", "--jobs", "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    for (k, f) in files.iter().enumerate() {
        assert_eq!(&std::fs::read(dir.path().join(format!("rep_{k}.csv"))).unwrap(), f);
    }
}

#[test]
fn analyze_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), 40_000);
    let log_path = dir.path().join("run.csv");
    bellkit(&["simulate", "--config", &config, "--out", log_path.to_str().unwrap()]);
    let o = bellkit(&["--json", "analyze", "--log", log_path.to_str().unwrap(), "--convention", "discard"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["S", "se", "sigma", "p", "epsilon", "convention"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["convention"], "discard_nulls");

    // same numbers as the library on the same log
    let log = bellkit::engine::read_csv_path(&log_path).unwrap();
    let est = bellkit::stats::estimate_s(&log, NullConvention::DiscardNulls).unwrap();
    assert_eq!(v["S"].as_f64().unwrap(), est.s);
    assert_eq!(v["se"].as_f64().unwrap(), est.std_error);
    assert!((v["sigma"].as_f64().unwrap() - (est.s - 2.0) / est.std_error).abs() < 1e-12);
    assert!(v["p"].as_f64().unwrap() < 1e-6);

    let o = bellkit(&["--json", "analyze", "--log", log_path.to_str().unwrap(), "--convention", "minus", "--eta", "0.9"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["convention"], "null_as_minus");
    assert_eq!(v["renormalized"].as_array().unwrap().len(), 4);
}

#[test]
fn audit_event_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.json");
    std::fs::write(
        &path,
        r#"[
            {"label": "choose_a", "t": -1, "x": 0.5},
            {"label": "choose_b", "t": -1, "x": -0.5},
            {"label": "emission", "t": 0, "x": 0},
            {"label": "outcome_a", "t": 0.6, "x": 0.6, "y": 0, "z": 0},
            {"label": "outcome_b", "t": 0.6, "x": -0.6}
        ]"#,
    )
    .unwrap();
    let o = bellkit(&["audit", "--events", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("audit: FAIL"), "{text}");
    assert!(text.contains("(6) FAIL"));

    let o = bellkit(&["--json", "audit", "--events", path.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["arrangement"]["pass"], false);
    assert_eq!(v["intervals"].as_array().unwrap().len(), 10);

    let dup = dir.path().join("dup.json");
    std::fs::write(&dup, r#"[{"label": "emission", "t": 0, "x": 0}, {"label": "emission", "t": 1, "x": 0}]"#).unwrap();
    assert_eq!(bellkit(&["audit", "--events", dup.to_str().unwrap()]).status.code(), Some(2));

    let stars = dir.path().join("stars.json");
    std::fs::write(
        &stars,
        r#"{"events": [
            {"label": "choose_a", "t": 0.4, "x": 0.5},
            {"label": "choose_b", "t": 0.4, "x": -0.5},
            {"label": "emission", "t": 0, "x": 0},
            {"label": "outcome_a", "t": 0.6, "x": 0.6},
            {"label": "outcome_b", "t": 0.6, "x": -0.6}],
           "setting_sources_a": [{"label": "star_a", "t": -600, "x": 600}],
           "setting_sources_b": [{"label": "star_b", "t": -1930, "x": -1930}]}"#,
    )
    .unwrap();
    let o = bellkit(&["--json", "audit", "--events", stars.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["arrangement"]["pass"], true);
    assert_eq!(v["foc_exclusion"]["exclusion_time"], -600.0);
    assert_eq!(v["foc_exclusion"]["latest_common_cause"], -2530.0);
}

#[test]
fn audit_simulated_log() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("weihs.json");
    let o = bellkit(&["scenario", "weihs", "--trials", "50", "--dump-config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let log = dir.path().join("weihs.csv");
    bellkit(&["simulate", "--config", cfg.to_str().unwrap(), "--out", log.to_str().unwrap()]);
    let o = bellkit(&["audit", "--log", log.to_str().unwrap()]);
    assert!(stdout(&o).starts_with("audit: PASS"), "{}", stdout(&o));
}

#[test]
fn scenarios() {
    let o = bellkit(&["scenario", "weihs", "--trials", "100000"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("paper: 2.73 ± 0.02"), "{text}");
    assert!(text.contains("audit: PASS"));
    assert!(text.contains("apparatus fidelity, unmodeled"));

    let text = stdout(&bellkit(&["scenario", "aspect", "--trials", "1000"]));
    assert!(text.contains("flagged PREDICTABLE"), "{text}");

    let text = stdout(&bellkit(&["scenario", "cosmic-vienna", "--trials", "1000"]));
    assert!(text.contains("FOC exclusion time: -600 yr"), "{text}");

    let text = stdout(&bellkit(&["scenario", "cosmic-quasar", "--trials", "1000"]));
    assert!(text.contains("FOC exclusion time: -7.780e9 yr"), "{text}");

    for (name, verdict) in [("freedman-clauser", "audit: FAIL"), ("nist-ions", "audit: FAIL"), ("delft", "audit: PASS")] {
        let text = stdout(&bellkit(&["scenario", name, "--trials", "2000"]));
        assert!(text.contains(verdict), "{name}: {text}");
    }

    let listing = stdout(&bellkit(&["scenario", "list"]));
    assert_eq!(listing.lines().count(), 7);
}

#[test]
fn scenario_json_is_seeded() {
    let a = bellkit(&["--json", "scenario", "delft", "--trials", "20000", "--seed", "4"]);
    let b = bellkit(&["--json", "scenario", "delft", "--trials", "20000", "--seed", "4"]);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["preset"]["reference"]["S"], 2.42);
    assert!(v["trials_analyzed"].as_u64().unwrap() < 20000);
}

#[test]
fn synthesize_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("adv.json");
    let o = bellkit(&[
        "--json", "synthesize", "detection", "--eta", "0.828", "--verify", "200000", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["kind"], "detection");
    assert!(v["achieved_S"].as_f64().unwrap() > 2.828);
    assert!(v["model"]["lambda_support"].as_array().unwrap().len() > 1);
    assert_eq!(v["verification"]["consistent"], true);
    assert_eq!(std::fs::read(&out).unwrap(), o.stdout);

    // the stored model loads back as a library report
    let report: bellkit::synthesize::AdversaryReport = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report.efficiency, Some(0.828));

    let o = bellkit(&["--json", "synthesize", "foc"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["achieved_I"].as_f64().unwrap() <= 0.05);
    assert_eq!(v["restarts"], 32);

    let o = bellkit(&["synthesize", "foc", "--targets", "0.5,0.5,0.5,-0.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("mutual information I = 0.0000000 bits"), "{}", stdout(&o));
}
