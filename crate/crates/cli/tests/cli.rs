use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"{
  "data": {"n_train": 30, "horizon": 5.0},
  "models": [
    {"label": "nh_gp", "kind": "adapted_coordinates", "budget": 60},
    {"label": "standard_gp", "kind": "standard_ambient", "budget": 60}
  ],
  "evaluation": {"horizon": 2.0},
  "sweep": {"sample_sizes": [10, 20], "seeds": [0], "grid_points": 20,
            "evaluation": {"horizon": 2.0}, "data": {"horizon": 5.0, "sigma_obs": 0.0}},
  "seed": 3
}"#;

fn nhgp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhgp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn step_by_step_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();

    let o = nhgp(&["generate", "--config", &cfg, "--out", out_s]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("level=INFO"));
    let csv = fs::read_to_string(out.join("dataset.csv")).unwrap();
    assert!(csv.starts_with("t,q0,q1,q2,q3,y0,y1,y2,y3\n"));
    assert_eq!(csv.lines().count(), 31);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("dataset.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 3);
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);

    let o = nhgp(&["train", "--config", &cfg, "--out", out_s]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let model: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("model_standard_gp.json")).unwrap()).unwrap();
    assert_eq!(model["channels"].as_array().unwrap().len(), 4);
    let model: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("model_nh_gp.json")).unwrap()).unwrap();
    assert_eq!(model["channels"].as_array().unwrap().len(), 2);

    let o = nhgp(&["evaluate", "--config", &cfg, "--out", out_s]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("Mean planar err.") && table.contains("nominal"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let models = report["models"].as_array().unwrap();
    assert_eq!(models.len(), 3);
    assert!(models[0]["max_constraint_violation"].as_f64().unwrap() <= 1e-8);
    assert!(models[1]["mean_constraint_violation"].as_f64().unwrap() > 1e-8);
    for f in [
        "fig1_trajectories.csv",
        "fig2_planar_error.csv",
        "fig3_constraint_violation.csv",
        "fig4_field_error.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn reproduce_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = nhgp(&["reproduce", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(String::from_utf8_lossy(&o.stdout).contains("Consistency sweep"));
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 14);
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn seed_flag_changes_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    nhgp(&["generate", "--config", &cfg, "--out", a.to_str().unwrap()]);
    let o = nhgp(&[
        "generate",
        "--config",
        &cfg,
        "--seed",
        "4",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(
        fs::read(a.join("dataset.csv")).unwrap(),
        fs::read(b.join("dataset.csv")).unwrap()
    );
}

#[test]
fn usage_and_config_errors_exit_one() {
    assert_eq!(nhgp(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(nhgp(&["train", "--budget", "3"]).status.code(), Some(1));
    assert_eq!(nhgp(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{\n  \"seed\": 1,\n  \"data\": {\"n_train\": }\n}");
    let o = nhgp(&["generate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), r#"{"system": {"name": "pendulum"}}"#);
    let o = nhgp(&["generate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("vertical_rolling_disk"));

    let o = nhgp(&[
        "generate",
        "--config",
        dir.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));

    let o = nhgp(&["train", "--out", dir.path().join("empty").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nhgp generate"));
}

#[test]
fn numerical_failure_exits_two_and_keeps_other_models() {
    // K + noise overflows at the init and every other vertex is outside the box
    let text = r#"{
      "data": {"n_train": 20, "horizon": 5.0},
      "models": [
        {"label": "ok", "kind": "adapted_coordinates", "budget": 30},
        {"label": "bad", "kind": "adapted_coordinates", "budget": 30, "init": [
          {"signal_variance": 1e308, "length_scales": [1.0, 1.0], "noise_variance": 1e308},
          {"signal_variance": 1e308, "length_scales": [1.0, 1.0], "noise_variance": 1e308}]}
      ]
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), text);
    let out = dir.path().join("out");
    nhgp(&["generate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let o = nhgp(&["train", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("bad"));
    assert!(out.join("model_ok.json").exists());
    assert!(!out.join("model_bad.json").exists());
}

#[test]
fn show_config_round_trips() {
    let o = nhgp(&["show-config", "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["seed"], 9);
    assert_eq!(v["models"].as_array().unwrap().len(), 3);
}
