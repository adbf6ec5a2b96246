//! End-to-end tests of the `spreadnuts` binary: exit codes, output schemas,
//! determinism, and the output-directory environment override.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spreadnuts"))
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

#[test]
fn sample_writes_expected_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("samples.csv");
    let status = bin()
        .args([
            "sample",
            "--sampler",
            "nuts",
            "--target",
            "std-normal-1d",
            "--n",
            "10000",
            "--burn",
            "500",
            "--seed",
            "3",
        ])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = read(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config: "), "config line missing");
    assert!(lines[0].contains("\"master_seed\":3"), "seed not embedded in config");
    assert_eq!(lines[1], "x0");
    assert_eq!(lines.len() - 2, 9500, "expected 9500 sample rows");
}

#[test]
fn sample_json_embeds_full_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("samples.json");
    let status = bin()
        .args([
            "sample",
            "--sampler",
            "direct",
            "--target",
            "two-island-2.5",
            "--n",
            "800",
            "--burn",
            "300",
            "--format",
            "json",
        ])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let v: serde_json::Value = serde_json::from_str(&read(&out)).unwrap();
    assert_eq!(v["schema_version"], 1);
    let settings = &v["config"]["settings"];
    assert_eq!(settings["n_samples"], 800);
    assert_eq!(settings["burn_in"], 300);
    assert_eq!(settings["max_depth"], 10); // defaulted values are echoed
    assert_eq!(v["samples"].as_array().unwrap().len(), 500);
    assert_eq!(v["samples"][0].as_array().unwrap().len(), 2);
}

#[test]
fn bench_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");
    for out in [&out_a, &out_b] {
        let status = bin()
            .args([
                "bench", "--seed", "7", "--trials", "1", "--dims", "1..1", "--n", "2000",
                "--burn", "500",
            ])
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(read(&out_a), read(&out_b), "fixed-seed bench runs must be byte-identical");
}

#[test]
fn bench_report_is_schema_valid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.json");
    let hist_dir = dir.path().join("hists");
    let status = bin()
        .args([
            "bench", "--seed", "5", "--trials", "2", "--dims", "1..2", "--n", "1500", "--burn",
            "250",
        ])
        .arg("--out")
        .arg(&out)
        .arg("--histograms")
        .arg(&hist_dir)
        .status()
        .unwrap();
    assert!(status.success());
    let v: serde_json::Value = serde_json::from_str(&read(&out)).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["config"]["master_seed"], 5);
    let trials: Vec<spreadnuts::TrialReport> =
        serde_json::from_value(v["trials"].clone()).unwrap();
    assert_eq!(trials.len(), 4);
    for t in &trials {
        assert_eq!(t.retained, 1250);
        for name in ["nuts", "spreadnuts", "direct"] {
            let s = t.sampler(name).unwrap();
            assert!(s.m_tv.is_some(), "{name} missing m_tv");
            assert!(s.duration_seconds.is_none(), "timings must be opt-in");
        }
        assert!(t.log_m_tv_ratios.contains_key("nuts/spreadnuts"));
    }
    // histogram CSVs: reference + baseline + three samplers per trial
    let files = fs::read_dir(&hist_dir).unwrap().count();
    assert_eq!(files, 4 * 5);
    let one = read(&hist_dir.join("trial0_reference.csv"));
    assert!(one.starts_with("cell0,mass\n"));
}

#[test]
fn islands_emits_occupancy_per_mu() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("islands.json");
    let status = bin()
        .args([
            "islands", "--mu", "2.5", "--mu", "5.0", "--seed", "1", "--n", "1200", "--burn",
            "200", "--samplers", "nuts,spreadnuts",
        ])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let v: serde_json::Value = serde_json::from_str(&read(&out)).unwrap();
    let trials = v["trials"].as_array().unwrap();
    assert_eq!(trials.len(), 2);
    assert_eq!(trials[0]["mu_magnitude"], 2.5);
    assert_eq!(trials[1]["mu_magnitude"], 5.0);
    for t in trials {
        for s in t["samplers"].as_array().unwrap() {
            let occ = s["mode_occupancy"].as_array().unwrap();
            let total = occ[0].as_f64().unwrap() + occ[1].as_f64().unwrap();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn output_dir_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "bench", "--seed", "2", "--trials", "1", "--dims", "1..1", "--n", "600", "--burn",
            "100",
        ])
        .env("SPREADNUTS_OUT_DIR", dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("bench_report.json").exists());
}

#[test]
fn usage_errors_exit_two() {
    let unknown_flag = bin().args(["bench", "--bogus"]).output().unwrap();
    assert_eq!(unknown_flag.status.code(), Some(2));

    let missing_target = bin()
        .args(["sample", "--sampler", "nuts", "--target", "/nope/missing.json"])
        .output()
        .unwrap();
    assert_eq!(missing_target.status.code(), Some(2));

    let inverted_burn = bin()
        .args([
            "sample", "--sampler", "nuts", "--target", "std-normal-1d", "--n", "100", "--burn",
            "100",
        ])
        .output()
        .unwrap();
    assert_eq!(inverted_burn.status.code(), Some(2));

    let bad_step = bin()
        .args([
            "sample",
            "--sampler",
            "nuts",
            "--target",
            "std-normal-1d",
            "--step-size",
            "-0.5",
        ])
        .output()
        .unwrap();
    assert_eq!(bad_step.status.code(), Some(2));

    let zero_trials = bin().args(["bench", "--trials", "0"]).output().unwrap();
    assert_eq!(zero_trials.status.code(), Some(2));
}

#[test]
fn mixture_file_target_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let target_path = dir.path().join("mix.json");
    fs::write(
        &target_path,
        r#"{
  "dimension": 1,
  "components": [
    {"weight": 0.3, "mean": [-2.0], "covariance": [[1.0]]},
    {"weight": 0.7, "mean": [3.0], "covariance": [[4.0]]}
  ]
}"#,
    )
    .unwrap();
    let out = dir.path().join("s.csv");
    let status = bin()
        .args(["sample", "--sampler", "direct", "--n", "500", "--burn", "100"])
        .arg("--target")
        .arg(&target_path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(read(&out).lines().count(), 402);
}
