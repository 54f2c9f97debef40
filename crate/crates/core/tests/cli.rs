use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"
[dataset]
n_train = 10
n_eval = 4
length = 64

[pretrain]
steps = 20

[train]
steps = 20
batch_size = 8

[gar]
n_sequences = 4
n_rollouts = 3
"#;

fn gawm(dir: &Path, args: &[&str]) -> Output {
    let cfg = dir.join("config.toml");
    if !cfg.exists() {
        fs::write(&cfg, SMALL).unwrap();
    }
    Command::new(env!("CARGO_BIN_EXE_gawm"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn json_stdout(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn gen_data_writes_one_file_per_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_stdout(&gawm(dir.path(), &["gen-data"]));
    assert_eq!(v["train_sequences"], 10);
    assert_eq!(v["poses_per_sequence"], 65);
    let train = dir.path().join("out/data/train");
    let trajs: Vec<_> = fs::read_dir(&train)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("traj"))
        .collect();
    assert_eq!(trajs.len(), 10);
    let text = fs::read_to_string(trajs[0].path()).unwrap();
    // Header line plus 65 poses.
    assert_eq!(text.lines().count(), 66);
}

#[test]
fn gen_data_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    json_stdout(&gawm(a.path(), &["gen-data"]));
    json_stdout(&gawm(b.path(), &["gen-data"]));
    for split in ["train", "eval"] {
        let mut names: Vec<_> = fs::read_dir(a.path().join("out/data").join(split))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        for n in names {
            let fa = fs::read(a.path().join("out/data").join(split).join(&n)).unwrap();
            let fb = fs::read(b.path().join("out/data").join(split).join(&n)).unwrap();
            assert_eq!(fa, fb, "{split}/{n:?}");
        }
    }
}

#[test]
fn unknown_model_reports_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = gawm(dir.path(), &["probe", "wobble:3"]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "unknown_model");
    assert!(err["message"].as_str().unwrap().contains("wobble"));
}

#[test]
fn bad_config_reports_json_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("config.toml"), "[train]\nstepz = 1\n").unwrap();
    let out = gawm(dir.path(), &["gen-data"]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].is_string());
}

#[test]
fn probe_writes_nine_rows_for_the_default_grid() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_stdout(&gawm(dir.path(), &["probe", "drift:0.1,0,0"]));
    assert!(v["delta_id"].as_f64().unwrap() > 0.0);
    let csv = fs::read_to_string(dir.path().join("out/probe/drift_0.1_0_0/gac.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 9);
    let exact = json_stdout(&gawm(dir.path(), &["probe", "exact"]));
    assert_eq!(exact["delta_id"], 0.0);
}

#[test]
fn gar_of_exact_model_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_stdout(&gawm(dir.path(), &["gar", "exact"]));
    for row in v.as_array().unwrap() {
        assert_eq!(row["aligned"]["mean"], 0.0);
        assert_eq!(row["nonaligned"]["mean"], 0.0);
    }
}

#[test]
fn train_labels_baseline_and_reproduces_checkpoint_hash() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("config.toml"),
        format!("{SMALL}\n[ga]\nlambda_ga = 0.0\n"),
    )
    .unwrap();
    let a = json_stdout(&gawm(dir.path(), &["train"]));
    assert_eq!(a["label"], "baseline");
    let manifest: Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("out/train/baseline/manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["label"], "baseline");
    assert_eq!(manifest["checkpoint_hash"], a["checkpoint_hash"]);
    let b = json_stdout(&gawm(dir.path(), &["train"]));
    assert_eq!(a["checkpoint_hash"], b["checkpoint_hash"]);

    let ckpt = a["checkpoint"].as_str().unwrap();
    let probe = json_stdout(&gawm(dir.path(), &["probe", &format!("checkpoint:{ckpt}")]));
    assert!(probe["e_gac"].as_f64().unwrap().is_finite());
}

#[test]
fn seed_flag_changes_generated_data() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let va = json_stdout(&gawm(a.path(), &["--seed", "1", "gen-data"]));
    let vb = json_stdout(&gawm(b.path(), &["--seed", "2", "gen-data"]));
    assert_ne!(va["train_seeds"], vb["train_seeds"]);
}

#[test]
fn report_collects_probe_and_gar_results() {
    let dir = tempfile::tempdir().unwrap();
    json_stdout(&gawm(dir.path(), &["probe", "sat:0.5"]));
    json_stdout(&gawm(dir.path(), &["gar", "noise:0.01"]));
    json_stdout(&gawm(dir.path(), &["report"]));
    let md = fs::read_to_string(dir.path().join("out/report.md")).unwrap();
    assert!(md.contains("## GAC"));
    assert!(md.contains("## GAR"));
    assert!(md.contains("sat:0.5"));
}
