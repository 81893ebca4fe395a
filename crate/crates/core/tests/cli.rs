use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn step(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_step")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth_into(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["synth", "--n", "5", "--steps", "40", "--d", "3", "--output-dir", p(dir)];
    args.extend_from_slice(extra);
    step(&args)
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("run.json");
    fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_owned()
}

const SMALL: &str = r#"{"s": 4, "hidden_dim": 6, "epochs": 2, "batch_size": 8}"#;

#[test]
fn synth_writes_meta_with_bayes_rate_and_is_repeatable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = synth_into(a.path(), &["--noise", "0", "--coupling", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "n=5 d=3 T=40 bayes_rate=1.0000");
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.path().join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["bayes_rate"], 1.0);
    synth_into(b.path(), &["--noise", "0", "--coupling", "1"]);
    for file in ["meta.json", "frames.csv", "adjacency.csv"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap());
    }
}

#[test]
fn invalid_synth_probabilities_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = synth_into(dir.path(), &["--noise", "0.5", "--coupling", "0.8"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("coupling"));
}

#[test]
fn train_is_deterministic_and_eval_agrees() {
    let data = tempfile::tempdir().unwrap();
    synth_into(data.path(), &[]);
    let cfg_dir = tempfile::tempdir().unwrap();
    let config = write_config(cfg_dir.path(), SMALL);
    let runs: Vec<(tempfile::TempDir, Output)> = (0..2)
        .map(|_| {
            let out_dir = tempfile::tempdir().unwrap();
            let out = step(&[
                "train",
                "--config",
                &config,
                "--dataset-dir",
                p(data.path()),
                "--output-dir",
                p(out_dir.path()),
            ]);
            (out_dir, out)
        })
        .collect();
    for (_, out) in &runs {
        assert!(out.status.success(), "{}", stderr(out));
    }
    let line = stdout(&runs[0].1);
    let acc = line.trim().strip_prefix("test_acc=").expect("test_acc line");
    assert_eq!(acc.split('.').nth(1).map(str::len), Some(4), "{line}");
    for file in ["metrics.csv", "model.ckpt"] {
        assert_eq!(
            fs::read(runs[0].0.path().join(file)).unwrap(),
            fs::read(runs[1].0.path().join(file)).unwrap(),
            "{file}"
        );
    }
    let metrics = fs::read_to_string(runs[0].0.path().join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3);

    let ckpt = runs[0].0.path().join("model.ckpt");
    let eval = step(&["eval", "--checkpoint", p(&ckpt), "--config", &config, "--dataset-dir", p(data.path())]);
    assert!(eval.status.success(), "{}", stderr(&eval));
    assert_eq!(stdout(&eval), line);
}

#[test]
fn config_errors_exit_two() {
    let data = tempfile::tempdir().unwrap();
    synth_into(data.path(), &[]);
    let cfg_dir = tempfile::tempdir().unwrap();
    let typo = write_config(cfg_dir.path(), r#"{"hiden_dim": 8}"#);
    let out = step(&["train", "--config", &typo, "--dataset-dir", p(data.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("hiden_dim"));

    let out = step(&["train", "--k-merge", "3", "--epochs", "1", "--dataset-dir", p(data.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("k_merge"));

    let out = step(&["train", "--dataset-dir", "/nonexistent/dataset"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn divergent_training_exits_three() {
    let data = tempfile::tempdir().unwrap();
    synth_into(data.path(), &[]);
    let out_dir = tempfile::tempdir().unwrap();
    let out = step(&[
        "train",
        "--dataset-dir",
        p(data.path()),
        "--output-dir",
        p(out_dir.path()),
        "--s",
        "4",
        "--hidden-dim",
        "6",
        "--epochs",
        "5",
        "--lr",
        "1e300",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("non-finite"));
}

#[test]
fn sweep_tabulates_every_model_and_window() {
    let data = tempfile::tempdir().unwrap();
    synth_into(data.path(), &[]);
    let out_dir = tempfile::tempdir().unwrap();
    let out = step(&[
        "sweep",
        "--dataset-dir",
        p(data.path()),
        "--output-dir",
        p(out_dir.path()),
        "--hidden-dim",
        "4",
        "--epochs",
        "1",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = fs::read_to_string(out_dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "model,s,test_acc");
    assert_eq!(rows.len(), 13);
    let keys: Vec<(String, usize)> = rows[1..]
        .iter()
        .map(|r| {
            let f: Vec<&str> = r.split(',').collect();
            (f[0].to_string(), f[1].parse().unwrap())
        })
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(keys[0], ("convlstm".to_string(), 5));
    assert_eq!(keys[11], ("step".to_string(), 20));
    assert!(out_dir.path().join("metrics_lstm_s15.csv").exists());
}

#[test]
fn preprocess_reports_shape_and_rejects_empty_results() {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden/events.csv");
    let out_dir = tempfile::tempdir().unwrap();
    let cfg_dir = tempfile::tempdir().unwrap();
    let config = write_config(cfg_dir.path(), r#"{"k_merge": 2}"#);
    let ok = step(&[
        "preprocess",
        "--events",
        p(&fixture),
        "--min-occurrences",
        "2",
        "--config",
        &config,
        "--output-dir",
        p(out_dir.path()),
    ]);
    assert!(ok.status.success(), "{}", stderr(&ok));
    assert_eq!(stdout(&ok).trim(), "n=3 d=5 T=3");

    let none = step(&[
        "preprocess",
        "--events",
        p(&fixture),
        "--min-occurrences",
        "1000",
        "--output-dir",
        p(out_dir.path()),
    ]);
    assert_eq!(none.status.code(), Some(2));
    assert!(stderr(&none).contains("no hosts"));
}
