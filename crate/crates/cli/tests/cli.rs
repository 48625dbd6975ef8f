//! CLI contract tests: exit codes, error prefixes, determinism, and the
//! manifest safety checks.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sentinel(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sentinel"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn sentinel")
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stderr: {}",
        stderr(output)
    );
}

/// Fast pca-only training setup shared by the model-safety tests.
fn train_pca(dir: &Path, trace: &str, out: &str) {
    let output = sentinel(
        dir,
        &[
            "train",
            "--trace",
            trace,
            "--out",
            out,
            "--detector",
            "pca",
            "--pca-k",
            "3",
        ],
    );
    assert_exit(&output, 0);
}

#[test]
fn gen_is_deterministic_and_labels_spans() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "gen",
        "--profile",
        "cyclic",
        "--duration",
        "60s",
        "--seed",
        "5",
        "--attack",
        "order-shuffle",
        "--at",
        "30s",
        "--dur",
        "10s",
    ];
    let mut first = args.to_vec();
    first.extend(["--out", "a"]);
    assert_exit(&sentinel(dir.path(), &first), 0);
    let mut second = args.to_vec();
    second.extend(["--out", "b"]);
    assert_exit(&sentinel(dir.path(), &second), 0);

    for file in ["trace.csv", "labels.csv"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} not deterministic");
    }

    let labels = fs::read_to_string(dir.path().join("a/labels.csv")).unwrap();
    let mut lines = labels.lines();
    assert_eq!(lines.next().unwrap(), "session_id,start_ns,end_ns,kind");
    let span = lines.next().expect("one span");
    assert!(span.starts_with("0,30000000000,"));
    assert!(span.ends_with(",enum_system"));
    assert_eq!(lines.next(), None);
}

#[test]
fn unknown_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let output = sentinel(dir.path(), &["gen", "--no-such-flag"]);
    assert_exit(&output, 2);
}

#[test]
fn unknown_profile_exits_2_with_config_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let output = sentinel(dir.path(), &["gen", "--profile", "nope"]);
    assert_exit(&output, 2);
    assert!(
        stderr(&output).starts_with("error[config]:"),
        "{}",
        stderr(&output)
    );
}

#[test]
fn malformed_trace_exits_3_with_data_prefix() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "0,1000,futex\nnot a record\n").unwrap();
    let output = sentinel(dir.path(), &["train", "--trace", "bad.csv"]);
    assert_exit(&output, 3);
    let err = stderr(&output);
    assert!(err.starts_with("error[data]:"), "{err}");
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn training_on_attack_windows_is_refused_without_override() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &sentinel(
            dir.path(),
            &[
                "gen",
                "--duration",
                "60s",
                "--seed",
                "3",
                "--attack",
                "frequency-shift",
                "--at",
                "20s",
                "--dur",
                "5s",
                "--out",
                "data",
            ],
        ),
        0,
    );

    let refused = sentinel(
        dir.path(),
        &[
            "train",
            "--trace",
            "data/trace.csv",
            "--labels",
            "data/labels.csv",
            "--detector",
            "pca",
            "--pca-k",
            "3",
        ],
    );
    assert_exit(&refused, 3);
    assert!(stderr(&refused).contains("attack-labeled windows"));

    let allowed = sentinel(
        dir.path(),
        &[
            "train",
            "--trace",
            "data/trace.csv",
            "--labels",
            "data/labels.csv",
            "--detector",
            "pca",
            "--pca-k",
            "3",
            "--allow-attack-windows",
        ],
    );
    assert_exit(&allowed, 0);
    assert!(stderr(&allowed).contains("warning:"));
}

#[test]
fn single_detector_training_writes_only_that_model() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &sentinel(
            dir.path(),
            &["gen", "--duration", "120s", "--seed", "4", "--out", "data"],
        ),
        0,
    );
    let output = sentinel(
        dir.path(),
        &[
            "train",
            "--trace",
            "data/trace.csv",
            "--detector",
            "lstm",
            "--profile",
            "test",
            "--epochs",
            "2",
            "--delta",
            "5",
            "--out",
            "models",
        ],
    );
    assert_exit(&output, 0);
    assert!(dir.path().join("models/lstm.model").exists());
    assert!(!dir.path().join("models/pca.model").exists());
    assert!(!dir.path().join("models/ocsvm.model").exists());

    let manifest = fs::read_to_string(dir.path().join("models/manifest.json")).unwrap();
    assert!(manifest.contains("\"detectors\": [\n    \"lstm\"\n  ]"));
    // test profile hyper-parameters with explicit overrides applied
    assert!(manifest.contains("\"hidden_units\": 16"));
    assert!(manifest.contains("\"epochs\": 2"));
}

#[test]
fn pca_rank_clamp_warns() {
    let dir = tempfile::tempdir().unwrap();
    // cyclic profile has 8 syscalls + OOV = 9 dims, below the default k=20
    assert_exit(
        &sentinel(
            dir.path(),
            &[
                "gen",
                "--profile",
                "cyclic",
                "--duration",
                "60s",
                "--seed",
                "2",
                "--out",
                "data",
            ],
        ),
        0,
    );
    let output = sentinel(
        dir.path(),
        &[
            "train",
            "--trace",
            "data/trace.csv",
            "--detector",
            "pca",
            "--out",
            "models",
        ],
    );
    assert_exit(&output, 0);
    assert!(stderr(&output).contains("clamped"), "{}", stderr(&output));
}

#[test]
fn score_refuses_interval_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &sentinel(
            dir.path(),
            &["gen", "--duration", "60s", "--seed", "1", "--out", "data"],
        ),
        0,
    );
    train_pca(dir.path(), "data/trace.csv", "models");

    let output = sentinel(
        dir.path(),
        &[
            "score",
            "--trace",
            "data/trace.csv",
            "--models",
            "models",
            "--interval",
            "500ms",
        ],
    );
    assert_exit(&output, 3);
    assert!(stderr(&output).contains("interval mismatch"));
}

#[test]
fn score_refuses_models_from_a_different_vocabulary() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &sentinel(
            dir.path(),
            &["gen", "--duration", "60s", "--seed", "1", "--out", "data_a"],
        ),
        0,
    );
    assert_exit(
        &sentinel(
            dir.path(),
            &[
                "gen",
                "--profile",
                "cyclic",
                "--duration",
                "60s",
                "--seed",
                "1",
                "--out",
                "data_b",
            ],
        ),
        0,
    );
    train_pca(dir.path(), "data_a/trace.csv", "models_a");
    train_pca(dir.path(), "data_b/trace.csv", "models_b");

    // swap in a model trained against a different vocabulary
    fs::copy(
        dir.path().join("models_b/pca.model"),
        dir.path().join("models_a/pca.model"),
    )
    .unwrap();
    let output = sentinel(
        dir.path(),
        &[
            "score",
            "--trace",
            "data_a/trace.csv",
            "--models",
            "models_a",
        ],
    );
    assert_exit(&output, 3);
    assert!(stderr(&output).contains("vocabulary mismatch"));
}

#[test]
fn unseen_syscalls_fall_into_oov_and_score_finitely() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &sentinel(
            dir.path(),
            &["gen", "--duration", "120s", "--seed", "9", "--out", "data"],
        ),
        0,
    );
    train_pca(dir.path(), "data/trace.csv", "models");

    // a trace full of syscalls the models never saw
    let mut novel = String::from("session_id,timestamp_ns,syscall\n");
    for i in 0..40u64 {
        novel.push_str(&format!("0,{},weird_call\n", i * 250_000_000));
    }
    fs::write(dir.path().join("novel.csv"), novel).unwrap();

    let output = sentinel(
        dir.path(),
        &[
            "score",
            "--trace",
            "novel.csv",
            "--models",
            "models",
            "--out",
            "novel_scores.csv",
        ],
    );
    assert_exit(&output, 0);
    let scores = fs::read_to_string(dir.path().join("novel_scores.csv")).unwrap();
    for line in scores.lines().skip(1) {
        let score: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!(score.is_finite());
    }
}

#[test]
fn lstm_scoring_warns_when_sessions_are_shorter_than_delta() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &sentinel(
            dir.path(),
            &["gen", "--duration", "120s", "--seed", "6", "--out", "data"],
        ),
        0,
    );
    assert_exit(
        &sentinel(
            dir.path(),
            &[
                "train",
                "--trace",
                "data/trace.csv",
                "--detector",
                "lstm",
                "--profile",
                "test",
                "--epochs",
                "2",
                "--delta",
                "15",
                "--out",
                "models",
            ],
        ),
        0,
    );

    // 10 windows < delta + 1: no scoreable window
    let mut short = String::from("session_id,timestamp_ns,syscall\n");
    for i in 0..10u64 {
        short.push_str(&format!("0,{},read\n", i * 1_000_000_000));
    }
    fs::write(dir.path().join("short.csv"), short).unwrap();
    let output = sentinel(
        dir.path(),
        &[
            "score",
            "--trace",
            "short.csv",
            "--models",
            "models",
            "--out",
            "short_scores.csv",
        ],
    );
    assert_exit(&output, 0);
    assert!(stderr(&output).contains("unscored"), "{}", stderr(&output));
    let scores = fs::read_to_string(dir.path().join("short_scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 1, "header only: {scores}");
}

#[test]
fn eval_with_single_class_labels_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &sentinel(
            dir.path(),
            &["gen", "--duration", "60s", "--seed", "1", "--out", "data"],
        ),
        0,
    );
    train_pca(dir.path(), "data/trace.csv", "models");
    assert_exit(
        &sentinel(
            dir.path(),
            &[
                "score",
                "--trace",
                "data/trace.csv",
                "--models",
                "models",
                "--out",
                "scores.csv",
            ],
        ),
        0,
    );
    // all-legitimate scores: no positive class to evaluate
    let output = sentinel(
        dir.path(),
        &[
            "eval",
            "--scores",
            "scores.csv",
            "--labels",
            "data/labels.csv",
            "--out",
            "reports",
        ],
    );
    assert_exit(&output, 3);
    assert!(stderr(&output).starts_with("error[data]:"));
}

#[test]
fn report_writes_summary_scenario_csvs_and_svgs() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(
        &sentinel(
            dir.path(),
            &["gen", "--duration", "180s", "--seed", "1", "--out", "train"],
        ),
        0,
    );
    assert_exit(
        &sentinel(
            dir.path(),
            &[
                "gen",
                "--duration",
                "180s",
                "--seed",
                "2",
                "--attack",
                "frequency-shift",
                "--at",
                "60s",
                "--dur",
                "10s",
                "--attack-count",
                "2",
                "--attack-gap",
                "30s",
                "--out",
                "test",
            ],
        ),
        0,
    );
    train_pca(dir.path(), "train/trace.csv", "models");
    assert_exit(
        &sentinel(
            dir.path(),
            &[
                "score",
                "--trace",
                "test/trace.csv",
                "--labels",
                "test/labels.csv",
                "--models",
                "models",
                "--out",
                "scores.csv",
            ],
        ),
        0,
    );
    assert_exit(
        &sentinel(
            dir.path(),
            &[
                "report",
                "--scores",
                "scores.csv",
                "--labels",
                "test/labels.csv",
                "--out",
                "reports",
                "--fpr-list",
                "0.01,0.05",
            ],
        ),
        0,
    );

    let summary = fs::read_to_string(dir.path().join("reports/summary.csv")).unwrap();
    assert!(summary.starts_with("scenario,detector,auc,tpr@0.01,tpr@0.05,n_attack,n_legit"));
    assert!(summary.contains("averaged,pca,"));
    assert!(summary.contains("enum_network,pca,"));
    assert!(dir.path().join("reports/roc_averaged.csv").exists());
    assert!(dir.path().join("reports/roc_averaged.svg").exists());
    assert!(dir.path().join("reports/roc_enum_network.svg").exists());

    let svg = fs::read_to_string(dir.path().join("reports/roc_averaged.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("polyline"));
}
