use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn htgtriage(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_htgtriage"))
        .current_dir(dir)
        .env_remove("HTGTRIAGE_CONFIG")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = htgtriage(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str]) -> String {
    let out = htgtriage(dir, args);
    assert!(!out.status.success(), "{args:?} succeeded");
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(
        err.trim_end().lines().count(),
        1,
        "diagnostic is one line: {err}"
    );
    err
}

/// synth through build-graph with default artifact paths.
fn prepare(dir: &Path, synth: &[&str]) {
    let mut args = vec!["synth", "--out", "corpus"];
    args.extend_from_slice(synth);
    ok(dir, &args);
    ok(dir, &["relabel"]);
    ok(dir, &["extract-relations"]);
    ok(dir, &["build-graph"]);
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn synth_rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        [
            "synth",
            "--modules",
            "5",
            "--devs-per-module",
            "2",
            "--issues",
            "500",
            "--seed",
            "7",
            "--out",
            out,
        ]
    };
    ok(tmp.path(), &args("a"));
    ok(tmp.path(), &args("b"));
    let (a, b) = (
        dir_bytes(&tmp.path().join("a")),
        dir_bytes(&tmp.path().join("b")),
    );
    assert!(a.len() >= 4);
    assert_eq!(a, b);
}

#[test]
fn full_pipeline_writes_a_complete_report() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    prepare(d, &["--seed", "3"]);
    ok(d, &["train", "--tw", "2", "--seed", "5", "--out", "ckpt"]);
    for f in ["best", "last", "history.tsv", "run.conf"] {
        assert!(d.join("ckpt").join(f).is_file(), "{f}");
    }
    ok(
        d,
        &[
            "evaluate",
            "--ckpt",
            "ckpt/best",
            "--topn",
            "1,3,5",
            "--report",
            "out/eval",
            "--corpus",
            "corpus",
            "--rankings",
        ],
    );
    let text = fs::read_to_string(d.join("out/eval")).unwrap();
    let report = htgtriage_core::evaluation::parse_report_sections(&text).unwrap();
    for sys in ["model", "baseline"] {
        for k in ["top1", "top3", "top5", "mrr"] {
            let v = report.get_f64("metrics", &format!("{sys}.{k}")).unwrap();
            assert!((0.0..=1.0).contains(&v), "{sys}.{k} = {v}");
        }
        for k in ["t_core", "f_core", "t_non_core", "f_non_core"] {
            assert!(
                report.get("groups", &format!("{sys}.{k}")).is_some(),
                "{sys}.{k}"
            );
        }
    }
    for k in [
        "wilcoxon.p",
        "wilcoxon.w",
        "cliffs.delta",
        "cliffs.magnitude",
    ] {
        assert!(report.get("statistics", k).is_some(), "{k}");
    }
    // The echoed settings come from the checkpoint.
    assert_eq!(report.get("config", "seed"), Some("5"));
    assert_eq!(report.get("config", "tw"), Some("2"));
    assert!(report.get("inputs", "graph").is_some());
    assert!(report
        .section("activity")
        .is_some_and(|s| s.lines.len() > 2));
    assert!(report
        .section("rankings")
        .is_some_and(|s| !s.lines.is_empty()));

    // A checkpoint directory stands for its best parameters.
    ok(d, &["evaluate", "--ckpt", "ckpt", "--report", "out/eval2"]);
    let again = fs::read_to_string(d.join("out/eval2")).unwrap();
    let again = htgtriage_core::evaluation::parse_report_sections(&again).unwrap();
    assert_eq!(report.metric_hash(), again.metric_hash());

    let issue = r#"{"issue_id":"new-1","title":"crash","body":"it fails","reporter":"m0-dev0","created_at":"2030-01-01T00:00:00Z","state":"open"}"#;
    fs::write(d.join("issue.json"), issue).unwrap();
    let out = ok(
        d,
        &[
            "recommend",
            "--issue-file",
            "issue.json",
            "--top",
            "3",
            "--ckpt",
            "ckpt",
        ],
    );
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4, "{out}");
    assert!(lines[1].starts_with("1\t"));

    let stats = ok(d, &["stats", "--graph", "work/graph.htg"]);
    assert!(stats.contains("[activity]") && stats.contains("[graph]"));
}

#[test]
fn missing_artifacts_name_their_producer() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert!(fails(d, &["relabel"]).contains("synth"));
    assert!(fails(d, &["build-graph"]).contains("htgtriage extract-relations"));
    assert!(fails(d, &["train"]).contains("htgtriage build-graph"));
    ok(d, &["synth", "--issues", "200", "--out", "corpus"]);
    ok(d, &["extract-relations"]);
    assert!(fails(d, &["build-graph"]).contains("htgtriage relabel"));
    ok(d, &["relabel"]);
    ok(d, &["build-graph"]);
    assert!(fails(d, &["evaluate"]).contains("htgtriage train"));
}

#[test]
fn flags_beat_overrides_beat_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    prepare(d, &["--issues", "200"]);
    fs::write(
        d.join("run.conf"),
        "tw = 3\nseed = 11\nepochs = 2\nlr = 0.01\n",
    )
    .unwrap();
    ok(
        d,
        &[
            "--config", "run.conf", "--set", "seed=12", "--set", "tw=4", "train", "--tw", "1",
        ],
    );
    let text = fs::read_to_string(d.join("work/ckpt/run.conf")).unwrap();
    let mut c = htgtriage_core::pipeline::RunConfig::default();
    c.apply_text(&text).unwrap();
    assert_eq!((c.model.tw, c.model.seed, c.train.epochs), (1, 12, 2));
    assert_eq!(c.train.lr, 0.01);

    let env = Command::new(env!("CARGO_BIN_EXE_htgtriage"))
        .current_dir(d)
        .env("HTGTRIAGE_CONFIG", "run.conf")
        .args(["train", "--out", "ckpt2"])
        .output()
        .unwrap();
    assert!(env.status.success());
    let text = fs::read_to_string(d.join("ckpt2/run.conf")).unwrap();
    assert!(text.contains("tw = 3\n") && text.contains("seed = 11\n"));

    assert!(fails(d, &["--set", "bogus=1", "train"]).contains("bogus"));
    assert!(fails(d, &["--set", "tw", "train"]).contains("KEY=VALUE"));
}

#[test]
fn sweep_window_on_the_drift_fixture_has_seven_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    prepare(d, &["--drift-fixture", "--seed", "1"]);
    let out = ok(d, &["sweep-window", "--out", "sweep.tsv"]);
    let rows: Vec<Vec<&str>> = out
        .lines()
        .skip(1)
        .map(|l| l.split('\t').collect())
        .collect();
    assert_eq!(rows.len(), 7);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], (i + 1).to_string());
        let mrr: f64 = r[4].parse().unwrap();
        assert!((0.0..=1.0).contains(&mrr));
    }
    assert_eq!(fs::read_to_string(d.join("sweep.tsv")).unwrap(), out);
}
