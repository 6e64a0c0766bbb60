use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_time2box"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Synthetic dataset on 1905..=1919 plus a trained model.
struct Fixture {
    _tmp: TempDir,
    data: PathBuf,
    run: PathBuf,
}

impl Fixture {
    fn model(&self) -> PathBuf {
        self.run.join("model.t2b")
    }
}

const TRAIN_FLAGS: &[&str] = &[
    "--variant", "te", "--d", "8", "--k", "4", "--batch", "16", "--steps", "30", "--lr", "0.05", "--gamma", "6",
    "--eval-every", "10", "--seed", "1",
];

fn fixture() -> Fixture {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    ok(&[
        "gen-synthetic", "--out", s(&data), "--seed", "7", "--entities", "20", "--relations", "3", "--axis", "15",
        "--rules", "15", "--origin", "1905",
    ]);
    let run_dir = tmp.path().join("run");
    let mut args = vec!["train", "--data", s(&data), "--out", s(&run_dir)];
    args.extend_from_slice(TRAIN_FLAGS);
    ok(&args);
    Fixture {
        _tmp: tmp,
        data,
        run: run_dir,
    }
}

fn key_values(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

#[test]
fn stats_match_the_manifest() {
    let tmp = TempDir::new().unwrap();
    ok(&["gen-synthetic", "--out", s(tmp.path()), "--seed", "7"]);
    let stats = ok(&["stats", "--data", s(tmp.path())]);
    let manifest = fs::read_to_string(tmp.path().join("manifest.tsv")).unwrap();
    for split in ["train", "valid", "test"] {
        let rows: Vec<Vec<&str>> = manifest
            .lines()
            .map(|l| l.split('\t').collect::<Vec<_>>())
            .filter(|c| c[5] == split)
            .collect();
        let count = |f: &dyn Fn(&str, &str) -> bool| rows.iter().filter(|c| f(c[3], c[4])).count();
        let expected = [
            ("#all", rows.len()),
            ("#time instant", count(&|a, b| a != "-" && a == b)),
            ("#start time only", count(&|a, b| a != "-" && b == "-")),
            ("#end time only", count(&|a, b| a == "-" && b != "-")),
            ("#full time interval", count(&|a, b| a != "-" && b != "-" && a != b)),
            ("#no time", count(&|a, b| a == "-" && b == "-")),
        ];
        for (name, n) in expected {
            let line = format!("{split}\t{name}\t{n}");
            assert!(stats.lines().any(|l| l == line), "missing `{line}` in\n{stats}");
        }
    }
}

#[test]
fn empty_test_split_counts_zero() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("train.txt"), "a\tr\tb\t2000\t2001\n").unwrap();
    fs::write(tmp.path().join("valid.txt"), "").unwrap();
    fs::write(tmp.path().join("test.txt"), "").unwrap();
    let stats = ok(&["stats", "--data", s(tmp.path())]);
    assert!(stats.contains("test\t#all\t0"));
    assert!(stats.contains("train\t#full time interval\t1"));
}

#[test]
fn parse_errors_name_the_line() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("train.txt"), "a\tr\tb\t2000\t2001\na\tr\tb\t2005\t2001\n").unwrap();
    fs::write(tmp.path().join("valid.txt"), "").unwrap();
    fs::write(tmp.path().join("test.txt"), "").unwrap();
    let out = run(&["stats", "--data", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2:"));
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["train", "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    let missing = tmp.path().join("nowhere");
    let out = run(&["train", "--data", s(&missing), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["train", "--data", s(tmp.path()), "--out", s(tmp.path()), "--variant", "te,xx"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("xx"));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn training_is_reproducible_from_flags_and_snapshot() {
    let f = fixture();
    let first = fs::read(f.model()).unwrap();

    let again = f.run.parent().unwrap().join("again");
    let mut args = vec!["train", "--data", s(&f.data), "--out", s(&again)];
    args.extend_from_slice(TRAIN_FLAGS);
    ok(&args);
    assert_eq!(fs::read(again.join("model.t2b")).unwrap(), first);

    let replay = f.run.parent().unwrap().join("replay");
    ok(&["train", "--config", s(&f.run.join("config.txt")), "--out", s(&replay)]);
    assert_eq!(fs::read(replay.join("model.t2b")).unwrap(), first);
    assert_eq!(
        fs::read_to_string(replay.join("config.txt")).unwrap(),
        fs::read_to_string(f.run.join("config.txt")).unwrap()
    );

    let log = fs::read_to_string(f.run.join("train.log")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines[0], "step\tloss\tvalid_mrr");
    assert_eq!(lines.len(), 4);
}

#[test]
fn smoothness_column_with_beta() {
    let f = fixture();
    let out = f.run.parent().unwrap().join("beta");
    let mut args = vec!["train", "--data", s(&f.data), "--out", s(&out)];
    args.extend_from_slice(TRAIN_FLAGS);
    args.extend_from_slice(&["--beta", "0.1"]);
    let stdout = ok(&args);
    assert!(stdout.starts_with("step\tloss\tvalid_mrr\tlambda\n"));
    let log = fs::read_to_string(out.join("train.log")).unwrap();
    assert!(log.lines().skip(1).all(|l| l.split('\t').count() == 4));
}

#[test]
fn link_reports_and_filter_inclusion() {
    let f = fixture();
    let dir = f.run.join("link");
    let text = ok(&[
        "eval-link", "--data", s(&f.data), "--checkpoint", s(&f.model()), "--out", s(&dir),
    ]);
    let plain = key_values(&text);
    assert_eq!(plain["filter"], "train,valid");
    let tsv = fs::read_to_string(dir.join("link_report.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 6);
    assert_eq!(key_values(&fs::read_to_string(dir.join("link_report.txt")).unwrap()), plain);

    let all = key_values(&ok(&[
        "eval-link", "--data", s(&f.data), "--checkpoint", s(&f.model()), "--filter", "train,valid,test",
    ]));
    let mrr = |m: &BTreeMap<String, String>| m["mrr"].parse::<f64>().unwrap();
    assert!(mrr(&all) >= mrr(&plain));
    assert!(mrr(&plain) > 0.0 && mrr(&plain) <= 1.0);
}

#[test]
fn time_reports_and_singleton_threshold() {
    let f = fixture();
    let dir = f.run.join("time");
    let text = ok(&[
        "eval-time", "--data", s(&f.data), "--checkpoint", s(&f.model()), "--out", s(&dir), "--tau", "1.0",
    ]);
    let kv = key_values(&text);
    assert_eq!(kv["tau"], "1");
    let at = |k: &str| kv[k].parse::<f64>().unwrap();
    assert!(at("gaeiou@10") >= at("gaeiou@1"));
    assert_eq!(fs::read_to_string(dir.join("time_report.tsv")).unwrap().lines().count(), 5);
    let rows = fs::read_to_string(dir.join("time_predictions.tsv")).unwrap();
    for row in rows.lines().skip(1) {
        let predicted = row.rsplit('\t').next().unwrap();
        for interval in predicted.split(',') {
            let (lo, hi) = interval.split_once('-').unwrap();
            assert_eq!(lo, hi, "{row}");
        }
    }
}

#[test]
fn evaluation_is_deterministic() {
    let f = fixture();
    let model = f.model();
    let args = ["eval-time", "--data", s(&f.data), "--checkpoint", s(&model), "--seed", "3"];
    assert_eq!(ok(&args), ok(&args));
    let args = ["eval-link", "--data", s(&f.data), "--checkpoint", s(&model)];
    assert_eq!(ok(&args), ok(&args));
}

#[test]
fn predict_tables() {
    let f = fixture();
    let model = f.model();
    let base = ["predict", "--data", s(&f.data), "--checkpoint", s(&model)];
    let manifest = fs::read_to_string(f.data.join("train.txt")).unwrap();
    let first: Vec<&str> = manifest.lines().next().unwrap().split('\t').collect();
    let (subject, relation) = (first[0], first[1]);

    let mut args = base.to_vec();
    args.extend_from_slice(&["--subject", subject, "--relation", relation, "--time", "1910", "--topk", "10"]);
    let table = ok(&args);
    let scores: Vec<f64> = table
        .lines()
        .skip(1)
        .map(|l| l.split('\t').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(scores.len(), 10);
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));

    let mut args = base.to_vec();
    args.extend_from_slice(&["--subject", subject, "--relation", relation, "--from", "1905", "--to", "1919"]);
    let timeline = ok(&args);
    let years: Vec<&str> = timeline.lines().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(years.len(), 15);
    assert_eq!((years[0], years[14]), ("1905", "1919"));

    let mut args = base.to_vec();
    args.extend_from_slice(&["--subject", "Atlantis", "--relation", relation]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Atlantis"));
}

#[test]
fn metrics_command() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("rows.tsv");
    fs::write(&input, "2011\t2020\t1998\t2010\n2011\t2016\t2011\t2016\n2011\t2016\t2009\t2013\n").unwrap();
    let out = ok(&["metrics", "--input", s(&input)]);
    let rows: Vec<Vec<&str>> = out.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(&rows[0][5..], &["0.043478", "0.021739"]);
    assert_eq!(&rows[1][4..], &["1.000000", "1.000000", "1.000000"]);
    assert_eq!(rows[2][4], "0.375000");

    fs::write(&input, "2011\t2010\t1998\t2010\n").unwrap();
    assert_eq!(run(&["metrics", "--input", s(&input)]).status.code(), Some(1));
}

#[test]
fn export_and_dimension_checks() {
    let f = fixture();
    let out = f.run.join("entities.tsv");
    ok(&[
        "export-embeddings", "--data", s(&f.data), "--checkpoint", s(&f.model()), "--out", s(&out),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    let entities = ok(&["stats", "--data", s(&f.data)]);
    let n: usize = entities.lines().next().unwrap().split('\t').nth(1).unwrap().parse().unwrap();
    assert_eq!(text.lines().count(), n);
    assert!(text.lines().all(|l| l.split('\t').count() == 9));

    // a model trained elsewhere does not fit this dataset
    let other = f.run.parent().unwrap().join("other");
    ok(&["gen-synthetic", "--out", s(&other), "--seed", "8", "--entities", "25"]);
    let res = run(&["eval-link", "--data", s(&other), "--checkpoint", s(&f.model())]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("dimension mismatch"));
}
