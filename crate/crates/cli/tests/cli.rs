use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mini_kind::Report;

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn mini_kind(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mini-kind"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn exit_codes() {
    let ctr = corpus("ctr.lus");
    let ctr = ctr.to_str().unwrap();
    assert_eq!(mini_kind(&[ctr]).status.code(), Some(10));
    assert_eq!(mini_kind(&[corpus("ivc_dead.lus").to_str().unwrap()]).status.code(), Some(0));
    let gated = mini_kind(&[ctr, "--no-bmc", "--no-pdr"]);
    assert_eq!(gated.status.code(), Some(20));
    assert!(stdout(&gated).contains("ok1: unknown (no-base-engine"), "{}", stdout(&gated));
    assert_eq!(mini_kind(&["does/not/exist.lus"]).status.code(), Some(1));
    assert_eq!(mini_kind(&[ctr, "--bogus"]).status.code(), Some(1));
    assert_eq!(mini_kind(&[ctr, "--no-bmc", "--no-kind", "--no-invgen", "--no-pdr"]).status.code(), Some(1));
}

#[test]
fn counterexample_table() {
    let out = stdout(&mini_kind(&[corpus("ctr.lus").to_str().unwrap()]));
    assert!(out.contains("ok1: valid (k=1, "), "{out}");
    assert!(out.contains("ok2: falsified (length 4, "), "{out}");
    for row in ["  step: 0 1 2 3", "  reset: false false false false", "  x: 0 1 2 3", "  ok2: true true true false"] {
        assert!(out.lines().any(|l| l == row), "missing `{row}` in\n{out}");
    }
}

#[test]
fn ivc_lines() {
    let out = stdout(&mini_kind(&[corpus("ivc_dead.lus").to_str().unwrap(), "--ivc"]));
    assert!(out.lines().any(|l| l == "  IVC: ivc_dead.lus:5 (x), ivc_dead.lus:7 (p)"), "{out}");
}

#[test]
fn json_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let o = mini_kind(&[corpus("ctr.lus").to_str().unwrap(), "--smooth", "--json", json.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(10));
    let text = fs::read_to_string(&json).unwrap();
    let report = Report::from_json(&text).unwrap();
    assert_eq!(report.to_json(), text);
    assert_eq!(report.model, "ctr.lus");
    let names: Vec<&str> = report.properties.iter().map(|p| p.name.as_str()).collect();
    assert_eq!(names, ["ok1", "ok2"]);
    assert_eq!(report.properties[1].trace.as_ref().map(|t| t.len()), Some(4));
    assert!(report.properties[1].smoothed.is_some());
}

#[test]
fn advice_files() {
    let dir = tempfile::tempdir().unwrap();
    let model = corpus("looping_counter.lus");
    let model = model.to_str().unwrap();
    let advice = dir.path().join("a.adv");
    let advice = advice.to_str().unwrap();
    assert_eq!(mini_kind(&[model, "--write-advice", advice]).status.code(), Some(0));
    let text = fs::read_to_string(advice).unwrap();
    assert!(text.starts_with("mini-kind-advice 1\n"), "{text}");
    assert!(text.lines().count() > 1, "{text}");
    let warm = mini_kind(&[model, "--read-advice", advice]);
    assert_eq!(warm.status.code(), Some(0));

    let empty = dir.path().join("empty.adv");
    fs::write(&empty, "mini-kind-advice 1\n").unwrap();
    assert_eq!(mini_kind(&[model, "--read-advice", empty.to_str().unwrap()]).status.code(), Some(0));

    // A damaged file is reported and ignored.
    let bad = dir.path().join("bad.adv");
    fs::write(&bad, "not advice\nx >= 0\n").unwrap();
    let o = mini_kind(&[model, "--read-advice", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning: ignoring"), "{}", stderr(&o));

    // Entries that no longer fit the model are dropped one by one.
    let stale = dir.path().join("stale.adv");
    fs::write(&stale, "mini-kind-advice 1\ngone >= 0\nx >= 0\n").unwrap();
    let o = mini_kind(&[model, "--read-advice", stale.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("1 advice entries dropped"), "{}", stderr(&o));

    let missing = dir.path().join("missing.adv");
    assert_eq!(mini_kind(&[model, "--read-advice", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn dump_ts_is_json() {
    let o = mini_kind(&[corpus("ctr.lus").to_str().unwrap(), "--dump-ts"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.is_object());
}

// Timings are the only nondeterministic part of the text report.
fn strip_times(text: &str) -> String {
    text.lines()
        .map(|line| match (line.rfind(", "), line.ends_with("s)")) {
            (Some(i), true) if line[i + 2..line.len() - 2].parse::<f64>().is_ok() => format!("{}, _s)", &line[..i]),
            _ => line.to_owned(),
        })
        .map(|line| line + "\n")
        .collect()
}

#[test]
fn ctr_text_golden() {
    let out = mini_kind(&[corpus("ctr.lus").to_str().unwrap(), "--no-pdr", "--no-invgen"]);
    assert_eq!(out.status.code(), Some(10));
    let expected = "\
ok1: valid (k=1, kind, _s)
ok2: falsified (length 4, bmc, _s)
  step: 0 1 2 3
  reset: false false false false
  x: 0 1 2 3
  ok1: true true true true
  ok2: true true true false
";
    assert_eq!(strip_times(&stdout(&out)), expected);
}

fn advice_lines(model: &str, extra: &[&str]) -> Vec<String> {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.adv");
    let mut args = vec![model, "--no-pdr", "--write-advice", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    mini_kind(&args);
    fs::read_to_string(&path).unwrap().lines().skip(1).map(str::to_owned).collect()
}

#[test]
fn advice_content() {
    let ctr = corpus("ctr.lus");
    let lines = advice_lines(ctr.to_str().unwrap(), &[]);
    assert!(lines.iter().any(|l| l == "x >= 0"), "{lines:?}");
    assert!(lines.iter().any(|l| l == "ok1"), "{lines:?}");
    assert!(!lines.iter().any(|l| l.contains("ok2")), "{lines:?}");

    let lc = corpus("looping_counter.lus");
    let full = advice_lines(lc.to_str().unwrap(), &[]);
    let reduced = advice_lines(lc.to_str().unwrap(), &["--ivc"]);
    assert!(reduced.iter().all(|l| full.contains(l)), "{reduced:?} not within {full:?}");
}
