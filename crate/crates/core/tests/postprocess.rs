use std::sync::atomic::AtomicU64;
use std::sync::Arc;

use mini_kind::advice::{parse_advice, render};
use mini_kind::engine::EngineSettings;
use mini_kind::frontend::{load, print_term};
use mini_kind::{check_trace, compute_ivc, elaborate, run, smooth, RunConfig, SolverRegistry, TransitionSystem, Verdict};

fn ts(src: &str) -> TransitionSystem {
    elaborate(&load(src).unwrap())
}

fn settings(ts: &TransitionSystem) -> EngineSettings {
    let solver = SolverRegistry::builtin().get(None).unwrap();
    EngineSettings {
        logic: solver.logic_for(ts),
        solver,
        transcript_dir: None,
        checks: Arc::new(AtomicU64::new(0)),
        max_depth: 10,
        max_k: 10,
    }
}

const IVC: &str = "node main(in1: int) returns ();
var x, y: int; p: bool;
let
  x = 0 -> pre x + 1;
  y = 2 * in1;
  p = x >= 0;
  --%PROPERTY p;
tel";

#[test]
fn ivc_drops_dead_equation() {
    let ts = ts(IVC);
    let r = compute_ivc(&ts, "p", 1, &[], &settings(&ts)).unwrap();
    assert_eq!(r.core, ["x", "p"]);
    assert!(r.minimal);
}

#[test]
fn ivc_of_true() {
    let ts = ts("node main(a: int) returns (); var x: int; p: bool;
let x = a; p = true; --%PROPERTY p; tel");
    let r = compute_ivc(&ts, "p", 1, &[], &settings(&ts)).unwrap();
    assert_eq!(r.core, ["p"]);
}

#[test]
fn ivc_redundant_definitions() {
    let ts = ts("node main(a: int) returns (); var c1, c2, p: bool;
let c1 = a >= 0 or a < 0; c2 = true; p = c1 or c2; --%PROPERTY p; tel");
    let r = compute_ivc(&ts, "p", 1, &[], &settings(&ts)).unwrap();
    assert!(r.core == ["c1", "p"] || r.core == ["c2", "p"], "{:?}", r.core);
    let again = compute_ivc(&ts, "p", 1, &[], &settings(&ts)).unwrap();
    assert_eq!(again.core, r.core);
}

const ACC: &str = "node main(a, b: bool) returns ();
var cnt: int; p: bool;
let
  cnt = (if a then 1 else 0) -> pre cnt + (if a then 1 else 0);
  p = cnt < 2;
  --%PROPERTY p;
tel";

#[test]
fn smoothing_accumulator() {
    let ts = ts(ACC);
    let mut cfg = RunConfig::new(SolverRegistry::builtin().get(None).unwrap());
    cfg.max_depth = 10;
    let r = run(&ts, &cfg).unwrap();
    let Verdict::Falsified { trace, .. } = &r.property("p").unwrap().verdict else { panic!() };
    assert_eq!(trace.len(), 2);
    let s = smooth(&ts, "p", trace, &settings(&ts)).unwrap();
    assert_eq!(s.deltas, 0);
    check_trace(&ts, "p", &s.trace).unwrap();
    let again = smooth(&ts, "p", &s.trace, &settings(&ts)).unwrap();
    assert_eq!(again.trace, s.trace);
}

#[test]
fn advice_round_trip() {
    let ts = ts(IVC);
    let x = ts.var("x").unwrap();
    let inv = mini_kind::term::Term::mk_ge(
        mini_kind::term::Term::var(&x.name, x.sort),
        mini_kind::term::Term::constant(mini_kind::term::Value::Int(0.into())),
    )
    .unwrap();
    let text = render(&[inv.clone(), inv.clone()]);
    assert_eq!(text, "mini-kind-advice 1\nx >= 0\n");
    let a = parse_advice(&format!("{text}z >= 1\nx + 1\n"), &ts).unwrap();
    assert_eq!(a.candidates, [inv]);
    assert_eq!(a.dropped.len(), 2);
    assert!(parse_advice("mini-kind-advice 2\n", &ts).is_err());
    assert_eq!(print_term(&a.candidates[0]), "x >= 0");
}
