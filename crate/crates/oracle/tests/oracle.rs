use mini_kind::elaborate;
use mini_kind::frontend::load;
use mini_kind::term::Value;
use mini_kind_oracle::smt::{certificate_holds, minimal_cores, provable, Solver};
use mini_kind_oracle::{enumerate_verdicts, Bounds, Expect, Explorer, OracleError, Outcome};

const CTR: &str = "node main(reset: bool) returns ();
var x: int; ok1, ok2: bool;
let
  x = if reset then 0 else (0 -> pre x + 1);
  ok1 = x >= 0;
  ok2 = x < 3;
  --%PROPERTY ok1;
  --%PROPERTY ok2;
tel";

fn ts(src: &str) -> mini_kind::TransitionSystem {
    elaborate(&load(src).unwrap())
}

#[test]
fn counter_by_hand() {
    let v = enumerate_verdicts(&ts(CTR), &Bounds::default(), 6).unwrap();
    assert_eq!(v["ok1"], Outcome::Safe(6));
    let Outcome::Violated(trace) = &v["ok2"] else { panic!() };
    let xs: Vec<&Value> = trace.iter().map(|s| &s["x"]).collect();
    assert_eq!(xs, [&Value::int(0), &Value::int(1), &Value::int(2), &Value::int(3)]);
    assert!(trace.iter().all(|s| s["reset"] == Value::Bool(false)));
}

#[test]
fn false_fails_at_once() {
    let v = enumerate_verdicts(&ts("node main() returns (); var p: bool; let p = false; --%PROPERTY p; tel"), &Bounds::default(), 4).unwrap();
    assert_eq!(v["p"].violation_length(), Some(1));
}

#[test]
fn real_inputs_are_rejected() {
    let t = ts("node main(r: real) returns (); var p: bool; let p = r >= 0.0; --%PROPERTY p; tel");
    assert!(matches!(Explorer::new(&t, &Bounds::default()), Err(OracleError::Unsupported(_))));
}

#[test]
fn int_inputs_need_bounds() {
    let t = ts("node main(i: int) returns (); var p: bool; let p = i < 3; --%PROPERTY p; tel");
    assert!(Explorer::new(&t, &Bounds::default()).is_err());
    let b = Bounds::parse("input i -2 2 # small\n").unwrap();
    assert_eq!(enumerate_verdicts(&t, &b, 3).unwrap()["p"], Outcome::Safe(3));
    let b = Bounds::parse("input i 0 3\nexpect p falsified 1\n").unwrap();
    assert_eq!(b.expect["p"], Expect::Falsified(1));
    assert_eq!(enumerate_verdicts(&t, &b, 3).unwrap()["p"].violation_length(), Some(1));
}

#[test]
fn bounds_syntax_errors() {
    assert!(Bounds::parse("input i 3 1").is_err());
    assert!(Bounds::parse("expect p maybe").is_err());
}

#[test]
fn explosion_is_reported() {
    let t = ts("node main(i: int) returns (); var s: int; p: bool;
let s = i -> pre s + i; p = s >= 0; --%PROPERTY p; tel");
    let b = Bounds::parse("input i 0 9").unwrap();
    let mut e = Explorer::new(&t, &b).unwrap();
    e.cap = 50;
    assert!(matches!(e.verdicts(6), Err(OracleError::Explosion { .. })));
}

#[test]
fn edge_detector_needs_one_toggle() {
    let t = ts("node main(a: bool) returns (); var p: bool;
let p = true -> not (a and not pre a); --%PROPERTY p; tel");
    let e = Explorer::new(&t, &Bounds::default()).unwrap();
    assert_eq!(e.min_input_deltas("p", 2).unwrap(), Some(1));
    assert_eq!(e.min_input_deltas("p", 5).unwrap(), Some(1));
    assert_eq!(e.min_input_deltas("p", 1).unwrap(), None);
}

#[test]
fn induction_scripts() {
    let s = Solver::z3();
    let t = ts(CTR);
    let ok1 = t.property("ok1").unwrap().term.clone();
    let ok2 = t.property("ok2").unwrap().term.clone();
    assert!(provable(&s, &t, None, &[ok1.clone()], 1).unwrap());
    assert!(!provable(&s, &t, None, &[ok2], 5).unwrap());
    let cores = minimal_cores(&s, &t, "ok1", &[], 3).unwrap().unwrap();
    assert_eq!(cores.len(), 1);
    assert_eq!(cores[0].iter().collect::<Vec<_>>(), ["ok1", "x"]);
    let x_ge_0 = mini_kind::term::Term::mk_ge(
        mini_kind::term::Term::var("x", mini_kind::term::Sort::Int),
        mini_kind::term::Term::int(0),
    )
    .unwrap();
    assert!(certificate_holds(&s, &t, "ok1", &[x_ge_0.clone()]).unwrap());
    assert!(!certificate_holds(&s, &t, "ok2", &[x_ge_0]).unwrap());
}
