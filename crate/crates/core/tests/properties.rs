use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use mini_kind::advice::{parse_advice, render};
use mini_kind::frontend::load;
use mini_kind::term::{euclid_div, euclid_mod, parse_decimal, rational_to_decimal};
use mini_kind::term::{Sort, Term};
use mini_kind::{elaborate, run, Report, RunConfig, SolverRegistry, TransitionSystem, Verdict};
use mini_kind_oracle::{enumerate_verdicts, Bounds, Outcome};

fn ts(src: &str) -> TransitionSystem {
    elaborate(&load(src).unwrap())
}

const VARS: &str = "node main(a: bool; i: int) returns ();
var x, y: int; p: bool;
let
  x = 0 -> pre x + i;
  y = if a then x else 0;
  p = x >= y or a;
  --%PROPERTY p;
tel";

fn atom() -> impl Strategy<Value = Term> {
    let var = prop_oneof![Just("x"), Just("y"), Just("i")];
    prop_oneof![
        (var.clone(), -5i64..5).prop_map(|(v, c)| Term::mk_le(Term::var(v, Sort::Int), Term::int(c)).unwrap()),
        (var.clone(), var.clone()).prop_map(|(v, w)| Term::mk_ge(Term::var(v, Sort::Int), Term::var(w, Sort::Int)).unwrap()),
        (var, -3i64..3).prop_map(|(v, c)| {
            let sum = Term::mk_plus(Term::var(v, Sort::Int), Term::int(c)).unwrap();
            Term::mk_eq(sum, Term::var("x", Sort::Int)).unwrap()
        }),
        Just(Term::var("a", Sort::Bool)),
        Just(Term::var("p", Sort::Bool)),
    ]
}

fn formula() -> impl Strategy<Value = Term> {
    atom().prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| t.negate()),
            prop::collection::vec(inner.clone(), 2..4).prop_map(|ts| Term::mk_and(ts).unwrap()),
            prop::collection::vec(inner.clone(), 2..4).prop_map(|ts| Term::mk_or(ts).unwrap()),
            (inner.clone(), inner).prop_map(|(a, b)| Term::mk_implies(a, b).unwrap()),
        ]
    })
}

proptest! {
    #[test]
    fn euclidean_division(a in -1000i64..1000, b in prop::sample::select(vec![-7i64, -3, -1, 1, 2, 5, 13])) {
        let (a, b) = (BigInt::from(a), BigInt::from(b));
        let q = euclid_div(&a, &b);
        let r = euclid_mod(&a, &b);
        prop_assert_eq!(&q * &b + &r, a);
        prop_assert!(r >= BigInt::from(0));
        prop_assert!(r < b.magnitude().clone().into());
    }

    #[test]
    fn decimals_round_trip(n in -100_000i64..100_000, shift in 0u32..5) {
        let r = BigRational::new(BigInt::from(n), BigInt::from(10i64.pow(shift)));
        let text = rational_to_decimal(&r).expect("terminating decimal");
        prop_assert_eq!(parse_decimal(&text), Some(r));
    }

    #[test]
    fn advice_text_is_a_fixed_point(terms in prop::collection::vec(formula(), 0..6)) {
        let ts = ts(VARS);
        let first = render(&terms);
        let parsed = parse_advice(&first, &ts).unwrap();
        prop_assert!(parsed.dropped.is_empty(), "{:?}", parsed.dropped);
        let second = render(&parsed.candidates);
        prop_assert_eq!(&first, &second);
        let lines: Vec<&str> = first.lines().skip(1).collect();
        let mut sorted = lines.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(lines, sorted);
    }
}

fn counter(limit: u32, step: u32) -> String {
    format!(
        "node main(go: bool) returns ();
var x: int; p: bool;
let
  x = 0 -> if go then pre x + {step} else pre x;
  p = x < {limit};
  --%PROPERTY p;
tel"
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    /// Verdicts and counterexample lengths agree with explicit enumeration,
    /// and the report survives a JSON round trip.
    #[test]
    fn counters_match_enumeration(limit in 1u32..6, step in 0u32..3) {
        let ts = ts(&counter(limit, step));
        let mut cfg = RunConfig::new(SolverRegistry::builtin().get(None).unwrap());
        cfg.max_depth = 12;
        cfg.max_k = 8;
        let r = run(&ts, &cfg).unwrap();
        let oracle = enumerate_verdicts(&ts, &Bounds::default(), 10).unwrap();
        match (&r.properties[0].verdict, &oracle["p"]) {
            (Verdict::Falsified { trace, .. }, Outcome::Violated(t)) => prop_assert_eq!(trace.len(), t.len()),
            (Verdict::Valid { .. }, Outcome::Safe(_)) => {}
            (v, o) => prop_assert!(false, "{} vs {:?}", v.label(), o),
        }
        let report = Report::new(&ts, "counter.lus", &r);
        prop_assert_eq!(Report::from_json(&report.to_json()).unwrap(), report);
    }
}
