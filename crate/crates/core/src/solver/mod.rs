//! Incremental SMT-LIB2 sessions over an external solver process.

mod config;
mod formula;
mod session;
pub mod sexp;

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use thiserror::Error;

pub use config::{SolverConfig, SolverRegistry, DEFAULT_SOLVERS_TOML};
pub use formula::Formula;
pub use session::{Session, SessionOptions};
pub use sexp::Sexp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("cannot start solver `{command}`: {reason}")]
    Spawn { command: String, reason: String },
    #[error("solver handshake failed: {0}")]
    Handshake(String),
    #[error("solver process died")]
    Dead,
    #[error("solver protocol error: {0}")]
    Protocol(String),
    #[error("label `{0}` is already live")]
    LabelClash(String),
    #[error("cancelled")]
    Cancelled,
    /// The solver answered `unknown` or ran out of time.
    #[error("solver gave up: {0}")]
    Incomplete(String),
    #[error("solver lacks a capability: {0}")]
    Capability(String),
    #[error("solver configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
}

/// Outcome of a satisfiability check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckResult {
    Sat,
    /// Carries the unsat core labels when cores are enabled.
    Unsat(Vec<String>),
    Unknown(String),
}

impl CheckResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, CheckResult::Sat)
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, CheckResult::Unsat(_))
    }
}

/// Shared flag checked by sessions while waiting for an answer.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{Sort, Term, Value};

    fn z3() -> SolverConfig {
        SolverRegistry::builtin().get(Some("z3")).unwrap()
    }

    fn start(cfg: &SolverConfig) -> Session {
        Session::start(cfg, "QF_LIA", SessionOptions::default()).unwrap()
    }

    fn x(step: i64) -> Formula {
        Formula::indexed("x", step, Sort::Int)
    }

    fn ge(a: Formula, k: i64) -> Formula {
        Formula {
            text: format!("(>= {} {k})", a.text),
            symbols: a.symbols,
        }
    }

    #[test]
    fn empty_is_sat() {
        let mut s = start(&z3());
        assert_eq!(s.check(&[]).unwrap(), CheckResult::Sat);
        assert_eq!(s.check_count(), 1);
    }

    #[test]
    fn core_of_contradiction() {
        let mut s = start(&z3());
        s.assert_named(&ge(x(0), 5), "L1").unwrap();
        s.assert_named(&ge(x(0), 0), "L2").unwrap();
        s.assert_named(&ge(x(0), 5).not(), "L3").unwrap();
        match s.check(&[]).unwrap() {
            CheckResult::Unsat(mut core) => {
                core.sort();
                assert_eq!(core, ["L1", "L3"]);
            }
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn scopes_isolate() {
        let mut s = start(&z3());
        s.assert(&ge(x(0), 1)).unwrap();
        let r = s
            .scoped(|s| {
                s.assert_named(&ge(x(0), 1).not(), "a").unwrap();
                s.check(&[])
            })
            .unwrap();
        assert!(r.is_unsat());
        assert!(s.check(&[]).unwrap().is_sat());
        // The label is free again after the pop.
        s.push().unwrap();
        s.assert_named(&Formula::bool(true), "a").unwrap();
        assert_eq!(
            s.assert_named(&Formula::bool(true), "a"),
            Err(SolverError::LabelClash("a".into()))
        );
        s.pop().unwrap();
        assert_eq!(s.depth(), 0);
    }

    #[test]
    fn declarations_follow_scopes() {
        let mut s = start(&z3());
        s.push().unwrap();
        s.assert(&ge(x(7), 2)).unwrap();
        assert!(s.is_declared("x$7"));
        s.pop().unwrap();
        assert!(!s.is_declared("x$7"));
        s.assert(&ge(x(7), 3)).unwrap();
        assert!(s.check(&[]).unwrap().is_sat());
        let v = s.values(&[("x$7".into(), Sort::Int), ("y$0".into(), Sort::Bool)]).unwrap();
        assert!(matches!(&v[0], Value::Int(i) if *i >= 3.into()));
        assert_eq!(v[1], Value::Bool(false));
    }

    #[test]
    fn assumptions_and_cores() {
        let mut s = start(&z3());
        let a = Formula::symbol("%a", Sort::Bool);
        let b = Formula::symbol("%b", Sort::Bool);
        s.assert(&a.clone().implies(ge(x(0), 3))).unwrap();
        s.assert(&b.clone().implies(ge(x(0), 3).not())).unwrap();
        assert!(s.check(&[a.clone()]).unwrap().is_sat());
        match s.check(&[a, b]).unwrap() {
            CheckResult::Unsat(mut core) => {
                core.sort();
                assert_eq!(core, ["%a", "%b"]);
            }
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn missing_binary() {
        let mut cfg = z3();
        cfg.command = "/nonexistent/solver".into();
        assert!(matches!(
            Session::start(&cfg, "QF_LIA", SessionOptions::default()),
            Err(SolverError::Spawn { .. })
        ));
    }

    #[test]
    fn bad_command_is_protocol_error() {
        let mut s = start(&z3());
        s.assert(&Formula {
            text: "(+ 1".into(),
            symbols: Default::default(),
        })
        .ok();
        s.assert(&Formula {
            text: "(foo)".into(),
            symbols: Default::default(),
        })
        .unwrap();
        assert!(matches!(s.check(&[]), Err(SolverError::Protocol(_))));
    }

    #[test]
    fn ctr_unrolling_reaches_three() {
        // x = if reset then 0 else (0 -> pre x + 1)
        let x_def = Term::mk_ite(
            Term::var("reset", Sort::Bool),
            Term::int(0),
            Term::mk_ite(
                Term::var("%init", Sort::Bool),
                Term::int(0),
                Term::mk_plus(Term::prev("x", Sort::Int), Term::int(1)).unwrap(),
            )
            .unwrap(),
        )
        .unwrap();
        let eq = Term::mk_eq(Term::var("x", Sort::Int), x_def).unwrap();
        let mut s = start(&z3());
        for k in 0..4 {
            s.assert(&Formula::at(&eq, k)).unwrap();
            s.assert(&Formula::eq(
                Formula::indexed("%init", k, Sort::Bool),
                Formula::bool(k == 0),
            ))
            .unwrap();
        }
        let target = Formula {
            text: "(= x$3 3)".into(),
            symbols: [("x$3".to_string(), Sort::Int)].into_iter().collect(),
        };
        s.assert(&target).unwrap();
        assert!(s.check(&[]).unwrap().is_sat());
        let resets: Vec<(String, Sort)> = (0..4).map(|k| (format!("reset${k}"), Sort::Bool)).collect();
        let vals = s.values(&resets).unwrap();
        assert!(vals.iter().all(|v| *v == Value::Bool(false)));
    }

    #[test]
    fn timeout_recycles_and_replays() {
        let mut cfg = z3();
        cfg.timeout_ms = 300;
        let mut s = start(&cfg);
        s.assert(&ge(x(0), 10)).unwrap();
        s.push().unwrap();
        // Pigeonhole: 10 pigeons, 9 holes.
        let (n, m) = (10, 9);
        let p = |i: usize, j: usize| format!("p{i}_{j}");
        let mut syms = std::collections::BTreeMap::new();
        let mut parts = Vec::new();
        for i in 0..n {
            let row: Vec<String> = (0..m).map(|j| p(i, j)).collect();
            parts.push(format!("(or {})", row.join(" ")));
            for r in row {
                syms.insert(r, Sort::Bool);
            }
        }
        for j in 0..m {
            for a in 0..n {
                for b in a + 1..n {
                    parts.push(format!("(not (and {} {}))", p(a, j), p(b, j)));
                }
            }
        }
        let hard = Formula {
            text: format!("(and {})", parts.join(" ")),
            symbols: syms,
        };
        s.assert(&hard).unwrap();
        let r = s.check(&[]).unwrap();
        assert_eq!(r, CheckResult::Unknown("timeout".into()));
        assert_eq!(s.restarts(), 1);
        s.pop().unwrap();
        assert!(s.check(&[]).unwrap().is_sat());
        let v = s.values(&[("x$0".into(), Sort::Int)]).unwrap();
        assert!(matches!(&v[0], Value::Int(i) if *i >= 10.into()));
    }

    #[test]
    fn cancel_stops_session() {
        let token = CancelToken::new();
        token.cancel();
        let mut s = Session::start(
            &z3(),
            "QF_LIA",
            SessionOptions {
                cancel: Some(token),
                ..Default::default()
            },
        );
        // Cancellation is observed during the handshake or the first check.
        if let Ok(s) = &mut s {
            assert_eq!(s.check(&[]), Err(SolverError::Cancelled));
        } else {
            assert_eq!(s.err(), Some(SolverError::Cancelled));
        }
    }
}
