//! Instantiating a transition system at concrete steps.

use std::collections::BTreeMap;

use crate::elaborate::{TransitionSystem, INIT_FLAG};
use crate::solver::{CheckResult, Formula, Session, SolverError};
use crate::term::{indexed_symbol, Sort, StepTag, Term};
use crate::trace::Trace;

/// How the initial flag is constrained at a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// Step 0 of a run from the initial state.
    Initial,
    /// Any later step.
    Later,
    /// The first step of an induction window: unconstrained.
    Free,
}

pub fn init_flag(step: i64) -> Formula {
    Formula::indexed(INIT_FLAG, step, Sort::Bool)
}

/// Equations and assertions of `ts` at `step`, plus the initial flag.
pub fn step_formulas(ts: &TransitionSystem, step: i64, init: Init) -> Vec<Formula> {
    let mut out: Vec<Formula> = ts.step_constraints().map(|t| Formula::at(&t, step)).collect();
    match init {
        Init::Initial => out.push(init_flag(step)),
        Init::Later => out.push(init_flag(step).not()),
        Init::Free => {}
    }
    out
}

pub fn assert_step(s: &mut Session, ts: &TransitionSystem, step: i64, init: Init) -> Result<(), SolverError> {
    for f in step_formulas(ts, step, init) {
        s.assert(&f)?;
    }
    Ok(())
}

/// Asserts an initialized run of `len` steps.
pub fn assert_run(s: &mut Session, ts: &TransitionSystem, len: usize) -> Result<(), SolverError> {
    for t in 0..len as i64 {
        assert_step(s, ts, t, if t == 0 { Init::Initial } else { Init::Later })?;
    }
    Ok(())
}

/// Variables that `pre` reads, i.e. those whose value at step -1 matters.
fn prev_read(ts: &TransitionSystem) -> Vec<(String, Sort)> {
    let mut out = BTreeMap::new();
    for t in ts.step_constraints() {
        for v in t.vars() {
            if v.step == StepTag::Prev {
                out.insert(v.name.to_string(), v.sort);
            }
        }
    }
    out.into_iter().collect()
}

/// Reads a trace of `len` steps from the current model.
pub fn extract_trace(s: &mut Session, ts: &TransitionSystem, len: usize) -> Result<Trace, SolverError> {
    let vars: Vec<(String, Sort)> = ts.vars.iter().map(|v| (v.name.clone(), v.sort)).collect();
    // Step -1 values matter only where the model constrains them.
    let before_vars: Vec<(String, Sort)> = prev_read(ts)
        .into_iter()
        .filter(|(n, _)| s.is_declared(&indexed_symbol(n, -1)))
        .collect();
    let mut symbols = Vec::new();
    for t in 0..len as i64 {
        for (name, sort) in &vars {
            symbols.push((indexed_symbol(name, t), *sort));
        }
    }
    symbols.extend(before_vars.iter().map(|(n, sort)| (indexed_symbol(n, -1), *sort)));
    let mut values = s.values(&symbols)?.into_iter();
    let mut steps = Vec::with_capacity(len);
    for _ in 0..len {
        let st = vars.iter().map(|(n, _)| (n.clone(), values.next().expect("value per symbol"))).collect();
        steps.push(st);
    }
    let before = before_vars.into_iter().map(|(n, _)| (n, values.next().expect("value per symbol"))).collect();
    Ok(Trace { vars, steps, before })
}

/// A shortest trace of at most `max_len` steps violating `property`. `None`
/// when there is none or the solver gives up.
pub fn shortest_trace(
    s: &mut Session,
    ts: &TransitionSystem,
    property: &Term,
    max_len: usize,
) -> Result<Option<Trace>, SolverError> {
    for len in 1..=max_len {
        assert_step(s, ts, len as i64 - 1, if len == 1 { Init::Initial } else { Init::Later })?;
        let bad = Formula::at(property, len as i64 - 1).not();
        match s.check(&[bad])? {
            CheckResult::Sat => return extract_trace(s, ts, len).map(Some),
            CheckResult::Unsat(_) => {}
            CheckResult::Unknown(_) => return Ok(None),
        }
    }
    Ok(None)
}
