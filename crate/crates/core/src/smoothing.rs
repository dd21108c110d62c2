//! Counterexample smoothing: the same violation with as few input changes as
//! possible.

use crate::elaborate::TransitionSystem;
use crate::engine::unroll::{assert_run, extract_trace};
use crate::engine::EngineSettings;
use crate::solver::{CheckResult, Formula, Session, SolverError};
use crate::term::Sort;
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Smoothed {
    pub trace: Trace,
    /// Input changes in `trace`.
    pub deltas: usize,
    pub original_deltas: usize,
    /// The solver gave up; `trace` is the original.
    pub timed_out: bool,
}

fn delta(i: usize) -> String {
    format!("%d{i}")
}

fn counter(i: usize, j: usize) -> String {
    format!("%s{i}_{j}")
}

/// Asserts the violating run, one indicator per input change and a
/// sequential counter over the indicators with registers up to `width`.
/// Returns the number of indicators.
fn encode(s: &mut Session, ts: &TransitionSystem, property: &str, len: usize, width: usize) -> Result<usize, SolverError> {
    let prop = &ts.property(property).expect("known property").term;
    assert_run(s, ts, len)?;
    s.assert(&Formula::at(prop, len as i64 - 1).not())?;
    let mut n = 0;
    for v in ts.inputs() {
        for t in 1..len as i64 {
            let changed = Formula::indexed(&v.name, t, v.sort).distinct(Formula::indexed(&v.name, t - 1, v.sort));
            s.assert(&Formula::symbol(&delta(n), Sort::Bool).eq(changed))?;
            n += 1;
        }
    }
    let d = |i: usize| Formula::symbol(&delta(i), Sort::Bool);
    let r = |i: usize, j: usize| Formula::symbol(&counter(i, j), Sort::Bool);
    // r(i, j): at least j of the first i + 1 indicators are set.
    for i in 0..n {
        s.assert(&d(i).implies(r(i, 1)))?;
        for j in 1..=width {
            if i > 0 {
                s.assert(&r(i - 1, j).implies(r(i, j)))?;
                if j > 1 {
                    s.assert(&Formula::and(vec![r(i - 1, j - 1), d(i)]).implies(r(i, j)))?;
                }
            }
        }
    }
    Ok(n)
}

/// Limits the count of set indicators to `m`, as an assumption.
fn at_most(n: usize, m: usize) -> Vec<Formula> {
    if n == 0 {
        return Vec::new();
    }
    vec![Formula::symbol(&counter(n - 1, m + 1), Sort::Bool).not()]
}

/// Finds a trace of the same length as `trace` that also violates `property`
/// at its last step and has the fewest input changes. Binary search over the
/// bound, then one final solve at the optimum in a fresh session, so the
/// result depends only on the model, the length and the optimum.
pub fn smooth(ts: &TransitionSystem, property: &str, trace: &Trace, settings: &EngineSettings) -> Result<Smoothed, SolverError> {
    let original_deltas = trace.input_deltas(ts);
    let unchanged = |timed_out| Smoothed {
        trace: trace.clone(),
        deltas: original_deltas,
        original_deltas,
        timed_out,
    };
    if trace.len() <= 1 || original_deltas == 0 {
        return Ok(unchanged(false));
    }
    let len = trace.len();
    let width = original_deltas + 1;
    let mut s = settings.session(&format!("smooth-{property}"), None)?;
    let n = encode(&mut s, ts, property, len, width)?;
    let (mut lo, mut hi) = (0, original_deltas);
    while lo < hi {
        let mid = (lo + hi) / 2;
        match s.check(&at_most(n, mid))? {
            CheckResult::Sat => hi = mid,
            CheckResult::Unsat(_) => lo = mid + 1,
            CheckResult::Unknown(_) => return Ok(unchanged(true)),
        }
    }
    drop(s);
    let mut s = settings.session(&format!("smooth-{property}-final"), None)?;
    encode(&mut s, ts, property, len, lo + 1)?;
    match s.check(&at_most(n, lo))? {
        CheckResult::Sat => {}
        CheckResult::Unknown(_) => return Ok(unchanged(true)),
        CheckResult::Unsat(_) => return Err(SolverError::Protocol("smoothing bound became unsatisfiable".into())),
    }
    let smoothed = extract_trace(&mut s, ts, len)?;
    let deltas = smoothed.input_deltas(ts);
    Ok(Smoothed {
        trace: smoothed,
        deltas,
        original_deltas,
        timed_out: false,
    })
}
