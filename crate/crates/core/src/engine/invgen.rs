//! Template invariant generation with its own small k-induction loop.

use std::collections::{BTreeMap, BTreeSet};

use super::unroll::{assert_step, extract_trace, Init};
use super::{Ctx, EngineKind, Message};
use crate::elaborate::{TransitionSystem, VarKind};
use crate::solver::{CheckResult, Formula, Session, SolverError};
use crate::term::{Sort, Term, Value};
use crate::trace::Trace;

/// Cap on each family of pairwise templates.
pub const PAIR_CAP: usize = 2000;

/// Depths tried by the generation loop.
pub const MAX_K: usize = 3;

fn defined(ts: &TransitionSystem, sort: Sort) -> Vec<Term> {
    let mut names: Vec<&str> = ts
        .vars
        .iter()
        .filter(|v| v.sort == sort && matches!(v.kind, VarKind::Output | VarKind::Local | VarKind::Instance))
        .filter(|v| ts.equation(&v.name).is_some())
        .map(|v| v.name.as_str())
        .collect();
    names.sort_unstable();
    names.into_iter().map(|n| Term::var(n, sort)).collect()
}

/// Instantiates the templates over the defined variables of `ts`: `b` and
/// `not b` for booleans, `b1 => b2` for pairs of them, `x <= c` and `x >= c`
/// for numeric variables against constants of the model, and `x <= y` for
/// pairs of numeric variables of one sort.
pub fn candidates(ts: &TransitionSystem) -> Vec<Term> {
    let mut consts = BTreeSet::new();
    for t in ts.step_constraints() {
        t.constants(&mut consts);
    }
    let mut out = Vec::new();
    let bools = defined(ts, Sort::Bool);
    for b in &bools {
        out.push(b.clone());
        out.push(b.negate());
    }
    let pairs = |xs: &[Term]| -> Vec<(Term, Term)> {
        let mut ps = Vec::new();
        for a in xs {
            for b in xs {
                if a != b {
                    ps.push((a.clone(), b.clone()));
                }
            }
        }
        ps.truncate(PAIR_CAP);
        ps
    };
    for (a, b) in pairs(&bools) {
        out.push(Term::mk_implies(a, b).expect("bool operands"));
    }
    for sort in [Sort::Int, Sort::Real] {
        let xs = defined(ts, sort);
        for x in &xs {
            for c in consts.iter().filter(|c| c.sort() == sort) {
                let c = Term::constant(c.clone());
                out.push(Term::mk_le(x.clone(), c.clone()).expect("same sort"));
                out.push(Term::mk_ge(x.clone(), c).expect("same sort"));
            }
        }
        for (a, b) in pairs(&xs) {
            out.push(Term::mk_le(a, b).expect("same sort"));
        }
    }
    let mut seen = BTreeSet::new();
    out.retain(|t| t.as_bool_const().is_none() && seen.insert(t.clone()));
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Unknown,
    /// False in the given reachable state.
    Falsified(BTreeMap<String, Value>),
    /// Proved at the given depth.
    Proved(usize),
}

/// Candidates and what is known about each.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub candidates: Vec<Term>,
    pub status: Vec<Status>,
}

impl CandidateSet {
    pub fn new(candidates: Vec<Term>) -> Self {
        let status = vec![Status::Unknown; candidates.len()];
        CandidateSet { candidates, status }
    }

    pub fn proved(&self) -> Vec<Term> {
        self.select(|s| matches!(s, Status::Proved(_)))
    }

    pub fn falsified(&self) -> Vec<Term> {
        self.select(|s| matches!(s, Status::Falsified(_)))
    }

    fn select(&self, f: impl Fn(&Status) -> bool) -> Vec<Term> {
        self.candidates
            .iter()
            .zip(&self.status)
            .filter(|(_, s)| f(s))
            .map(|(c, _)| c.clone())
            .collect()
    }

    fn open(&self) -> Vec<usize> {
        (0..self.candidates.len())
            .filter(|&i| self.status[i] == Status::Unknown)
            .collect()
    }
}

/// Callbacks into whoever runs the loop.
pub trait Hooks {
    /// Called between solver queries; may abort.
    fn pause(&mut self) -> Result<(), SolverError> {
        Ok(())
    }

    fn proved(&mut self, _invariants: &[Term], _k: usize) {}
}

/// Hooks that do nothing.
pub struct Quiet;

impl Hooks for Quiet {}

fn violated(cands: &[Term], idx: &[usize], trace: &Trace, step: usize) -> Vec<usize> {
    idx.iter()
        .copied()
        .filter(|&i| trace.eval(&cands[i], step).ok() != Some(Value::Bool(true)))
        .collect()
}

/// Runs the generation loop over `set`: at each depth k, candidates refuted
/// on some initialized run of k steps are dropped for good, then the rest
/// are pruned until they are jointly k-inductive. Survivors are proved;
/// those pruned only by the inductive step are retried at the next depth.
pub fn prove_candidates(
    base: &mut Session,
    step: &mut Session,
    ts: &TransitionSystem,
    set: &mut CandidateSet,
    max_k: usize,
    hooks: &mut dyn Hooks,
) -> Result<(), SolverError> {
    let cands = set.candidates.clone();
    assert_step(step, ts, 0, Init::Free)?;
    let mut proved: Vec<usize> = Vec::new();
    for k in 1..=max_k {
        if set.open().is_empty() {
            break;
        }
        // Base case over the initialized run of k steps.
        assert_step(base, ts, k as i64 - 1, if k == 1 { Init::Initial } else { Init::Later })?;
        loop {
            let open = set.open();
            if open.is_empty() {
                break;
            }
            hooks.pause()?;
            let mut bad = Vec::new();
            for t in 0..k as i64 {
                for &i in &open {
                    bad.push(Formula::at(&cands[i], t).not());
                }
            }
            let answer = base.scoped(|s| {
                s.assert(&Formula::or(bad))?;
                match s.check(&[])? {
                    CheckResult::Sat => extract_trace(s, ts, k).map(Some),
                    CheckResult::Unsat(_) => Ok(None),
                    CheckResult::Unknown(r) => Err(SolverError::Incomplete(r)),
                }
            })?;
            let Some(trace) = answer else { break };
            let mut progress = false;
            for t in 0..k {
                for i in violated(&cands, &set.open(), &trace, t) {
                    set.status[i] = Status::Falsified(trace.steps[t].clone());
                    progress = true;
                }
            }
            if !progress {
                return Err(SolverError::Protocol("model refutes no candidate".into()));
            }
        }
        // Inductive step over a window of k + 1 steps.
        assert_step(step, ts, k as i64, Init::Later)?;
        for &i in &proved {
            step.assert(&Formula::at(&cands[i], k as i64))?;
        }
        let mut live = set.open();
        loop {
            if live.is_empty() {
                break;
            }
            hooks.pause()?;
            let hyps: Vec<Formula> = (0..k as i64)
                .flat_map(|t| live.iter().map(move |&i| (i, t)))
                .map(|(i, t)| Formula::at(&cands[i], t))
                .collect();
            let goal = Formula::or(live.iter().map(|&i| Formula::at(&cands[i], k as i64).not()).collect());
            let answer = step.scoped(|s| {
                s.assert(&Formula::and(hyps))?;
                s.assert(&goal)?;
                match s.check(&[])? {
                    CheckResult::Sat => extract_trace(s, ts, k + 1).map(Some),
                    CheckResult::Unsat(_) => Ok(None),
                    CheckResult::Unknown(r) => Err(SolverError::Incomplete(r)),
                }
            })?;
            let Some(trace) = answer else { break };
            let drop = violated(&cands, &live, &trace, k);
            if drop.is_empty() {
                return Err(SolverError::Protocol("model refutes no candidate".into()));
            }
            live.retain(|i| !drop.contains(i));
        }
        if live.is_empty() {
            continue;
        }
        for &i in &live {
            set.status[i] = Status::Proved(k);
            for t in 0..=k as i64 {
                step.assert(&Formula::at(&cands[i], t))?;
            }
        }
        proved.extend(&live);
        let terms: Vec<Term> = live.iter().map(|&i| cands[i].clone()).collect();
        hooks.proved(&terms, k);
    }
    Ok(())
}

impl Hooks for Ctx<'_> {
    fn pause(&mut self) -> Result<(), SolverError> {
        Ctx::pause(self);
        self.check_cancel()
    }

    fn proved(&mut self, invariants: &[Term], _k: usize) {
        self.send(Message::Invariants {
            invariants: invariants.to_vec(),
            engine: self.engine,
        });
    }
}

pub fn run_invgen(ctx: &mut Ctx) -> Result<(), SolverError> {
    let mut set = CandidateSet::new(candidates(ctx.ts));
    if set.candidates.is_empty() {
        return Ok(());
    }
    let mut base = ctx.session("invgen-base")?;
    let mut step = ctx.session("invgen-step")?;
    let ts = ctx.ts;
    debug_assert_eq!(ctx.engine, EngineKind::Invgen);
    prove_candidates(&mut base, &mut step, ts, &mut set, MAX_K, ctx)
}
