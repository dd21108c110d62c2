//! Inductive validity cores: small sets of equations that still prove a
//! property.

use std::collections::{BTreeMap, BTreeSet};

use crate::elaborate::TransitionSystem;
use crate::engine::unroll::{init_flag, Init};
use crate::engine::EngineSettings;
use crate::solver::{CheckResult, Formula, Session, SolverError};
use crate::term::{Sort, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IvcResult {
    pub property: String,
    /// Equation origins, in source order.
    pub core: Vec<String>,
    pub reduced_invariants: Vec<Term>,
    /// A full deletion pass dropped nothing.
    pub minimal: bool,
    /// Depth at which the core proves the property.
    pub k: usize,
    pub notes: Vec<String>,
}

fn lit(name: &str) -> Formula {
    Formula::symbol(name, Sort::Bool)
}

fn eq_lit(i: usize) -> String {
    format!("%e{i}")
}

fn inv_lit(j: usize) -> String {
    format!("%h{j}")
}

/// Asserts the constraints of `ts` at `step`, with equation instances
/// guarded by the literal of their origin.
fn guarded_step(s: &mut Session, ts: &TransitionSystem, origins: &[String], step: i64, init: Init) -> Result<(), SolverError> {
    for eq in &ts.equations {
        let f = Formula::at(&eq.as_term(), step);
        match &eq.origin {
            Some(o) => {
                let i = origins.iter().position(|x| x == o).expect("known origin");
                s.assert(&lit(&eq_lit(i)).implies(f))?;
            }
            None => s.assert(&f)?,
        }
    }
    for a in &ts.assertions {
        s.assert(&Formula::at(&a.term, step))?;
    }
    match init {
        Init::Initial => s.assert(&init_flag(step)),
        Init::Later => s.assert(&init_flag(step).not()),
        Init::Free => Ok(()),
    }
}

/// Both halves of a k-induction proof at one fixed depth, over guarded
/// equations and invariant hypotheses.
struct Prover {
    k: usize,
    base: Session,
    step: Session,
}

/// Which equations and goal invariants a check uses.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Selection {
    eqs: BTreeSet<usize>,
    invs: BTreeSet<usize>,
}

struct Ivc<'a> {
    ts: &'a TransitionSystem,
    settings: &'a EngineSettings,
    property: &'a Term,
    invariants: &'a [Term],
    origins: Vec<String>,
    provers: BTreeMap<usize, Prover>,
    name: String,
}

impl Ivc<'_> {
    fn prover(&mut self, k: usize) -> Result<&mut Prover, SolverError> {
        if !self.provers.contains_key(&k) {
            let mut base = self.settings.session(&format!("{}-base{k}", self.name), None)?;
            let mut step = self.settings.session(&format!("{}-step{k}", self.name), None)?;
            for t in 0..k as i64 {
                guarded_step(&mut base, self.ts, &self.origins, t, if t == 0 { Init::Initial } else { Init::Later })?;
            }
            for t in 0..=k as i64 {
                guarded_step(&mut step, self.ts, &self.origins, t, if t == 0 { Init::Free } else { Init::Later })?;
            }
            for t in 0..k as i64 {
                step.assert(&Formula::at(self.property, t))?;
                for (j, inv) in self.invariants.iter().enumerate() {
                    step.assert(&lit(&inv_lit(j)).implies(Formula::at(inv, t)))?;
                }
            }
            self.provers.insert(k, Prover { k, base, step });
        }
        Ok(self.provers.get_mut(&k).expect("just inserted"))
    }

    fn goal(&self, sel: &Selection, t: i64) -> Vec<Formula> {
        let mut g = vec![Formula::at(self.property, t)];
        g.extend(sel.invs.iter().map(|&j| Formula::at(&self.invariants[j], t)));
        g
    }

    fn assumptions(sel: &Selection) -> Vec<Formula> {
        let mut a: Vec<Formula> = sel.eqs.iter().map(|&i| lit(&eq_lit(i))).collect();
        a.extend(sel.invs.iter().map(|&j| lit(&inv_lit(j))));
        a
    }

    /// Checks the base case, then the step case, at depth `k`. On success
    /// also returns the step case's core.
    fn check(&mut self, sel: &Selection, k: usize) -> Result<Option<Vec<String>>, SolverError> {
        let base_goal: Vec<Formula> = (0..k as i64).flat_map(|t| self.goal(sel, t)).collect();
        let step_goal = self.goal(sel, k as i64);
        let assumptions = Self::assumptions(sel);
        let p = self.prover(k)?;
        debug_assert_eq!(p.k, k);
        let base = p.base.scoped(|s| {
            s.assert(&Formula::and(base_goal).not())?;
            s.check(&assumptions)
        })?;
        match base {
            CheckResult::Unsat(_) => {}
            CheckResult::Sat => return Ok(None),
            CheckResult::Unknown(r) => return Err(SolverError::Incomplete(r)),
        }
        let step = p.step.scoped(|s| {
            s.assert(&Formula::and(step_goal).not())?;
            s.check(&assumptions)
        })?;
        match step {
            CheckResult::Unsat(core) => Ok(Some(core)),
            CheckResult::Sat => Ok(None),
            CheckResult::Unknown(r) => Err(SolverError::Incomplete(r)),
        }
    }

    /// Smallest depth up to `budget` at which `sel` proves the goal.
    fn provable(&mut self, sel: &Selection, budget: usize) -> Result<Option<(usize, Vec<String>)>, SolverError> {
        for k in 1..=budget {
            if let Some(core) = self.check(sel, k)? {
                return Ok(Some((k, core)));
            }
        }
        Ok(None)
    }

    fn proves(&mut self, sel: &Selection, budget: usize) -> Result<bool, SolverError> {
        Ok(self.provable(sel, budget)?.is_some())
    }
}

/// Computes a core for `property`, proved by k-induction at depth `k` with
/// the help of `invariants`. Phase 1 keeps what an unsat core of the step
/// case names; phase 2 drops equations, then invariants, one at a time while
/// the proof survives at depth at most `k + 2`.
pub fn compute_ivc(
    ts: &TransitionSystem,
    property: &str,
    k: usize,
    invariants: &[Term],
    settings: &EngineSettings,
) -> Result<IvcResult, SolverError> {
    let prop = ts
        .property(property)
        .ok_or_else(|| SolverError::Protocol(format!("unknown property `{property}`")))?;
    let mut invs: Vec<Term> = Vec::new();
    for inv in invariants {
        if !invs.contains(inv) && inv != &prop.term {
            invs.push(inv.clone());
        }
    }
    let mut ivc = Ivc {
        ts,
        settings,
        property: &prop.term,
        invariants: &invs,
        origins: ts.equation_origins(),
        provers: BTreeMap::new(),
        name: format!("ivc-{property}"),
    };
    let full = Selection {
        eqs: (0..ivc.origins.len()).collect(),
        invs: (0..invs.len()).collect(),
    };
    let mut notes = Vec::new();
    let search = k.max(3) + 2;
    let Some((k0, core)) = ivc.provable(&full, search)? else {
        notes.push(format!("no proof within depth {search}; reporting every equation"));
        return Ok(IvcResult {
            property: property.into(),
            core: ivc.origins.clone(),
            reduced_invariants: invs.clone(),
            minimal: false,
            k,
            notes,
        });
    };
    let budget = k0.max(k) + 2;

    let mut sel = full.clone();
    if settings.solver.unsat_cores {
        let named: BTreeSet<&str> = core.iter().map(String::as_str).collect();
        let cut = Selection {
            eqs: full.eqs.iter().copied().filter(|&i| named.contains(eq_lit(i).as_str())).collect(),
            invs: full.invs.iter().copied().filter(|&j| named.contains(inv_lit(j).as_str())).collect(),
        };
        // The core comes from the step case alone; the base case may need
        // more.
        if ivc.proves(&cut, budget)? {
            sel = cut;
        }
    } else {
        notes.push("solver has no unsat cores; core computed by deletion only".into());
    }

    let minimal = loop {
        let mut dropped = false;
        for i in sel.eqs.clone() {
            let mut trial = sel.clone();
            trial.eqs.remove(&i);
            if ivc.proves(&trial, budget)? {
                sel = trial;
                dropped = true;
            }
        }
        for j in sel.invs.clone() {
            let mut trial = sel.clone();
            trial.invs.remove(&j);
            if ivc.proves(&trial, budget)? {
                sel = trial;
                dropped = true;
            }
        }
        if !dropped {
            break true;
        }
    };
    let (k_final, _) = ivc.provable(&sel, budget)?.expect("selection stays provable");
    Ok(IvcResult {
        property: property.into(),
        core: sel.eqs.iter().map(|&i| ivc.origins[i].clone()).collect(),
        reduced_invariants: sel.invs.iter().map(|&j| invs[j].clone()).collect(),
        minimal,
        k: k_final,
        notes,
    })
}
