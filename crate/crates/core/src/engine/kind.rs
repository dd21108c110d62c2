use std::collections::BTreeSet;

use super::unroll::{assert_step, Init};
use super::{Ctx, Message};
use crate::solver::{CheckResult, Formula, Session, SolverError};
use crate::term::Term;

struct Kind {
    session: Session,
    k: usize,
    invariants: Vec<Term>,
    seen: BTreeSet<Term>,
    inductive: BTreeSet<String>,
}

impl Kind {
    fn learn(&mut self, msg: &Message) -> Result<bool, SolverError> {
        let Message::Invariants { invariants, .. } = msg else {
            return Ok(false);
        };
        let mut new = false;
        for inv in invariants {
            if self.seen.insert(inv.clone()) {
                for t in 0..=self.k as i64 {
                    self.session.assert(&Formula::at(inv, t))?;
                }
                self.invariants.push(inv.clone());
                new = true;
            }
        }
        Ok(new)
    }
}

/// The inductive step of k-induction over a window whose first state is
/// arbitrary, strengthened by every invariant received so far.
pub fn run_kind(ctx: &mut Ctx) -> Result<(), SolverError> {
    let ts = ctx.ts;
    let mut session = ctx.session("kind")?;
    assert_step(&mut session, ts, 0, Init::Free)?;
    assert_step(&mut session, ts, 1, Init::Later)?;
    let mut st = Kind {
        session,
        k: 1,
        invariants: Vec::new(),
        seen: BTreeSet::new(),
        inductive: BTreeSet::new(),
    };
    loop {
        for m in ctx.poll() {
            st.learn(&m)?;
        }
        let todo: Vec<_> = ctx
            .unresolved()
            .into_iter()
            .filter(|p| !st.inductive.contains(&p.name))
            .collect();
        if todo.is_empty() {
            return Ok(());
        }
        let k = st.k;
        for p in todo {
            ctx.pause();
            ctx.check_cancel()?;
            let mut lits: Vec<Formula> = (0..k as i64).map(|t| Formula::at(&p.term, t)).collect();
            lits.push(Formula::at(&p.term, k as i64).not());
            match st.session.check(&lits)? {
                CheckResult::Unsat(_) => {
                    st.inductive.insert(p.name.clone());
                    ctx.send(Message::InductiveOnly {
                        property: p.name.clone(),
                        k,
                        invariants: st.invariants.clone(),
                    });
                }
                CheckResult::Sat => {}
                CheckResult::Unknown(r) => {
                    return Err(SolverError::Incomplete(format!("k = {k}, property {}: {r}", p.name)))
                }
            }
        }
        if ctx.unresolved().iter().all(|p| st.inductive.contains(&p.name)) {
            return Ok(());
        }
        if k < ctx.settings.max_k {
            st.k += 1;
            assert_step(&mut st.session, ts, st.k as i64, Init::Later)?;
            for inv in &st.invariants {
                st.session.assert(&Formula::at(inv, st.k as i64))?;
            }
            continue;
        }
        // Out of depth: only new invariants can help now.
        loop {
            if ctx.producers.is_empty() {
                return Ok(());
            }
            match ctx.wait() {
                None => return Err(SolverError::Cancelled),
                Some(m) => {
                    let resolution = matches!(m, Message::Valid { .. } | Message::Falsified { .. });
                    if st.learn(&m)? || resolution {
                        break;
                    }
                }
            }
        }
    }
}
