use super::unroll::{assert_step, extract_trace, Init};
use super::{Ctx, EngineKind, Message};
use crate::solver::{CheckResult, Formula, SolverError};

/// Unrolls from the initial state one step at a time, checking every
/// unresolved property at every depth, so traces found are shortest.
pub fn run_bmc(ctx: &mut Ctx) -> Result<(), SolverError> {
    let ts = ctx.ts;
    let mut s = ctx.session("bmc")?;
    for k in 0..=ctx.settings.max_depth {
        ctx.poll();
        if ctx.unresolved().is_empty() {
            break;
        }
        assert_step(&mut s, ts, k as i64, if k == 0 { Init::Initial } else { Init::Later })?;
        for p in ctx.unresolved() {
            ctx.pause();
            ctx.check_cancel()?;
            match s.check(&[Formula::at(&p.term, k as i64).not()])? {
                CheckResult::Sat => {
                    let trace = extract_trace(&mut s, ts, k + 1)?;
                    ctx.mark_resolved(&p.name);
                    ctx.send(Message::Falsified {
                        property: p.name.clone(),
                        trace,
                        engine: EngineKind::Bmc,
                    });
                }
                CheckResult::Unsat(_) => {}
                CheckResult::Unknown(r) => {
                    return Err(SolverError::Incomplete(format!("depth {k}, property {}: {r}", p.name)))
                }
            }
        }
        ctx.send(Message::BaseStep(k));
    }
    Ok(())
}
