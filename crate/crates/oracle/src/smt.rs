//! One-shot SMT-LIB scripts for questions that need a solver: is a goal
//! k-inductive on a system with some equations removed, is a clause set an
//! inductive certificate. Each script is written out whole and piped through
//! a fresh solver process.

use std::collections::BTreeSet;
use std::io::Write;
use std::process::{Command, Stdio};

use mini_kind::elaborate::{TransitionSystem, INIT_FLAG};
use mini_kind::term::indexed_symbol;
use mini_kind::term::Term;

use crate::OracleError;

/// Command line of a solver reading SMT-LIB from stdin, e.g.
/// `["z3", "-in", "-smt2"]`.
#[derive(Debug, Clone)]
pub struct Solver(pub Vec<String>);

impl Solver {
    pub fn z3() -> Solver {
        Solver(vec!["z3".into(), "-in".into(), "-smt2".into()])
    }

    /// Runs `script` and returns one answer per `check-sat`.
    fn answers(&self, script: &str) -> Result<Vec<String>, OracleError> {
        let mut child = Command::new(&self.0[0])
            .args(&self.0[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| OracleError::Solver(format!("{}: {e}", self.0[0])))?;
        child
            .stdin
            .take()
            .expect("piped stdin")
            .write_all(script.as_bytes())
            .map_err(|e| OracleError::Solver(e.to_string()))?;
        let out = child.wait_with_output().map_err(|e| OracleError::Solver(e.to_string()))?;
        let text = String::from_utf8_lossy(&out.stdout);
        let answers: Vec<String> = text.lines().map(|l| l.trim().to_string()).filter(|l| !l.is_empty()).collect();
        if let Some(bad) = answers.iter().find(|a| !matches!(a.as_str(), "sat" | "unsat")) {
            return Err(OracleError::Solver(format!("unexpected output `{bad}`")));
        }
        Ok(answers)
    }
}

/// Which equations a script keeps: those whose origin is listed, plus those
/// without origin. `None` keeps everything.
pub type Keep<'a> = Option<&'a BTreeSet<String>>;

struct Script<'a> {
    ts: &'a TransitionSystem,
    text: String,
}

impl<'a> Script<'a> {
    fn new(ts: &'a TransitionSystem, last_step: i64) -> Self {
        let mut text = String::from("(set-logic ALL)\n");
        for t in -1..=last_step {
            for v in &ts.vars {
                text.push_str(&format!(
                    "(declare-fun {} () {})\n",
                    indexed_symbol(&v.name, t),
                    v.sort.smt_name()
                ));
            }
        }
        Script { ts, text }
    }

    fn line(&mut self, s: &str) {
        self.text.push_str(s);
        self.text.push('\n');
    }

    fn assert(&mut self, s: &str) {
        self.line(&format!("(assert {s})"));
    }

    /// The system's constraints at `step`; `init` fixes the initial flag.
    fn step(&mut self, keep: Keep, step: i64, init: Option<bool>) {
        for eq in &self.ts.equations {
            if eq.origin.as_ref().is_none_or(|o| keep.is_none_or(|k| k.contains(o))) {
                let s = eq.as_term().to_smt(step);
                self.assert(&s);
            }
        }
        for a in &self.ts.assertions {
            let s = a.term.to_smt(step);
            self.assert(&s);
        }
        let flag = indexed_symbol(INIT_FLAG, step);
        match init {
            Some(true) => self.assert(&flag),
            Some(false) => self.assert(&format!("(not {flag})")),
            None => {}
        }
    }
}

fn all(goal: &[Term], step: i64) -> String {
    let parts: Vec<String> = goal.iter().map(|g| g.to_smt(step)).collect();
    format!("(and true {})", parts.join(" "))
}

/// Whether the conjunction of `goal` is k-inductive for some k in
/// `1..=max_k` on the system restricted to `keep`.
pub fn provable(solver: &Solver, ts: &TransitionSystem, keep: Keep, goal: &[Term], max_k: usize) -> Result<bool, OracleError> {
    let mut s = Script::new(ts, max_k as i64);
    for k in 1..=max_k as i64 {
        // Base: no initialized run of k steps violates the goal.
        s.line("(push 1)");
        for t in 0..k {
            s.step(keep, t, Some(t == 0));
        }
        let bad: Vec<String> = (0..k).map(|t| format!("(not {})", all(goal, t))).collect();
        s.assert(&format!("(or false {})", bad.join(" ")));
        s.line("(check-sat)\n(pop 1)");
        // Step: k goal states in a row are followed by one.
        s.line("(push 1)");
        for t in 0..=k {
            s.step(keep, t, if t == 0 { None } else { Some(false) });
        }
        for t in 0..k {
            s.assert(&all(goal, t));
        }
        s.assert(&format!("(not {})", all(goal, k)));
        s.line("(check-sat)\n(pop 1)");
    }
    let answers = solver.answers(&s.text)?;
    if answers.len() != 2 * max_k {
        return Err(OracleError::Solver(format!("expected {} answers, got {}", 2 * max_k, answers.len())));
    }
    Ok(answers.chunks(2).any(|c| c[0] == "unsat" && c[1] == "unsat"))
}

/// Smallest equation subsets that prove `property` together with `extra`
/// goals within `max_k`, by increasing size. Supersets of a proving set
/// prove as well, so the search stops at the first size that has one.
pub fn minimal_cores(
    solver: &Solver,
    ts: &TransitionSystem,
    property: &str,
    extra: &[Term],
    max_k: usize,
) -> Result<Option<Vec<BTreeSet<String>>>, OracleError> {
    let prop = ts
        .property(property)
        .ok_or_else(|| OracleError::Unsupported(format!("no property `{property}`")))?;
    let mut goal = vec![prop.term.clone()];
    goal.extend(extra.iter().cloned());
    let origins = ts.equation_origins();
    let n = origins.len();
    if n > 16 {
        return Err(OracleError::Unsupported(format!("{n} equations is too many to enumerate")));
    }
    for size in 0..=n {
        let mut found = Vec::new();
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != size {
                continue;
            }
            let keep: BTreeSet<String> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| origins[i].clone()).collect();
            if provable(solver, ts, Some(&keep), &goal, max_k)? {
                found.push(keep);
            }
        }
        if !found.is_empty() {
            return Ok(Some(found));
        }
    }
    Ok(None)
}

/// Whether `clauses`, read over one step, hold initially, are preserved by
/// every transition and imply `property`.
pub fn certificate_holds(solver: &Solver, ts: &TransitionSystem, property: &str, clauses: &[Term]) -> Result<bool, OracleError> {
    let prop = ts
        .property(property)
        .ok_or_else(|| OracleError::Unsupported(format!("no property `{property}`")))?;
    let mut s = Script::new(ts, 1);
    // Initiation.
    s.line("(push 1)");
    s.step(None, 0, Some(true));
    s.assert(&format!("(not {})", all(clauses, 0)));
    s.line("(check-sat)\n(pop 1)");
    // Consecution.
    s.line("(push 1)");
    s.step(None, 0, None);
    s.step(None, 1, Some(false));
    s.assert(&all(clauses, 0));
    s.assert(&format!("(not {})", all(clauses, 1)));
    s.line("(check-sat)\n(pop 1)");
    // The property in the initial state and after any step from the clauses.
    s.line("(push 1)");
    s.step(None, 0, Some(true));
    s.assert(&format!("(not {})", prop.term.to_smt(0)));
    s.line("(check-sat)\n(pop 1)");
    s.line("(push 1)");
    s.step(None, 0, None);
    s.step(None, 1, Some(false));
    s.assert(&all(clauses, 0));
    s.assert(&format!("(not {})", prop.term.to_smt(1)));
    s.line("(check-sat)\n(pop 1)");
    let answers = solver.answers(&s.text)?;
    Ok(answers.len() == 4 && answers.iter().all(|a| a == "unsat"))
}
