//! Property-directed reachability for one property, run directly over the
//! theory.
//!
//! A state is a valuation of the variables read by `pre` plus the initial
//! flag, taken at one step. Frame clauses are over step 0; the transition
//! relation connects step 0 to step 1. Since a property at step t depends on
//! the state at t - 1 and the inputs at t, a bad state is one with a
//! successor step that violates the property.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;

use super::invgen::Hooks;
use super::unroll::{assert_step, extract_trace, init_flag, Init};
use super::{Ctx, EngineKind, Message};
use crate::elaborate::{TransitionSystem, INIT_FLAG};
use crate::solver::{CheckResult, Formula, Session, SolverError};
use crate::term::{indexed_symbol, Sort, Term, Value};
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lit {
    Is(String, bool),
    Le(String, Value),
    Ge(String, Value),
}

impl Lit {
    pub fn term(&self, ts: &TransitionSystem) -> Term {
        let var = |n: &str| Term::var(n, ts.sort_of(n).expect("state variable"));
        match self {
            Lit::Is(n, true) => var(n),
            Lit::Is(n, false) => var(n).negate(),
            Lit::Le(n, c) => Term::mk_le(var(n), Term::constant(c.clone())).expect("same sort"),
            Lit::Ge(n, c) => Term::mk_ge(var(n), Term::constant(c.clone())).expect("same sort"),
        }
    }

    fn excludes_init(&self) -> bool {
        *self == Lit::Is(INIT_FLAG.to_string(), false)
    }
}

pub type Cube = Vec<Lit>;

pub fn cube_term(ts: &TransitionSystem, cube: &[Lit]) -> Term {
    Term::conjoin(cube.iter().map(|l| l.term(ts)))
}

pub fn clause_term(ts: &TransitionSystem, cube: &[Lit]) -> Term {
    Term::disjoin(cube.iter().map(|l| l.term(ts).negate()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PdrOutcome {
    /// Inductive clauses strengthening the property.
    Valid { clauses: Vec<Term>, frames: usize },
    Falsified(Trace),
    Unknown(String),
}

struct Obligation {
    cube: Cube,
    /// Steps from this state to the violating step.
    depth: usize,
}

enum Query {
    Sat(Cube),
    Unsat(Vec<usize>),
}

pub struct Pdr<'a> {
    ts: &'a TransitionSystem,
    prop: &'a Term,
    s: Session,
    state: Vec<(String, Sort)>,
    /// Clauses (as blocked cubes) by the highest level they are known at.
    frames: Vec<Vec<Cube>>,
    max_frames: usize,
    /// Clauses learned so far, and how many are allowed before giving up.
    lemmas: usize,
    pub max_lemmas: usize,
    /// Numeric constants of the system, tried as bounds when widening.
    constants: BTreeSet<Value>,
}

/// Interval cubes over unbounded domains can be refined forever.
pub const MAX_LEMMAS: usize = 300;

fn act(level: usize) -> Formula {
    Formula::symbol(&format!("%F{level}"), Sort::Bool)
}

fn unknown(r: String) -> SolverError {
    SolverError::Incomplete(r)
}

impl<'a> Pdr<'a> {
    pub fn new(ts: &'a TransitionSystem, prop: &'a Term, mut s: Session, max_frames: usize) -> Result<Self, SolverError> {
        assert_step(&mut s, ts, 0, Init::Free)?;
        assert_step(&mut s, ts, 1, Init::Later)?;
        let state = ts.state_vars().iter().map(|v| (v.name.clone(), v.sort)).collect();
        let mut constants = BTreeSet::new();
        prop.constants(&mut constants);
        for eq in &ts.equations {
            eq.rhs.constants(&mut constants);
        }
        for a in &ts.assertions {
            a.term.constants(&mut constants);
        }
        constants.retain(|c| !matches!(c, Value::Bool(_)));
        Ok(Pdr {
            ts,
            prop,
            s,
            state,
            frames: vec![Vec::new()],
            max_frames,
            lemmas: 0,
            max_lemmas: MAX_LEMMAS,
            constants,
        })
    }

    fn top(&self) -> usize {
        self.frames.len() - 1
    }

    /// Assumptions selecting frame `level`.
    fn frame(&self, level: usize) -> Vec<Formula> {
        if level == 0 {
            vec![init_flag(0)]
        } else {
            (level..=self.top()).map(act).collect()
        }
    }

    fn lit_at(&self, lit: &Lit, step: i64) -> Formula {
        Formula::at(&lit.term(self.ts), step)
    }

    fn cube_at(&self, cube: &[Lit], step: i64) -> Formula {
        Formula::and(cube.iter().map(|l| self.lit_at(l, step)).collect())
    }

    fn model_cube(&mut self) -> Result<Cube, SolverError> {
        let syms: Vec<(String, Sort)> = self.state.iter().map(|(n, s)| (indexed_symbol(n, 0), *s)).collect();
        let vals = self.s.values(&syms)?;
        let mut cube = Vec::new();
        for ((name, _), v) in self.state.iter().zip(vals) {
            match v {
                Value::Bool(b) => cube.push(Lit::Is(name.clone(), b)),
                v => {
                    cube.push(Lit::Le(name.clone(), v.clone()));
                    cube.push(Lit::Ge(name.clone(), v));
                }
            }
        }
        Ok(cube)
    }

    /// A state in frame `level` with a successor step violating the property.
    fn bad_cube(&mut self, level: usize) -> Result<Option<Cube>, SolverError> {
        let mut assume = self.frame(level);
        assume.push(Formula::at(self.prop, 1).not());
        match self.s.check(&assume)? {
            CheckResult::Sat => self.model_cube().map(Some),
            CheckResult::Unsat(_) => Ok(None),
            CheckResult::Unknown(r) => Err(unknown(r)),
        }
    }

    fn meets_init(&mut self, cube: &[Lit]) -> Result<bool, SolverError> {
        if cube.iter().any(Lit::excludes_init) {
            return Ok(false);
        }
        let c = self.cube_at(cube, 0);
        match self.s.scoped(|s| {
            s.assert(&c)?;
            s.check(&[init_flag(0)])
        })? {
            CheckResult::Sat => Ok(true),
            CheckResult::Unsat(_) => Ok(false),
            CheckResult::Unknown(r) => Err(unknown(r)),
        }
    }

    /// Is `cube` unreachable in one step from frame `level - 1` outside the
    /// cube? Unsat answers carry the indices of the cube literals used; sat
    /// answers the predecessor state.
    fn relative(&mut self, cube: &[Lit], level: usize) -> Result<Query, SolverError> {
        let not_c = self.cube_at(cube, 0).not();
        let mut assume = self.frame(level - 1);
        self.s.push()?;
        let r = (|| {
            self.s.assert(&not_c)?;
            for (i, l) in cube.iter().enumerate() {
                let a = Formula::symbol(&format!("%c{i}"), Sort::Bool);
                let lit = self.lit_at(l, 1);
                self.s.assert(&a.clone().implies(lit))?;
                assume.push(a);
            }
            match self.s.check(&assume)? {
                CheckResult::Sat => self.model_cube().map(Query::Sat),
                CheckResult::Unsat(core) if self.s.supports_cores() => Ok(Query::Unsat(
                    core.iter()
                        .filter_map(|c| c.strip_prefix("%c").and_then(|i| i.parse().ok()))
                        .collect(),
                )),
                CheckResult::Unsat(_) => Ok(Query::Unsat((0..cube.len()).collect())),
                CheckResult::Unknown(r) => Err(unknown(r)),
            }
        })();
        self.s.pop()?;
        r
    }

    fn blocked(&mut self, cube: &[Lit], level: usize) -> Result<Option<Vec<usize>>, SolverError> {
        if self.meets_init(cube)? {
            return Ok(None);
        }
        match self.relative(cube, level)? {
            Query::Unsat(core) => Ok(Some(core)),
            Query::Sat(_) => Ok(None),
        }
    }

    /// Drops literals from a cube blocked at `level` while it stays blocked
    /// and disjoint from the initial states: first those outside the unsat
    /// core, then one at a time.
    pub fn generalize(&mut self, cube: &[Lit], level: usize, core: &[usize]) -> Result<Cube, SolverError> {
        let mut g: Cube = cube
            .iter()
            .enumerate()
            .filter(|(i, _)| core.contains(i))
            .map(|(_, l)| l.clone())
            .collect();
        if let Some(l) = cube.iter().find(|l| l.excludes_init()) {
            if !g.contains(l) {
                g.push(l.clone());
            }
        }
        if g.is_empty() || self.blocked(&g, level)?.is_none() {
            g = cube.to_vec();
        }
        let mut i = 0;
        while i < g.len() && g.len() > 1 {
            let mut cand = g.clone();
            cand.remove(i);
            if self.blocked(&cand, level)?.is_some() {
                g = cand;
            } else {
                i += 1;
            }
        }
        for i in 0..g.len() {
            let (name, c, down) = match &g[i] {
                Lit::Ge(n, c) => (n.clone(), c.clone(), true),
                Lit::Le(n, c) => (n.clone(), c.clone(), false),
                Lit::Is(..) => continue,
            };
            let mk = |v: Value| if down { Lit::Ge(name.clone(), v) } else { Lit::Le(name.clone(), v) };
            // Ordered from weakest; a bound that blocks makes every
            // stronger one block too, so bisect for the weakest.
            let cands = self.coarser(&c, down);
            let (mut lo, mut hi) = (0, cands.len());
            while lo < hi {
                let mid = (lo + hi) / 2;
                let mut cand = g.clone();
                cand[i] = mk(cands[mid].clone());
                if self.blocked(&cand, level)?.is_some() {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            if lo < cands.len() {
                g[i] = mk(cands[lo].clone());
            }
        }
        Ok(g)
    }

    /// Bounds weaker than `c` (below it when `down`), weakest first: the
    /// system's constants and `c` rounded on coarser grids.
    fn coarser(&self, c: &Value, down: bool) -> Vec<Value> {
        let mut out: BTreeSet<Value> = self.constants.iter().filter(|k| k.sort() == c.sort()).cloned().collect();
        for j in 0..=10u32 {
            let grid = BigInt::from(2).pow(j);
            match c {
                Value::Real(r) => {
                    let scaled = r * BigRational::from_integer(grid.clone());
                    let n = if down { scaled.floor() } else { scaled.ceil() };
                    out.insert(Value::Real(n / BigRational::from_integer(grid)));
                }
                Value::Int(n) if j > 0 => {
                    let q = if down { n.div_floor(&grid) } else { n.div_ceil(&grid) };
                    out.insert(Value::Int(q * grid));
                }
                _ => {}
            }
        }
        let mut v: Vec<Value> = out.into_iter().filter(|k| if down { k < c } else { k > c }).collect();
        if !down {
            v.reverse();
        }
        v
    }

    fn add_clause(&mut self, cube: Cube, level: usize) -> Result<(), SolverError> {
        let clause = clause_term(self.ts, &cube);
        self.s.assert(&act(level).implies(Formula::at(&clause, 0)))?;
        self.frames[level].push(cube);
        Ok(())
    }

    /// Blocks `bad`, found at the top frame. `Err(n)` is a counterexample
    /// length.
    fn block(&mut self, bad: Cube, hooks: &mut dyn Hooks) -> Result<Result<(), usize>, SolverError> {
        let mut arena = vec![Obligation { cube: bad, depth: 1 }];
        let mut queue: BTreeSet<(usize, usize)> = BTreeSet::from([(self.top(), 0)]);
        while let Some((level, idx)) = queue.pop_first() {
            hooks.pause()?;
            let cube = arena[idx].cube.clone();
            let depth = arena[idx].depth;
            if self.meets_init(&cube)? {
                return Ok(Err(depth + 1));
            }
            if level == 0 {
                // Frame 0 is exactly the initial states.
                return Ok(Err(depth + 1));
            }
            match self.relative(&cube, level)? {
                Query::Sat(pred) => {
                    if level == 1 {
                        return Ok(Err(depth + 2));
                    }
                    arena.push(Obligation {
                        cube: pred,
                        depth: depth + 1,
                    });
                    queue.insert((level - 1, arena.len() - 1));
                    queue.insert((level, idx));
                }
                Query::Unsat(core) => {
                    self.lemmas += 1;
                    if self.lemmas > self.max_lemmas {
                        return Err(unknown("lemma limit".into()));
                    }
                    let g = self.generalize(&cube, level, &core)?;
                    self.add_clause(g, level)?;
                }
            }
        }
        Ok(Ok(()))
    }

    /// Pushes clauses forward; returns the invariant when two frames meet.
    fn propagate(&mut self, hooks: &mut dyn Hooks) -> Result<Option<Vec<Term>>, SolverError> {
        for level in 1..self.top() {
            let cubes = std::mem::take(&mut self.frames[level]);
            for cube in cubes {
                hooks.pause()?;
                let c1 = self.cube_at(&cube, 1);
                let assume = self.frame(level);
                let r = self.s.scoped(|s| {
                    s.assert(&c1)?;
                    s.check(&assume)
                })?;
                match r {
                    CheckResult::Unsat(_) => self.add_clause(cube, level + 1)?,
                    CheckResult::Sat => self.frames[level].push(cube),
                    CheckResult::Unknown(r) => return Err(unknown(r)),
                }
            }
            if self.frames[level].is_empty() {
                let clauses = self.frames[level + 1..]
                    .iter()
                    .flatten()
                    .map(|c| clause_term(self.ts, c))
                    .collect();
                return Ok(Some(clauses));
            }
        }
        Ok(None)
    }

    pub fn run(&mut self, hooks: &mut dyn Hooks) -> Result<PdrOutcome, SolverError> {
        hooks.pause()?;
        let bad0 = Formula::at(self.prop, 0).not();
        match self.s.check(&[init_flag(0), bad0])? {
            CheckResult::Sat => return Ok(PdrOutcome::Falsified(extract_trace(&mut self.s, self.ts, 1)?)),
            CheckResult::Unsat(_) => {}
            CheckResult::Unknown(r) => return Ok(PdrOutcome::Unknown(r)),
        }
        loop {
            loop {
                hooks.pause()?;
                let bad = match self.bad_cube(self.top()) {
                    Ok(Some(b)) => b,
                    Ok(None) => break,
                    Err(SolverError::Incomplete(r)) => return Ok(PdrOutcome::Unknown(r)),
                    Err(e) => return Err(e),
                };
                match self.block(bad, hooks) {
                    Ok(Ok(())) => {}
                    Ok(Err(len)) => return self.concretize(len),
                    Err(SolverError::Incomplete(r)) => return Ok(PdrOutcome::Unknown(r)),
                    Err(e) => return Err(e),
                }
            }
            if self.top() >= self.max_frames {
                return Ok(PdrOutcome::Unknown("frame limit".into()));
            }
            self.frames.push(Vec::new());
            match self.propagate(hooks) {
                Ok(Some(clauses)) => {
                    return Ok(PdrOutcome::Valid {
                        clauses,
                        frames: self.top(),
                    })
                }
                Ok(None) => {}
                Err(SolverError::Incomplete(r)) => return Ok(PdrOutcome::Unknown(r)),
                Err(e) => return Err(e),
            }
        }
    }

    /// Replays a counterexample of known length as a concrete run, reusing
    /// the two steps already asserted.
    fn concretize(&mut self, len: usize) -> Result<PdrOutcome, SolverError> {
        let (ts, prop) = (self.ts, self.prop);
        self.s.push()?;
        let r = (|| {
            self.s.assert(&init_flag(0))?;
            for t in 2..len as i64 {
                assert_step(&mut self.s, ts, t, Init::Later)?;
            }
            match self.s.check(&[Formula::at(prop, len as i64 - 1).not()])? {
                CheckResult::Sat => extract_trace(&mut self.s, ts, len).map(PdrOutcome::Falsified),
                CheckResult::Unsat(_) => Ok(PdrOutcome::Unknown("spurious counterexample".into())),
                CheckResult::Unknown(r) => Ok(PdrOutcome::Unknown(r)),
            }
        })();
        self.s.pop()?;
        r
    }
}

/// One sub-engine: proves or refutes a single property without using
/// invariants from elsewhere.
pub fn run_pdr(ctx: &mut Ctx, property: &str) -> Result<(), SolverError> {
    let ts = ctx.ts;
    let prop = &ts.property(property).expect("known property").term;
    let session = ctx.session(&format!("pdr-{property}"))?;
    let mut pdr = Pdr::new(ts, prop, session, ctx.settings.max_depth.max(1))?;
    match pdr.run(ctx)? {
        PdrOutcome::Valid { clauses, .. } => {
            ctx.send(Message::Invariants {
                invariants: clauses.clone(),
                engine: EngineKind::Pdr,
            });
            ctx.send(Message::Valid {
                property: property.to_string(),
                k: 1,
                invariants: clauses,
                engine: EngineKind::Pdr,
            });
            Ok(())
        }
        PdrOutcome::Falsified(trace) => {
            ctx.send(Message::Falsified {
                property: property.to_string(),
                trace,
                engine: EngineKind::Pdr,
            });
            Ok(())
        }
        PdrOutcome::Unknown(r) => Err(SolverError::Incomplete(r)),
    }
}
