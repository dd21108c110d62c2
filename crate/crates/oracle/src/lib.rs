//! Reference answers for tests: explicit-state enumeration of bounded input
//! sequences, and plain one-shot solver scripts for induction questions.
//!
//! Nothing here uses the engines or the solver driver of `mini-kind-core`;
//! only its frontend, elaboration and term evaluator.

use std::collections::{BTreeMap, BTreeSet};

use mini_kind::elaborate::{TransitionSystem, VarKind, INIT_FLAG};
use mini_kind::term::Valuation;
use mini_kind::term::{Sort, StepTag, Value};
use thiserror::Error;

pub mod smt;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("bounds file line {line}: {message}")]
    Bounds { line: usize, message: String },
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("more than {cap} states at depth {depth}")]
    Explosion { depth: usize, cap: usize },
    #[error("evaluation failed: {0}")]
    Eval(String),
    #[error("solver: {0}")]
    Solver(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    Valid,
    Falsified(usize),
}

/// A sidecar `.bounds` file: integer input ranges and expected verdicts.
///
/// ```text
/// input x -3 3
/// expect ok1 valid
/// expect ok2 falsified 4
/// ```
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bounds {
    pub inputs: BTreeMap<String, (i64, i64)>,
    pub expect: BTreeMap<String, Expect>,
}

impl Bounds {
    pub fn parse(text: &str) -> Result<Bounds, OracleError> {
        let mut b = Bounds::default();
        for (i, raw) in text.lines().enumerate() {
            let err = |message: &str| OracleError::Bounds {
                line: i + 1,
                message: message.to_string(),
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            let words: Vec<&str> = line.split_whitespace().collect();
            match words.as_slice() {
                [] => {}
                ["input", name, lo, hi] => {
                    let lo: i64 = lo.parse().map_err(|_| err("bad lower bound"))?;
                    let hi: i64 = hi.parse().map_err(|_| err("bad upper bound"))?;
                    if lo > hi {
                        return Err(err("empty range"));
                    }
                    b.inputs.insert(name.to_string(), (lo, hi));
                }
                ["expect", name, "valid"] => {
                    b.expect.insert(name.to_string(), Expect::Valid);
                }
                ["expect", name, "falsified", n] => {
                    let n = n.parse().map_err(|_| err("bad length"))?;
                    b.expect.insert(name.to_string(), Expect::Falsified(n));
                }
                _ => return Err(err("expected `input <name> <lo> <hi>` or `expect <property> ...`")),
            }
        }
        Ok(b)
    }
}

/// What the enumeration found for one property.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// No violation in any run of up to this many steps.
    Safe(usize),
    /// A shortest violating run, all variables per step.
    Violated(Vec<BTreeMap<String, Value>>),
}

impl Outcome {
    pub fn violation_length(&self) -> Option<usize> {
        match self {
            Outcome::Safe(_) => None,
            Outcome::Violated(t) => Some(t.len()),
        }
    }
}

pub const DEFAULT_CAP: usize = 200_000;

/// Breadth-first simulator over all input sequences.
pub struct Explorer<'a> {
    ts: &'a TransitionSystem,
    domains: Vec<(String, Vec<Value>)>,
    /// Variables read through `pre`; they make up the state.
    memory: Vec<String>,
    pub cap: usize,
}

/// Every combination of one value per domain.
fn product(domains: &[(String, Vec<Value>)]) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for (_, vals) in domains {
        let mut next = Vec::new();
        for prefix in &out {
            for v in vals {
                let mut p = prefix.clone();
                p.push(v.clone());
                next.push(p);
            }
        }
        out = next;
    }
    out
}

impl<'a> Explorer<'a> {
    pub fn new(ts: &'a TransitionSystem, bounds: &Bounds) -> Result<Self, OracleError> {
        let mut domains = Vec::new();
        for v in ts.vars.iter().filter(|v| v.kind == VarKind::Input) {
            let vals = if v.unused {
                vec![Value::default_of(v.sort)]
            } else {
                match v.sort {
                    Sort::Bool => vec![Value::Bool(false), Value::Bool(true)],
                    Sort::Int => {
                        let (lo, hi) = bounds
                            .inputs
                            .get(&v.name)
                            .ok_or_else(|| OracleError::Unsupported(format!("no bounds for input `{}`", v.name)))?;
                        (*lo..=*hi).map(Value::int).collect()
                    }
                    Sort::Real => {
                        return Err(OracleError::Unsupported(format!("real input `{}`", v.name)));
                    }
                }
            };
            domains.push((v.name.clone(), vals));
        }
        for v in &ts.vars {
            if !matches!(v.kind, VarKind::Input | VarKind::Init) && !ts.equations.iter().any(|e| e.lhs == v.name) {
                return Err(OracleError::Unsupported(format!("`{}` has no definition", v.name)));
            }
        }
        let mut memory = BTreeSet::new();
        for eq in &ts.equations {
            for r in eq.rhs.vars() {
                if r.step == StepTag::Prev {
                    memory.insert(r.name.to_string());
                }
            }
        }
        for a in &ts.assertions {
            for r in a.term.vars() {
                if r.step == StepTag::Prev {
                    memory.insert(r.name.to_string());
                }
            }
        }
        Ok(Explorer {
            ts,
            domains,
            memory: memory.into_iter().collect(),
            cap: DEFAULT_CAP,
        })
    }

    /// All variables at one step, or `None` when an assertion fails.
    pub fn step(
        &self,
        prev: Option<&BTreeMap<String, Value>>,
        inputs: &[Value],
    ) -> Result<Option<BTreeMap<String, Value>>, OracleError> {
        let mut env = Valuation::new();
        if let Some(p) = prev {
            env.prev = p.clone();
        }
        env.set(INIT_FLAG, Value::Bool(prev.is_none()));
        for ((name, _), v) in self.domains.iter().zip(inputs) {
            env.set(name, v.clone());
        }
        // Equations in any order: evaluate whatever is ready until done.
        let mut pending: Vec<_> = self.ts.equations.iter().collect();
        while !pending.is_empty() {
            let before = pending.len();
            let mut last = None;
            pending.retain(|eq| match eq.rhs.eval(&env) {
                Ok(v) => {
                    env.set(&eq.lhs, v);
                    false
                }
                Err(e) => {
                    last = Some(e);
                    true
                }
            });
            if pending.len() == before {
                let e = last.expect("an equation failed");
                let what = if prev.is_none() {
                    format!("{e} at the initial step")
                } else {
                    e.to_string()
                };
                return Err(OracleError::Eval(what));
            }
        }
        for a in &self.ts.assertions {
            let ok = a.term.eval_bool(&env).map_err(|e| OracleError::Eval(e.to_string()))?;
            if !ok {
                return Ok(None);
            }
        }
        Ok(Some(env.curr))
    }

    fn state_key(&self, full: &BTreeMap<String, Value>) -> Vec<Value> {
        self.memory.iter().map(|m| full[m].clone()).collect()
    }

    /// Shortest violation of every property within `depth` steps.
    pub fn verdicts(&self, depth: usize) -> Result<BTreeMap<String, Outcome>, OracleError> {
        let combos = product(&self.domains);
        let mut out = BTreeMap::new();
        // Each node: full valuation and parent index in the previous layer.
        let mut layers: Vec<Vec<(BTreeMap<String, Value>, usize)>> = Vec::new();
        for t in 0..depth {
            let mut next: Vec<(BTreeMap<String, Value>, usize)> = Vec::new();
            let mut seen = BTreeSet::new();
            let parents: Vec<Option<usize>> = match layers.last() {
                None => vec![None],
                Some(l) => (0..l.len()).map(Some).collect(),
            };
            for parent in parents {
                let prev = parent.map(|i| &layers.last().expect("layer")[i].0);
                for inputs in &combos {
                    let Some(full) = self.step(prev, inputs)? else { continue };
                    for p in &self.ts.properties {
                        if out.contains_key(&p.name) {
                            continue;
                        }
                        let ok = p.term.eval_bool(&Valuation {
                            curr: full.clone(),
                            prev: Default::default(),
                        });
                        if ok.map_err(|e| OracleError::Eval(e.to_string()))? {
                            continue;
                        }
                        let mut trace = vec![full.clone()];
                        let mut idx = parent;
                        for l in layers.iter().rev() {
                            let i = idx.expect("parent index");
                            trace.push(l[i].0.clone());
                            idx = Some(l[i].1);
                        }
                        trace.reverse();
                        out.insert(p.name.clone(), Outcome::Violated(trace));
                    }
                    if seen.insert(self.state_key(&full)) {
                        next.push((full, parent.unwrap_or(0)));
                    }
                }
            }
            if next.len() > self.cap {
                return Err(OracleError::Explosion { depth: t, cap: self.cap });
            }
            if out.len() == self.ts.properties.len() || next.is_empty() {
                layers.push(next);
                break;
            }
            layers.push(next);
        }
        for p in &self.ts.properties {
            out.entry(p.name.clone()).or_insert(Outcome::Safe(depth));
        }
        Ok(out)
    }

    /// Fewest input changes over all runs of exactly `len` steps that
    /// violate `property` at the last step; `None` when no such run exists.
    pub fn min_input_deltas(&self, property: &str, len: usize) -> Result<Option<usize>, OracleError> {
        let prop = self
            .ts
            .property(property)
            .ok_or_else(|| OracleError::Unsupported(format!("no property `{property}`")))?;
        let combos = product(&self.domains);
        let deltas = |a: &[Value], b: &[Value]| a.iter().zip(b).filter(|(x, y)| x != y).count();
        // (state, last inputs) -> (fewest changes so far, a full valuation)
        let mut layer: BTreeMap<(Vec<Value>, usize), (usize, BTreeMap<String, Value>)> = BTreeMap::new();
        let mut best = None;
        for t in 0..len {
            let mut next: BTreeMap<(Vec<Value>, usize), (usize, BTreeMap<String, Value>)> = BTreeMap::new();
            let mut visit = |prev: Option<(&BTreeMap<String, Value>, usize, usize)>| -> Result<(), OracleError> {
                for (ci, inputs) in combos.iter().enumerate() {
                    let Some(full) = self.step(prev.map(|p| p.0), inputs)? else { continue };
                    let cost = prev.map_or(0, |(_, pc, c)| c + deltas(&combos[pc], inputs));
                    if t + 1 == len {
                        let ok = prop
                            .term
                            .eval_bool(&Valuation {
                                curr: full.clone(),
                                prev: Default::default(),
                            })
                            .map_err(|e| OracleError::Eval(e.to_string()))?;
                        if !ok && best.is_none_or(|b| cost < b) {
                            best = Some(cost);
                        }
                        continue;
                    }
                    let key = (self.state_key(&full), ci);
                    match next.get(&key) {
                        Some((c, _)) if *c <= cost => {}
                        _ => {
                            next.insert(key, (cost, full));
                        }
                    }
                }
                Ok(())
            };
            if t == 0 {
                visit(None)?;
            } else {
                for ((_, ci), (cost, full)) in &layer {
                    visit(Some((full, *ci, *cost)))?;
                }
            }
            if next.len() > self.cap {
                return Err(OracleError::Explosion { depth: t, cap: self.cap });
            }
            layer = next;
        }
        Ok(best)
    }
}

/// Enumerates runs of up to `depth` steps under `bounds`.
pub fn enumerate_verdicts(
    ts: &TransitionSystem,
    bounds: &Bounds,
    depth: usize,
) -> Result<BTreeMap<String, Outcome>, OracleError> {
    Explorer::new(ts, bounds)?.verdicts(depth)
}
