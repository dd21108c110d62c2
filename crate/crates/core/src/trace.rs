//! Counterexample traces and their independent replay check.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::elaborate::{TransitionSystem, INIT_FLAG};
use crate::term::{EvalError, Sort, StepEnv, Term, Value};

/// A finite run of a transition system. Every step holds a value for each
/// variable of the system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub vars: Vec<(String, Sort)>,
    pub steps: Vec<BTreeMap<String, Value>>,
    /// Values read by `pre` at step 0, for programs whose `pre` is not
    /// guarded by `->`. Usually empty.
    pub before: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("empty trace")]
    Empty,
    #[error("step {step}: missing value for `{var}`")]
    Missing { step: usize, var: String },
    #[error("step {step}: initial flag is {found}")]
    InitFlag { step: usize, found: bool },
    #[error("step {step}: equation for `{lhs}` does not hold")]
    Equation { step: usize, lhs: String },
    #[error("step {step}: assertion does not hold")]
    Assertion { step: usize },
    #[error("property `{0}` holds at the last step")]
    NotViolated(String),
    #[error("unknown property `{0}`")]
    UnknownProperty(String),
    #[error("step {step}: {error}")]
    Eval { step: usize, error: EvalError },
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn value(&self, step: usize, var: &str) -> Option<&Value> {
        self.steps.get(step)?.get(var)
    }

    /// Values of `var` across all steps.
    pub fn column(&self, var: &str) -> Vec<Option<&Value>> {
        self.steps.iter().map(|s| s.get(var)).collect()
    }

    pub fn env(&self, step: usize) -> StepEnv<'_> {
        StepEnv {
            curr: &self.steps[step],
            prev: if step == 0 {
                (!self.before.is_empty()).then_some(&self.before)
            } else {
                Some(&self.steps[step - 1])
            },
        }
    }

    /// Evaluates `term` at `step`.
    pub fn eval(&self, term: &Term, step: usize) -> Result<Value, EvalError> {
        term.eval(&self.env(step))
    }

    /// Number of (input, step) pairs where an input differs from its value
    /// at the previous step.
    pub fn input_deltas(&self, ts: &TransitionSystem) -> usize {
        let mut n = 0;
        for v in ts.inputs() {
            for t in 1..self.steps.len() {
                if self.steps[t].get(&v.name) != self.steps[t - 1].get(&v.name) {
                    n += 1;
                }
            }
        }
        n
    }
}

/// Replays `trace` against the equations and assertions of `ts` by
/// evaluation, and checks that `property` is false at the last step.
pub fn check_trace(ts: &TransitionSystem, property: &str, trace: &Trace) -> Result<(), TraceError> {
    let prop = ts
        .property(property)
        .ok_or_else(|| TraceError::UnknownProperty(property.to_string()))?;
    if trace.is_empty() {
        return Err(TraceError::Empty);
    }
    for (t, state) in trace.steps.iter().enumerate() {
        for v in &ts.vars {
            if !state.contains_key(&v.name) {
                return Err(TraceError::Missing {
                    step: t,
                    var: v.name.clone(),
                });
            }
        }
        let init = state[INIT_FLAG].as_bool() == Some(true);
        if init != (t == 0) {
            return Err(TraceError::InitFlag { step: t, found: init });
        }
        let holds = |term: &Term| trace.eval(term, t).map_err(|error| TraceError::Eval { step: t, error });
        for eq in &ts.equations {
            if holds(&eq.as_term())? != Value::Bool(true) {
                return Err(TraceError::Equation {
                    step: t,
                    lhs: eq.lhs.clone(),
                });
            }
        }
        for a in &ts.assertions {
            if holds(&a.term)? != Value::Bool(true) {
                return Err(TraceError::Assertion { step: t });
            }
        }
    }
    let last = trace.len() - 1;
    let v = trace
        .eval(&prop.term, last)
        .map_err(|error| TraceError::Eval { step: last, error })?;
    if v != Value::Bool(false) {
        return Err(TraceError::NotViolated(property.to_string()));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct Row {
    name: String,
    sort: Sort,
    values: Vec<Value>,
}

#[derive(Serialize, Deserialize)]
struct Raw {
    length: usize,
    vars: Vec<Row>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    before: BTreeMap<String, Value>,
}

/// One row per variable, one column per step; numbers as exact strings.
impl Serialize for Trace {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let vars = self
            .vars
            .iter()
            .map(|(name, sort)| Row {
                name: name.clone(),
                sort: *sort,
                values: self
                    .steps
                    .iter()
                    .map(|st| st.get(name).cloned().unwrap_or_else(|| Value::default_of(*sort)))
                    .collect(),
            })
            .collect();
        Raw {
            length: self.steps.len(),
            vars,
            before: self.before.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Trace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = Raw::deserialize(d)?;
        let retag = |v: Value, sort: Sort| -> Result<Value, D::Error> {
            match (v, sort) {
                (Value::Int(i), Sort::Real) => Ok(Value::Real(i.into())),
                (v, sort) if v.sort() == sort => Ok(v),
                (v, _) => Err(D::Error::custom(format!("value `{v}` does not have sort {sort}"))),
            }
        };
        let mut steps = vec![BTreeMap::new(); raw.length];
        let mut vars = Vec::new();
        for row in raw.vars {
            if row.values.len() != raw.length {
                return Err(D::Error::custom(format!("row `{}` has wrong length", row.name)));
            }
            for (t, v) in row.values.into_iter().enumerate() {
                steps[t].insert(row.name.clone(), retag(v, row.sort)?);
            }
            vars.push((row.name, row.sort));
        }
        let sorts: BTreeMap<&str, Sort> = vars.iter().map(|(n, s)| (n.as_str(), *s)).collect();
        let mut before = BTreeMap::new();
        for (name, v) in raw.before {
            let sort = *sorts
                .get(name.as_str())
                .ok_or_else(|| D::Error::custom(format!("unknown variable `{name}`")))?;
            before.insert(name, retag(v, sort)?);
        }
        Ok(Trace { vars, steps, before })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elaborate::elaborate;
    use crate::frontend::load;

    const CTR: &str = "node main(reset: bool) returns ();
var x: int; ok1, ok2: bool;
let
  x = if reset then 0 else (0 -> pre x + 1);
  ok1 = x >= 0;
  ok2 = x < 3;
  --%PROPERTY ok1;
  --%PROPERTY ok2;
tel";

    fn counter_run(ts: &TransitionSystem, len: usize) -> Trace {
        let steps = (0..len)
            .map(|t| {
                let x = t as i64;
                BTreeMap::from([
                    (INIT_FLAG.to_string(), Value::Bool(t == 0)),
                    ("reset".to_string(), Value::Bool(false)),
                    ("x".to_string(), Value::int(x)),
                    ("ok1".to_string(), Value::Bool(true)),
                    ("ok2".to_string(), Value::Bool(x < 3)),
                ])
            })
            .collect();
        Trace {
            vars: ts.vars.iter().map(|v| (v.name.clone(), v.sort)).collect(),
            steps,
            before: BTreeMap::new(),
        }
    }

    #[test]
    fn accepts_counter_run() {
        let ts = elaborate(&load(CTR).unwrap());
        let tr = counter_run(&ts, 4);
        assert_eq!(check_trace(&ts, "ok2", &tr), Ok(()));
        assert_eq!(check_trace(&ts, "ok1", &tr), Err(TraceError::NotViolated("ok1".into())));
        assert_eq!(tr.input_deltas(&ts), 0);
    }

    #[test]
    fn rejects_broken_equation() {
        let ts = elaborate(&load(CTR).unwrap());
        let mut tr = counter_run(&ts, 4);
        tr.steps[2].insert("x".into(), Value::int(7));
        assert_eq!(
            check_trace(&ts, "ok2", &tr),
            Err(TraceError::Equation { step: 2, lhs: "x".into() })
        );
        let mut tr = counter_run(&ts, 4);
        tr.steps[1].insert(INIT_FLAG.into(), Value::Bool(true));
        assert!(matches!(check_trace(&ts, "ok2", &tr), Err(TraceError::InitFlag { step: 1, .. })));
    }

    #[test]
    fn json_round_trip() {
        let ts = elaborate(&load(CTR).unwrap());
        let mut tr = counter_run(&ts, 3);
        tr.vars.push(("r".into(), Sort::Real));
        for (t, st) in tr.steps.iter_mut().enumerate() {
            st.insert("r".into(), Value::real(t as i64, 3));
        }
        let text = serde_json::to_string(&tr).unwrap();
        assert!(text.contains(r#""values":["0","1/3","2/3"]"#));
        let back: Trace = serde_json::from_str(&text).unwrap();
        assert_eq!(back, tr);
    }
}
