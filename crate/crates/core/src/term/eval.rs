use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use super::value::{euclid_div, euclid_mod};
use super::{CmpOp, StepTag, Term, TermKind, Value, VarRef};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no value for `{0}`")]
    Unbound(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("ill-sorted operands")]
    IllSorted,
}

/// Supplies variable values to the evaluator.
pub trait Env {
    fn lookup(&self, var: &VarRef) -> Option<Value>;
}

/// A map-backed environment with separate current and previous step values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Valuation {
    pub curr: BTreeMap<String, Value>,
    pub prev: BTreeMap<String, Value>,
}

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: &str, value: Value) -> &mut Self {
        self.curr.insert(name.to_string(), value);
        self
    }

    pub fn set_prev(&mut self, name: &str, value: Value) -> &mut Self {
        self.prev.insert(name.to_string(), value);
        self
    }
}

impl Env for Valuation {
    fn lookup(&self, var: &VarRef) -> Option<Value> {
        match var.step {
            StepTag::Curr => self.curr.get(&*var.name).cloned(),
            StepTag::Prev => self.prev.get(&*var.name).cloned(),
        }
    }
}

/// Borrowed view of two consecutive states of a trace.
#[derive(Debug, Clone, Copy)]
pub struct StepEnv<'a> {
    pub curr: &'a BTreeMap<String, Value>,
    pub prev: Option<&'a BTreeMap<String, Value>>,
}

impl Env for StepEnv<'_> {
    fn lookup(&self, var: &VarRef) -> Option<Value> {
        match var.step {
            StepTag::Curr => self.curr.get(&*var.name).cloned(),
            StepTag::Prev => self.prev.and_then(|p| p.get(&*var.name)).cloned(),
        }
    }
}

fn as_bool(v: Value) -> Result<bool, EvalError> {
    v.as_bool().ok_or(EvalError::IllSorted)
}

enum Num {
    I(BigInt),
    R(BigRational),
}

fn num(v: Value) -> Result<Num, EvalError> {
    match v {
        Value::Int(i) => Ok(Num::I(i)),
        Value::Real(r) => Ok(Num::R(r)),
        Value::Bool(_) => Err(EvalError::IllSorted),
    }
}

fn arith(
    a: Value,
    b: Value,
    fi: impl Fn(BigInt, BigInt) -> BigInt,
    fr: impl Fn(BigRational, BigRational) -> BigRational,
) -> Result<Value, EvalError> {
    match (num(a)?, num(b)?) {
        (Num::I(x), Num::I(y)) => Ok(Value::Int(fi(x, y))),
        (Num::R(x), Num::R(y)) => Ok(Value::Real(fr(x, y))),
        _ => Err(EvalError::IllSorted),
    }
}

impl Term {
    /// Evaluates the term. `ite` and the boolean connectives are lazy, so an
    /// unbound variable in an untaken branch is not an error.
    pub fn eval(&self, env: &impl Env) -> Result<Value, EvalError> {
        Ok(match self.kind() {
            TermKind::Const(v) => v.clone(),
            TermKind::Var(v) => env
                .lookup(v)
                .ok_or_else(|| EvalError::Unbound(match v.step {
                    StepTag::Curr => v.name.to_string(),
                    StepTag::Prev => format!("pre {}", v.name),
                }))?,
            TermKind::Not(a) => Value::Bool(!as_bool(a.eval(env)?)?),
            TermKind::And(xs) => {
                for x in xs {
                    if !as_bool(x.eval(env)?)? {
                        return Ok(Value::Bool(false));
                    }
                }
                Value::Bool(true)
            }
            TermKind::Or(xs) => {
                for x in xs {
                    if as_bool(x.eval(env)?)? {
                        return Ok(Value::Bool(true));
                    }
                }
                Value::Bool(false)
            }
            TermKind::Xor(a, b) => Value::Bool(as_bool(a.eval(env)?)? != as_bool(b.eval(env)?)?),
            TermKind::Implies(a, b) => {
                if !as_bool(a.eval(env)?)? {
                    Value::Bool(true)
                } else {
                    Value::Bool(as_bool(b.eval(env)?)?)
                }
            }
            TermKind::Ite(c, t, e) => {
                if as_bool(c.eval(env)?)? {
                    t.eval(env)?
                } else {
                    e.eval(env)?
                }
            }
            TermKind::Cmp(op, a, b) => {
                let (x, y) = (a.eval(env)?, b.eval(env)?);
                if x.sort() != y.sort() {
                    return Err(EvalError::IllSorted);
                }
                Value::Bool(match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Lt => x < y,
                    CmpOp::Le => x <= y,
                    CmpOp::Gt => x > y,
                    CmpOp::Ge => x >= y,
                })
            }
            TermKind::Add(a, b) => arith(a.eval(env)?, b.eval(env)?, |x, y| x + y, |x, y| x + y)?,
            TermKind::Sub(a, b) => arith(a.eval(env)?, b.eval(env)?, |x, y| x - y, |x, y| x - y)?,
            TermKind::Mul(a, b) => arith(a.eval(env)?, b.eval(env)?, |x, y| x * y, |x, y| x * y)?,
            TermKind::Neg(a) => match num(a.eval(env)?)? {
                Num::I(x) => Value::Int(-x),
                Num::R(x) => Value::Real(-x),
            },
            TermKind::Div(a, b) | TermKind::Mod(a, b) => {
                let (x, y) = match (num(a.eval(env)?)?, num(b.eval(env)?)?) {
                    (Num::I(x), Num::I(y)) => (x, y),
                    _ => return Err(EvalError::IllSorted),
                };
                if y == BigInt::from(0) {
                    return Err(EvalError::DivisionByZero);
                }
                if matches!(self.kind(), TermKind::Div(..)) {
                    Value::Int(euclid_div(&x, &y))
                } else {
                    Value::Int(euclid_mod(&x, &y))
                }
            }
            TermKind::RealDiv(a, b) => match (num(a.eval(env)?)?, num(b.eval(env)?)?) {
                (Num::R(x), Num::R(y)) => {
                    if y == BigRational::from_integer(0.into()) {
                        return Err(EvalError::DivisionByZero);
                    }
                    Value::Real(x / y)
                }
                _ => return Err(EvalError::IllSorted),
            },
        })
    }

    pub fn eval_bool(&self, env: &impl Env) -> Result<bool, EvalError> {
        as_bool(self.eval(env)?)
    }
}
