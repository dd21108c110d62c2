//! Sorted first-order terms over booleans, integers and reals.
//!
//! Terms are immutable and reference counted, so sharing them between engine
//! threads is cheap. Every constructor checks sorts and the linearity rules and
//! performs only light normalization: folding of fully constant nodes, flattening
//! of `and`/`or` with their unit and absorbing elements, and double negation
//! elimination.

mod eval;
mod smtlib;
mod value;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use eval::{Env, EvalError, StepEnv, Valuation};
pub use smtlib::{indexed_symbol, quote_symbol, Stepped};
pub use value::{euclid_div, euclid_mod, parse_decimal, parse_rational, rational_to_decimal, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sort {
    Bool,
    Int,
    Real,
}

impl Sort {
    pub fn is_numeric(self) -> bool {
        matches!(self, Sort::Int | Sort::Real)
    }

    pub fn smt_name(self) -> &'static str {
        match self {
            Sort::Bool => "Bool",
            Sort::Int => "Int",
            Sort::Real => "Real",
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Bool => "bool",
            Sort::Int => "int",
            Sort::Real => "real",
        })
    }
}

/// Whether a variable reference reads the current or the previous step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepTag {
    Curr,
    Prev,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarRef {
    pub name: Arc<str>,
    pub sort: Sort,
    pub step: StepTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermKind {
    Const(Value),
    Var(VarRef),
    Not(Term),
    And(Vec<Term>),
    Or(Vec<Term>),
    Xor(Term, Term),
    Implies(Term, Term),
    Ite(Term, Term, Term),
    Cmp(CmpOp, Term, Term),
    Add(Term, Term),
    Sub(Term, Term),
    Neg(Term),
    Mul(Term, Term),
    /// Integer division, Euclidean.
    Div(Term, Term),
    /// Integer remainder, Euclidean.
    Mod(Term, Term),
    /// Real division by a constant.
    RealDiv(Term, Term),
}

#[derive(Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Node {
    kind: TermKind,
    sort: Sort,
}

/// A sort-correct term. Structural equality and ordering are derived, which is
/// what invariant deduplication relies on.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term(Arc<Node>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("sort mismatch in `{op}`: expected {expected}, found {found}")]
    Sort {
        op: &'static str,
        expected: String,
        found: String,
    },
    #[error("nonlinear `{0}`: one operand must be a constant")]
    Nonlinear(&'static str),
    #[error("`{0}` requires a nonzero constant divisor")]
    Divisor(&'static str),
}

pub type TermResult = Result<Term, TermError>;

fn sort_err(op: &'static str, expected: impl fmt::Display, found: impl fmt::Display) -> TermError {
    TermError::Sort {
        op,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

impl Term {
    fn new(kind: TermKind, sort: Sort) -> Term {
        Term(Arc::new(Node { kind, sort }))
    }

    pub fn kind(&self) -> &TermKind {
        &self.0.kind
    }

    pub fn sort(&self) -> Sort {
        self.0.sort
    }

    pub fn constant(value: Value) -> Term {
        let sort = value.sort();
        Term::new(TermKind::Const(value), sort)
    }

    pub fn bool(b: bool) -> Term {
        Term::constant(Value::Bool(b))
    }

    pub fn int(i: i64) -> Term {
        Term::constant(Value::int(i))
    }

    pub fn real(r: BigRational) -> Term {
        Term::constant(Value::Real(r))
    }

    pub fn var(name: &str, sort: Sort) -> Term {
        Term::new(
            TermKind::Var(VarRef {
                name: name.into(),
                sort,
                step: StepTag::Curr,
            }),
            sort,
        )
    }

    pub fn prev(name: &str, sort: Sort) -> Term {
        Term::new(
            TermKind::Var(VarRef {
                name: name.into(),
                sort,
                step: StepTag::Prev,
            }),
            sort,
        )
    }

    pub fn as_const(&self) -> Option<&Value> {
        match self.kind() {
            TermKind::Const(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool_const(&self) -> Option<bool> {
        self.as_const().and_then(Value::as_bool)
    }

    pub fn as_var(&self) -> Option<&VarRef> {
        match self.kind() {
            TermKind::Var(v) => Some(v),
            _ => None,
        }
    }

    fn expect_bool(&self, op: &'static str) -> Result<(), TermError> {
        if self.sort() == Sort::Bool {
            Ok(())
        } else {
            Err(sort_err(op, Sort::Bool, self.sort()))
        }
    }

    fn expect_numeric_pair(op: &'static str, a: &Term, b: &Term) -> Result<Sort, TermError> {
        if !a.sort().is_numeric() {
            return Err(sort_err(op, "int or real", a.sort()));
        }
        if a.sort() != b.sort() {
            return Err(sort_err(op, a.sort(), b.sort()));
        }
        Ok(a.sort())
    }

    /// Folds a node whose children are all constants by evaluating it.
    fn fold(kind: TermKind, sort: Sort) -> Term {
        let all_const = match &kind {
            TermKind::Const(_) | TermKind::Var(_) => false,
            TermKind::Not(a) | TermKind::Neg(a) => a.as_const().is_some(),
            TermKind::And(xs) | TermKind::Or(xs) => xs.iter().all(|x| x.as_const().is_some()),
            TermKind::Xor(a, b)
            | TermKind::Implies(a, b)
            | TermKind::Cmp(_, a, b)
            | TermKind::Add(a, b)
            | TermKind::Sub(a, b)
            | TermKind::Mul(a, b)
            | TermKind::Div(a, b)
            | TermKind::Mod(a, b)
            | TermKind::RealDiv(a, b) => a.as_const().is_some() && b.as_const().is_some(),
            TermKind::Ite(c, t, e) => {
                c.as_const().is_some() && t.as_const().is_some() && e.as_const().is_some()
            }
        };
        let term = Term::new(kind, sort);
        if all_const {
            let empty = Valuation::new();
            if let Ok(v) = term.eval(&empty) {
                return Term::constant(v);
            }
        }
        term
    }

    pub fn mk_not(a: Term) -> TermResult {
        a.expect_bool("not")?;
        if let TermKind::Not(inner) = a.kind() {
            return Ok(inner.clone());
        }
        Ok(Term::fold(TermKind::Not(a), Sort::Bool))
    }

    pub fn mk_and(children: Vec<Term>) -> TermResult {
        Term::mk_junction(children, true)
    }

    pub fn mk_or(children: Vec<Term>) -> TermResult {
        Term::mk_junction(children, false)
    }

    fn mk_junction(children: Vec<Term>, is_and: bool) -> TermResult {
        let op = if is_and { "and" } else { "or" };
        let mut flat = Vec::with_capacity(children.len());
        for child in children {
            child.expect_bool(op)?;
            match (child.kind(), is_and) {
                (TermKind::And(xs), true) | (TermKind::Or(xs), false) => flat.extend(xs.iter().cloned()),
                (TermKind::Const(Value::Bool(b)), _) => {
                    // unit element vanishes, absorbing element wins
                    if *b != is_and {
                        return Ok(Term::bool(!is_and));
                    }
                }
                _ => flat.push(child),
            }
        }
        Ok(match flat.len() {
            0 => Term::bool(is_and),
            1 => flat.pop().unwrap(),
            _ => Term::new(
                if is_and {
                    TermKind::And(flat)
                } else {
                    TermKind::Or(flat)
                },
                Sort::Bool,
            ),
        })
    }

    pub fn mk_xor(a: Term, b: Term) -> TermResult {
        a.expect_bool("xor")?;
        b.expect_bool("xor")?;
        Ok(Term::fold(TermKind::Xor(a, b), Sort::Bool))
    }

    pub fn mk_implies(a: Term, b: Term) -> TermResult {
        a.expect_bool("=>")?;
        b.expect_bool("=>")?;
        Ok(Term::fold(TermKind::Implies(a, b), Sort::Bool))
    }

    pub fn mk_ite(c: Term, t: Term, e: Term) -> TermResult {
        c.expect_bool("ite")?;
        if t.sort() != e.sort() {
            return Err(sort_err("ite", t.sort(), e.sort()));
        }
        let sort = t.sort();
        Ok(Term::fold(TermKind::Ite(c, t, e), sort))
    }

    pub fn mk_cmp(op: CmpOp, a: Term, b: Term) -> TermResult {
        if op == CmpOp::Eq {
            if a.sort() != b.sort() {
                return Err(sort_err("=", a.sort(), b.sort()));
            }
        } else {
            Term::expect_numeric_pair(op.symbol(), &a, &b)?;
        }
        Ok(Term::fold(TermKind::Cmp(op, a, b), Sort::Bool))
    }

    pub fn mk_eq(a: Term, b: Term) -> TermResult {
        Term::mk_cmp(CmpOp::Eq, a, b)
    }

    pub fn mk_neq(a: Term, b: Term) -> TermResult {
        Term::mk_not(Term::mk_eq(a, b)?)
    }

    pub fn mk_le(a: Term, b: Term) -> TermResult {
        Term::mk_cmp(CmpOp::Le, a, b)
    }

    pub fn mk_ge(a: Term, b: Term) -> TermResult {
        Term::mk_cmp(CmpOp::Ge, a, b)
    }

    pub fn mk_lt(a: Term, b: Term) -> TermResult {
        Term::mk_cmp(CmpOp::Lt, a, b)
    }

    pub fn mk_gt(a: Term, b: Term) -> TermResult {
        Term::mk_cmp(CmpOp::Gt, a, b)
    }

    pub fn mk_plus(a: Term, b: Term) -> TermResult {
        let sort = Term::expect_numeric_pair("+", &a, &b)?;
        Ok(Term::fold(TermKind::Add(a, b), sort))
    }

    pub fn mk_minus(a: Term, b: Term) -> TermResult {
        let sort = Term::expect_numeric_pair("-", &a, &b)?;
        Ok(Term::fold(TermKind::Sub(a, b), sort))
    }

    pub fn mk_neg(a: Term) -> TermResult {
        if !a.sort().is_numeric() {
            return Err(sort_err("-", "int or real", a.sort()));
        }
        let sort = a.sort();
        Ok(Term::fold(TermKind::Neg(a), sort))
    }

    pub fn mk_mul(a: Term, b: Term) -> TermResult {
        let sort = Term::expect_numeric_pair("*", &a, &b)?;
        if a.as_const().is_none() && b.as_const().is_none() {
            return Err(TermError::Nonlinear("*"));
        }
        Ok(Term::fold(TermKind::Mul(a, b), sort))
    }

    fn check_divisor(op: &'static str, b: &Term) -> Result<(), TermError> {
        match b.as_const() {
            Some(v) if !v.is_zero() => Ok(()),
            _ => Err(TermError::Divisor(op)),
        }
    }

    pub fn mk_div(a: Term, b: Term) -> TermResult {
        if a.sort() != Sort::Int || b.sort() != Sort::Int {
            return Err(sort_err("div", Sort::Int, if a.sort() != Sort::Int { a.sort() } else { b.sort() }));
        }
        Term::check_divisor("div", &b)?;
        Ok(Term::fold(TermKind::Div(a, b), Sort::Int))
    }

    pub fn mk_mod(a: Term, b: Term) -> TermResult {
        if a.sort() != Sort::Int || b.sort() != Sort::Int {
            return Err(sort_err("mod", Sort::Int, if a.sort() != Sort::Int { a.sort() } else { b.sort() }));
        }
        Term::check_divisor("mod", &b)?;
        Ok(Term::fold(TermKind::Mod(a, b), Sort::Int))
    }

    pub fn mk_real_div(a: Term, b: Term) -> TermResult {
        if a.sort() != Sort::Real || b.sort() != Sort::Real {
            return Err(sort_err("/", Sort::Real, if a.sort() != Sort::Real { a.sort() } else { b.sort() }));
        }
        Term::check_divisor("/", &b)?;
        Ok(Term::fold(TermKind::RealDiv(a, b), Sort::Real))
    }

    /// Negation for terms already known to be boolean.
    pub fn negate(&self) -> Term {
        Term::mk_not(self.clone()).expect("negate: boolean term")
    }

    /// Conjunction of terms already known to be boolean.
    pub fn conjoin(terms: impl IntoIterator<Item = Term>) -> Term {
        Term::mk_and(terms.into_iter().collect()).expect("conjoin: boolean terms")
    }

    pub fn disjoin(terms: impl IntoIterator<Item = Term>) -> Term {
        Term::mk_or(terms.into_iter().collect()).expect("disjoin: boolean terms")
    }

    pub fn children(&self) -> Vec<&Term> {
        match self.kind() {
            TermKind::Const(_) | TermKind::Var(_) => vec![],
            TermKind::Not(a) | TermKind::Neg(a) => vec![a],
            TermKind::And(xs) | TermKind::Or(xs) => xs.iter().collect(),
            TermKind::Xor(a, b)
            | TermKind::Implies(a, b)
            | TermKind::Cmp(_, a, b)
            | TermKind::Add(a, b)
            | TermKind::Sub(a, b)
            | TermKind::Mul(a, b)
            | TermKind::Div(a, b)
            | TermKind::Mod(a, b)
            | TermKind::RealDiv(a, b) => vec![a, b],
            TermKind::Ite(c, t, e) => vec![c, t, e],
        }
    }

    /// Every variable occurrence, deduplicated.
    pub fn vars(&self) -> BTreeSet<VarRef> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarRef>) {
        if let TermKind::Var(v) = self.kind() {
            out.insert(v.clone());
        }
        for c in self.children() {
            c.collect_vars(out);
        }
    }

    pub fn has_prev(&self) -> bool {
        self.vars().iter().any(|v| v.step == StepTag::Prev)
    }

    /// Every constant occurring in the term.
    pub fn constants(&self, out: &mut BTreeSet<Value>) {
        if let TermKind::Const(v) = self.kind() {
            out.insert(v.clone());
        }
        for c in self.children() {
            c.constants(out);
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Rebuilds the term bottom-up, replacing variables through `f`. The
    /// replacement must preserve sorts.
    pub fn map_vars(&self, f: &mut impl FnMut(&VarRef) -> Term) -> TermResult {
        let kids: Vec<Term> = self
            .children()
            .into_iter()
            .map(|c| c.map_vars(f))
            .collect::<Result<_, _>>()?;
        let k = |i: usize| kids[i].clone();
        match self.kind() {
            TermKind::Const(_) => Ok(self.clone()),
            TermKind::Var(v) => Ok(f(v)),
            TermKind::Not(_) => Term::mk_not(k(0)),
            TermKind::And(_) => Term::mk_and(kids.clone()),
            TermKind::Or(_) => Term::mk_or(kids.clone()),
            TermKind::Xor(..) => Term::mk_xor(k(0), k(1)),
            TermKind::Implies(..) => Term::mk_implies(k(0), k(1)),
            TermKind::Ite(..) => Term::mk_ite(k(0), k(1), k(2)),
            TermKind::Cmp(op, ..) => Term::mk_cmp(*op, k(0), k(1)),
            TermKind::Add(..) => Term::mk_plus(k(0), k(1)),
            TermKind::Sub(..) => Term::mk_minus(k(0), k(1)),
            TermKind::Neg(_) => Term::mk_neg(k(0)),
            TermKind::Mul(..) => Term::mk_mul(k(0), k(1)),
            TermKind::Div(..) => Term::mk_div(k(0), k(1)),
            TermKind::Mod(..) => Term::mk_mod(k(0), k(1)),
            TermKind::RealDiv(..) => Term::mk_real_div(k(0), k(1)),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.at(0))
    }
}

/// Shows the term in SMT-LIB form with current-step symbols at index 0.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.at(0))
    }
}
