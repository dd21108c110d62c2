use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use super::{StepTag, Term, TermKind, Value};

fn is_simple_symbol(s: &str) -> bool {
    const EXTRA: &str = "~!@$%^&*_-+=<>.?/";
    !s.is_empty()
        && !s.starts_with(|c: char| c.is_ascii_digit())
        && s.chars().all(|c| c.is_ascii_alphanumeric() || EXTRA.contains(c))
}

/// Wraps a symbol in `|...|` unless it is already a simple SMT-LIB symbol.
pub fn quote_symbol(s: &str) -> String {
    if is_simple_symbol(s) {
        s.to_string()
    } else {
        format!("|{s}|")
    }
}

/// The solver symbol for variable `name` at unrolling step `step`.
pub fn indexed_symbol(name: &str, step: i64) -> String {
    quote_symbol(&format!("{name}${step}"))
}

fn write_int(f: &mut fmt::Formatter<'_>, i: &BigInt) -> fmt::Result {
    if i.is_negative() {
        write!(f, "(- {})", i.abs())
    } else {
        write!(f, "{i}")
    }
}

fn write_real(f: &mut fmt::Formatter<'_>, r: &BigRational) -> fmt::Result {
    let neg = r.is_negative();
    let a = r.abs();
    if neg {
        f.write_str("(- ")?;
    }
    if a.denom().is_one() {
        write!(f, "{}.0", a.numer())?;
    } else {
        write!(f, "(/ {}.0 {}.0)", a.numer(), a.denom())?;
    }
    if neg {
        f.write_str(")")?;
    }
    Ok(())
}

impl Value {
    pub fn to_smt(&self) -> String {
        struct V<'a>(&'a Value);
        impl fmt::Display for V<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                match self.0 {
                    Value::Bool(b) => write!(f, "{b}"),
                    Value::Int(i) => write_int(f, i),
                    Value::Real(r) => write_real(f, r),
                }
            }
        }
        V(self).to_string()
    }
}

/// A term instantiated at a concrete step: current-step variables become
/// `name$step`, previous-step variables `name$(step-1)`.
pub struct Stepped<'a> {
    term: &'a Term,
    step: i64,
}

impl Term {
    pub fn at(&self, step: i64) -> Stepped<'_> {
        Stepped { term: self, step }
    }

    pub fn to_smt(&self, step: i64) -> String {
        self.at(step).to_string()
    }
}

impl Stepped<'_> {
    fn write(&self, t: &Term, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let app = |f: &mut fmt::Formatter<'_>, op: &str, args: &[&Term]| -> fmt::Result {
            write!(f, "({op}")?;
            for a in args {
                f.write_str(" ")?;
                self.write(a, f)?;
            }
            f.write_str(")")
        };
        match t.kind() {
            TermKind::Const(v) => match v {
                Value::Bool(b) => write!(f, "{b}"),
                Value::Int(i) => write_int(f, i),
                Value::Real(r) => write_real(f, r),
            },
            TermKind::Var(v) => {
                let step = match v.step {
                    StepTag::Curr => self.step,
                    StepTag::Prev => self.step - 1,
                };
                f.write_str(&indexed_symbol(&v.name, step))
            }
            TermKind::Not(a) => app(f, "not", &[a]),
            TermKind::And(xs) => app(f, "and", &xs.iter().collect::<Vec<_>>()),
            TermKind::Or(xs) => app(f, "or", &xs.iter().collect::<Vec<_>>()),
            TermKind::Xor(a, b) => app(f, "xor", &[a, b]),
            TermKind::Implies(a, b) => app(f, "=>", &[a, b]),
            TermKind::Ite(c, a, b) => app(f, "ite", &[c, a, b]),
            TermKind::Cmp(op, a, b) => app(f, op.symbol(), &[a, b]),
            TermKind::Add(a, b) => app(f, "+", &[a, b]),
            TermKind::Sub(a, b) => app(f, "-", &[a, b]),
            TermKind::Neg(a) => app(f, "-", &[a]),
            TermKind::Mul(a, b) => app(f, "*", &[a, b]),
            TermKind::Div(a, b) => app(f, "div", &[a, b]),
            TermKind::Mod(a, b) => app(f, "mod", &[a, b]),
            TermKind::RealDiv(a, b) => app(f, "/", &[a, b]),
        }
    }
}

impl fmt::Display for Stepped<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.term, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Sort;

    #[test]
    fn symbols() {
        assert_eq!(indexed_symbol("x", 3), "x$3");
        assert_eq!(indexed_symbol("main.f1.x", -1), "main.f1.x$-1");
        assert_eq!(indexed_symbol("%init", 0), "%init$0");
        assert_eq!(quote_symbol("a b"), "|a b|");
        assert_eq!(quote_symbol("1x"), "|1x|");
    }

    #[test]
    fn prints_steps() {
        let t = Term::mk_eq(
            Term::var("x", Sort::Int),
            Term::mk_plus(Term::prev("x", Sort::Int), Term::int(-2)).unwrap(),
        )
        .unwrap();
        assert_eq!(t.to_smt(0), "(= x$0 (+ x$-1 (- 2)))");
        assert_eq!(t.to_smt(5), "(= x$5 (+ x$4 (- 2)))");
    }

    #[test]
    fn prints_reals() {
        assert_eq!(Value::real(3, 2).to_smt(), "(/ 3.0 2.0)");
        assert_eq!(Value::real(-1, 3).to_smt(), "(- (/ 1.0 3.0))");
        assert_eq!(Value::real(4, 1).to_smt(), "4.0");
        assert_eq!(Value::real(-4, 1).to_smt(), "(- 4.0)");
    }
}
