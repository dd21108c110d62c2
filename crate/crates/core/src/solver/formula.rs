use std::collections::BTreeMap;

use crate::term::{indexed_symbol, quote_symbol, Sort, StepTag, Term};

/// SMT-LIB text together with the constants it mentions, so that a session
/// can declare them before use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    pub text: String,
    pub symbols: BTreeMap<String, Sort>,
}

impl Formula {
    /// A term instantiated at `step`.
    pub fn at(term: &Term, step: i64) -> Formula {
        let symbols = term
            .vars()
            .into_iter()
            .map(|v| {
                let s = match v.step {
                    StepTag::Curr => step,
                    StepTag::Prev => step - 1,
                };
                (indexed_symbol(&v.name, s), v.sort)
            })
            .collect();
        Formula {
            text: term.to_smt(step),
            symbols,
        }
    }

    /// A plain constant, such as an activation literal.
    pub fn symbol(name: &str, sort: Sort) -> Formula {
        let sym = quote_symbol(name);
        Formula {
            text: sym.clone(),
            symbols: [(sym, sort)].into_iter().collect(),
        }
    }

    /// The constant for variable `name` at `step`.
    pub fn indexed(name: &str, step: i64, sort: Sort) -> Formula {
        let sym = indexed_symbol(name, step);
        Formula {
            text: sym.clone(),
            symbols: [(sym, sort)].into_iter().collect(),
        }
    }

    pub fn bool(b: bool) -> Formula {
        Formula {
            text: b.to_string(),
            symbols: BTreeMap::new(),
        }
    }

    fn app(op: &str, args: Vec<Formula>) -> Formula {
        let mut symbols = BTreeMap::new();
        let mut text = format!("({op}");
        for a in args {
            text.push(' ');
            text.push_str(&a.text);
            symbols.extend(a.symbols);
        }
        text.push(')');
        Formula { text, symbols }
    }

    pub fn not(self) -> Formula {
        Formula::app("not", vec![self])
    }

    pub fn and(args: Vec<Formula>) -> Formula {
        match args.len() {
            0 => Formula::bool(true),
            1 => args.into_iter().next().unwrap(),
            _ => Formula::app("and", args),
        }
    }

    pub fn or(args: Vec<Formula>) -> Formula {
        match args.len() {
            0 => Formula::bool(false),
            1 => args.into_iter().next().unwrap(),
            _ => Formula::app("or", args),
        }
    }

    pub fn implies(self, then: Formula) -> Formula {
        Formula::app("=>", vec![self, then])
    }

    pub fn eq(self, other: Formula) -> Formula {
        Formula::app("=", vec![self, other])
    }

    pub fn ite(self, t: Formula, e: Formula) -> Formula {
        Formula::app("ite", vec![self, t, e])
    }

    pub fn distinct(self, other: Formula) -> Formula {
        Formula::app("distinct", vec![self, other])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collects_symbols() {
        let t = Term::mk_ge(Term::var("x", Sort::Int), Term::prev("x", Sort::Int)).unwrap();
        let f = Formula::symbol("%act.x", Sort::Bool).implies(Formula::at(&t, 2));
        assert_eq!(f.text, "(=> %act.x (>= x$2 x$1))");
        let syms: Vec<&str> = f.symbols.keys().map(|s| s.as_str()).collect();
        assert_eq!(syms, ["%act.x", "x$1", "x$2"]);
    }
}
