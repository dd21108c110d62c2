use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;

use crate::term::{parse_decimal, Sort, Value};

/// A parsed solver response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(xs) => Some(xs),
            Sexp::Atom(_) => None,
        }
    }

    /// Symbol text with `|...|` quoting removed.
    pub fn symbol(&self) -> Option<&str> {
        self.as_atom()
            .map(|a| a.strip_prefix('|').and_then(|s| s.strip_suffix('|')).unwrap_or(a))
    }

    /// Interprets a model value: `true`, `3`, `(- 3)`, `2.5`, `(/ 1.0 3.0)`,
    /// `(- (/ 1 3))`.
    pub fn to_value(&self, sort: Sort) -> Option<Value> {
        if sort == Sort::Bool {
            return match self.as_atom()? {
                "true" => Some(Value::Bool(true)),
                "false" => Some(Value::Bool(false)),
                _ => None,
            };
        }
        let r = self.to_rational()?;
        match sort {
            Sort::Int if r.is_integer() => Some(Value::Int(r.to_integer())),
            Sort::Int => None,
            _ => Some(Value::Real(r)),
        }
    }

    fn to_rational(&self) -> Option<BigRational> {
        match self {
            Sexp::Atom(a) => parse_decimal(a),
            Sexp::List(xs) => match xs.first()?.as_atom()? {
                "-" if xs.len() == 2 => Some(-xs[1].to_rational()?),
                "-" if xs.len() == 3 => Some(xs[1].to_rational()? - xs[2].to_rational()?),
                "+" if xs.len() >= 2 => xs[1..].iter().map(|x| x.to_rational()).sum(),
                "/" if xs.len() == 3 => {
                    let d = xs[2].to_rational()?;
                    if d.is_zero() {
                        return None;
                    }
                    Some(xs[1].to_rational()? / d)
                }
                "to_real" if xs.len() == 2 => xs[1].to_rational(),
                _ => None,
            },
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a) => f.write_str(a),
            Sexp::List(xs) => {
                f.write_str("(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Incremental parser: feed bytes, collect complete top-level expressions.
#[derive(Debug, Default)]
pub struct SexpReader {
    stack: Vec<Vec<Sexp>>,
    atom: String,
    in_string: bool,
    in_quoted: bool,
    in_comment: bool,
}

impl SexpReader {
    pub fn new() -> Self {
        Self::default()
    }

    fn finish_atom(&mut self, out: &mut Vec<Sexp>) {
        if self.atom.is_empty() {
            return;
        }
        let atom = Sexp::Atom(std::mem::take(&mut self.atom));
        match self.stack.last_mut() {
            Some(top) => top.push(atom),
            None => out.push(atom),
        }
    }

    /// Consumes one character; completed expressions are appended to `out`.
    pub fn push(&mut self, c: char, out: &mut Vec<Sexp>) -> Result<(), String> {
        if self.in_comment {
            if c == '\n' {
                self.in_comment = false;
            }
            return Ok(());
        }
        if self.in_string {
            self.atom.push(c);
            if c == '"' {
                self.in_string = false;
            }
            return Ok(());
        }
        if self.in_quoted {
            self.atom.push(c);
            if c == '|' {
                self.in_quoted = false;
            }
            return Ok(());
        }
        match c {
            '(' => {
                self.finish_atom(out);
                self.stack.push(Vec::new());
            }
            ')' => {
                self.finish_atom(out);
                let list = Sexp::List(self.stack.pop().ok_or("unbalanced `)`")?);
                match self.stack.last_mut() {
                    Some(top) => top.push(list),
                    None => out.push(list),
                }
            }
            ';' => {
                self.finish_atom(out);
                self.in_comment = true;
            }
            '"' => {
                self.atom.push(c);
                self.in_string = true;
            }
            '|' => {
                self.atom.push(c);
                self.in_quoted = true;
            }
            c if c.is_whitespace() => self.finish_atom(out),
            c => self.atom.push(c),
        }
        Ok(())
    }

    /// Whether a bare atom is pending at top level (completed by whitespace).
    pub fn is_idle(&self) -> bool {
        self.stack.is_empty() && !self.in_string && !self.in_quoted
    }
}

/// Parses a complete text into its top-level expressions.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>, String> {
    let mut r = SexpReader::new();
    let mut out = Vec::new();
    for c in text.chars() {
        r.push(c, &mut out)?;
    }
    r.push('\n', &mut out)?;
    if !r.stack.is_empty() {
        return Err("unbalanced `(`".into());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_models() {
        let xs = parse_all("sat\n((x$0 3) (|a b$1| (- 2)) (r$0 (/ 1.0 3.0)))\n").unwrap();
        assert_eq!(xs[0], Sexp::Atom("sat".into()));
        let pairs = xs[1].as_list().unwrap();
        assert_eq!(pairs[0].as_list().unwrap()[1].to_value(Sort::Int), Some(Value::int(3)));
        assert_eq!(pairs[1].as_list().unwrap()[0].symbol(), Some("a b$1"));
        assert_eq!(pairs[1].as_list().unwrap()[1].to_value(Sort::Int), Some(Value::int(-2)));
        assert_eq!(pairs[2].as_list().unwrap()[1].to_value(Sort::Real), Some(Value::real(1, 3)));
    }

    #[test]
    fn value_forms() {
        let v = |s: &str, sort| parse_all(s).unwrap()[0].to_value(sort);
        assert_eq!(v("(- (/ 1.0 3.0))", Sort::Real), Some(Value::real(-1, 3)));
        assert_eq!(v("(/ (- 1.0) 4.0)", Sort::Real), Some(Value::real(-1, 4)));
        assert_eq!(v("2.5", Sort::Real), Some(Value::real(5, 2)));
        assert_eq!(v("7.0", Sort::Real), Some(Value::real(7, 1)));
        assert_eq!(v("false", Sort::Bool), Some(Value::Bool(false)));
        assert_eq!(v("2.5", Sort::Int), None);
    }

    #[test]
    fn strings_and_errors() {
        let xs = parse_all("(error \"line 3: unknown (constant)\")").unwrap();
        assert_eq!(xs[0].as_list().unwrap()[0].as_atom(), Some("error"));
        assert!(parse_all("(a (b)").is_err());
    }
}
