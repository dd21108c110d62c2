use std::fmt::Write;

use num_traits::Signed;

use super::ast::*;
use crate::term::{rational_to_decimal, CmpOp, StepTag, Term, TermKind, Value};

fn prec<A>(e: &Expr<A>) -> u8 {
    match &e.kind {
        ExprKind::Ite(..) | ExprKind::Arrow(..) => 1,
        ExprKind::Binary(op, ..) => match op {
            BinOp::Implies => 2,
            BinOp::Or | BinOp::Xor => 3,
            BinOp::And => 4,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Neq => 6,
            BinOp::Add | BinOp::Sub => 7,
            BinOp::Mul | BinOp::Div | BinOp::RealDiv | BinOp::Mod => 8,
        },
        ExprKind::Unary(UnOp::Not, _) => 5,
        ExprKind::Unary(UnOp::Neg, _) | ExprKind::Pre(_) => 9,
        ExprKind::Real(r) if rational_to_decimal(r).is_none() => 8,
        ExprKind::Int(i) if i.is_negative() => 9,
        ExprKind::Real(r) if r.is_negative() => 9,
        _ => 10,
    }
}

/// Minimum precedence of the left and right operands of a binary operator.
fn operand_prec(op: BinOp) -> (u8, u8) {
    match op {
        BinOp::Implies => (3, 2),
        BinOp::Or | BinOp::Xor => (3, 4),
        BinOp::And => (4, 5),
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Neq => (7, 7),
        BinOp::Add | BinOp::Sub => (7, 8),
        BinOp::Mul | BinOp::Div | BinOp::RealDiv | BinOp::Mod => (8, 9),
    }
}

fn write_expr<A>(out: &mut String, e: &Expr<A>, min: u8) {
    let paren = prec(e) < min;
    if paren {
        out.push('(');
    }
    match &e.kind {
        ExprKind::Bool(b) => write!(out, "{b}").unwrap(),
        ExprKind::Int(i) => write!(out, "{i}").unwrap(),
        ExprKind::Real(r) => match rational_to_decimal(r) {
            Some(d) => out.push_str(&d),
            None => {
                let sign = if r.is_negative() { "-" } else { "" };
                write!(out, "{sign}{}.0 / {}.0", r.numer().abs(), r.denom()).unwrap()
            }
        },
        ExprKind::Var(v) => out.push_str(v),
        ExprKind::Unary(UnOp::Not, a) => {
            out.push_str("not ");
            write_expr(out, a, 5);
        }
        ExprKind::Unary(UnOp::Neg, a) => {
            out.push('-');
            let mut inner = String::new();
            write_expr(&mut inner, a, 9);
            if inner.starts_with('-') {
                out.push(' ');
            }
            out.push_str(&inner);
        }
        ExprKind::Pre(a) => {
            out.push_str("pre ");
            write_expr(out, a, 9);
        }
        ExprKind::Binary(op, a, b) => {
            let (l, r) = operand_prec(*op);
            write_expr(out, a, l);
            write!(out, " {} ", op.symbol()).unwrap();
            write_expr(out, b, r);
        }
        ExprKind::Arrow(a, b) => {
            write_expr(out, a, 2);
            out.push_str(" -> ");
            write_expr(out, b, 1);
        }
        ExprKind::Ite(c, t, f) => {
            out.push_str("if ");
            write_expr(out, c, 1);
            out.push_str(" then ");
            write_expr(out, t, 1);
            out.push_str(" else ");
            write_expr(out, f, 1);
        }
        ExprKind::Call(name, args) => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, 1);
            }
            out.push(')');
        }
    }
    if paren {
        out.push(')');
    }
}

/// Renders an expression in concrete syntax with the minimal parentheses the
/// parser needs to rebuild the same tree.
pub fn print_expr<A>(e: &Expr<A>) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, 1);
    out
}

fn write_decls(out: &mut String, decls: &[VarDecl]) {
    for (i, d) in decls.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        write!(out, "{}: {}", d.name, d.sort).unwrap();
    }
}

pub fn print_program<A>(p: &Program<A>) -> String {
    let mut out = String::new();
    for (i, node) in p.nodes.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        write!(out, "node {}(", node.name).unwrap();
        write_decls(&mut out, &node.inputs);
        out.push_str(") returns (");
        write_decls(&mut out, &node.outputs);
        out.push_str(");\n");
        if !node.locals.is_empty() {
            out.push_str("var\n");
            for d in &node.locals {
                writeln!(out, "  {}: {};", d.name, d.sort).unwrap();
            }
        }
        out.push_str("let\n");
        for eq in &node.equations {
            writeln!(out, "  {} = {};", eq.lhs, print_expr(&eq.rhs)).unwrap();
        }
        for a in &node.assertions {
            writeln!(out, "  assert {};", print_expr(&a.expr)).unwrap();
        }
        for prop in &node.properties {
            writeln!(out, "  --%PROPERTY {};", prop.name).unwrap();
        }
        if node.main_pragma {
            out.push_str("  --%MAIN;\n");
        }
        out.push_str("tel\n");
    }
    out
}

/// Converts a term back to a source expression; previous-step references
/// become `pre v`.
pub fn term_to_expr(t: &Term) -> Expr {
    let mk = |kind| Expr {
        kind,
        span: Default::default(),
        ann: (),
    };
    let b = |t: &Term| Box::new(term_to_expr(t));
    let bin = |op, x: &Term, y: &Term| mk(ExprKind::Binary(op, b(x), b(y)));
    match t.kind() {
        TermKind::Const(Value::Bool(v)) => mk(ExprKind::Bool(*v)),
        TermKind::Const(Value::Int(i)) => mk(ExprKind::Int(i.clone())),
        TermKind::Const(Value::Real(r)) => mk(ExprKind::Real(r.clone())),
        TermKind::Var(v) => {
            let var = mk(ExprKind::Var(v.name.to_string()));
            match v.step {
                StepTag::Curr => var,
                StepTag::Prev => mk(ExprKind::Pre(Box::new(var))),
            }
        }
        TermKind::Not(a) => mk(ExprKind::Unary(UnOp::Not, b(a))),
        TermKind::Neg(a) => mk(ExprKind::Unary(UnOp::Neg, b(a))),
        TermKind::And(xs) | TermKind::Or(xs) => {
            let op = if matches!(t.kind(), TermKind::And(_)) {
                BinOp::And
            } else {
                BinOp::Or
            };
            let mut it = xs.iter();
            let first = term_to_expr(it.next().expect("junction has children"));
            it.fold(first, |acc, x| mk(ExprKind::Binary(op, Box::new(acc), b(x))))
        }
        TermKind::Xor(x, y) => bin(BinOp::Xor, x, y),
        TermKind::Implies(x, y) => bin(BinOp::Implies, x, y),
        TermKind::Ite(c, x, y) => mk(ExprKind::Ite(b(c), b(x), b(y))),
        TermKind::Cmp(op, x, y) => {
            let op = match op {
                CmpOp::Eq => BinOp::Eq,
                CmpOp::Lt => BinOp::Lt,
                CmpOp::Le => BinOp::Le,
                CmpOp::Gt => BinOp::Gt,
                CmpOp::Ge => BinOp::Ge,
            };
            bin(op, x, y)
        }
        TermKind::Add(x, y) => bin(BinOp::Add, x, y),
        TermKind::Sub(x, y) => bin(BinOp::Sub, x, y),
        TermKind::Mul(x, y) => bin(BinOp::Mul, x, y),
        TermKind::Div(x, y) => bin(BinOp::Div, x, y),
        TermKind::Mod(x, y) => bin(BinOp::Mod, x, y),
        TermKind::RealDiv(x, y) => bin(BinOp::RealDiv, x, y),
    }
}

/// A term in concrete Lustre syntax.
pub fn print_term(t: &Term) -> String {
    print_expr(&term_to_expr(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{lex, parse, parse_expr_tokens};
    use crate::term::Sort;

    fn roundtrip(src: &str) -> String {
        let e = parse_expr_tokens(&lex(src).unwrap()).unwrap();
        print_expr(&e)
    }

    #[test]
    fn minimal_parentheses() {
        assert_eq!(roundtrip("((x + 1))"), "x + 1");
        assert_eq!(roundtrip("(a + b) * c"), "(a + b) * c");
        assert_eq!(roundtrip("a - (b - c)"), "a - (b - c)");
        assert_eq!(roundtrip("0 -> (pre x) + 1"), "0 -> pre x + 1");
        assert_eq!(roundtrip("(if c then 1 else 2) + 3"), "(if c then 1 else 2) + 3");
        assert_eq!(roundtrip("(a -> b) -> c"), "(a -> b) -> c");
        assert_eq!(roundtrip("not (a and b)"), "not (a and b)");
        assert_eq!(roundtrip("x - (-1)"), "x - -1");
        assert_eq!(roundtrip("-(-x)"), "- -x");
        assert_eq!(roundtrip("pre (a + b)"), "pre (a + b)");
        assert_eq!(roundtrip("(a => b) => c"), "(a => b) => c");
        assert_eq!(roundtrip("(not a) = b"), "(not a) = b");
    }

    #[test]
    fn program_roundtrip() {
        let src = "node f(a: int) returns (y: int); let y = a + 1; tel
node main(reset: bool) returns (ok: bool);
var x: int;
let
  x = if reset then 0 else (0 -> pre x + 1);
  ok = f(x) > 0;
  assert not reset;
  --%PROPERTY ok;
tel";
        let mut p1 = parse(&lex(src).unwrap()).unwrap();
        let printed = print_program(&p1);
        let mut p2 = parse(&lex(&printed).unwrap()).unwrap();
        p1.erase_spans();
        p2.erase_spans();
        assert_eq!(p1, p2);
    }

    #[test]
    fn terms_print_as_lustre() {
        let x = Term::var("main.f1.x", Sort::Int);
        let t = Term::mk_le(x.clone(), Term::mk_plus(Term::prev("y", Sort::Int), Term::int(-3)).unwrap()).unwrap();
        assert_eq!(print_term(&t), "main.f1.x <= pre y + -3");
        let r = Term::constant(Value::real(1, 3));
        let t = Term::mk_ge(Term::var("r", Sort::Real), r).unwrap();
        assert_eq!(print_term(&t), "r >= 1.0 / 3.0");
        let t = Term::mk_ge(Term::var("r", Sort::Real), Term::constant(Value::real(-5, 2))).unwrap();
        assert_eq!(print_term(&t), "r >= -2.5");
    }
}
