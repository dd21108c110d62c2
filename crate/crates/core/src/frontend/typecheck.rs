use std::collections::{BTreeMap, HashMap, HashSet};

use super::ast::*;
use super::{FrontendError, Span};
use crate::term::{Sort, Term, Value};

type TResult<T> = Result<T, FrontendError>;

fn type_err<T>(span: Span, message: impl Into<String>) -> TResult<T> {
    Err(FrontendError::Type {
        span,
        message: message.into(),
    })
}

fn lin_err<T>(span: Span, message: impl Into<String>) -> TResult<T> {
    Err(FrontendError::Linearity {
        span,
        message: message.into(),
    })
}

/// Value of an expression built only from literals and arithmetic, if any.
pub(crate) fn const_value(e: &TypedExpr) -> Option<Value> {
    fn go(e: &TypedExpr) -> Option<Term> {
        let t = match &e.kind {
            ExprKind::Bool(b) => Term::bool(*b),
            ExprKind::Int(i) => Term::constant(Value::Int(i.clone())),
            ExprKind::Real(r) => Term::constant(Value::Real(r.clone())),
            ExprKind::Unary(UnOp::Neg, a) => Term::mk_neg(go(a)?).ok()?,
            ExprKind::Binary(op, a, b) => {
                let (a, b) = (go(a)?, go(b)?);
                match op {
                    BinOp::Add => Term::mk_plus(a, b),
                    BinOp::Sub => Term::mk_minus(a, b),
                    BinOp::Mul => Term::mk_mul(a, b),
                    BinOp::Div => Term::mk_div(a, b),
                    BinOp::Mod => Term::mk_mod(a, b),
                    BinOp::RealDiv => Term::mk_real_div(a, b),
                    _ => return None,
                }
                .ok()?
            }
            _ => return None,
        };
        t.as_const().is_some().then_some(t)
    }
    go(e).and_then(|t| t.as_const().cloned())
}

struct Checker<'a> {
    vars: &'a dyn Fn(&str) -> Option<Sort>,
    program: Option<&'a Program>,
    allow_temporal: bool,
}

impl Checker<'_> {
    fn expr(&self, e: &Expr) -> TResult<TypedExpr> {
        let span = e.span;
        let (kind, sort) = match &e.kind {
            ExprKind::Bool(b) => (ExprKind::Bool(*b), Sort::Bool),
            ExprKind::Int(i) => (ExprKind::Int(i.clone()), Sort::Int),
            ExprKind::Real(r) => (ExprKind::Real(r.clone()), Sort::Real),
            ExprKind::Var(v) => match (self.vars)(v) {
                Some(sort) => (ExprKind::Var(v.clone()), sort),
                None => return type_err(span, format!("undeclared variable `{v}`")),
            },
            ExprKind::Unary(op, a) => {
                let a = self.expr(a)?;
                let sort = match op {
                    UnOp::Not if a.ann == Sort::Bool => Sort::Bool,
                    UnOp::Neg if a.ann.is_numeric() => a.ann,
                    UnOp::Not => return type_err(span, format!("`not` expects bool, found {}", a.ann)),
                    UnOp::Neg => return type_err(span, format!("`-` expects int or real, found {}", a.ann)),
                };
                (ExprKind::Unary(*op, Box::new(a)), sort)
            }
            ExprKind::Binary(op, a, b) => {
                let (a, b) = (self.expr(a)?, self.expr(b)?);
                let sort = self.binary(*op, &a, &b, span)?;
                (ExprKind::Binary(*op, Box::new(a), Box::new(b)), sort)
            }
            ExprKind::Ite(c, t, f) => {
                let (c, t, f) = (self.expr(c)?, self.expr(t)?, self.expr(f)?);
                if c.ann != Sort::Bool {
                    return type_err(c.span, format!("condition must be bool, found {}", c.ann));
                }
                if t.ann != f.ann {
                    return type_err(span, format!("branches have sorts {} and {}", t.ann, f.ann));
                }
                let sort = t.ann;
                (ExprKind::Ite(Box::new(c), Box::new(t), Box::new(f)), sort)
            }
            ExprKind::Arrow(a, b) => {
                if !self.allow_temporal {
                    return type_err(span, "`->` is not allowed here");
                }
                let (a, b) = (self.expr(a)?, self.expr(b)?);
                if a.ann != b.ann {
                    return type_err(span, format!("`->` operands have sorts {} and {}", a.ann, b.ann));
                }
                let sort = a.ann;
                (ExprKind::Arrow(Box::new(a), Box::new(b)), sort)
            }
            ExprKind::Pre(a) => {
                if !self.allow_temporal {
                    return type_err(span, "`pre` is not allowed here");
                }
                let a = self.expr(a)?;
                let sort = a.ann;
                (ExprKind::Pre(Box::new(a)), sort)
            }
            ExprKind::Call(name, args) => {
                let Some(callee) = self.program.filter(|_| self.allow_temporal).and_then(|p| p.node(name)) else {
                    return type_err(span, format!("unknown node `{name}`"));
                };
                if callee.outputs.len() != 1 {
                    return type_err(
                        span,
                        format!("node `{name}` must have exactly one output to be called"),
                    );
                }
                if callee.inputs.len() != args.len() {
                    return type_err(
                        span,
                        format!("node `{name}` expects {} arguments, got {}", callee.inputs.len(), args.len()),
                    );
                }
                let mut typed = Vec::with_capacity(args.len());
                for (arg, param) in args.iter().zip(&callee.inputs) {
                    let a = self.expr(arg)?;
                    if a.ann != param.sort {
                        return type_err(
                            a.span,
                            format!("argument `{}` of `{name}` expects {}, found {}", param.name, param.sort, a.ann),
                        );
                    }
                    typed.push(a);
                }
                (ExprKind::Call(name.clone(), typed), callee.outputs[0].sort)
            }
        };
        Ok(Expr { kind, span, ann: sort })
    }

    fn binary(&self, op: BinOp, a: &TypedExpr, b: &TypedExpr, span: Span) -> TResult<Sort> {
        let sym = op.symbol();
        let same = || {
            if a.ann == b.ann {
                Ok(a.ann)
            } else {
                type_err(span, format!("`{sym}` operands have sorts {} and {}", a.ann, b.ann))
            }
        };
        let numeric = || {
            let s = same()?;
            if s.is_numeric() {
                Ok(s)
            } else {
                type_err(span, format!("`{sym}` expects int or real operands, found {s}"))
            }
        };
        match op {
            BinOp::And | BinOp::Or | BinOp::Xor | BinOp::Implies => {
                if a.ann != Sort::Bool || b.ann != Sort::Bool {
                    return type_err(span, format!("`{sym}` expects bool operands, found {} and {}", a.ann, b.ann));
                }
                Ok(Sort::Bool)
            }
            BinOp::Eq | BinOp::Neq => same().map(|_| Sort::Bool),
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => numeric().map(|_| Sort::Bool),
            BinOp::Add | BinOp::Sub => numeric(),
            BinOp::Mul => {
                let s = numeric()?;
                if const_value(a).is_none() && const_value(b).is_none() {
                    return lin_err(span, "one operand of `*` must be constant");
                }
                Ok(s)
            }
            BinOp::Div | BinOp::Mod | BinOp::RealDiv => {
                let s = numeric()?;
                let want = if op == BinOp::RealDiv { Sort::Real } else { Sort::Int };
                if s != want {
                    return type_err(span, format!("`{sym}` expects {want} operands, found {s}"));
                }
                match const_value(b) {
                    Some(v) if !v.is_zero() => Ok(s),
                    Some(_) => lin_err(b.span, format!("divisor of `{sym}` is zero")),
                    None => lin_err(b.span, format!("divisor of `{sym}` must be constant")),
                }
            }
        }
    }
}

fn check_node(program: &Program, node: &NodeDecl) -> TResult<NodeDecl<Sort>> {
    let mut sorts: HashMap<&str, Sort> = HashMap::new();
    for d in node.decls() {
        if sorts.insert(&d.name, d.sort).is_some() {
            return type_err(d.span, format!("variable `{}` declared twice in `{}`", d.name, node.name));
        }
    }
    let inputs: HashSet<&str> = node.inputs.iter().map(|d| d.name.as_str()).collect();
    let mut defined: HashSet<&str> = HashSet::new();
    let lookup = |v: &str| sorts.get(v).copied();
    let checker = Checker {
        vars: &lookup,
        program: Some(program),
        allow_temporal: true,
    };
    let mut equations = Vec::new();
    for eq in &node.equations {
        let Some(&sort) = sorts.get(eq.lhs.as_str()) else {
            return type_err(eq.span, format!("undeclared variable `{}`", eq.lhs));
        };
        if inputs.contains(eq.lhs.as_str()) {
            return type_err(eq.span, format!("input `{}` cannot be defined", eq.lhs));
        }
        if !defined.insert(&eq.lhs) {
            return type_err(eq.span, format!("`{}` is defined twice", eq.lhs));
        }
        let rhs = checker.expr(&eq.rhs)?;
        if rhs.ann != sort {
            return type_err(
                eq.span,
                format!("`{}` has sort {sort} but its definition has sort {}", eq.lhs, rhs.ann),
            );
        }
        equations.push(Equation {
            lhs: eq.lhs.clone(),
            rhs,
            span: eq.span,
        });
    }
    for d in node.outputs.iter().chain(&node.locals) {
        if !defined.contains(d.name.as_str()) {
            return type_err(d.span, format!("`{}` has no definition", d.name));
        }
    }
    let mut assertions = Vec::new();
    for a in &node.assertions {
        let expr = checker.expr(&a.expr)?;
        if expr.ann != Sort::Bool {
            return type_err(a.span, format!("assertion must be bool, found {}", expr.ann));
        }
        assertions.push(Assertion { expr, span: a.span });
    }
    for p in &node.properties {
        match sorts.get(p.name.as_str()) {
            Some(Sort::Bool) => {}
            Some(s) => return type_err(p.span, format!("property `{}` must be bool, found {s}", p.name)),
            None => return type_err(p.span, format!("property `{}` is not declared", p.name)),
        }
    }
    Ok(NodeDecl {
        name: node.name.clone(),
        span: node.span,
        inputs: node.inputs.clone(),
        outputs: node.outputs.clone(),
        locals: node.locals.clone(),
        equations,
        assertions,
        properties: node.properties.clone(),
        main_pragma: node.main_pragma,
    })
}

/// Variables read at the current instant, ignoring everything under `pre`.
/// Arguments of a call count in full.
fn instant_deps<A>(e: &Expr<A>, out: &mut Vec<String>) {
    match &e.kind {
        ExprKind::Var(v) => out.push(v.clone()),
        ExprKind::Pre(_) => {}
        _ => {
            for c in e.children() {
                instant_deps(c, out);
            }
        }
    }
}

/// Depth-first search for a cycle in a graph given in deterministic order.
fn find_cycle(order: &[String], edges: &BTreeMap<String, Vec<String>>) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit(
        v: &str,
        edges: &BTreeMap<String, Vec<String>>,
        marks: &mut HashMap<String, Mark>,
        stack: &mut Vec<String>,
    ) -> Option<Vec<String>> {
        marks.insert(v.to_string(), Mark::Active);
        stack.push(v.to_string());
        for w in edges.get(v).into_iter().flatten() {
            if !edges.contains_key(w) {
                continue;
            }
            match marks.get(w) {
                Some(Mark::Active) => {
                    let start = stack.iter().position(|s| s == w).unwrap();
                    return Some(stack[start..].to_vec());
                }
                Some(Mark::Done) => {}
                None => {
                    if let Some(c) = visit(w, edges, marks, stack) {
                        return Some(c);
                    }
                }
            }
        }
        stack.pop();
        marks.insert(v.to_string(), Mark::Done);
        None
    }
    let mut marks = HashMap::new();
    for v in order {
        if !marks.contains_key(v) {
            if let Some(c) = visit(v, edges, &mut marks, &mut Vec::new()) {
                return Some(c);
            }
        }
    }
    None
}

fn check_cycles<A>(node: &NodeDecl<A>) -> TResult<()> {
    let order: Vec<String> = node.equations.iter().map(|e| e.lhs.clone()).collect();
    let edges = node
        .equations
        .iter()
        .map(|e| {
            let mut deps = Vec::new();
            instant_deps(&e.rhs, &mut deps);
            (e.lhs.clone(), deps)
        })
        .collect();
    match find_cycle(&order, &edges) {
        Some(cycle) => Err(FrontendError::Cycle { cycle }),
        None => Ok(()),
    }
}

fn calls<A>(e: &Expr<A>, out: &mut Vec<String>) {
    if let ExprKind::Call(name, _) = &e.kind {
        out.push(name.clone());
    }
    for c in e.children() {
        calls(c, out);
    }
}

fn check_recursion(program: &Program) -> TResult<()> {
    let order: Vec<String> = program.nodes.iter().map(|n| n.name.clone()).collect();
    let edges = program
        .nodes
        .iter()
        .map(|n| {
            let mut out = Vec::new();
            for eq in &n.equations {
                calls(&eq.rhs, &mut out);
            }
            for a in &n.assertions {
                calls(&a.expr, &mut out);
            }
            (n.name.clone(), out)
        })
        .collect();
    match find_cycle(&order, &edges) {
        Some(nodes) => Err(FrontendError::Recursion { nodes }),
        None => Ok(()),
    }
}

/// Checks sorts, definitions, linearity, recursion and causality.
pub fn typecheck(program: &Program) -> Result<TypedProgram, FrontendError> {
    let mut seen = HashSet::new();
    for n in &program.nodes {
        if !seen.insert(n.name.as_str()) {
            return type_err(n.span, format!("node `{}` declared twice", n.name));
        }
    }
    let mut nodes = Vec::with_capacity(program.nodes.len());
    for n in &program.nodes {
        nodes.push(check_node(program, n)?);
    }
    check_recursion(program)?;
    for n in &nodes {
        check_cycles(n)?;
    }
    Ok(Program {
        nodes,
        main: program.main.clone(),
    })
}

/// Type checks a standalone expression against a variable table. Temporal
/// operators and node calls are rejected.
pub fn typecheck_expr(e: &Expr, vars: &dyn Fn(&str) -> Option<Sort>) -> Result<TypedExpr, FrontendError> {
    Checker {
        vars,
        program: None,
        allow_temporal: false,
    }
    .expr(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{lex, parse};

    fn check(src: &str) -> TResult<TypedProgram> {
        typecheck(&parse(&lex(src).unwrap()).unwrap())
    }

    fn body(decls: &str, eqs: &str) -> String {
        let var = if decls.is_empty() { String::new() } else { format!("var {decls}") };
        format!("node main(a: int; b: int; c: bool) returns (y: int); {var} let {eqs} tel")
    }

    #[test]
    fn counter_types() {
        let p = check(
            "node main(reset: bool) returns (); var x: int; ok1, ok2: bool;
             let x = if reset then 0 else (0 -> pre x + 1); ok1 = x >= 0; ok2 = x < 3;
             --%PROPERTY ok1; --%PROPERTY ok2; tel",
        )
        .unwrap();
        let n = p.main_node();
        assert_eq!(n.equation("x").unwrap().rhs.ann, Sort::Int);
        assert_eq!(n.equation("ok1").unwrap().rhs.ann, Sort::Bool);
    }

    #[test]
    fn algebraic_loop() {
        let err = check("node main() returns (x: int); let x = x + 1; tel").unwrap_err();
        assert_eq!(err, FrontendError::Cycle { cycle: vec!["x".into()] });
        assert!(check("node main() returns (x: int); let x = 0 -> pre x + 1; tel").is_ok());
        let err = check(&body("z: int;", "y = z; z = y + a;")).unwrap_err();
        assert_eq!(err, FrontendError::Cycle { cycle: vec!["y".into(), "z".into()] });
    }

    #[test]
    fn linearity() {
        assert!(matches!(
            check(&body("", "y = a * b;")),
            Err(FrontendError::Linearity { .. })
        ));
        assert!(check(&body("", "y = (2 + 1) * a;")).is_ok());
        assert!(matches!(
            check(&body("", "y = a div b;")),
            Err(FrontendError::Linearity { .. })
        ));
        assert!(matches!(
            check(&body("", "y = a mod (1 - 1);")),
            Err(FrontendError::Linearity { .. })
        ));
        assert!(check(&body("", "y = a mod 3 + a div -2;")).is_ok());
    }

    #[test]
    fn sort_errors() {
        assert!(matches!(check(&body("", "y = a + c;")), Err(FrontendError::Type { .. })));
        assert!(matches!(check(&body("", "y = c;")), Err(FrontendError::Type { .. })));
        assert!(matches!(check(&body("", "")), Err(FrontendError::Type { .. })));
        assert!(matches!(check(&body("", "y = 1; y = 2;")), Err(FrontendError::Type { .. })));
        assert!(matches!(check(&body("", "y = q;")), Err(FrontendError::Type { .. })));
        assert!(matches!(check(&body("", "a = 1; y = 1;")), Err(FrontendError::Type { .. })));
        assert!(matches!(
            check(&body("", "y = 1; --%PROPERTY a;")),
            Err(FrontendError::Type { .. })
        ));
    }

    #[test]
    fn calls_checked() {
        let inc = "node inc(v: int) returns (w: int); let w = v + 1; tel ";
        assert!(check(&format!("{inc}{}", body("", "y = inc(a);"))).is_ok());
        assert!(matches!(
            check(&format!("{inc}{}", body("", "y = inc(c);"))),
            Err(FrontendError::Type { .. })
        ));
        assert!(matches!(
            check(&format!("{inc}{}", body("", "y = inc(a, b);"))),
            Err(FrontendError::Type { .. })
        ));
        let rec = "node f(v: int) returns (w: int); let w = g(v); tel
                   node g(v: int) returns (w: int); let w = f(v); tel";
        assert_eq!(
            check(rec).unwrap_err(),
            FrontendError::Recursion {
                nodes: vec!["f".into(), "g".into()]
            }
        );
    }

    #[test]
    fn standalone_expressions() {
        let vars = |v: &str| match v {
            "x" => Some(Sort::Int),
            _ => None,
        };
        let parse_e = |s: &str| crate::frontend::parse_expr_tokens(&lex(s).unwrap()).unwrap();
        assert_eq!(typecheck_expr(&parse_e("x >= 0"), &vars).unwrap().ann, Sort::Bool);
        assert!(typecheck_expr(&parse_e("pre x >= 0"), &vars).is_err());
        assert!(typecheck_expr(&parse_e("z >= 0"), &vars).is_err());
    }
}
