//! Flattening of node calls into a single node with dotted instance names.

use std::collections::HashMap;

use crate::frontend::ast::{ExprKind, NodeDecl, TypedExpr, TypedProgram};
use crate::frontend::Span;
use crate::term::Sort;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    /// The distinguished initial-step flag.
    Init,
    Input,
    Output,
    Local,
    /// A variable of an inlined node instance, including its parameters.
    Instance,
    /// A generated variable holding the operand of a non-variable `pre`.
    Aux,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatVar {
    pub name: String,
    pub sort: Sort,
    pub kind: VarKind,
    /// Dotted source path, rooted at the main node name.
    pub path: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatEquation {
    pub lhs: String,
    pub rhs: TypedExpr,
    pub span: Span,
}

/// The main node after inlining every call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatNode {
    pub name: String,
    pub vars: Vec<FlatVar>,
    pub equations: Vec<FlatEquation>,
    pub assertions: Vec<(TypedExpr, Span)>,
    pub properties: Vec<(String, Span)>,
}

struct Inliner<'a> {
    program: &'a TypedProgram,
    out: FlatNode,
}

impl Inliner<'_> {
    /// Adds the body of `node` under instance path `path`. `rename` maps the
    /// node's local names to flat names.
    fn instantiate(&mut self, node: &NodeDecl<Sort>, path: &str, rename: &HashMap<String, String>) {
        let mut counters: HashMap<String, usize> = HashMap::new();
        for eq in &node.equations {
            let rhs = self.rewrite(&eq.rhs, path, rename, &mut counters);
            self.out.equations.push(FlatEquation {
                lhs: rename[&eq.lhs].clone(),
                rhs,
                span: eq.span,
            });
        }
        for a in &node.assertions {
            let e = self.rewrite(&a.expr, path, rename, &mut counters);
            self.out.assertions.push((e, a.span));
        }
    }

    fn rewrite(
        &mut self,
        e: &TypedExpr,
        path: &str,
        rename: &HashMap<String, String>,
        counters: &mut HashMap<String, usize>,
    ) -> TypedExpr {
        let mut go = |x: &TypedExpr, me: &mut Self| Box::new(me.rewrite(x, path, rename, counters));
        let kind = match &e.kind {
            ExprKind::Var(v) => ExprKind::Var(rename[v].clone()),
            ExprKind::Bool(_) | ExprKind::Int(_) | ExprKind::Real(_) => e.kind.clone(),
            ExprKind::Unary(op, a) => ExprKind::Unary(*op, go(a, self)),
            ExprKind::Binary(op, a, b) => {
                let a = go(a, self);
                ExprKind::Binary(*op, a, go(b, self))
            }
            ExprKind::Ite(c, t, f) => {
                let c = go(c, self);
                let t = go(t, self);
                ExprKind::Ite(c, t, go(f, self))
            }
            ExprKind::Arrow(a, b) => {
                let a = go(a, self);
                ExprKind::Arrow(a, go(b, self))
            }
            ExprKind::Pre(a) => ExprKind::Pre(go(a, self)),
            ExprKind::Call(name, args) => {
                let args: Vec<TypedExpr> = args.iter().map(|a| *go(a, self)).collect();
                return self.inline_call(name, args, e.span, path, counters);
            }
        };
        TypedExpr {
            kind,
            span: e.span,
            ann: e.ann,
        }
    }

    fn inline_call(
        &mut self,
        name: &str,
        args: Vec<TypedExpr>,
        span: Span,
        path: &str,
        counters: &mut HashMap<String, usize>,
    ) -> TypedExpr {
        let callee = self.program.node(name).expect("typechecked call");
        let idx = counters.entry(name.to_string()).or_insert(0);
        *idx += 1;
        let inst = format!("{path}.{name}{idx}");
        let mut rename = HashMap::new();
        for d in callee.decls() {
            let flat = format!("{inst}.{}", d.name);
            self.out.vars.push(FlatVar {
                name: flat.clone(),
                sort: d.sort,
                kind: VarKind::Instance,
                path: flat.clone(),
                span: d.span,
            });
            rename.insert(d.name.clone(), flat);
        }
        for (param, arg) in callee.inputs.iter().zip(args) {
            self.out.equations.push(FlatEquation {
                lhs: rename[&param.name].clone(),
                rhs: arg,
                span,
            });
        }
        self.instantiate(callee, &inst, &rename);
        let out = &callee.outputs[0];
        TypedExpr {
            kind: ExprKind::Var(rename[&out.name].clone()),
            span,
            ann: out.sort,
        }
    }
}

/// Replaces every node call in the main node by a renamed copy of the callee.
/// Main variables keep their names; instance variables are named
/// `{caller path}.{callee}{n}.{var}` where `n` counts calls to the same callee
/// in the caller, from 1, in source order.
pub fn inline_nodes(program: &TypedProgram) -> FlatNode {
    let main = program.main_node();
    let mut inliner = Inliner {
        program,
        out: FlatNode {
            name: main.name.clone(),
            vars: Vec::new(),
            equations: Vec::new(),
            assertions: Vec::new(),
            properties: main.properties.iter().map(|p| (p.name.clone(), p.span)).collect(),
        },
    };
    let groups = [
        (&main.inputs, VarKind::Input),
        (&main.outputs, VarKind::Output),
        (&main.locals, VarKind::Local),
    ];
    let mut rename = HashMap::new();
    for (decls, kind) in groups {
        for d in decls {
            inliner.out.vars.push(FlatVar {
                name: d.name.clone(),
                sort: d.sort,
                kind,
                path: format!("{}.{}", main.name, d.name),
                span: d.span,
            });
            rename.insert(d.name.clone(), d.name.clone());
        }
    }
    inliner.instantiate(main, &main.name, &rename);
    inliner.out
}
