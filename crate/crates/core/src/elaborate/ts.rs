//! The flat transition system shared by every engine.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::inline::{FlatNode, FlatVar, VarKind};
use crate::frontend::ast::{BinOp, ExprKind, TypedExpr, UnOp};
use crate::frontend::{print_term, Span};
use crate::term::{CmpOp, Sort, StepTag, Term, Value};

pub const INIT_FLAG: &str = "%init";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateVar {
    pub name: String,
    pub sort: Sort,
    pub kind: VarKind,
    /// Input that nothing in the sliced system reads.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub unused: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    /// Stable identifier; the flat name of the defined variable.
    pub id: String,
    pub lhs: String,
    pub rhs: Term,
    pub span: Span,
    /// The source equation this one belongs to. Generated `pre` equations
    /// share the id of the equation they were extracted from; those extracted
    /// from assertions have no origin and are never removed by IVC.
    pub origin: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assertion {
    pub term: Term,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property {
    pub name: String,
    pub term: Term,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub path: String,
    pub span: Span,
}

/// A flattened model: `%init` holds exactly at step 0 and every equation holds
/// at every step. Variables without an equation are unconstrained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionSystem {
    pub name: String,
    pub vars: Vec<StateVar>,
    pub equations: Vec<Equation>,
    pub assertions: Vec<Assertion>,
    pub properties: Vec<Property>,
    pub provenance: BTreeMap<String, Provenance>,
}

struct Translator<'a> {
    sorts: &'a HashMap<String, Sort>,
    aux: Vec<(String, Term, Span)>,
    next_aux: &'a mut usize,
}

impl Translator<'_> {
    fn term(&mut self, e: &TypedExpr) -> Term {
        let t = |me: &mut Self, x: &TypedExpr| me.term(x);
        let r = match &e.kind {
            ExprKind::Bool(b) => Ok(Term::bool(*b)),
            ExprKind::Int(i) => Ok(Term::constant(Value::Int(i.clone()))),
            ExprKind::Real(r) => Ok(Term::constant(Value::Real(r.clone()))),
            ExprKind::Var(v) => Ok(Term::var(v, self.sorts[v])),
            ExprKind::Unary(UnOp::Not, a) => Term::mk_not(t(self, a)),
            ExprKind::Unary(UnOp::Neg, a) => Term::mk_neg(t(self, a)),
            ExprKind::Binary(op, a, b) => {
                let (a, b) = (t(self, a), t(self, b));
                match op {
                    BinOp::Add => Term::mk_plus(a, b),
                    BinOp::Sub => Term::mk_minus(a, b),
                    BinOp::Mul => Term::mk_mul(a, b),
                    BinOp::Div => Term::mk_div(a, b),
                    BinOp::RealDiv => Term::mk_real_div(a, b),
                    BinOp::Mod => Term::mk_mod(a, b),
                    BinOp::Lt => Term::mk_cmp(CmpOp::Lt, a, b),
                    BinOp::Le => Term::mk_cmp(CmpOp::Le, a, b),
                    BinOp::Gt => Term::mk_cmp(CmpOp::Gt, a, b),
                    BinOp::Ge => Term::mk_cmp(CmpOp::Ge, a, b),
                    BinOp::Eq => Term::mk_eq(a, b),
                    BinOp::Neq => Term::mk_neq(a, b),
                    BinOp::And => Term::mk_and(vec![a, b]),
                    BinOp::Or => Term::mk_or(vec![a, b]),
                    BinOp::Xor => Term::mk_xor(a, b),
                    BinOp::Implies => Term::mk_implies(a, b),
                }
            }
            ExprKind::Ite(c, a, b) => {
                let (c, a, b) = (t(self, c), t(self, a), t(self, b));
                Term::mk_ite(c, a, b)
            }
            ExprKind::Arrow(a, b) => {
                let (a, b) = (t(self, a), t(self, b));
                Term::mk_ite(Term::var(INIT_FLAG, Sort::Bool), a, b)
            }
            ExprKind::Pre(a) => match &a.kind {
                ExprKind::Var(v) => Ok(Term::prev(v, self.sorts[v])),
                _ => {
                    let inner = t(self, a);
                    *self.next_aux += 1;
                    let name = format!("%pre{}", self.next_aux);
                    let sort = inner.sort();
                    self.aux.push((name.clone(), inner, a.span));
                    Ok(Term::prev(&name, sort))
                }
            },
            ExprKind::Call(..) => unreachable!("calls are inlined before translation"),
        };
        r.expect("typechecked expression translates")
    }
}

/// Translates a sliced flat node: `e1 -> e2` becomes `ite(%init, e1, e2)` and
/// `pre e` becomes a previous-step reference, through a fresh `%preN`
/// variable when `e` is not a variable.
pub fn to_transition_system(node: &FlatNode, unused: &BTreeSet<String>) -> TransitionSystem {
    let mut sorts: HashMap<String, Sort> = node.vars.iter().map(|v| (v.name.clone(), v.sort)).collect();
    sorts.insert(INIT_FLAG.into(), Sort::Bool);
    let mut next_aux = 0usize;

    let mut equations = Vec::new();
    let mut aux_vars: Vec<FlatVar> = Vec::new();
    let mut push_aux = |aux: Vec<(String, Term, Span)>, origin: Option<&str>, out: &mut Vec<Equation>| {
        for (name, rhs, span) in aux {
            aux_vars.push(FlatVar {
                name: name.clone(),
                sort: rhs.sort(),
                kind: VarKind::Aux,
                path: format!("{}.{name}", node.name),
                span,
            });
            out.push(Equation {
                id: name.clone(),
                lhs: name,
                rhs,
                span,
                origin: origin.map(str::to_string),
            });
        }
    };
    for eq in &node.equations {
        let mut tr = Translator {
            sorts: &sorts,
            aux: Vec::new(),
            next_aux: &mut next_aux,
        };
        let rhs = tr.term(&eq.rhs);
        let aux = std::mem::take(&mut tr.aux);
        equations.push(Equation {
            id: eq.lhs.clone(),
            lhs: eq.lhs.clone(),
            rhs,
            span: eq.span,
            origin: Some(eq.lhs.clone()),
        });
        push_aux(aux, Some(&eq.lhs), &mut equations);
    }
    let mut assertions = Vec::new();
    for (e, span) in &node.assertions {
        let mut tr = Translator {
            sorts: &sorts,
            aux: Vec::new(),
            next_aux: &mut next_aux,
        };
        let term = tr.term(e);
        let aux = std::mem::take(&mut tr.aux);
        assertions.push(Assertion { term, span: *span });
        push_aux(aux, None, &mut equations);
    }

    let mut vars = vec![StateVar {
        name: INIT_FLAG.into(),
        sort: Sort::Bool,
        kind: VarKind::Init,
        unused: false,
    }];
    let mut ordered: Vec<&FlatVar> = Vec::new();
    for kind in [VarKind::Input, VarKind::Output, VarKind::Local, VarKind::Instance] {
        ordered.extend(node.vars.iter().filter(|v| v.kind == kind));
    }
    ordered.extend(aux_vars.iter());
    let mut provenance = BTreeMap::new();
    for v in ordered {
        vars.push(StateVar {
            name: v.name.clone(),
            sort: v.sort,
            kind: v.kind,
            unused: unused.contains(&v.name),
        });
        provenance.insert(
            v.name.clone(),
            Provenance {
                path: v.path.clone(),
                span: v.span,
            },
        );
    }
    let properties = node
        .properties
        .iter()
        .map(|(name, span)| Property {
            name: name.clone(),
            term: Term::var(name, Sort::Bool),
            span: *span,
        })
        .collect();
    TransitionSystem {
        name: node.name.clone(),
        vars,
        equations,
        assertions,
        properties,
        provenance,
    }
}

impl TransitionSystem {
    pub fn var(&self, name: &str) -> Option<&StateVar> {
        self.vars.iter().find(|v| v.name == name)
    }

    pub fn sort_of(&self, name: &str) -> Option<Sort> {
        self.var(name).map(|v| v.sort)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &StateVar> {
        self.vars.iter().filter(|v| v.kind == VarKind::Input)
    }

    pub fn property(&self, name: &str) -> Option<&Property> {
        self.properties.iter().find(|p| p.name == name)
    }

    pub fn equation(&self, lhs: &str) -> Option<&Equation> {
        self.equations.iter().find(|e| e.lhs == lhs)
    }

    /// Variables read through `pre`, plus the initial flag: the state that a
    /// single step carries forward.
    pub fn state_vars(&self) -> Vec<&StateVar> {
        let mut prev = BTreeSet::new();
        let mut scan = |t: &Term| {
            for v in t.vars() {
                if v.step == StepTag::Prev {
                    prev.insert(v.name.to_string());
                }
            }
        };
        for eq in &self.equations {
            scan(&eq.rhs);
        }
        for a in &self.assertions {
            scan(&a.term);
        }
        self.vars
            .iter()
            .filter(|v| v.kind == VarKind::Init || prev.contains(&v.name))
            .collect()
    }

    /// Every term that must hold at each step: the equations as `lhs = rhs`
    /// and the assertions.
    pub fn step_constraints(&self) -> impl Iterator<Item = Term> + '_ {
        self.equations
            .iter()
            .map(|eq| eq.as_term())
            .chain(self.assertions.iter().map(|a| a.term.clone()))
    }

    /// Source equation ids in source order, each listed once.
    pub fn equation_origins(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.equations
            .iter()
            .filter_map(|e| e.origin.clone())
            .filter(|o| seen.insert(o.clone()))
            .collect()
    }

    /// The system with only the equations whose origin is in `keep` (and those
    /// without origin); every other defined variable becomes unconstrained.
    pub fn restrict(&self, keep: &BTreeSet<String>) -> TransitionSystem {
        let mut ts = self.clone();
        ts.equations
            .retain(|e| e.origin.as_ref().is_none_or(|o| keep.contains(o)));
        ts
    }

    /// Translates an expression over this system's variables, as produced by
    /// `typecheck_expr` (so without temporal operators or calls).
    pub fn term_of(&self, e: &TypedExpr) -> Term {
        let sorts: HashMap<String, Sort> = self.vars.iter().map(|v| (v.name.clone(), v.sort)).collect();
        let mut next = 0;
        let mut tr = Translator {
            sorts: &sorts,
            aux: Vec::new(),
            next_aux: &mut next,
        };
        let t = tr.term(e);
        debug_assert!(tr.aux.is_empty());
        t
    }

    /// Deterministic JSON description, with terms in Lustre syntax.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "init_flag": INIT_FLAG,
            "vars": self.vars,
            "equations": self.equations.iter().map(|e| serde_json::json!({
                "id": e.id,
                "lhs": e.lhs,
                "rhs": print_term(&e.rhs),
                "origin": e.origin,
                "line": e.span.start_line,
            })).collect::<Vec<_>>(),
            "assertions": self.assertions.iter().map(|a| print_term(&a.term)).collect::<Vec<_>>(),
            "properties": self.properties.iter().map(|p| serde_json::json!({
                "name": p.name,
                "term": print_term(&p.term),
            })).collect::<Vec<_>>(),
            "state_vars": self.state_vars().iter().map(|v| v.name.clone()).collect::<Vec<_>>(),
            "provenance": self.provenance,
        })
    }
}

impl Equation {
    pub fn as_term(&self) -> Term {
        let sort = self.rhs.sort();
        Term::mk_eq(Term::var(&self.lhs, sort), self.rhs.clone()).expect("equation sorts agree")
    }
}
