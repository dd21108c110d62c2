use num_bigint::BigInt;
use num_rational::BigRational;

use super::Span;
use crate::term::Sort;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    /// Integer division (`div`).
    Div,
    /// Real division (`/`).
    RealDiv,
    Mod,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Neq,
    And,
    Or,
    Xor,
    Implies,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "div",
            BinOp::RealDiv => "/",
            BinOp::Mod => "mod",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "=",
            BinOp::Neq => "<>",
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Xor => "xor",
            BinOp::Implies => "=>",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Neq
        )
    }
}

/// An expression with an annotation slot: `()` after parsing, the expression's
/// [`Sort`] after type checking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr<A = ()> {
    pub kind: ExprKind<A>,
    pub span: Span,
    pub ann: A,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind<A = ()> {
    Bool(bool),
    Int(BigInt),
    Real(BigRational),
    Var(String),
    Unary(UnOp, Box<Expr<A>>),
    Binary(BinOp, Box<Expr<A>>, Box<Expr<A>>),
    Ite(Box<Expr<A>>, Box<Expr<A>>, Box<Expr<A>>),
    Arrow(Box<Expr<A>>, Box<Expr<A>>),
    Pre(Box<Expr<A>>),
    Call(String, Vec<Expr<A>>),
}

impl<A> Expr<A> {
    pub fn children(&self) -> Vec<&Expr<A>> {
        match &self.kind {
            ExprKind::Bool(_) | ExprKind::Int(_) | ExprKind::Real(_) | ExprKind::Var(_) => vec![],
            ExprKind::Unary(_, a) | ExprKind::Pre(a) => vec![a],
            ExprKind::Binary(_, a, b) | ExprKind::Arrow(a, b) => vec![a, b],
            ExprKind::Ite(c, t, e) => vec![c, t, e],
            ExprKind::Call(_, args) => args.iter().collect(),
        }
    }

    fn children_mut(&mut self) -> Vec<&mut Expr<A>> {
        match &mut self.kind {
            ExprKind::Bool(_) | ExprKind::Int(_) | ExprKind::Real(_) | ExprKind::Var(_) => vec![],
            ExprKind::Unary(_, a) | ExprKind::Pre(a) => vec![a],
            ExprKind::Binary(_, a, b) | ExprKind::Arrow(a, b) => vec![a, b],
            ExprKind::Ite(c, t, e) => vec![c, t, e],
            ExprKind::Call(_, args) => args.iter_mut().collect(),
        }
    }

    /// Calls `f` on every variable name, also those under `pre`.
    pub fn for_each_var(&self, f: &mut impl FnMut(&str)) {
        if let ExprKind::Var(v) = &self.kind {
            f(v);
        }
        for c in self.children() {
            c.for_each_var(f);
        }
    }

    pub fn contains_temporal(&self) -> bool {
        matches!(self.kind, ExprKind::Pre(_) | ExprKind::Arrow(..) | ExprKind::Call(..))
            || self.children().iter().any(|c| c.contains_temporal())
    }

    /// Resets every span in the expression.
    pub fn erase_spans(&mut self) {
        self.span = Span::default();
        for c in self.children_mut() {
            c.erase_spans();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub sort: Sort,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation<A = ()> {
    pub lhs: String,
    pub rhs: Expr<A>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assertion<A = ()> {
    pub expr: Expr<A>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyPragma {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeDecl<A = ()> {
    pub name: String,
    pub span: Span,
    pub inputs: Vec<VarDecl>,
    pub outputs: Vec<VarDecl>,
    pub locals: Vec<VarDecl>,
    pub equations: Vec<Equation<A>>,
    pub assertions: Vec<Assertion<A>>,
    pub properties: Vec<PropertyPragma>,
    pub main_pragma: bool,
}

impl<A> NodeDecl<A> {
    pub fn decls(&self) -> impl Iterator<Item = &VarDecl> {
        self.inputs.iter().chain(&self.outputs).chain(&self.locals)
    }

    pub fn decl(&self, name: &str) -> Option<&VarDecl> {
        self.decls().find(|d| d.name == name)
    }

    pub fn equation(&self, lhs: &str) -> Option<&Equation<A>> {
        self.equations.iter().find(|e| e.lhs == lhs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program<A = ()> {
    pub nodes: Vec<NodeDecl<A>>,
    /// Name of the top-level node.
    pub main: String,
}

pub type TypedProgram = Program<Sort>;
pub type TypedExpr = Expr<Sort>;

impl<A> Program<A> {
    pub fn node(&self, name: &str) -> Option<&NodeDecl<A>> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn main_node(&self) -> &NodeDecl<A> {
        self.node(&self.main).expect("main node exists")
    }

    /// Resets every span, so that programs can be compared by structure alone.
    pub fn erase_spans(&mut self) {
        for node in &mut self.nodes {
            node.span = Span::default();
            for d in node.inputs.iter_mut().chain(&mut node.outputs).chain(&mut node.locals) {
                d.span = Span::default();
            }
            for eq in &mut node.equations {
                eq.span = Span::default();
                eq.rhs.erase_spans();
            }
            for a in &mut node.assertions {
                a.span = Span::default();
                a.expr.erase_spans();
            }
            for p in &mut node.properties {
                p.span = Span::default();
            }
        }
    }
}
