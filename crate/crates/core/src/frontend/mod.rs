//! Lexing, parsing, type checking and printing of the Lustre subset.

pub mod ast;
mod lexer;
mod parser;
mod printer;
mod typecheck;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lexer::{lex, lex_with, LexMode, Tok, Token};
pub use parser::{parse, parse_expr_tokens};
pub use printer::{print_expr, print_program, print_term, term_to_expr};
pub use typecheck::{typecheck, typecheck_expr};

/// A source range, 1-based and end-exclusive in columns.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl Span {
    pub fn join(self, other: Span) -> Span {
        Span {
            start_line: self.start_line,
            start_col: self.start_col,
            end_line: other.end_line,
            end_col: other.end_col,
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start_line, self.start_col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("{span}: lexical error: {message}")]
    Lex { span: Span, message: String },
    #[error("{span}: parse error: found {found}, expected {}", expected.join(" or "))]
    Parse {
        span: Span,
        found: String,
        expected: Vec<String>,
    },
    #[error("{span}: type error: {message}")]
    Type { span: Span, message: String },
    #[error("{span}: nonlinear expression: {message}")]
    Linearity { span: Span, message: String },
    #[error("dependency cycle through {}", cycle.join(" -> "))]
    Cycle { cycle: Vec<String> },
    #[error("recursive node calls through {}", nodes.join(" -> "))]
    Recursion { nodes: Vec<String> },
}

impl FrontendError {
    pub fn span(&self) -> Option<Span> {
        match self {
            FrontendError::Lex { span, .. }
            | FrontendError::Parse { span, .. }
            | FrontendError::Type { span, .. }
            | FrontendError::Linearity { span, .. } => Some(*span),
            FrontendError::Cycle { .. } | FrontendError::Recursion { .. } => None,
        }
    }
}

/// Parses and type checks a whole source file.
pub fn load(source: &str) -> Result<ast::TypedProgram, FrontendError> {
    typecheck(&parse(&lex(source)?)?)
}
