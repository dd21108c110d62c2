//! From a typed program to a flat transition system: inlining, slicing and
//! translation of the temporal operators.

mod inline;
mod slice;
mod ts;

pub use inline::{inline_nodes, FlatEquation, FlatNode, FlatVar, VarKind};
pub use slice::slice;
pub use ts::{
    to_transition_system, Assertion, Equation, Property, Provenance, StateVar, TransitionSystem, INIT_FLAG,
};

use crate::frontend::ast::TypedProgram;

/// Runs the whole elaboration pipeline.
pub fn elaborate(program: &TypedProgram) -> TransitionSystem {
    let flat = inline_nodes(program);
    let (sliced, unused) = slice(&flat);
    to_transition_system(&sliced, &unused)
}
