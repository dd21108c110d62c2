//! A multi-engine inductive model checker for a synchronous dataflow
//! language over linear integer and real arithmetic.

pub mod advice;
pub mod elaborate;
pub mod engine;
pub mod framework;
pub mod frontend;
pub mod ivc;
pub mod report;
pub mod smoothing;
pub mod solver;
pub mod term;
pub mod trace;

pub use elaborate::{elaborate, TransitionSystem};
pub use engine::EngineKind;
pub use framework::{run, PropertyResult, RunConfig, RunError, RunResult, Verdict};
pub use ivc::{compute_ivc, IvcResult};
pub use report::Report;
pub use smoothing::{smooth, Smoothed};
pub use solver::{SolverConfig, SolverRegistry};
pub use trace::{check_trace, Trace};
