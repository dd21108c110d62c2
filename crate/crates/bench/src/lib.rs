//! Shared helpers for the benchmarks.

use std::path::{Path, PathBuf};

use mini_kind::frontend::load;
use mini_kind::{elaborate, TransitionSystem};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn source(name: &str) -> String {
    let path = corpus_dir().join(format!("{name}.lus"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn model(name: &str) -> TransitionSystem {
    elaborate(&load(&source(name)).expect("corpus model loads"))
}
