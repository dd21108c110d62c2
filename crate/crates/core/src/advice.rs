//! Advice files: proved invariants saved as Lustre expressions, one per
//! line, and read back as candidates on a later run.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::elaborate::TransitionSystem;
use crate::frontend::{lex_with, parse_expr_tokens, print_term, typecheck_expr, LexMode};
use crate::term::{Sort, Term};

pub const HEADER: &str = "mini-kind-advice 1";

#[derive(Debug, Error)]
pub enum AdviceError {
    #[error("advice file: {0}")]
    Io(#[from] io::Error),
    #[error("advice file: bad header `{0}`, expected `{HEADER}`")]
    Format(String),
}

/// Candidates read from an advice file.
#[derive(Debug, Clone, Default)]
pub struct Advice {
    pub candidates: Vec<Term>,
    /// Entries that no longer fit the model, with the reason.
    pub dropped: Vec<(String, String)>,
}

/// The file contents for `invariants`: header, then the sorted distinct
/// entries.
pub fn render(invariants: &[Term]) -> String {
    let mut lines: Vec<String> = invariants.iter().map(print_term).collect();
    lines.sort();
    lines.dedup();
    let mut out = String::from(HEADER);
    out.push('\n');
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

/// Writes the advice file through a temporary file in the same directory,
/// renamed into place.
pub fn save_advice(path: &Path, invariants: &[Term]) -> Result<(), AdviceError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("advice");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let write = || -> io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(render(invariants).as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

fn entry(ts: &TransitionSystem, line: &str) -> Result<Term, String> {
    let tokens = lex_with(line, LexMode { flat_names: true }).map_err(|e| e.to_string())?;
    let expr = parse_expr_tokens(&tokens).map_err(|e| e.to_string())?;
    let typed = typecheck_expr(&expr, &|n| ts.sort_of(n)).map_err(|e| e.to_string())?;
    if typed.ann != Sort::Bool {
        return Err(format!("has sort {}, not bool", typed.ann));
    }
    Ok(ts.term_of(&typed))
}

/// Parses advice text against `ts`. Only a bad header is an error; entries
/// that fail to parse or type check are dropped.
pub fn parse_advice(text: &str, ts: &TransitionSystem) -> Result<Advice, AdviceError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != HEADER {
        return Err(AdviceError::Format(header.to_string()));
    }
    let mut advice = Advice::default();
    for line in lines.map(str::trim).filter(|l| !l.is_empty()) {
        match entry(ts, line) {
            Ok(t) if !advice.candidates.contains(&t) => advice.candidates.push(t),
            Ok(_) => {}
            Err(reason) => advice.dropped.push((line.to_string(), reason)),
        }
    }
    Ok(advice)
}

pub fn load_advice(path: &Path, ts: &TransitionSystem) -> Result<Advice, AdviceError> {
    parse_advice(&fs::read_to_string(path)?, ts)
}
