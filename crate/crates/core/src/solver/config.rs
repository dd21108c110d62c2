use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::SolverError;
use crate::elaborate::TransitionSystem;
use crate::term::Sort;

/// The configuration shipped with the crate.
pub const DEFAULT_SOLVERS_TOML: &str = include_str!("../../../../solvers.toml");

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(skip)]
    pub name: String,
    pub command: String,
    #[serde(default)]
    pub args: Vec<String>,
    /// `auto` picks QF_LIA, QF_LRA or QF_LIRA from the system's sorts.
    #[serde(default = "auto_logic")]
    pub logic: String,
    #[serde(default)]
    pub unsat_cores: bool,
    /// Per-query wall-clock limit; absent or 0 means none.
    #[serde(default)]
    pub timeout_ms: u64,
}

fn auto_logic() -> String {
    "auto".into()
}

impl SolverConfig {
    pub fn logic_for(&self, ts: &TransitionSystem) -> String {
        if self.logic != "auto" {
            return self.logic.clone();
        }
        let ints = ts.vars.iter().any(|v| v.sort == Sort::Int);
        let reals = ts.vars.iter().any(|v| v.sort == Sort::Real);
        match (ints, reals) {
            (true, true) => "QF_LIRA",
            (false, true) => "QF_LRA",
            _ => "QF_LIA",
        }
        .into()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegistry {
    default: Option<String>,
    #[serde(default)]
    solver: BTreeMap<String, SolverConfig>,
}

/// The named solver entries of a `solvers.toml` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverRegistry {
    pub default: Option<String>,
    pub solvers: BTreeMap<String, SolverConfig>,
}

impl SolverRegistry {
    pub fn parse(text: &str) -> Result<Self, SolverError> {
        let raw: RawRegistry = toml::from_str(text).map_err(|e| SolverError::Config(e.to_string()))?;
        let solvers = raw
            .solver
            .into_iter()
            .map(|(name, mut cfg)| {
                cfg.name = name.clone();
                (name, cfg)
            })
            .collect();
        Ok(SolverRegistry {
            default: raw.default,
            solvers,
        })
    }

    pub fn load(path: &Path) -> Result<Self, SolverError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SolverError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn builtin() -> Self {
        Self::parse(DEFAULT_SOLVERS_TOML).expect("bundled solvers.toml parses")
    }

    /// Looks up `name`, or the default entry when `name` is `None`.
    pub fn get(&self, name: Option<&str>) -> Result<SolverConfig, SolverError> {
        let name = match name.or(self.default.as_deref()) {
            Some(n) => n,
            None => return Err(SolverError::Config("no solver named and no default set".into())),
        };
        self.solvers
            .get(name)
            .cloned()
            .ok_or_else(|| SolverError::Config(format!("unknown solver `{name}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_entries() {
        let reg = SolverRegistry::parse(
            r#"
default = "z3"
[solver.z3]
command = "z3"
args = ["-in"]
unsat-cores = true
timeout-ms = 500
[solver.other]
command = "/opt/other"
"#,
        )
        .unwrap();
        let z3 = reg.get(None).unwrap();
        assert_eq!(z3.name, "z3");
        assert_eq!(z3.args, ["-in"]);
        assert!(z3.unsat_cores);
        assert_eq!(z3.timeout_ms, 500);
        let other = reg.get(Some("other")).unwrap();
        assert_eq!(other.logic, "auto");
        assert!(!other.unsat_cores);
        assert!(reg.get(Some("missing")).is_err());
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(SolverRegistry::parse("[solver.a]\ncommand = \"a\"\ncolour = 1\n").is_err());
    }

    #[test]
    fn builtin_has_default() {
        let reg = SolverRegistry::builtin();
        assert!(reg.get(None).is_ok());
    }
}
