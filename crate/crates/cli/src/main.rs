use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Parser;
use log::warn;

use mini_kind::advice::{load_advice, save_advice, AdviceError};
use mini_kind::frontend::load;
use mini_kind::{elaborate, run, Report, RunConfig, SolverRegistry, Verdict};

const EXIT_VALID: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_FALSIFIED: u8 = 10;
const EXIT_UNKNOWN: u8 = 20;

/// Checks the safety properties of a Lustre model.
#[derive(Debug, Parser)]
#[command(name = "mini-kind", version)]
struct Cli {
    /// The model to check.
    model: PathBuf,
    /// Solver entry from the solver configuration.
    #[arg(long)]
    solver: Option<String>,
    /// Solver configuration file; the bundled one by default.
    #[arg(long, value_name = "PATH")]
    solvers: Option<PathBuf>,
    /// Deepest BMC step.
    #[arg(long = "n", default_value_t = 200)]
    n: usize,
    /// Deepest k-induction window.
    #[arg(long, default_value_t = 20)]
    max_k: usize,
    /// Overall time limit in seconds.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
    #[arg(long)]
    no_bmc: bool,
    #[arg(long)]
    no_kind: bool,
    #[arg(long)]
    no_invgen: bool,
    #[arg(long)]
    no_pdr: bool,
    /// Report an inductive validity core for each valid property.
    #[arg(long)]
    ivc: bool,
    /// Minimize input changes in counterexamples.
    #[arg(long)]
    smooth: bool,
    /// Only report counterexamples known to be shortest.
    #[arg(long)]
    minimal_cex: bool,
    #[arg(long, value_name = "PATH")]
    read_advice: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    write_advice: Option<PathBuf>,
    /// Also write the report as JSON.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Print the transition system as JSON and exit.
    #[arg(long)]
    dump_ts: bool,
    /// Write every solver session's input to this directory.
    #[arg(long, value_name = "DIR")]
    dump_smt: Option<PathBuf>,
    /// Perturb engine timing with this seed.
    #[arg(long, hide = true)]
    schedule_seed: Option<u64>,
    /// Run at most this many PDR sub-engines at once.
    #[arg(long, hide = true)]
    pdr_limit: Option<usize>,
}

fn exit_code(result: &mini_kind::RunResult) -> u8 {
    let any = |f: fn(&Verdict) -> bool| result.properties.iter().any(|p| f(&p.verdict));
    if any(|v| matches!(v, Verdict::Falsified { .. })) {
        EXIT_FALSIFIED
    } else if any(|v| matches!(v, Verdict::Unknown { .. })) {
        EXIT_UNKNOWN
    } else {
        EXIT_VALID
    }
}

fn main_inner(cli: Cli) -> Result<u8> {
    let source = fs::read_to_string(&cli.model).with_context(|| format!("cannot read {}", cli.model.display()))?;
    let program = load(&source).map_err(|e| anyhow::anyhow!("{}:{e}", cli.model.display()))?;
    let ts = elaborate(&program);
    if cli.dump_ts {
        emit(&format!("{}\n", serde_json::to_string_pretty(&ts.to_json())?))?;
        return Ok(EXIT_VALID);
    }
    if ts.properties.is_empty() {
        bail!("{}: the model has no properties", cli.model.display());
    }
    let registry = match &cli.solvers {
        Some(p) => SolverRegistry::load(p)?,
        None => SolverRegistry::builtin(),
    };
    let mut cfg = RunConfig::new(registry.get(cli.solver.as_deref())?);
    cfg.bmc = !cli.no_bmc;
    cfg.kind = !cli.no_kind;
    cfg.invgen = !cli.no_invgen;
    cfg.pdr = !cli.no_pdr;
    cfg.max_depth = cli.n;
    cfg.max_k = cli.max_k;
    cfg.timeout = Duration::from_secs(cli.timeout);
    cfg.minimal_cex = cli.minimal_cex;
    cfg.ivc = cli.ivc;
    cfg.smooth = cli.smooth;
    cfg.schedule_seed = cli.schedule_seed;
    cfg.pdr_limit = cli.pdr_limit;
    if let Some(dir) = &cli.dump_smt {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        cfg.transcript_dir = Some(dir.clone());
    }
    if let Some(path) = &cli.read_advice {
        match load_advice(path, &ts) {
            Ok(advice) => {
                for (line, reason) in &advice.dropped {
                    warn!("advice entry `{line}` dropped: {reason}");
                }
                if !advice.dropped.is_empty() {
                    eprintln!("{} advice entries dropped", advice.dropped.len());
                }
                cfg.advice = advice.candidates;
            }
            Err(e @ AdviceError::Format(_)) => eprintln!("warning: ignoring {}: {e}", path.display()),
            Err(e) => return Err(e).with_context(|| format!("{}", path.display())),
        }
    }

    let result = run(&ts, &cfg)?;
    let file = cli
        .model
        .file_name()
        .map_or_else(|| cli.model.display().to_string(), |f| f.to_string_lossy().into_owned());
    let report = Report::new(&ts, &file, &result);
    emit(&report.to_text(&ts))?;
    if let Some(path) = &cli.json {
        write(path, &report.to_json())?;
    }
    if let Some(path) = &cli.write_advice {
        save_advice(path, &result.advice_invariants(&ts)).with_context(|| format!("{}", path.display()))?;
    }
    Ok(exit_code(&result))
}

/// Writes to stdout; a reader that went away is not an error.
fn emit(text: &str) -> Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
