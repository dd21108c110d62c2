use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crossbeam_channel::{unbounded, Receiver, RecvTimeoutError};
use log::{debug, warn};

use super::sexp::{Sexp, SexpReader};
use super::{CancelToken, CheckResult, Formula, SolverConfig, SolverError};
use crate::term::{quote_symbol, Sort, Value};

const POLL: Duration = Duration::from_millis(20);

/// Per-session settings that are not part of the solver configuration.
#[derive(Debug, Clone, Default)]
pub struct SessionOptions {
    /// Names the transcript file.
    pub name: String,
    /// When set, every command sent is appended to `<dir>/<name>.smt2`.
    pub transcript_dir: Option<PathBuf>,
    /// Shared counter incremented on every satisfiability check.
    pub check_counter: Option<Arc<AtomicU64>>,
    pub cancel: Option<CancelToken>,
}

struct Proc {
    child: Child,
    stdin: BufWriter<ChildStdin>,
    rx: Receiver<Result<Sexp, String>>,
}

impl Proc {
    fn spawn(config: &SolverConfig) -> Result<Proc, SolverError> {
        let mut child = Command::new(&config.command)
            .args(&config.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SolverError::Spawn {
                command: config.command.clone(),
                reason: e.to_string(),
            })?;
        let stdin = BufWriter::new(child.stdin.take().expect("piped stdin"));
        let mut stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = unbounded();
        std::thread::spawn(move || {
            let mut reader = SexpReader::new();
            let mut buf = [0u8; 8192];
            let mut pending = Vec::new();
            let mut out = Vec::new();
            loop {
                let n = match stdout.read(&mut buf) {
                    Ok(0) | Err(_) => return,
                    Ok(n) => n,
                };
                pending.extend_from_slice(&buf[..n]);
                let valid = match std::str::from_utf8(&pending) {
                    Ok(s) => s.len(),
                    Err(e) => e.valid_up_to(),
                };
                let text = String::from_utf8_lossy(&pending[..valid]).into_owned();
                pending.drain(..valid);
                for c in text.chars() {
                    if let Err(e) = reader.push(c, &mut out) {
                        let _ = tx.send(Err(e));
                        return;
                    }
                }
                for s in out.drain(..) {
                    if tx.send(Ok(s)).is_err() {
                        return;
                    }
                }
            }
        });
        Ok(Proc { child, stdin, rx })
    }

    fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[derive(Debug, Default)]
struct Scope {
    commands: Vec<String>,
    declared: Vec<String>,
    labels: Vec<String>,
}

/// An incremental SMT-LIB2 conversation with one solver process.
///
/// How long a freshly started solver has to answer `get-info`.
const HANDSHAKE: Duration = Duration::from_secs(10);

/// All commands issued at each scope level are remembered, so that the
/// session can be rebuilt after a query times out.
pub struct Session {
    config: SolverConfig,
    logic: String,
    opts: SessionOptions,
    proc: Option<Proc>,
    scopes: Vec<Scope>,
    declared: HashSet<String>,
    labels: HashSet<String>,
    transcript: Option<BufWriter<File>>,
    checks: u64,
    restarts: u64,
}

impl Session {
    pub fn start(config: &SolverConfig, logic: &str, opts: SessionOptions) -> Result<Session, SolverError> {
        let transcript = match &opts.transcript_dir {
            Some(dir) => {
                let path = dir.join(format!("{}.smt2", opts.name));
                Some(BufWriter::new(
                    File::create(&path).map_err(|e| SolverError::Io(format!("{}: {e}", path.display())))?,
                ))
            }
            None => None,
        };
        let mut s = Session {
            config: config.clone(),
            logic: logic.to_string(),
            opts,
            proc: None,
            scopes: vec![Scope::default()],
            declared: HashSet::new(),
            labels: HashSet::new(),
            transcript,
            checks: 0,
            restarts: 0,
        };
        s.boot()?;
        Ok(s)
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn supports_cores(&self) -> bool {
        self.config.unsat_cores
    }

    /// Number of satisfiability checks issued so far.
    pub fn check_count(&self) -> u64 {
        self.checks
    }

    pub fn restarts(&self) -> u64 {
        self.restarts
    }

    pub fn depth(&self) -> usize {
        self.scopes.len() - 1
    }

    fn boot(&mut self) -> Result<(), SolverError> {
        self.proc = Some(Proc::spawn(&self.config)?);
        self.send("(set-option :produce-models true)")?;
        if self.config.unsat_cores {
            self.send("(set-option :produce-unsat-cores true)")?;
        }
        let logic = format!("(set-logic {})", self.logic);
        self.send(&logic)?;
        self.send("(get-info :name)")?;
        match self.recv(Some(Instant::now() + HANDSHAKE))? {
            Some(Sexp::List(xs)) if xs.first().and_then(Sexp::as_atom) == Some(":name") => Ok(()),
            Some(other) => Err(SolverError::Handshake(other.to_string())),
            None => Err(SolverError::Handshake("no banner".into())),
        }
    }

    fn send(&mut self, cmd: &str) -> Result<(), SolverError> {
        if let Some(t) = &mut self.transcript {
            let _ = writeln!(t, "{cmd}");
        }
        let proc = self.proc.as_mut().ok_or(SolverError::Dead)?;
        writeln!(proc.stdin, "{cmd}").map_err(|_| SolverError::Dead)
    }

    fn deadline(&self) -> Option<Instant> {
        (self.config.timeout_ms > 0).then(|| Instant::now() + Duration::from_millis(self.config.timeout_ms))
    }

    /// Waits for the next response. `Ok(None)` means the deadline passed.
    fn recv(&mut self, deadline: Option<Instant>) -> Result<Option<Sexp>, SolverError> {
        let proc = self.proc.as_mut().ok_or(SolverError::Dead)?;
        proc.stdin.flush().map_err(|_| SolverError::Dead)?;
        loop {
            if let Some(c) = &self.opts.cancel {
                if c.is_cancelled() {
                    self.shutdown();
                    return Err(SolverError::Cancelled);
                }
            }
            if deadline.is_some_and(|d| Instant::now() >= d) {
                return Ok(None);
            }
            let proc = self.proc.as_mut().ok_or(SolverError::Dead)?;
            match proc.rx.recv_timeout(POLL) {
                Ok(Ok(Sexp::List(xs))) if xs.first().and_then(Sexp::as_atom) == Some("error") => {
                    let msg = xs.get(1).map(|m| m.to_string()).unwrap_or_default();
                    return Err(SolverError::Protocol(msg));
                }
                Ok(Ok(s)) => return Ok(Some(s)),
                Ok(Err(e)) => return Err(SolverError::Protocol(e)),
                Err(RecvTimeoutError::Timeout) => continue,
                Err(RecvTimeoutError::Disconnected) => {
                    self.proc = None;
                    return Err(SolverError::Dead);
                }
            }
        }
    }

    fn record(&mut self, cmd: String) -> Result<(), SolverError> {
        self.send(&cmd)?;
        self.scopes.last_mut().unwrap().commands.push(cmd);
        Ok(())
    }

    /// Declares a constant unless it is already live.
    pub fn declare(&mut self, symbol: &str, sort: Sort) -> Result<(), SolverError> {
        if self.declared.contains(symbol) {
            return Ok(());
        }
        self.record(format!("(declare-fun {symbol} () {})", sort.smt_name()))?;
        self.declared.insert(symbol.to_string());
        self.scopes.last_mut().unwrap().declared.push(symbol.to_string());
        Ok(())
    }

    pub fn is_declared(&self, symbol: &str) -> bool {
        self.declared.contains(symbol)
    }

    fn declare_all(&mut self, f: &Formula) -> Result<(), SolverError> {
        for (sym, sort) in &f.symbols {
            self.declare(sym, *sort)?;
        }
        Ok(())
    }

    pub fn assert(&mut self, f: &Formula) -> Result<(), SolverError> {
        self.declare_all(f)?;
        self.record(format!("(assert {})", f.text))
    }

    /// Asserts `f` under a name that may appear in unsat cores.
    pub fn assert_named(&mut self, f: &Formula, label: &str) -> Result<(), SolverError> {
        if self.labels.contains(label) {
            return Err(SolverError::LabelClash(label.to_string()));
        }
        self.declare_all(f)?;
        self.record(format!("(assert (! {} :named {}))", f.text, quote_symbol(label)))?;
        self.labels.insert(label.to_string());
        self.scopes.last_mut().unwrap().labels.push(label.to_string());
        Ok(())
    }

    pub fn push(&mut self) -> Result<(), SolverError> {
        self.send("(push 1)")?;
        self.scopes.push(Scope::default());
        Ok(())
    }

    pub fn pop(&mut self) -> Result<(), SolverError> {
        assert!(self.scopes.len() > 1, "pop without matching push");
        let scope = self.scopes.pop().unwrap();
        for d in &scope.declared {
            self.declared.remove(d);
        }
        for l in &scope.labels {
            self.labels.remove(l);
        }
        if self.proc.is_some() {
            self.send("(pop 1)")?;
        }
        Ok(())
    }

    /// Runs `body` inside a push/pop pair; the pop happens on error too.
    pub fn scoped<T>(&mut self, body: impl FnOnce(&mut Session) -> Result<T, SolverError>) -> Result<T, SolverError> {
        self.push()?;
        let r = body(self);
        let p = self.pop();
        match (r, p) {
            (Ok(v), Ok(())) => Ok(v),
            (Err(e), _) | (Ok(_), Err(e)) => Err(e),
        }
    }

    /// Checks satisfiability of the assertions together with `assumptions`,
    /// which must be boolean literals. Cores are fetched when enabled.
    pub fn check(&mut self, assumptions: &[Formula]) -> Result<CheckResult, SolverError> {
        for a in assumptions {
            self.declare_all(a)?;
        }
        self.checks += 1;
        if let Some(c) = &self.opts.check_counter {
            c.fetch_add(1, Ordering::Relaxed);
        }
        if assumptions.is_empty() {
            self.send("(check-sat)")?;
        } else {
            let lits: Vec<&str> = assumptions.iter().map(|a| a.text.as_str()).collect();
            self.send(&format!("(check-sat-assuming ({}))", lits.join(" ")))?;
        }
        let answer = match self.recv(self.deadline())? {
            Some(a) => a,
            None => {
                warn!("{}: query timed out, restarting solver", self.opts.name);
                self.recycle()?;
                return Ok(CheckResult::Unknown("timeout".into()));
            }
        };
        match answer.as_atom() {
            Some("sat") => Ok(CheckResult::Sat),
            Some("unsat") => {
                if !self.config.unsat_cores {
                    return Ok(CheckResult::Unsat(Vec::new()));
                }
                self.send("(get-unsat-core)")?;
                let Some(core) = self.recv(self.deadline())? else {
                    self.recycle()?;
                    return Ok(CheckResult::Unknown("timeout".into()));
                };
                let names = core
                    .as_list()
                    .ok_or_else(|| SolverError::Protocol(format!("bad core `{core}`")))?
                    .iter()
                    .map(|s| s.symbol().map_or_else(|| s.to_string(), str::to_string))
                    .collect();
                Ok(CheckResult::Unsat(names))
            }
            Some("unknown") => Ok(CheckResult::Unknown("unknown".into())),
            _ => Err(SolverError::Protocol(format!("unexpected answer `{answer}`"))),
        }
    }

    /// Model values after a `Sat` answer. Symbols never declared are
    /// unconstrained and get the default value of their sort.
    pub fn values(&mut self, symbols: &[(String, Sort)]) -> Result<Vec<Value>, SolverError> {
        let asked: Vec<&(String, Sort)> = symbols.iter().filter(|(s, _)| self.declared.contains(s)).collect();
        let mut answers = Vec::new();
        if !asked.is_empty() {
            let names: Vec<&str> = asked.iter().map(|(s, _)| s.as_str()).collect();
            self.send(&format!("(get-value ({}))", names.join(" ")))?;
            let Some(resp) = self.recv(self.deadline())? else {
                self.recycle()?;
                return Err(SolverError::Incomplete("model query timed out".into()));
            };
            let pairs = resp
                .as_list()
                .ok_or_else(|| SolverError::Protocol(format!("bad model `{resp}`")))?;
            if pairs.len() != asked.len() {
                return Err(SolverError::Protocol("model size mismatch".into()));
            }
            for (pair, (_, sort)) in pairs.iter().zip(&asked) {
                let v = pair
                    .as_list()
                    .and_then(|p| p.get(1))
                    .and_then(|v| v.to_value(*sort))
                    .ok_or_else(|| SolverError::Protocol(format!("bad model value `{pair}`")))?;
                answers.push(v);
            }
        }
        let mut answers = answers.into_iter();
        Ok(symbols
            .iter()
            .map(|(s, sort)| {
                if self.declared.contains(s) {
                    answers.next().expect("answered")
                } else {
                    Value::default_of(*sort)
                }
            })
            .collect())
    }

    /// Convenience: values keyed by symbol.
    pub fn value_map(&mut self, symbols: &[(String, Sort)]) -> Result<BTreeMap<String, Value>, SolverError> {
        let vals = self.values(symbols)?;
        Ok(symbols.iter().map(|(s, _)| s.clone()).zip(vals).collect())
    }

    /// Kills the process and rebuilds the assertion stack in a fresh one.
    fn recycle(&mut self) -> Result<(), SolverError> {
        if let Some(mut p) = self.proc.take() {
            p.kill();
        }
        self.restarts += 1;
        if let Some(t) = &mut self.transcript {
            let _ = writeln!(t, "; restart");
        }
        self.boot()?;
        let commands: Vec<Vec<String>> = self.scopes.iter().map(|s| s.commands.clone()).collect();
        for (i, cmds) in commands.iter().enumerate() {
            if i > 0 {
                self.send("(push 1)")?;
            }
            for c in cmds {
                self.send(c)?;
            }
        }
        debug!("{}: replayed {} scopes", self.opts.name, commands.len());
        Ok(())
    }

    fn shutdown(&mut self) {
        if let Some(mut p) = self.proc.take() {
            let _ = writeln!(p.stdin, "(exit)");
            let _ = p.stdin.flush();
            p.kill();
        }
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        self.shutdown();
        if let Some(t) = &mut self.transcript {
            let _ = t.flush();
        }
    }
}
