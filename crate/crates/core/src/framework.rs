//! Runs the enabled engines concurrently and turns their messages into one
//! verdict per property.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crossbeam_channel::{unbounded, RecvTimeoutError, Sender};
use log::{debug, info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::elaborate::{TransitionSystem, INIT_FLAG};
use crate::engine::invgen::{self, CandidateSet, Quiet, Status};
use crate::engine::unroll::shortest_trace;
use crate::engine::{self, Ctx, EngineKind, EngineSettings, Message};
use crate::ivc::{compute_ivc, IvcResult};
use crate::smoothing::{smooth, Smoothed};
use crate::solver::{CancelToken, SolverConfig, SolverError};
use crate::term::Term;
use crate::trace::{check_trace, Trace};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub bmc: bool,
    pub kind: bool,
    pub invgen: bool,
    pub pdr: bool,
    /// Deepest BMC step.
    pub max_depth: usize,
    pub max_k: usize,
    pub timeout: Duration,
    /// Hold PDR counterexamples until BMC has ruled out shorter ones.
    pub minimal_cex: bool,
    pub ivc: bool,
    pub smooth: bool,
    /// Candidate invariants read from an advice file.
    pub advice: Vec<Term>,
    pub transcript_dir: Option<PathBuf>,
    /// Concurrent PDR sub-engines; `None` means one per property.
    pub pdr_limit: Option<usize>,
    /// Perturbs engine timing, for schedule testing.
    pub schedule_seed: Option<u64>,
}

impl RunConfig {
    pub fn new(solver: SolverConfig) -> Self {
        RunConfig {
            solver,
            bmc: true,
            kind: true,
            invgen: true,
            pdr: true,
            max_depth: 200,
            max_k: 20,
            timeout: Duration::from_secs(60),
            minimal_cex: false,
            ivc: false,
            smooth: false,
            advice: Vec::new(),
            transcript_dir: None,
            pdr_limit: None,
            schedule_seed: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("the model has no properties")]
    NoProperties,
    #[error("every engine is disabled")]
    NoEngines,
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Valid {
        k: usize,
        invariants: Vec<Term>,
        ivc: Option<IvcResult>,
    },
    Falsified {
        trace: Trace,
        smoothed: Option<Smoothed>,
    },
    Unknown {
        reason: String,
    },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Valid { .. } => "valid",
            Verdict::Falsified { .. } => "falsified",
            Verdict::Unknown { .. } => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyResult {
    pub name: String,
    pub verdict: Verdict,
    /// Wall time from the start of the run to the verdict.
    pub time: Duration,
    pub engine: Option<EngineKind>,
}

/// What the advice file produced.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AdviceUse {
    pub candidates: usize,
    pub proved: usize,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub properties: Vec<PropertyResult>,
    /// Every invariant proved during the run, without duplicates.
    pub invariants: Vec<Term>,
    /// Satisfiability checks issued by all sessions.
    pub checks: u64,
    pub diagnostics: Vec<String>,
    pub advice: Option<AdviceUse>,
    pub elapsed: Duration,
}

impl RunResult {
    pub fn property(&self, name: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.name == name)
    }

    /// Invariants worth saving as advice: those that IVC kept when it ran,
    /// otherwise all proved ones, plus the valid properties themselves and
    /// their definitions.
    pub fn advice_invariants(&self, ts: &TransitionSystem) -> Vec<Term> {
        let mut out: Vec<Term> = Vec::new();
        let ivc_ran = self
            .properties
            .iter()
            .any(|p| matches!(&p.verdict, Verdict::Valid { ivc: Some(_), .. }));
        for p in &self.properties {
            if let Verdict::Valid { ivc, .. } = &p.verdict {
                if let Some(prop) = ts.property(&p.name) {
                    out.push(prop.term.clone());
                    // The definition too, so the entry outlives a renamed
                    // property variable.
                    let def = prop.term.as_var().and_then(|v| ts.equation(&v.name));
                    if let Some(eq) = def {
                        if !eq.rhs.has_prev() && !eq.rhs.vars().iter().any(|v| &*v.name == INIT_FLAG) {
                            out.push(eq.rhs.clone());
                        }
                    }
                }
                if let Some(ivc) = ivc {
                    out.extend(ivc.reduced_invariants.iter().cloned());
                }
            }
        }
        if !ivc_ran {
            out.extend(self.invariants.iter().cloned());
        }
        let mut seen = BTreeSet::new();
        out.retain(|t| seen.insert(t.clone()));
        out
    }
}

struct Pending {
    k: usize,
    invariants: Vec<Term>,
}

struct Director<'a> {
    ts: &'a TransitionSystem,
    cfg: &'a RunConfig,
    start: Instant,
    inboxes: Vec<Sender<Message>>,
    prop_cancel: BTreeMap<String, CancelToken>,
    results: BTreeMap<String, PropertyResult>,
    inductive: BTreeMap<String, Pending>,
    held: BTreeMap<String, (Trace, EngineKind)>,
    base: Option<usize>,
    alive: BTreeMap<EngineKind, usize>,
    seen: BTreeSet<Term>,
    invariants: Vec<Term>,
    diagnostics: Vec<String>,
}

impl Director<'_> {
    fn broadcast(&self, msg: &Message) {
        for tx in &self.inboxes {
            let _ = tx.send(msg.clone());
        }
    }

    fn resolve(&mut self, property: &str, verdict: Verdict, engine: EngineKind) {
        if self.results.contains_key(property) {
            return;
        }
        debug!("{property}: {} by {engine}", verdict.label());
        self.inductive.remove(property);
        self.held.remove(property);
        if let Some(c) = self.prop_cancel.get(property) {
            c.cancel();
        }
        let msg = match &verdict {
            Verdict::Valid { k, invariants, .. } => Message::Valid {
                property: property.to_string(),
                k: *k,
                invariants: invariants.clone(),
                engine,
            },
            Verdict::Falsified { trace, .. } => Message::Falsified {
                property: property.to_string(),
                trace: trace.clone(),
                engine,
            },
            Verdict::Unknown { .. } => unreachable!("only verdicts are resolved"),
        };
        self.results.insert(
            property.to_string(),
            PropertyResult {
                name: property.to_string(),
                verdict,
                time: self.start.elapsed(),
                engine: Some(engine),
            },
        );
        self.broadcast(&msg);
    }

    fn release_confirmed(&mut self) {
        let Some(base) = self.base else { return };
        let ready: Vec<String> = self
            .inductive
            .iter()
            .filter(|(_, p)| base + 1 >= p.k)
            .map(|(n, _)| n.clone())
            .collect();
        for name in ready {
            let p = self.inductive.remove(&name).expect("pending");
            self.resolve(
                &name,
                Verdict::Valid {
                    k: p.k,
                    invariants: p.invariants,
                    ivc: None,
                },
                EngineKind::Kind,
            );
        }
        let ready: Vec<String> = self
            .held
            .iter()
            .filter(|(_, (t, _))| base + 2 >= t.len())
            .map(|(n, _)| n.clone())
            .collect();
        for name in ready {
            self.release_held(&name);
        }
    }

    fn release_held(&mut self, name: &str) {
        if let Some((trace, engine)) = self.held.remove(name) {
            self.resolve(name, Verdict::Falsified { trace, smoothed: None }, engine);
        }
    }

    fn handle(&mut self, msg: Message) {
        match msg {
            Message::Invariants { invariants, engine } => {
                let new: Vec<Term> = invariants.into_iter().filter(|t| self.seen.insert(t.clone())).collect();
                if !new.is_empty() {
                    self.invariants.extend(new.iter().cloned());
                    self.broadcast(&Message::Invariants { invariants: new, engine });
                }
            }
            Message::BaseStep(k) => {
                self.base = Some(self.base.map_or(k, |b| b.max(k)));
                self.release_confirmed();
            }
            Message::InductiveOnly { property, k, invariants } => {
                if !self.results.contains_key(&property) {
                    self.inductive.insert(property, Pending { k, invariants });
                    self.release_confirmed();
                }
            }
            Message::Valid {
                property,
                k,
                invariants,
                engine,
            } => self.resolve(
                &property,
                Verdict::Valid {
                    k,
                    invariants,
                    ivc: None,
                },
                engine,
            ),
            Message::Falsified { property, trace, engine } => {
                if self.results.contains_key(&property) {
                    return;
                }
                let bmc_running = self.alive.get(&EngineKind::Bmc).copied().unwrap_or(0) > 0;
                let confirmed = self.base.is_some_and(|b| b + 2 >= trace.len());
                if self.cfg.minimal_cex && engine != EngineKind::Bmc && bmc_running && trace.len() > 1 && !confirmed {
                    self.held.insert(property, (trace, engine));
                } else {
                    self.resolve(&property, Verdict::Falsified { trace, smoothed: None }, engine);
                }
            }
            Message::Done { engine, diagnostic } => {
                if let Some(d) = diagnostic {
                    warn!("{d}");
                    self.diagnostics.push(d);
                }
                let n = self.alive.entry(engine).or_insert(1);
                *n -= 1;
                if *n == 0 {
                    self.broadcast(&Message::Done {
                        engine,
                        diagnostic: None,
                    });
                    if engine == EngineKind::Bmc {
                        let held: Vec<String> = self.held.keys().cloned().collect();
                        for h in held {
                            self.release_held(&h);
                        }
                    }
                }
            }
        }
    }

    fn all_resolved(&self) -> bool {
        self.results.len() == self.ts.properties.len()
    }

    fn any_alive(&self) -> bool {
        self.alive.values().any(|&n| n > 0)
    }
}

fn done(engine: EngineKind, r: Result<(), SolverError>) -> Message {
    let diagnostic = match r {
        Ok(()) | Err(SolverError::Cancelled) => None,
        Err(e) => Some(format!("{engine}: {e}")),
    };
    Message::Done { engine, diagnostic }
}

/// Proves advice candidates before the engines start.
fn prove_advice(ts: &TransitionSystem, cfg: &RunConfig, settings: &EngineSettings) -> Result<CandidateSet, SolverError> {
    let mut base = settings.session("advice-base", None)?;
    let mut step = settings.session("advice-step", None)?;
    let mut set = CandidateSet::new(cfg.advice.clone());
    invgen::prove_candidates(&mut base, &mut step, ts, &mut set, invgen::MAX_K, &mut Quiet)?;
    Ok(set)
}

/// Verifies every property of `ts`.
pub fn run(ts: &TransitionSystem, cfg: &RunConfig) -> Result<RunResult, RunError> {
    if ts.properties.is_empty() {
        return Err(RunError::NoProperties);
    }
    if !(cfg.bmc || cfg.kind || cfg.invgen || cfg.pdr) {
        return Err(RunError::NoEngines);
    }
    let start = Instant::now();
    let deadline = start + cfg.timeout;
    let checks = Arc::new(AtomicU64::new(0));
    let settings = EngineSettings {
        solver: cfg.solver.clone(),
        logic: cfg.solver.logic_for(ts),
        transcript_dir: cfg.transcript_dir.clone(),
        checks: checks.clone(),
        max_depth: cfg.max_depth,
        max_k: cfg.max_k,
    };
    // Fail early, and once, when the solver cannot be started at all.
    drop(settings.session("probe", None)?);

    let mut diagnostics = Vec::new();
    let mut seeded = Vec::new();
    let mut advice = None;
    // Properties that are themselves proved advice, with their depth.
    let mut settled = Vec::new();
    if !cfg.advice.is_empty() {
        match prove_advice(ts, cfg, &settings) {
            Ok(set) => {
                let proved = set.proved();
                info!("advice: {} of {} candidates proved", proved.len(), cfg.advice.len());
                advice = Some(AdviceUse {
                    candidates: cfg.advice.len(),
                    proved: proved.len(),
                });
                for p in &ts.properties {
                    let at = set.candidates.iter().position(|c| *c == p.term);
                    if let Some(Status::Proved(k)) = at.map(|i| &set.status[i]) {
                        let invariants = proved.iter().filter(|t| **t != p.term).cloned().collect();
                        settled.push((p.name.clone(), *k, invariants));
                    }
                }
                seeded = proved;
            }
            Err(e) => diagnostics.push(format!("advice: {e}")),
        }
    }

    let cancel = CancelToken::new();
    let prop_cancel: BTreeMap<String, CancelToken> =
        ts.properties.iter().map(|p| (p.name.clone(), CancelToken::new())).collect();
    let (to_director, from_engines) = unbounded::<Message>();
    let mut producers = BTreeSet::new();
    if cfg.invgen {
        producers.insert(EngineKind::Invgen);
    }
    if cfg.pdr {
        producers.insert(EngineKind::Pdr);
    }
    let jitter = |i: u64| cfg.schedule_seed.map(|s| ChaCha8Rng::seed_from_u64(s.wrapping_mul(0x9e37_79b9).wrapping_add(i)));

    let mut dir = Director {
        ts,
        cfg,
        start,
        inboxes: Vec::new(),
        prop_cancel: prop_cancel.clone(),
        results: BTreeMap::new(),
        inductive: BTreeMap::new(),
        held: BTreeMap::new(),
        base: None,
        alive: BTreeMap::new(),
        seen: BTreeSet::new(),
        invariants: Vec::new(),
        diagnostics,
    };
    // Advice invariants are known before anything runs.
    for t in &seeded {
        if dir.seen.insert(t.clone()) {
            dir.invariants.push(t.clone());
        }
    }
    for (name, k, invariants) in settled {
        dir.resolve(&name, Verdict::Valid { k, invariants, ivc: None }, EngineKind::Advice);
    }
    let mut timed_out = false;
    std::thread::scope(|scope| {
        if dir.all_resolved() {
            return;
        }
        let mut spawn = |kind: EngineKind, idx: u64, f: fn(&mut Ctx) -> Result<(), SolverError>| {
            let (tx, rx) = unbounded();
            if kind == EngineKind::Kind && !seeded.is_empty() {
                let _ = tx.send(Message::Invariants {
                    invariants: seeded.clone(),
                    engine: EngineKind::Advice,
                });
            }
            for r in dir.results.values() {
                if let Verdict::Valid { k, invariants, .. } = &r.verdict {
                    let _ = tx.send(Message::Valid {
                        property: r.name.clone(),
                        k: *k,
                        invariants: invariants.clone(),
                        engine: EngineKind::Advice,
                    });
                }
            }
            dir.inboxes.push(tx);
            *dir.alive.entry(kind).or_insert(0) += 1;
            let mut ctx = Ctx::new(
                ts,
                &settings,
                kind,
                producers.clone(),
                rx,
                to_director.clone(),
                cancel.clone(),
                jitter(idx),
            );
            let out = to_director.clone();
            scope.spawn(move || {
                let r = f(&mut ctx);
                let _ = out.send(done(kind, r));
            });
        };
        if cfg.bmc {
            spawn(EngineKind::Bmc, 0, engine::run_bmc);
        }
        if cfg.kind {
            spawn(EngineKind::Kind, 1, engine::run_kind);
        }
        if cfg.invgen {
            spawn(EngineKind::Invgen, 2, engine::run_invgen);
        }
        if cfg.pdr {
            let queue: Arc<Mutex<VecDeque<String>>> =
                Arc::new(Mutex::new(ts.properties.iter().map(|p| p.name.clone()).collect()));
            let workers = cfg.pdr_limit.unwrap_or(ts.properties.len()).clamp(1, ts.properties.len());
            for w in 0..workers {
                *dir.alive.entry(EngineKind::Pdr).or_insert(0) += 1;
                let queue = queue.clone();
                let out = to_director.clone();
                let prop_cancel = &prop_cancel;
                let cancel = &cancel;
                let settings = &settings;
                let mut rng = jitter(3 + w as u64);
                scope.spawn(move || {
                    let mut last = Ok(());
                    loop {
                        let next = queue.lock().expect("queue lock").pop_front();
                        let Some(name) = next else { break };
                        if cancel.is_cancelled() {
                            break;
                        }
                        let token = prop_cancel[&name].clone();
                        if token.is_cancelled() {
                            continue;
                        }
                        // A sub-engine needs no inbox: it ignores foreign
                        // invariants and is stopped through its token.
                        let (_tx, rx) = unbounded();
                        let mut ctx = Ctx::new(
                            ts,
                            settings,
                            EngineKind::Pdr,
                            BTreeSet::new(),
                            rx,
                            out.clone(),
                            token,
                            rng.take(),
                        );
                        match engine::run_pdr(&mut ctx, &name) {
                            Err(SolverError::Cancelled) => {}
                            Err(SolverError::Incomplete(r)) => {
                                last = Err(SolverError::Incomplete(format!("{name}: {r}")));
                            }
                            Err(e) => {
                                last = Err(SolverError::Incomplete(format!("{name}: {e}")));
                            }
                            Ok(()) => {}
                        }
                    }
                    let _ = out.send(done(EngineKind::Pdr, last));
                });
            }
        }
        drop(to_director);

        loop {
            if dir.all_resolved() || !dir.any_alive() {
                break;
            }
            let now = Instant::now();
            if now >= deadline {
                timed_out = true;
                break;
            }
            match from_engines.recv_timeout((deadline - now).min(Duration::from_millis(50))) {
                Ok(msg) => dir.handle(msg),
                Err(RecvTimeoutError::Timeout) => {}
                Err(RecvTimeoutError::Disconnected) => break,
            }
        }
        cancel.cancel();
        for c in prop_cancel.values() {
            c.cancel();
        }
    });
    // Late diagnostics only; verdicts after shutdown are not taken.
    for msg in from_engines.try_iter() {
        if let Message::Done {
            diagnostic: Some(d), ..
        } = msg
        {
            dir.diagnostics.push(d);
        }
    }

    let mut properties = Vec::new();
    for p in &ts.properties {
        let r = match dir.results.remove(&p.name) {
            Some(r) => r,
            None => {
                let reason = if dir.inductive.contains_key(&p.name) && !cfg.bmc {
                    "no-base-engine"
                } else if timed_out {
                    "timeout"
                } else {
                    "incomplete"
                };
                PropertyResult {
                    name: p.name.clone(),
                    verdict: Verdict::Unknown { reason: reason.into() },
                    time: start.elapsed(),
                    engine: None,
                }
            }
        };
        properties.push(r);
    }
    let mut diagnostics = dir.diagnostics;
    postprocess(ts, cfg, &settings, &mut properties, &mut diagnostics);
    Ok(RunResult {
        properties,
        invariants: dir.invariants,
        checks: checks.load(Ordering::Relaxed),
        diagnostics,
        advice,
        elapsed: start.elapsed(),
    })
}

/// Work done after the verdicts are in: canonical counterexamples, then
/// smoothing and IVC on request.
fn postprocess(
    ts: &TransitionSystem,
    cfg: &RunConfig,
    settings: &EngineSettings,
    properties: &mut [PropertyResult],
    diagnostics: &mut Vec<String>,
) {
    for r in properties.iter_mut() {
        let prop = ts.property(&r.name).expect("known property");
        match &mut r.verdict {
            Verdict::Falsified { trace, smoothed } => {
                // Which engine won is down to timing; the reported trace is
                // not.
                let canonical = settings
                    .session(&format!("cex-{}", r.name), None)
                    .and_then(|mut s| shortest_trace(&mut s, ts, &prop.term, trace.len()));
                match canonical {
                    Ok(Some(t)) if check_trace(ts, &r.name, &t).is_ok() => *trace = t,
                    Ok(_) => {}
                    Err(e) => diagnostics.push(format!("{}: {e}", r.name)),
                }
                if let Err(e) = check_trace(ts, &r.name, trace) {
                    diagnostics.push(format!("{}: counterexample does not replay: {e}", r.name));
                }
                if cfg.smooth {
                    match smooth(ts, &r.name, trace, settings) {
                        Ok(s) => *smoothed = Some(s),
                        Err(e) => diagnostics.push(format!("{}: smoothing: {e}", r.name)),
                    }
                }
            }
            Verdict::Valid { k, invariants, ivc } if cfg.ivc => match compute_ivc(ts, &r.name, *k, invariants, settings) {
                Ok(res) => *ivc = Some(res),
                Err(e) => diagnostics.push(format!("{}: IVC: {e}", r.name)),
            },
            _ => {}
        }
    }
}
