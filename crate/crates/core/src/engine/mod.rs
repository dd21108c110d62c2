//! Verification engines and the messages they exchange.

mod bmc;
pub mod invgen;
mod kind;
pub mod pdr;
pub mod unroll;

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::sync::atomic::AtomicU64;
use std::sync::Arc;
use std::time::Duration;

use crossbeam_channel::{Receiver, RecvTimeoutError, Sender};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use bmc::run_bmc;
pub use invgen::{candidates, prove_candidates, run_invgen};
pub use kind::run_kind;
pub use pdr::{run_pdr, Pdr, PdrOutcome};

use crate::elaborate::TransitionSystem;
use crate::solver::{CancelToken, Session, SessionOptions, SolverConfig, SolverError};
use crate::term::Term;
use crate::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Bmc,
    Kind,
    Invgen,
    Pdr,
    Advice,
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineKind::Bmc => "bmc",
            EngineKind::Kind => "kind",
            EngineKind::Invgen => "invgen",
            EngineKind::Pdr => "pdr",
            EngineKind::Advice => "advice",
        })
    }
}

#[derive(Debug, Clone)]
pub enum Message {
    /// Proved invariants.
    Invariants { invariants: Vec<Term>, engine: EngineKind },
    /// No unresolved property fails at any depth up to and including this one.
    BaseStep(usize),
    Valid {
        property: String,
        k: usize,
        invariants: Vec<Term>,
        engine: EngineKind,
    },
    Falsified {
        property: String,
        trace: Trace,
        engine: EngineKind,
    },
    /// The inductive step holds at `k`; the base case is still pending.
    InductiveOnly {
        property: String,
        k: usize,
        invariants: Vec<Term>,
    },
    Done {
        engine: EngineKind,
        diagnostic: Option<String>,
    },
}

/// What every engine needs to open sessions and bound its search.
#[derive(Debug, Clone)]
pub struct EngineSettings {
    pub solver: SolverConfig,
    pub logic: String,
    pub transcript_dir: Option<PathBuf>,
    pub checks: Arc<AtomicU64>,
    pub max_depth: usize,
    pub max_k: usize,
}

impl EngineSettings {
    pub fn session(&self, name: &str, cancel: Option<CancelToken>) -> Result<Session, SolverError> {
        Session::start(
            &self.solver,
            &self.logic,
            SessionOptions {
                name: name.replace(['/', '\\'], "_"),
                transcript_dir: self.transcript_dir.clone(),
                check_counter: Some(self.checks.clone()),
                cancel,
            },
        )
    }
}

/// An engine's connection to the director.
pub struct Ctx<'a> {
    pub ts: &'a TransitionSystem,
    pub settings: &'a EngineSettings,
    pub engine: EngineKind,
    /// Engines whose invariants are still expected.
    pub producers: BTreeSet<EngineKind>,
    inbox: Receiver<Message>,
    outbox: Sender<Message>,
    cancel: CancelToken,
    jitter: Option<ChaCha8Rng>,
    resolved: BTreeSet<String>,
}

impl<'a> Ctx<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        ts: &'a TransitionSystem,
        settings: &'a EngineSettings,
        engine: EngineKind,
        producers: BTreeSet<EngineKind>,
        inbox: Receiver<Message>,
        outbox: Sender<Message>,
        cancel: CancelToken,
        jitter: Option<ChaCha8Rng>,
    ) -> Self {
        Ctx {
            ts,
            settings,
            engine,
            producers,
            inbox,
            outbox,
            cancel,
            jitter,
            resolved: BTreeSet::new(),
        }
    }

    pub fn session(&self, name: &str) -> Result<Session, SolverError> {
        self.settings.session(name, Some(self.cancel.clone()))
    }

    pub fn send(&self, msg: Message) {
        // The director may already be gone at shutdown.
        let _ = self.outbox.send(msg);
    }

    pub fn is_cancelled(&self) -> bool {
        self.cancel.is_cancelled()
    }

    /// Records a resolution this engine made itself, ahead of the director's
    /// confirmation.
    pub fn mark_resolved(&mut self, property: &str) {
        self.resolved.insert(property.to_string());
    }

    pub fn is_resolved(&self, property: &str) -> bool {
        self.resolved.contains(property)
    }

    /// Properties not yet resolved, in system order.
    pub fn unresolved(&self) -> Vec<&'a crate::elaborate::Property> {
        let ts: &'a TransitionSystem = self.ts;
        ts.properties.iter().filter(|p| !self.resolved.contains(&p.name)).collect()
    }

    fn note(&mut self, msg: &Message) {
        match msg {
            Message::Valid { property, .. } | Message::Falsified { property, .. } => {
                self.resolved.insert(property.clone());
            }
            Message::Done { engine, .. } => {
                self.producers.remove(engine);
            }
            _ => {}
        }
    }

    /// Drains pending messages without blocking.
    pub fn poll(&mut self) -> Vec<Message> {
        let msgs: Vec<Message> = self.inbox.try_iter().collect();
        for m in &msgs {
            self.note(m);
        }
        msgs
    }

    /// Blocks for the next message; `None` on cancellation or when the
    /// director has gone.
    pub fn wait(&mut self) -> Option<Message> {
        loop {
            if self.is_cancelled() {
                return None;
            }
            match self.inbox.recv_timeout(Duration::from_millis(20)) {
                Ok(m) => {
                    self.note(&m);
                    return Some(m);
                }
                Err(RecvTimeoutError::Timeout) => continue,
                Err(RecvTimeoutError::Disconnected) => return None,
            }
        }
    }

    /// Sleeps for a random short while when a schedule seed is set, to
    /// perturb the interleaving of engines.
    pub fn pause(&mut self) {
        if let Some(rng) = &mut self.jitter {
            let micros = rng.random_range(0..3000);
            std::thread::sleep(Duration::from_micros(micros));
        }
    }

    pub fn check_cancel(&self) -> Result<(), SolverError> {
        if self.is_cancelled() {
            Err(SolverError::Cancelled)
        } else {
            Ok(())
        }
    }
}
