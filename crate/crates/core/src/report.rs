//! Rendering run results as text or JSON.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::elaborate::{TransitionSystem, VarKind};
use crate::engine::EngineKind;
use crate::framework::{RunResult, Verdict};
use crate::frontend::print_term;
use crate::trace::Trace;

/// One equation of a core, located in the source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreEntry {
    pub name: String,
    pub file: String,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IvcReport {
    pub core: Vec<CoreEntry>,
    pub reduced_invariants: Vec<String>,
    pub minimal: bool,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoothedReport {
    pub trace: Trace,
    pub deltas: usize,
    pub original_deltas: usize,
    pub timed_out: bool,
}

/// Facts that depend on which engine happened to finish first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyRuntime {
    pub engine: Option<EngineKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub invariants: Vec<String>,
    pub time_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub name: String,
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Trace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothed: Option<SmoothedReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ivc: Option<IvcReport>,
    pub runtime: PropertyRuntime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdviceReport {
    pub candidates: usize,
    pub proved: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRuntime {
    pub elapsed_ms: u64,
    pub checks: u64,
    pub invariants: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub model: String,
    pub properties: Vec<PropertyReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advice: Option<AdviceReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
    pub runtime: RunRuntime,
}

impl Report {
    /// `file` names the model in core locations.
    pub fn new(ts: &TransitionSystem, file: &str, result: &RunResult) -> Report {
        let core_entry = |origin: &str| CoreEntry {
            name: origin.to_string(),
            file: file.to_string(),
            line: ts.equation(origin).map_or(0, |e| e.span.start_line),
        };
        let properties = result
            .properties
            .iter()
            .map(|p| {
                let mut r = PropertyReport {
                    name: p.name.clone(),
                    verdict: p.verdict.label().into(),
                    reason: None,
                    trace: None,
                    smoothed: None,
                    ivc: None,
                    runtime: PropertyRuntime {
                        engine: p.engine,
                        k: None,
                        invariants: Vec::new(),
                        time_ms: p.time.as_millis() as u64,
                    },
                };
                match &p.verdict {
                    Verdict::Valid { k, invariants, ivc } => {
                        r.runtime.k = Some(*k);
                        r.runtime.invariants = invariants.iter().map(print_term).collect();
                        r.ivc = ivc.as_ref().map(|i| IvcReport {
                            core: i.core.iter().map(|o| core_entry(o)).collect(),
                            reduced_invariants: i.reduced_invariants.iter().map(print_term).collect(),
                            minimal: i.minimal,
                            k: i.k,
                            notes: i.notes.clone(),
                        });
                    }
                    Verdict::Falsified { trace, smoothed } => {
                        r.trace = Some(trace.clone());
                        r.smoothed = smoothed.as_ref().map(|s| SmoothedReport {
                            trace: s.trace.clone(),
                            deltas: s.deltas,
                            original_deltas: s.original_deltas,
                            timed_out: s.timed_out,
                        });
                    }
                    Verdict::Unknown { reason } => r.reason = Some(reason.clone()),
                }
                r
            })
            .collect();
        Report {
            model: file.to_string(),
            properties,
            advice: result.advice.as_ref().map(|a| AdviceReport {
                candidates: a.candidates,
                proved: a.proved,
            }),
            diagnostics: result.diagnostics.clone(),
            runtime: RunRuntime {
                elapsed_ms: result.elapsed.as_millis() as u64,
                checks: result.checks,
                invariants: result.invariants.iter().map(print_term).collect(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Report> {
        serde_json::from_str(text)
    }

    /// The report without its `runtime` sections, for comparing runs.
    pub fn without_runtime(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("runtime");
            if let Some(props) = obj.get_mut("properties").and_then(|p| p.as_array_mut()) {
                for p in props {
                    if let Some(p) = p.as_object_mut() {
                        p.remove("runtime");
                    }
                }
            }
        }
        v
    }

    pub fn to_text(&self, ts: &TransitionSystem) -> String {
        let mut out = String::new();
        for p in &self.properties {
            let rt = &p.runtime;
            let mut meta = Vec::new();
            if let Some(k) = rt.k {
                meta.push(format!("k={k}"));
            }
            if let Some(t) = &p.trace {
                meta.push(format!("length {}", t.len()));
            }
            if let Some(r) = &p.reason {
                meta.push(r.clone());
            }
            if let Some(e) = rt.engine {
                meta.push(e.to_string());
            }
            meta.push(format!("{:.3}s", rt.time_ms as f64 / 1000.0));
            let _ = writeln!(out, "{}: {} ({})", p.name, p.verdict, meta.join(", "));
            if let Some(t) = &p.trace {
                table(&mut out, ts, t);
            }
            if let Some(s) = &p.smoothed {
                let note = if s.timed_out { ", smoothing-timeout" } else { "" };
                let _ = writeln!(out, "  smoothed ({} -> {} input changes{note}):", s.original_deltas, s.deltas);
                table(&mut out, ts, &s.trace);
            }
            if let Some(ivc) = &p.ivc {
                let core: Vec<String> = ivc
                    .core
                    .iter()
                    .map(|c| format!("{}:{} ({})", c.file, c.line, c.name))
                    .collect();
                let _ = writeln!(out, "  IVC: {}", core.join(", "));
                if !ivc.reduced_invariants.is_empty() {
                    let _ = writeln!(out, "  IVC invariants: {}", ivc.reduced_invariants.join("; "));
                }
            }
        }
        for d in &self.diagnostics {
            let _ = writeln!(out, "warning: {d}");
        }
        out
    }
}

/// Steps as columns, one row per variable, inputs first; internal variables
/// are left out.
fn table(out: &mut String, ts: &TransitionSystem, trace: &Trace) {
    let _ = writeln!(out, "  step: {}", (0..trace.len()).map(|t| t.to_string()).collect::<Vec<_>>().join(" "));
    for kind in [VarKind::Input, VarKind::Output, VarKind::Local, VarKind::Instance] {
        for v in ts.vars.iter().filter(|v| v.kind == kind) {
            let cells: Vec<String> = trace
                .column(&v.name)
                .into_iter()
                .map(|c| c.map_or_else(|| "-".to_string(), |v| v.to_string()))
                .collect();
            let _ = writeln!(out, "  {}: {}", v.name, cells.join(" "));
        }
    }
}
