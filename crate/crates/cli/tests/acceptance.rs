//! Acceptance suite: one line per criterion, nonzero exit when any fails.
//!
//! Reference values come from `mini-kind-oracle`, never from the engines.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use mini_kind::advice::{parse_advice, render};
use mini_kind::engine::invgen::Quiet;
use mini_kind::engine::{EngineSettings, Pdr, PdrOutcome};
use mini_kind::frontend::load;
use mini_kind::{check_trace, elaborate, run, EngineKind, Report, RunConfig, SolverRegistry, TransitionSystem, Verdict};
use mini_kind_oracle::smt::{certificate_holds, minimal_cores, provable, Solver};
use mini_kind_oracle::{Bounds, Expect, Explorer, Outcome};

const ORACLE_DEPTH: usize = 8;

struct Model {
    name: String,
    path: PathBuf,
    source: String,
    ts: TransitionSystem,
    bounds: Bounds,
}

fn corpus() -> Vec<Model> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
        .expect("corpus directory")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "lus"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let source = fs::read_to_string(&path).expect("model");
            let ts = elaborate(&load(&source).unwrap_or_else(|e| panic!("{}: {e}", path.display())));
            let bounds = fs::read_to_string(path.with_extension("bounds"))
                .map(|b| Bounds::parse(&b).expect("bounds"))
                .unwrap_or_default();
            Model {
                name: path.file_stem().unwrap().to_string_lossy().into_owned(),
                path,
                source,
                ts,
                bounds,
            }
        })
        .collect()
}

fn config() -> RunConfig {
    let mut c = RunConfig::new(SolverRegistry::builtin().get(None).unwrap());
    c.max_depth = 30;
    c.timeout = Duration::from_secs(60);
    c
}

fn settings(ts: &TransitionSystem) -> EngineSettings {
    let solver = SolverRegistry::builtin().get(None).unwrap();
    EngineSettings {
        logic: solver.logic_for(ts),
        solver,
        transcript_dir: None,
        checks: Default::default(),
        max_depth: 30,
        max_k: 20,
    }
}

fn labels(ts: &TransitionSystem, cfg: &RunConfig) -> Vec<(String, &'static str)> {
    run(ts, cfg)
        .unwrap()
        .properties
        .iter()
        .map(|p| (p.name.clone(), p.verdict.label()))
        .collect()
}

/// Criterion outcome: `Ok(summary)` or `Err(failures)`.
type Outcome2 = Result<String, Vec<String>>;

fn finish(failures: Vec<String>, summary: String) -> Outcome2 {
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(failures)
    }
}

fn verdict_correctness(models: &[Model]) -> Outcome2 {
    let start = Instant::now();
    let mut fails = Vec::new();
    let (mut falsifiable, mut provable_models, mut checked) = (0, 0, 0);
    for m in models {
        let oracle = Explorer::new(&m.ts, &m.bounds).and_then(|e| e.verdicts(ORACLE_DEPTH));
        let r = run(&m.ts, &config()).unwrap();
        let mut any_false = false;
        let mut any_valid = false;
        for p in &r.properties {
            match &p.verdict {
                Verdict::Falsified { trace, .. } => {
                    any_false = true;
                    if let Err(e) = check_trace(&m.ts, &p.name, trace) {
                        fails.push(format!("{}/{}: trace does not replay: {e}", m.name, p.name));
                    }
                }
                Verdict::Valid { .. } => any_valid = true,
                Verdict::Unknown { .. } => {}
            }
            if let Some(e) = m.bounds.expect.get(&p.name) {
                let ok = match (e, &p.verdict) {
                    (Expect::Valid, Verdict::Valid { .. }) => true,
                    (Expect::Falsified(n), Verdict::Falsified { trace, .. }) => trace.len() == *n,
                    _ => false,
                };
                if !ok {
                    fails.push(format!("{}/{}: expected {e:?}, got {}", m.name, p.name, p.verdict.label()));
                }
            }
            let Ok(oracle) = &oracle else { continue };
            checked += 1;
            let agree = match (&oracle[&p.name], &p.verdict) {
                (Outcome::Violated(t), Verdict::Falsified { trace, .. }) => t.len() == trace.len(),
                (Outcome::Violated(_), _) => false,
                (Outcome::Safe(_), Verdict::Falsified { trace, .. }) => trace.len() > ORACLE_DEPTH,
                (Outcome::Safe(_), _) => true,
            };
            if !agree {
                fails.push(format!(
                    "{}/{}: oracle {:?} vs {}",
                    m.name,
                    p.name,
                    oracle[&p.name].violation_length(),
                    p.verdict.label()
                ));
            }
        }
        if let Err(e) = &oracle {
            fails.push(format!("{}: oracle: {e}", m.name));
        }
        falsifiable += usize::from(any_false);
        provable_models += usize::from(any_valid);
    }
    let reals = models
        .iter()
        .filter(|m| m.ts.vars.iter().any(|v| v.sort == mini_kind::term::Sort::Real))
        .count();
    if models.len() < 20 || falsifiable < 8 || provable_models < 8 || reals < 2 {
        fails.push(format!(
            "corpus too small: {} models, {falsifiable} falsifiable, {provable_models} provable, {reals} with reals",
            models.len()
        ));
    }
    let took = start.elapsed();
    if took > Duration::from_secs(120) {
        fails.push(format!("took {took:?}"));
    }
    finish(
        fails,
        format!(
            "{} models, {checked} properties agree with the oracle to depth {ORACLE_DEPTH}, {:.1}s",
            models.len(),
            took.as_secs_f64()
        ),
    )
}

fn bmc_minimality(models: &[Model]) -> Outcome2 {
    let mut fails = Vec::new();
    let mut n = 0;
    let mut cfg = config();
    cfg.kind = false;
    cfg.invgen = false;
    cfg.pdr = false;
    cfg.max_depth = ORACLE_DEPTH;
    for m in models {
        let Ok(oracle) = Explorer::new(&m.ts, &m.bounds).and_then(|e| e.verdicts(ORACLE_DEPTH)) else { continue };
        let r = run(&m.ts, &cfg).unwrap();
        for p in &r.properties {
            if let Outcome::Violated(t) = &oracle[&p.name] {
                n += 1;
                match &p.verdict {
                    Verdict::Falsified { trace, .. } if trace.len() == t.len() => {}
                    v => fails.push(format!("{}/{}: oracle length {}, BMC {v:?}", m.name, p.name, t.len())),
                }
            }
        }
    }
    finish(fails, format!("{n} violations, BMC length equals oracle minimum"))
}

fn schedule_independence(models: &[Model], schedules: u64) -> Outcome2 {
    let mut fails = Vec::new();
    let start = Instant::now();
    for m in models {
        let mut seen: BTreeMap<String, BTreeSet<&'static str>> = BTreeMap::new();
        let mut sets = BTreeSet::new();
        for seed in 0..schedules {
            let mut cfg = config();
            cfg.schedule_seed = Some(seed);
            let l = labels(&m.ts, &cfg);
            for (p, v) in &l {
                seen.entry(p.clone()).or_default().insert(v);
            }
            sets.insert(l);
        }
        for (p, vs) in &seen {
            if vs.contains("valid") && vs.contains("falsified") {
                fails.push(format!("{}/{p}: both valid and falsified", m.name));
            }
        }
        if sets.len() != 1 {
            fails.push(format!("{}: {} distinct verdict sets", m.name, sets.len()));
        }
    }
    finish(
        fails,
        format!(
            "{schedules} schedules x {} models, identical verdicts, {:.1}s",
            models.len(),
            start.elapsed().as_secs_f64()
        ),
    )
}

fn base_gate(models: &[Model]) -> Outcome2 {
    let mut fails = Vec::new();
    let mut n = 0;
    for m in models {
        for pdr in [false, true] {
            let mut cfg = config();
            cfg.bmc = false;
            cfg.pdr = pdr;
            let r = run(&m.ts, &cfg).unwrap();
            for p in &r.properties {
                n += 1;
                let by_kind = matches!(p.verdict, Verdict::Valid { .. }) && p.engine != Some(EngineKind::Pdr);
                if by_kind {
                    fails.push(format!("{}/{}: valid without a base engine", m.name, p.name));
                }
                if !pdr && !matches!(p.verdict, Verdict::Unknown { .. }) {
                    fails.push(format!("{}/{}: {} without BMC and PDR", m.name, p.name, p.verdict.label()));
                }
            }
        }
    }
    finish(fails, format!("{n} property runs without BMC, none valid by induction alone"))
}

fn invariant_usefulness(models: &[Model]) -> Outcome2 {
    let m = models.iter().find(|m| m.name == "looping_counter").expect("looping counter fixture");
    let mut cfg = config();
    cfg.pdr = false;
    cfg.invgen = false;
    cfg.max_k = 20;
    let without = labels(&m.ts, &cfg);
    cfg.invgen = true;
    let with = labels(&m.ts, &cfg);
    let mut fails = Vec::new();
    if without[0].1 != "unknown" {
        fails.push(format!("without invgen: {}", without[0].1));
    }
    if with[0].1 != "valid" {
        fails.push(format!("with invgen: {}", with[0].1));
    }
    finish(fails, format!("looping counter: {} without invgen, {} with", without[0].1, with[0].1))
}

fn ivc(models: &[Model]) -> Outcome2 {
    let solver = Solver::z3();
    let mut fails = Vec::new();
    let (mut cores, mut minimal, mut at_minimum) = (0, 0, 0);
    for m in models.iter().filter(|m| m.ts.equation_origins().len() <= 8) {
        let mut cfg = config();
        cfg.ivc = true;
        let r = run(&m.ts, &cfg).unwrap();
        for p in &r.properties {
            let Verdict::Valid { ivc: Some(ivc), .. } = &p.verdict else { continue };
            cores += 1;
            let keep: BTreeSet<String> = ivc.core.iter().cloned().collect();
            let restricted = m.ts.restrict(&keep);
            let rerun = run(&restricted, &config()).unwrap();
            if !matches!(rerun.property(&p.name).unwrap().verdict, Verdict::Valid { .. }) {
                fails.push(format!("{}/{}: core {:?} does not re-prove", m.name, p.name, ivc.core));
            }
            let mut goal = vec![m.ts.property(&p.name).unwrap().term.clone()];
            goal.extend(ivc.reduced_invariants.iter().cloned());
            let budget = ivc.k + 2;
            if !provable(&solver, &m.ts, Some(&keep), &goal, budget).unwrap() {
                fails.push(format!("{}/{}: core not k-inductive by independent check", m.name, p.name));
            }
            let best = minimal_cores(&solver, &m.ts, &p.name, &ivc.reduced_invariants, budget)
                .unwrap()
                .expect("the core itself proves");
            let min = best[0].len();
            if ivc.core.len() > min + 1 {
                fails.push(format!("{}/{}: core size {} vs minimum {min}", m.name, p.name, ivc.core.len()));
            }
            if ivc.minimal {
                minimal += 1;
                if ivc.core.len() == min {
                    at_minimum += 1;
                }
            }
        }
    }
    if minimal > 0 && at_minimum * 5 < minimal * 4 {
        fails.push(format!("only {at_minimum} of {minimal} deletion-minimal cores are minimum"));
    }
    finish(
        fails,
        format!("{cores} cores re-prove; {at_minimum}/{minimal} deletion-minimal cores at the brute-force minimum"),
    )
}

fn smoothing(models: &[Model]) -> Outcome2 {
    let mut fails = Vec::new();
    let mut n = 0;
    for m in models {
        let inputs: Vec<_> = m.ts.inputs().collect();
        if inputs.len() > 3 || inputs.iter().any(|v| v.sort != mini_kind::term::Sort::Bool) {
            continue;
        }
        let mut cfg = config();
        cfg.smooth = true;
        let r = run(&m.ts, &cfg).unwrap();
        let e = Explorer::new(&m.ts, &m.bounds).unwrap();
        for p in &r.properties {
            let Verdict::Falsified { trace, smoothed: Some(s) } = &p.verdict else { continue };
            if trace.len() > 6 {
                continue;
            }
            n += 1;
            let best = e.min_input_deltas(&p.name, trace.len()).unwrap();
            if Some(s.deltas) != best {
                fails.push(format!("{}/{}: {} changes, minimum {best:?}", m.name, p.name, s.deltas));
            }
            if s.trace.len() != trace.len() || check_trace(&m.ts, &p.name, &s.trace).is_err() {
                fails.push(format!("{}/{}: smoothed trace invalid", m.name, p.name));
            }
            let again = mini_kind::smooth(&m.ts, &p.name, &s.trace, &settings(&m.ts)).unwrap();
            if again.trace != s.trace {
                fails.push(format!("{}/{}: smoothing is not idempotent", m.name, p.name));
            }
        }
    }
    finish(fails, format!("{n} smoothed traces at the brute-force minimum"))
}

fn advice(models: &[Model]) -> Outcome2 {
    let mut fails = Vec::new();
    let mut ratios = Vec::new();
    // Models whose properties are all valid; a falsified property costs the
    // same BMC search with or without advice.
    for name in ["looping_counter", "clock", "saturate", "assert_nonneg", "parity"] {
        let m = models.iter().find(|m| m.name == name).expect("fixture");
        let cold = run(&m.ts, &config()).unwrap();
        let text = render(&cold.advice_invariants(&m.ts));
        let advice = parse_advice(&text, &m.ts).unwrap();
        if !advice.dropped.is_empty() {
            fails.push(format!("{name}: {} entries did not survive reload", advice.dropped.len()));
        }
        let mut cfg = config();
        cfg.advice = advice.candidates;
        let warm = run(&m.ts, &cfg).unwrap();
        for (a, b) in cold.properties.iter().zip(&warm.properties) {
            if a.verdict.label() != b.verdict.label() {
                fails.push(format!("{name}/{}: {} cold, {} with advice", a.name, a.verdict.label(), b.verdict.label()));
            }
        }
        let ratio = warm.checks as f64 / cold.checks as f64;
        ratios.push(format!("{name} {}/{}", warm.checks, cold.checks));
        if ratio > 0.5 {
            fails.push(format!("{name}: {} checks with advice vs {} cold", warm.checks, cold.checks));
        }
        // Renaming one variable drops only the entries that mention it.
        if name == "looping_counter" {
            let renamed_src = m.source.replace("x", "xx");
            let renamed = elaborate(&load(&renamed_src).unwrap());
            let stale = parse_advice(&text, &renamed).unwrap();
            let mentions = text.lines().skip(1).filter(|l| l.contains('x')).count();
            if stale.dropped.len() != mentions {
                fails.push(format!("rename: {} dropped, {mentions} mention x", stale.dropped.len()));
            }
            let mut cfg = config();
            cfg.advice = stale.candidates;
            if labels(&renamed, &cfg) != labels(&renamed, &config()) {
                fails.push("rename: verdicts changed".into());
            }
        }
        // A false entry is tried and discarded.
        let bogus = parse_advice(&format!("{text}{}\n", bogus_entry(name)), &m.ts).unwrap();
        let mut cfg = config();
        cfg.advice = bogus.candidates;
        let r = run(&m.ts, &cfg).unwrap();
        for (a, b) in cold.properties.iter().zip(&r.properties) {
            if a.verdict.label() != b.verdict.label() {
                fails.push(format!("{name}/{}: false advice changed the verdict", a.name));
            }
        }
    }
    finish(fails, format!("checks with advice/cold: {}", ratios.join(", ")))
}

fn bogus_entry(model: &str) -> &'static str {
    match model {
        "looping_counter" => "x <= 3",
        "clock" => "m <= 30",
        "saturate" => "c <= 2",
        "assert_nonneg" => "s <= 2",
        _ => "n <= 1",
    }
}

fn pdr_certificates(models: &[Model]) -> Outcome2 {
    let solver = Solver::z3();
    let mut fails = Vec::new();
    let mut n = 0;
    for m in models {
        let settings = settings(&m.ts);
        for p in &m.ts.properties {
            let session = settings.session(&format!("cert-{}", p.name), None).unwrap();
            let mut pdr = Pdr::new(&m.ts, &p.term, session, 30).unwrap();
            if let PdrOutcome::Valid { clauses, .. } = pdr.run(&mut Quiet).unwrap() {
                n += 1;
                if !certificate_holds(&solver, &m.ts, &p.name, &clauses).unwrap() {
                    fails.push(format!("{}/{}: clause set is not a certificate", m.name, p.name));
                }
            }
        }
    }
    finish(fails, format!("{n} PDR proofs with independently checked certificates"))
}

fn determinism(models: &[Model]) -> Outcome2 {
    let bin = env!("CARGO_BIN_EXE_mini-kind");
    let dir = tempfile::tempdir().unwrap();
    let mut fails = Vec::new();
    for m in models {
        let mut outs = Vec::new();
        for i in 0..2 {
            let json = dir.path().join(format!("{}-{i}.json", m.name));
            let status = Command::new(bin)
                .arg(&m.path)
                .args(["--smooth", "--json"])
                .arg(&json)
                .output()
                .unwrap();
            if !matches!(status.status.code(), Some(0 | 10 | 20)) {
                fails.push(format!("{}: exit {:?}", m.name, status.status.code()));
                continue;
            }
            let report = Report::from_json(&fs::read_to_string(&json).unwrap()).unwrap();
            outs.push(serde_json::to_string(&report.without_runtime()).unwrap());
        }
        if outs.len() == 2 && outs[0] != outs[1] {
            fails.push(format!("{}: reports differ", m.name));
        }
    }
    finish(fails, format!("{} models, two CLI runs each, identical JSON outside runtime fields", models.len()))
}

fn main() {
    // Filtering arguments from `cargo test <filter>` are not meaningful here.
    let quick = std::env::var("MINI_KIND_QUICK").is_ok();
    let models = corpus();
    let schedules = if quick { 5 } else { 100 };
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome2>)> = vec![
        ("1 verdict correctness", Box::new(|| verdict_correctness(&models))),
        ("2 BMC minimality", Box::new(|| bmc_minimality(&models))),
        ("3 schedule independence", Box::new(|| schedule_independence(&models, schedules))),
        ("4 k-induction base gate", Box::new(|| base_gate(&models))),
        ("5 invariant usefulness", Box::new(|| invariant_usefulness(&models))),
        ("6 IVC validity and minimality", Box::new(|| ivc(&models))),
        ("7 smoothing optimality", Box::new(|| smoothing(&models))),
        ("8 advice replay", Box::new(|| advice(&models))),
        ("9 PDR certificates", Box::new(|| pdr_certificates(&models))),
        ("10 determinism", Box::new(|| determinism(&models))),
    ];
    // A comma-separated list of criterion numbers restricts the run.
    let only: Option<Vec<String>> = std::env::var("MINI_KIND_CRITERIA")
        .ok()
        .map(|v| v.split(',').map(|s| s.trim().to_string()).collect());
    let mut failed = 0;
    for (name, f) in criteria {
        let number = name.split(' ').next().unwrap_or("");
        if only.as_ref().is_some_and(|o| !o.iter().any(|x| x == number)) {
            continue;
        }
        let start = Instant::now();
        match f() {
            Ok(summary) => println!("PASS criterion {name}: {summary} [{:.1}s]", start.elapsed().as_secs_f64()),
            Err(fails) => {
                failed += 1;
                println!("FAIL criterion {name}:");
                for f in fails {
                    println!("    {f}");
                }
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
