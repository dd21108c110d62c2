use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion};

use mini_kind::frontend::load;
use mini_kind::{elaborate, run, RunConfig, SolverRegistry};
use mini_kind_bench::{model, source};

fn frontend(c: &mut Criterion) {
    let mut g = c.benchmark_group("frontend");
    for name in ["ctr", "edge", "mode_machine"] {
        let src = source(name);
        g.bench_function(name, |b| b.iter(|| elaborate(&load(&src).unwrap())));
    }
    g.finish();
}

fn config() -> RunConfig {
    let mut cfg = RunConfig::new(SolverRegistry::builtin().get(None).unwrap());
    cfg.max_depth = 30;
    cfg.timeout = Duration::from_secs(30);
    cfg
}

fn engines(c: &mut Criterion) {
    let mut g = c.benchmark_group("run");
    g.sample_size(10);
    for name in ["ctr", "looping_counter", "tank"] {
        let ts = model(name);
        g.bench_function(format!("{name}/all"), |b| b.iter(|| run(&ts, &config()).unwrap()));
    }
    let ts = model("looping_counter");
    let mut pdr_only = config();
    pdr_only.bmc = false;
    pdr_only.kind = false;
    pdr_only.invgen = false;
    g.bench_function("looping_counter/pdr", |b| b.iter(|| run(&ts, &pdr_only).unwrap()));
    g.finish();
}

fn postprocess(c: &mut Criterion) {
    let mut g = c.benchmark_group("postprocess");
    g.sample_size(10);
    let ts = model("ctr");
    let mut cfg = config();
    cfg.ivc = true;
    g.bench_function("ctr/ivc", |b| b.iter(|| run(&ts, &cfg).unwrap()));
    let ts = model("arbiter");
    let mut cfg = config();
    cfg.smooth = true;
    g.bench_function("arbiter/smooth", |b| b.iter(|| run(&ts, &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, frontend, engines, postprocess);
criterion_main!(benches);
