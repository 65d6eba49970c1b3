//! Sequential vs rayon execution of the data-parallel surfaces: whole-catalog
//! certification, a convergence sweep across methods, and many-block Newton
//! stage solves on a large uncoupled ensemble.
//!
//! With `--no-default-features` only the sequential branch exists.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use arkimex::catalog::{load_catalog, CatalogSource};
use arkimex::exec::ExecMode;
use arkimex::harness::{self, ReferenceSpec};
use arkimex::models::OscillatorEnsemble;
use arkimex::problem::{NewtonConfig, SplitOdeProblem};
use arkimex::{analysis, integrator};

fn modes() -> Vec<(&'static str, ExecMode)> {
    #[cfg(feature = "parallel")]
    {
        vec![("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)]
    }
    #[cfg(not(feature = "parallel"))]
    {
        vec![("sequential", ExecMode::Sequential)]
    }
}

fn bench_certify_catalog(c: &mut Criterion) {
    let entries = load_catalog(&CatalogSource::BuiltIn).unwrap();
    let config = NewtonConfig::default();
    let mut group = c.benchmark_group("certify_catalog");
    group.sample_size(10);
    for (label, mode) in modes() {
        group.bench_function(label, |b| {
            b.iter(|| {
                let reports = arkimex::exec::map_collect(mode, &entries, |e| {
                    analysis::certify(&e.method, &config, ExecMode::Sequential).unwrap()
                });
                black_box(reports.len())
            })
        });
    }
    group.finish();
}

fn bench_convergence_sweep(c: &mut Criterion) {
    let entries = load_catalog(&CatalogSource::BuiltIn).unwrap();
    let imex: Vec<_> = entries.into_iter().filter(|e| !e.method.is_pure_explicit).collect();
    let config = NewtonConfig::default();
    let (ladder, t_final) = harness::default_oscillator_ladder();
    let problem = harness::default_oscillator();
    let mut group = c.benchmark_group("convergence_sweep");
    group.sample_size(10);
    for (label, mode) in modes() {
        group.bench_function(label, |b| {
            b.iter(|| {
                let reports = arkimex::exec::map_collect(mode, &imex, |e| {
                    harness::run_convergence(
                        &e.method,
                        &problem,
                        &ladder,
                        t_final,
                        &ReferenceSpec::Exact,
                        None,
                        &config,
                        ExecMode::Sequential,
                    )
                    .unwrap()
                });
                black_box(reports.len())
            })
        });
    }
    group.finish();
}

fn bench_block_solves(c: &mut Criterion) {
    // one stiff step on a 4096-oscillator ensemble: 4096 independent 2x2
    // blocks per Newton iteration
    let ensemble = OscillatorEnsemble::new(4096, 50.0).with_implicit_share(0.98);
    let method = arkimex::get_method("DBM453").unwrap();
    let config = NewtonConfig::default();
    let q0 = ensemble.initial_state();
    let mut group = c.benchmark_group("block_stage_solves");
    group.sample_size(20);
    for (label, mode) in modes() {
        group.bench_function(label, |b| {
            b.iter(|| {
                let (q, _) =
                    integrator::step(&method, &ensemble, 0.0, &q0, 0.5, &config, mode).unwrap();
                black_box(q[0])
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_certify_catalog, bench_convergence_sweep, bench_block_solves);
criterion_main!(benches);
