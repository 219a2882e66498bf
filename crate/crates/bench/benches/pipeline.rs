use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use hermlie_core::frames::{CaseTag, JType};
use hermlie_core::generator::{gen, GenParams, MetricTarget};
use hermlie_core::hermitian::{compute_cd, forms, pluriclosed_defect};
use hermlie_core::linalg::Tolerance;
use hermlie_core::metricsearch::{
    certify_floor, defect_objective, MetricParam, Objective, SearchConfig, SearchContext,
};

fn bench_generation(c: &mut Criterion) {
    let mut group = c.benchmark_group("generate");
    for n in [3usize, 4, 5] {
        group.bench_with_input(BenchmarkId::new("main", n), &n, |b, &n| {
            let mut seed = 0u64;
            b.iter(|| {
                seed += 1;
                gen(&GenParams::new(n, CaseTag::MainNonabelian, seed)).unwrap()
            });
        });
    }
    group.finish();
}

fn bench_frame_and_tensors(c: &mut Criterion) {
    let tol = Tolerance::default();
    let mut group = c.benchmark_group("frame_extract");
    for n in [3usize, 4, 5] {
        let inst = gen(&GenParams::new(n, CaseTag::MainNonabelian, 42)).unwrap();
        group.bench_with_input(BenchmarkId::new("admissible_frame", n), &inst, |b, inst| {
            b.iter(|| inst.admissible_frame(tol).unwrap());
        });
        let af = inst.admissible_frame(tol).unwrap();
        group.bench_with_input(BenchmarkId::new("compute_cd", n), &inst, |b, inst| {
            b.iter(|| compute_cd(&inst.algebra, &inst.metric, &af.frame));
        });
        let st = inst.tensors(&af.frame);
        group.bench_with_input(BenchmarkId::new("pluriclosed_defect", n), &st, |b, st| {
            b.iter(|| pluriclosed_defect(st));
        });
    }
    group.finish();
}

fn bench_ce_oracle(c: &mut Criterion) {
    let tol = Tolerance::default();
    let mut group = c.benchmark_group("ce_oracle");
    for n in [3usize, 4, 5] {
        let inst = gen(&GenParams::new(n, CaseTag::JaEqualsA, 7)).unwrap();
        let af = inst.admissible_frame(tol).unwrap();
        let fc = forms::FrameContext::new(&inst.algebra, &af.frame).unwrap();
        group.bench_with_input(BenchmarkId::new("pluriclosed", n), &fc, |b, fc| {
            b.iter(|| forms::pluriclosed_oracle(fc));
        });
        group.bench_with_input(BenchmarkId::new("balanced", n), &fc, |b, fc| {
            b.iter(|| forms::balanced_oracle(fc));
        });
    }
    group.finish();
}

fn bench_objective_eval(c: &mut Criterion) {
    let mut group = c.benchmark_group("objective_eval");
    for n in [3usize, 5] {
        let inst = gen(&GenParams::new(n, CaseTag::MainNonabelian, 9)).unwrap();
        let ctx = SearchContext::new(&inst).unwrap();
        let p = MetricParam::identity(n);
        group.bench_with_input(BenchmarkId::new("pluriclosed", n), &ctx, |b, ctx| {
            b.iter(|| defect_objective(ctx, &p, Objective::Pluriclosed));
        });
    }
    group.finish();
}

fn bench_search(c: &mut Criterion) {
    let params = GenParams {
        n: 3,
        case: CaseTag::MainNonabelian,
        jtype: Some(JType::Generic),
        r0: None,
        target: MetricTarget::Balanced,
        seed: 10,
    };
    let inst = gen(&params).unwrap();
    let cfg = SearchConfig {
        objective: Objective::Pluriclosed,
        multistarts: 8,
        max_iters: 40,
        step_tol: 1e-12,
        defect_gate: 1e-8,
        seed: 1,
    };
    c.bench_function("search_floor_8_starts_n3", |b| {
        b.iter(|| certify_floor(&inst, &cfg).unwrap());
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = bench_generation, bench_frame_and_tensors, bench_ce_oracle, bench_objective_eval, bench_search
}
criterion_main!(benches);
