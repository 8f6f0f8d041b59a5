use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fprinciple::flow::Objective;
use fprinciple::spectral::DftPlan;
use fprinciple_bench::{field, problem};
use std::hint::black_box;

fn spectra(c: &mut Criterion) {
    let mut g = c.benchmark_group("dft");
    // radix-2 against the direct fallback at a similar size
    for m in [500usize, 512, 4096] {
        let f = field(m);
        let plan = DftPlan::new(*f.grid());
        g.bench_with_input(BenchmarkId::from_parameter(m), &f, |b, f| {
            b.iter(|| plan.forward(black_box(f)).unwrap())
        });
    }
    g.finish();
}

fn gradients(c: &mut Criterion) {
    let mut g = c.benchmark_group("loss_gradient");
    for width in [16usize, 40, 128] {
        let p = problem(width, 1);
        let obj = p.objective().unwrap();
        let theta = p.theta0.as_slice().to_vec();
        let mut grad = vec![0.0; obj.dim()];
        g.bench_with_input(BenchmarkId::from_parameter(width), &theta, |b, t| {
            b.iter(|| obj.value_and_grad(black_box(t), &mut grad).unwrap())
        });
    }
    g.finish();
}

fn probes(c: &mut Criterion) {
    let p = problem(40, 10);
    let ctx = p.context().unwrap();
    let record = p.train().unwrap();
    let cp = record.last().clone();
    c.bench_function("probe_1-40-40-1", |b| b.iter(|| ctx.probe(black_box(&cp)).unwrap()));
}

criterion_group!(benches, spectra, gradients, probes);
criterion_main!(benches);
