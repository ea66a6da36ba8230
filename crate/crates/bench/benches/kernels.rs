use std::hint::black_box;

use bursty_core::bessel::{bessel_j, bessel_zeros};
use bursty_core::sde::{rng_for, simulate_with, step_adaptive};
use bursty_core::spectrum::psd_uniform;
use bursty_core::{detect_bursts, FptSpec, Model, PsdConfig, SdeParams, SeriesPdf, SimConfig, StopRule};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use rand::Rng;
use rand_distr::StandardNormal;

fn step_kernel(c: &mut Criterion) {
    let p = SdeParams::new(2.5, 4.0);
    c.bench_function("step_adaptive", |b| {
        let mut rng = rng_for(1, 0);
        let mut x = 1.0;
        b.iter(|| {
            let z: f64 = rng.sample(StandardNormal);
            let (next, _) = step_adaptive(black_box(x), &p, 0.1, z).unwrap();
            x = if next > 1e6 { 1.0 } else { next };
        })
    });

    let model = Model::Simple(SdeParams { x_ceiling: Some(1e12), ..p });
    let cfg = SimConfig { burn_in: 0.0, ..SimConfig::new(2, StopRule::Samples(1_000_000)) };
    let mut g = c.benchmark_group("simulate");
    g.throughput(Throughput::Elements(1_000_000));
    g.sample_size(10);
    g.bench_function("simple_1e6_samples", |b| {
        b.iter(|| {
            let mut last = 0.0;
            simulate_with(&model, &cfg, 0, &mut |_t: f64, x: f64| last = x).unwrap();
            black_box(last)
        })
    });
    g.finish();
}

fn special_functions(c: &mut Criterion) {
    c.bench_function("bessel_j_nu2_x30", |b| b.iter(|| bessel_j(black_box(2.0), black_box(30.0)).unwrap()));
    c.bench_function("bessel_j_nu0_5_x3", |b| b.iter(|| bessel_j(black_box(0.5), black_box(3.0)).unwrap()));
    // Zero tables are cached per order, so each iteration uses a new order.
    let mut nu = 0.0;
    c.bench_function("bessel_zeros_50", |b| {
        b.iter_batched(
            || {
                nu += 1e-7;
                nu
            },
            |nu| bessel_zeros(nu, 50).unwrap(),
            BatchSize::SmallInput,
        )
    });
    let series = SeriesPdf::new(FptSpec::new(0.5, 0.3, 1e-4)).unwrap();
    c.bench_function("series_density", |b| b.iter(|| series.density(black_box(2e-3)).unwrap()));
}

fn analysis(c: &mut Criterion) {
    let mut rng = rng_for(3, 0);
    let n = 1 << 20;
    let mut x = Vec::with_capacity(n);
    let mut v: f64 = 0.0;
    for _ in 0..n {
        v = 0.99 * v + rng.sample::<f64, _>(StandardNormal);
        x.push(v);
    }
    let t: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let mut g = c.benchmark_group("analysis");
    g.throughput(Throughput::Elements(n as u64));
    g.bench_function("detect_bursts_1m", |b| {
        b.iter(|| detect_bursts(t.iter().copied().zip(x.iter().copied()), 1.0).unwrap().len())
    });
    g.bench_function("welch_1m", |b| b.iter(|| psd_uniform(&x, PsdConfig::new(1.0, 4096)).unwrap().beta));
    g.finish();
}

criterion_group!(benches, step_kernel, special_functions, analysis);
criterion_main!(benches);
