use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use harnacklab_bench::{barenblatt_slice, params, random_family, random_matrices};
use harnacklab_core::covering::vitali_subcover;
use harnacklab_core::harnack::barrier_sample_check;
use harnacklab_core::operators::{pucci_minus, pucci_plus};
use harnacklab_core::solutions::BarrierSpec;
use harnacklab_core::solver::{admissible_dt, step, Boundary, SolverConfig, DEFAULT_CFL_SAFETY};
use harnacklab_core::OperatorSpec;

fn pucci(c: &mut Criterion) {
    let mut group = c.benchmark_group("pucci");
    for n in [1usize, 2, 3, 5] {
        let prm = params(3.0, n);
        let ms = random_matrices(n, 256, 1);
        group.bench_with_input(BenchmarkId::new("minus_plus", n), &ms, |b, ms| {
            b.iter(|| {
                ms.iter()
                    .map(|m| pucci_minus(m, &prm).unwrap() + pucci_plus(m, &prm).unwrap())
                    .sum::<f64>()
            })
        });
    }
    group.finish();
}

fn explicit_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for (n, dx) in [(1usize, 1.0 / 256.0), (2, 1.0 / 64.0)] {
        let prm = params(3.0, n);
        let cfg = SolverConfig::new(
            OperatorSpec::pucci_minus(prm, 1e-8).unwrap(),
            DEFAULT_CFL_SAFETY,
            Boundary::ClampLastValue,
        )
        .unwrap();
        let u = barenblatt_slice(3.0, n, dx);
        let dt = admissible_dt(&u, &cfg).unwrap();
        group.bench_with_input(BenchmarkId::new("pucci_minus", format!("n{n}_nodes{}", u.values.len())), &u, |b, u| {
            b.iter(|| step(black_box(u), &cfg, dt).unwrap())
        });
    }
    group.finish();
}

fn covering(c: &mut Criterion) {
    let mut group = c.benchmark_group("vitali_subcover");
    for size in [100usize, 1000] {
        let family = random_family(size, 2, 5);
        group.bench_with_input(BenchmarkId::from_parameter(size), &family, |b, f| b.iter(|| vitali_subcover(f)));
    }
    group.finish();
}

fn barrier(c: &mut Criterion) {
    let spec = BarrierSpec::new(params(3.0, 2), 2.6, 1e-4).unwrap();
    c.bench_function("barrier_sample_check/4096", |b| {
        b.iter(|| barrier_sample_check(&spec, 4096, 0, 0.0).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = pucci, explicit_step, covering, barrier
}
criterion_main!(benches);
