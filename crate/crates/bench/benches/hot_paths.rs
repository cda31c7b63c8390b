use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use scalent::entropy::{eps_entropy_hprime, greedy_cover, BallMatrix};
use scalent::metrics::{arc_metric, cut_semimetric, dyadic_metric, Partition};
use scalent::scaling::{scaling_curve, CurveOptions};
use scalent::systems::{orbit, SystemSpec};
use scalent::transport::{kantorovich, DiscreteMeasure};
use scalent::{Mode, Point};

use scalent_bench::{pascal_sample, rotation_sample};

fn bench_kantorovich(c: &mut Criterion) {
    let rho = arc_metric();
    let mut group = c.benchmark_group("kantorovich");
    for size in [8usize, 32, 96] {
        let sample = rotation_sample(2 * size);
        let mu = DiscreteMeasure::uniform(sample.points[..size].to_vec()).expect("mu");
        let nu = DiscreteMeasure::uniform(sample.points[size..].to_vec()).expect("nu");
        group.bench_function(format!("{size}x{size}"), |b| {
            b.iter(|| kantorovich(black_box(&mu), black_box(&nu), &rho).expect("solve"))
        });
    }
    group.finish();
}

fn bench_greedy_cover(c: &mut Criterion) {
    let sample = rotation_sample(1000);
    let rho = arc_metric();
    let balls = BallMatrix::build(&rho, &sample, 0.05).expect("balls");
    c.bench_function("greedy_cover/m=1000", |b| {
        b.iter_batched(
            || balls.clone(),
            |balls| greedy_cover(black_box(&balls), 950),
            BatchSize::SmallInput,
        )
    });
}

fn bench_hprime_direct(c: &mut Criterion) {
    let sample = pascal_sample(400);
    let rho = dyadic_metric();
    c.bench_function("eps_entropy_hprime/pascal_dyadic_m=400", |b| {
        b.iter(|| eps_entropy_hprime(&rho, black_box(&sample), 0.1).expect("net"))
    });
}

fn bench_curve(c: &mut Criterion) {
    let sys = SystemSpec::golden_rotation();
    let cut = cut_semimetric(Partition::halves()).expect("cut");
    let schedule: Vec<usize> = (0..=8).map(|e| 1usize << e).collect();
    c.bench_function("scaling_curve/rotation_avg_m=500_n<=256", |b| {
        b.iter(|| {
            scaling_curve(
                &sys,
                &cut,
                Mode::Average,
                black_box(&schedule),
                &[0.05, 0.1, 0.2],
                500,
                1,
                &CurveOptions::default(),
            )
            .expect("curve")
        })
    });
}

fn bench_pascal_orbit(c: &mut Criterion) {
    let sys = SystemSpec::pascal(0.5, 64);
    let sample = pascal_sample(2);
    let x = sample.points[0].clone();
    c.bench_function("pascal_orbit/n=4096", |b| {
        b.iter(|| orbit(&sys, black_box(&x), 4096).expect("orbit"))
    });
    let _: &Point = &x;
}

criterion_group!(
    benches,
    bench_kantorovich,
    bench_greedy_cover,
    bench_hprime_direct,
    bench_curve,
    bench_pascal_orbit
);
criterion_main!(benches);
