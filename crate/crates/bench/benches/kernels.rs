use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use zo_core::estimators::{EstimatorState, Perturbation};
use zo_core::geometry::{md_step, Domain, ProxGeometry};
use zo_core::optimizer::{run, Schedule, ScheduleFamily};
use zo_core::problems::{make_constrained_quadratic, Problem};
use zo_core::rng::{stream, tag};
use zo_core::smoothing::{SmoothingDistribution, SmoothingKind};
use zo_core::EstimatorConfig;

const DIMS: [usize; 3] = [8, 64, 512];

fn bench_md_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("md_step");
    for d in DIMS {
        let theta: Vec<f64> = (0..d).map(|i| (i as f64).sin() / d as f64).collect();
        let g: Vec<f64> = (0..d).map(|i| (i as f64).cos()).collect();
        let l2 = Domain::l2(1.0, d).unwrap();
        let l1 = Domain::l1(1.0, d).unwrap();
        group.bench_with_input(BenchmarkId::new("euclidean_l2", d), &d, |b, _| {
            b.iter(|| md_step(&ProxGeometry::Euclidean, &l2, black_box(&theta), black_box(&g), 0.1).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("euclidean_l1", d), &d, |b, _| {
            b.iter(|| md_step(&ProxGeometry::Euclidean, &l1, black_box(&theta), black_box(&g), 0.1).unwrap())
        });
        let pnorm = ProxGeometry::pnorm_for_dim(d);
        group.bench_with_input(BenchmarkId::new("pnorm_l1", d), &d, |b, _| {
            b.iter(|| md_step(&pnorm, &l1, black_box(&theta), black_box(&g), 0.1).unwrap())
        });
    }
    group.finish();
}

fn bench_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample");
    for kind in [
        SmoothingKind::Gaussian,
        SmoothingKind::BallSqrtDPlus2,
        SmoothingKind::SphereSqrtD,
        SmoothingKind::Hypercube,
    ] {
        let d = 64;
        let z = SmoothingDistribution::new(kind, d).unwrap();
        let mut rng = stream(1, tag::PERTURB);
        let mut out = vec![0.0; d];
        group.bench_function(kind.label(), |b| b.iter(|| z.sample_into(&mut rng, black_box(&mut out))));
    }
    group.finish();
}

fn bench_estimators(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimate");
    let d = 64;
    let dom = Domain::l2(1.0, d).unwrap();
    let p = make_constrained_quadratic(vec![3.0 / (d as f64).sqrt(); d], 0.5, dom).unwrap();
    let theta = vec![0.01; d];
    let mut x = vec![0.0; p.sample_dim()];
    let mut data = stream(2, tag::DATA);
    p.sample_into(&mut data, &mut x);
    let cases = [
        ("two_point", EstimatorConfig::TwoPoint { dist: SmoothingKind::SphereSqrtD }, Perturbation::Single(0.01)),
        (
            "two_point_avg_m8",
            EstimatorConfig::TwoPointAvg { dist: SmoothingKind::SphereSqrtD, m: 8 },
            Perturbation::Single(0.01),
        ),
        (
            "double_smoothed",
            EstimatorConfig::DoubleSmoothed { dist1: SmoothingKind::BallSqrtDPlus2, dist2: SmoothingKind::SphereSqrtD },
            Perturbation::Double(0.01, 0.0001),
        ),
    ];
    for (name, cfg, u) in cases {
        let mut st = EstimatorState::new(&cfg, d).unwrap();
        let mut rng = stream(3, tag::PERTURB);
        group.bench_function(name, |b| {
            b.iter(|| st.estimate(|t: &[f64]| p.eval(t, &x), black_box(&theta), u, &mut rng).unwrap())
        });
    }
    group.finish();
}

fn bench_run(c: &mut Criterion) {
    let d = 16;
    let dom = Domain::l2(1.0, d).unwrap();
    let p = make_constrained_quadratic(vec![3.0 / (d as f64).sqrt(); d], 6.0 / (d as f64).sqrt(), dom).unwrap();
    let est = EstimatorConfig::TwoPoint { dist: SmoothingKind::SphereSqrtD };
    let geom = ProxGeometry::Euclidean;
    let s = Schedule::for_setup(ScheduleFamily::Smooth, 1.0, 1.0, &p, &geom, &dom, &est).unwrap();
    let mut group = c.benchmark_group("run");
    group.sample_size(20);
    group.bench_function("two_point_d16_T1000", |b| {
        b.iter(|| run(&p, &geom, &dom, &est, &s, 1000, black_box(5)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_md_step, bench_sampling, bench_estimators, bench_run);
criterion_main!(benches);
