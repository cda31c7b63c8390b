//! Acceptance suite: growth-shape reproduction and exactness guarantees
//! at desk scale, one test per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` for the full
//! per-criterion report; each test prints its measurements and asserts
//! the pinned thresholds.
//!
//! Known expected failure: `a3_bernoulli_average_linear` demands the
//! `Linear` class at every ε of the default grid. At m = 2000 the
//! ε = 0.2 column lies in the estimator's crossover between the
//! exact-match regime (ε·n < 1, slope ln 2) and the positive-radius
//! regime (slope ln 2 − H₂(ε)), so its shape is genuinely not linear and
//! the ε-coherence rule downgrades the verdict. The assertion is kept
//! strict rather than weakened; the printed diagnostics document the
//! effect. ε ∈ {0.05, 0.1} classify Linear with slope within 5% of ln 2.

use std::time::Instant;

use rand::Rng;

use scalent::entropy::{eps_entropy_hprime, minimal_cover_bruteforce};
use scalent::metrics::{
    admissibility_probe, arc_metric, constant_metric, cut_semimetric, dyadic_metric,
    hamming_window_metric, indicator_semimetric, iterate, metric_axiom_check,
    rotation_average_closed_form, Partition, Semimetric,
};
use scalent::rng::stream;
use scalent::scaling::{
    classify_growth, scaling_curve, ClassifyOptions, CurveOptions, GrowthClass, ModelKind,
};
use scalent::systems::{sample_invariant, SystemSpec};
use scalent::transport::{
    discrete_entropy, kantorovich, kantorovich_bruteforce, lemma3_plan, DiscreteMeasure,
};
use scalent::{CirclePoint, MetricEval, Mode, Point};

const DEFAULT_EPS: [f64; 3] = [0.05, 0.1, 0.2];

fn pow2_schedule(max_exp: u32) -> Vec<usize> {
    (0..=max_exp).map(|e| 1usize << e).collect()
}

fn half_cut() -> Semimetric {
    cut_semimetric(Partition::halves()).expect("cut")
}

/// A1: golden rotation, half-circle cut, average mode: bounded scaling,
/// last-third minus first-third mean below 0.3 nats, at every ε.
#[test]
fn a1_rotation_average_bounded() {
    let t = Instant::now();
    let sys = SystemSpec::golden_rotation();
    let curve = scaling_curve(
        &sys,
        &half_cut(),
        Mode::Average,
        &pow2_schedule(12),
        &DEFAULT_EPS,
        2000,
        1,
        &CurveOptions::default(),
    )
    .expect("curve");
    let verdict = classify_growth(&curve, &ClassifyOptions::default()).expect("classify");
    let elapsed = t.elapsed().as_secs_f64();

    println!("[A1] rotation/average verdict {:?} in {elapsed:.1}s (target < 180s)", verdict.class);
    for rep in &verdict.per_eps {
        println!(
            "[A1]   eps={} class={:?} delta_thirds={:+.3}",
            rep.eps, rep.class, rep.delta_thirds
        );
        assert_eq!(
            rep.class,
            GrowthClass::Bounded,
            "eps={} not bounded",
            rep.eps
        );
        assert!(
            rep.delta_thirds < 0.3,
            "eps={}: last-third mean exceeds first-third mean by {:.3} >= 0.3 nats",
            rep.eps,
            rep.delta_thirds
        );
    }
    assert_eq!(verdict.class, GrowthClass::Bounded);
    assert!(elapsed < 180.0, "runtime {elapsed:.1}s exceeds 3 min target");
}

/// A2: same rotation and cut, sup mode: logarithmic growth with
/// R² ≥ 0.9 and slope in [0.3, 3].
#[test]
fn a2_rotation_sup_logarithmic() {
    let t = Instant::now();
    let sys = SystemSpec::golden_rotation();
    let curve = scaling_curve(
        &sys,
        &half_cut(),
        Mode::Sup,
        &pow2_schedule(12),
        &DEFAULT_EPS,
        2000,
        1,
        &CurveOptions::default(),
    )
    .expect("curve");
    let verdict = classify_growth(&curve, &ClassifyOptions::default()).expect("classify");
    let elapsed = t.elapsed().as_secs_f64();

    println!("[A2] rotation/sup verdict {:?} in {elapsed:.1}s (target < 180s)", verdict.class);
    assert_eq!(verdict.class, GrowthClass::Logarithmic);
    for rep in &verdict.per_eps {
        let log_fit = rep
            .fits
            .iter()
            .find(|f| matches!(f.model, ModelKind::Logarithmic))
            .expect("log fit present");
        println!(
            "[A2]   eps={} slope={:.3} r2={:.4}",
            rep.eps, log_fit.slope, log_fit.r2
        );
        assert!(
            log_fit.r2 >= 0.9,
            "eps={}: log-model r2 {:.4} < 0.9",
            rep.eps,
            log_fit.r2
        );
        assert!(
            (0.3..=3.0).contains(&log_fit.slope),
            "eps={}: slope {:.3} outside [0.3, 3]",
            rep.eps,
            log_fit.slope
        );
    }
    assert!(elapsed < 180.0, "runtime {elapsed:.1}s exceeds 3 min target");
}

/// A3: Bernoulli(1/2) shift, first-coordinate cut, average mode: the
/// criterion demands the `Linear` class with linear-model R² ≥ 0.95 at
/// every ε; slopes are reported against h = ln 2 without a tolerance.
///
/// Expected failure at the default grid — see the module docs.
#[test]
fn a3_bernoulli_average_linear() {
    let sys = SystemSpec::bernoulli_shift(0.5, 64, 4096);
    let cut = cut_semimetric(Partition::WordPrefix { k: 1 }).expect("cut");
    let curve = scaling_curve(
        &sys,
        &cut,
        Mode::Average,
        &pow2_schedule(12),
        &DEFAULT_EPS,
        2000,
        1,
        &CurveOptions::default(),
    )
    .expect("curve");
    let verdict = classify_growth(&curve, &ClassifyOptions::default()).expect("classify");

    println!("[A3] bernoulli/average verdict {:?}", verdict.class);
    let h = std::f64::consts::LN_2;
    for rep in &verdict.per_eps {
        let lin = rep
            .fits
            .iter()
            .find(|f| matches!(f.model, ModelKind::Linear))
            .expect("linear fit present");
        println!(
            "[A3]   eps={} class={:?} window={:?} linear: slope={:.4} (h=ln2={:.4}) r2={:.4}",
            rep.eps, rep.class, rep.window, lin.slope, h, lin.r2
        );
    }
    for rep in &verdict.per_eps {
        let lin = rep
            .fits
            .iter()
            .find(|f| matches!(f.model, ModelKind::Linear))
            .expect("linear fit present");
        assert!(
            lin.r2 >= 0.95,
            "eps={}: linear-model r2 {:.4} < 0.95 (estimator crossover regime; \
             the column's shape is not linear at m=2000)",
            rep.eps,
            lin.r2
        );
    }
    assert_eq!(
        verdict.class,
        GrowthClass::Linear,
        "verdict {:?}: the eps=0.2 column classifies ambiguous/non-linear at m=2000 \
         (crossover between exact-match regime, slope ln 2, and positive-radius \
         regime, slope ln 2 - H2(eps)); the eps-coherence rule therefore downgrades \
         the verdict. Kept strict; see per-eps diagnostics above.",
        verdict.class
    );
}

/// A4: Pascal adic transformation, 2-adic metric, sup mode: an unbounded
/// class whose log-model fit is at least as good as constant, growing by
/// at least 0.5·ln n over the schedule's last decade. The average-mode
/// Pascal curve is reported alongside without a pass condition.
#[test]
fn a4_pascal_sup_unbounded() {
    let t = Instant::now();
    let sys = SystemSpec::pascal(0.5, 64);
    let dyadic = dyadic_metric();
    // schedule chosen to end before the m = 2000 saturation range
    let schedule = pow2_schedule(7);
    let curve = scaling_curve(
        &sys,
        &dyadic,
        Mode::Sup,
        &schedule,
        &DEFAULT_EPS,
        2000,
        1,
        &CurveOptions::default(),
    )
    .expect("curve");
    let verdict = classify_growth(&curve, &ClassifyOptions::default()).expect("classify");
    let elapsed = t.elapsed().as_secs_f64();

    println!("[A4] pascal/sup verdict {:?} in {elapsed:.1}s (target < 300s)", verdict.class);
    assert!(
        verdict.class.is_unbounded(),
        "expected an unbounded class, got {:?}",
        verdict.class
    );

    let n_max = *schedule.last().unwrap();
    let decade_floor = n_max as f64 / 10.0;
    let first_in_decade = schedule
        .iter()
        .position(|&n| n as f64 >= decade_floor)
        .expect("decade start");
    let last = schedule.len() - 1;
    for (e, &eps) in DEFAULT_EPS.iter().enumerate() {
        let rep = &verdict.per_eps[e];
        let log_fit = rep
            .fits
            .iter()
            .find(|f| matches!(f.model, ModelKind::Logarithmic))
            .expect("log fit");
        let const_fit = rep
            .fits
            .iter()
            .find(|f| matches!(f.model, ModelKind::Constant))
            .expect("const fit");
        assert!(
            log_fit.sse <= const_fit.sse + 1e-12,
            "eps={eps}: log fit worse than constant"
        );

        let y_start = curve.cell(first_in_decade, e).ln_k;
        let y_end = curve.cell(last, e).ln_k;
        let growth = y_end - y_start;
        let required = 0.5 * (n_max as f64 / schedule[first_in_decade] as f64).ln();
        println!(
            "[A4]   eps={eps} growth over last decade {growth:.3} (required >= {required:.3})"
        );
        assert!(
            growth >= required,
            "eps={eps}: growth {growth:.3} below 0.5*ln n over the last decade"
        );
    }
    assert!(elapsed < 300.0, "runtime {elapsed:.1}s exceeds 5 min target");

    // Reported, no pass/fail condition: the average-mode Pascal curve.
    let avg_curve = scaling_curve(
        &sys,
        &dyadic,
        Mode::Average,
        &pow2_schedule(8),
        &DEFAULT_EPS,
        500,
        1,
        &CurveOptions::default(),
    )
    .expect("avg curve");
    let avg_verdict = classify_growth(&avg_curve, &ClassifyOptions::default()).expect("classify");
    println!(
        "[A4]   (reported only) pascal/average verdict at m=500: {:?}",
        avg_verdict.class
    );
}

/// A5: on 200 random instances with at most 4 atoms per side, the
/// simplex solve matches exhaustive enumeration within 1e-9 and carries
/// a dual certificate with gap ≤ 1e-9.
#[test]
fn a5_transport_exactness() {
    let rho = arc_metric();
    let mut rng = stream(5005, 0);
    let mut worst_diff = 0.0f64;
    let mut worst_gap = 0.0f64;
    for trial in 0..200 {
        let mk = |count: usize, rng: &mut rand_pcg::Pcg64Mcg| {
            let atoms: Vec<Point> = (0..count)
                .map(|_| Point::Circle(CirclePoint::new(rng.random::<f64>())))
                .collect();
            let mut weights: Vec<f64> = (0..count).map(|_| rng.random::<f64>() + 0.02).collect();
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            DiscreteMeasure::new(atoms, weights).expect("measure")
        };
        let mu = mk(rng.random_range(1..5), &mut rng);
        let nu = mk(rng.random_range(1..5), &mut rng);
        let sol = kantorovich(&mu, &nu, &rho).expect("solve");
        let brute = kantorovich_bruteforce(&mu, &nu, &rho).expect("enumerate");
        let diff = (sol.value - brute).abs();
        worst_diff = worst_diff.max(diff);
        worst_gap = worst_gap.max(sol.duality_gap).max(sol.max_dual_violation);
        assert!(
            diff <= 1e-9,
            "trial {trial}: simplex {} vs enumeration {brute}",
            sol.value
        );
        assert!(sol.duality_gap <= 1e-9, "trial {trial}: duality gap {}", sol.duality_gap);
        assert!(
            sol.max_dual_violation <= 1e-9,
            "trial {trial}: dual infeasibility {}",
            sol.max_dual_violation
        );
    }
    println!("[A5] 200 instances: max |simplex - enumeration| = {worst_diff:.2e}, max certificate slack = {worst_gap:.2e}");
}

/// A6: for the rotation benchmark at n = 64, ε = 0.1, the constructed
/// net-transport plan costs at most ε(1−ε)+ε on every run of a 20-seed
/// sweep (and strictly below 2ε).
#[test]
fn a6_lemma3_witness() {
    let sys = SystemSpec::golden_rotation();
    let base = half_cut();
    let eps = 0.1;
    let bound = eps * (1.0 - eps) + eps;
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let sample = sample_invariant(&sys, 2000, seed).expect("sample");
        let iterated = iterate(&base, &sys, 64, Mode::Average).expect("iterate");
        let net = eps_entropy_hprime(&iterated, &sample, eps).expect("net");
        let witness = lemma3_plan(&sample, &net.centers, eps, &iterated).expect("plan");
        worst = worst.max(witness.cost);
        assert!(
            witness.cost <= bound + 1e-12,
            "seed {seed}: plan cost {} above eps(1-eps)+eps = {bound}",
            witness.cost
        );
        assert!(witness.cost < 2.0 * eps, "seed {seed}: cost {} not below 2eps", witness.cost);
        // the witness inequality behind the H / H' bridge
        let entropy = discrete_entropy(&witness.nu);
        assert!(
            entropy <= ((net.centers.len() + 1) as f64).ln() + 1e-12,
            "seed {seed}: H(nu) = {entropy} above ln(k+1)"
        );
    }
    println!("[A6] 20 seeds: worst plan cost {worst:.4} <= bound {bound:.4} (2eps = {:.4})", 2.0 * eps);
}

/// A7: the limiting average of the half-circle indicator under the
/// golden rotation matches the closed form `m[A Δ (A+r)]`: the closed
/// form is validated against a 10⁶-point Monte-Carlo oracle to 0.002,
/// then 200 sampled pairs at n = 10⁴ agree with it to 0.02.
#[test]
fn a7_ergodic_limit_closed_form() {
    // closed form vs Monte-Carlo oracle
    let a = 0.5;
    let mut rng = stream(7007, 0);
    let n_mc = 1_000_000;
    let zs: Vec<f64> = (0..n_mc).map(|_| rng.random::<f64>()).collect();
    for &r in &[0.1, 0.25, 0.37, 0.5, 0.81] {
        let mut hits = 0usize;
        for &z in &zs {
            let in_a = z < a;
            let in_shift = (z - r).rem_euclid(1.0) < a;
            if in_a != in_shift {
                hits += 1;
            }
        }
        let mc = hits as f64 / n_mc as f64;
        let cf = rotation_average_closed_form(a, r);
        assert!(
            (mc - cf).abs() <= 0.002,
            "closed form {cf} vs Monte-Carlo {mc} at r={r}"
        );
    }

    // Birkhoff averages at n = 10^4 against the closed form
    let sys = SystemSpec::golden_rotation();
    let rho = indicator_semimetric(0.0, a).expect("indicator");
    let iterated = iterate(&rho, &sys, 10_000, Mode::Average).expect("iterate");
    let sample = sample_invariant(&sys, 400, 7).expect("sample");
    let mut rng = stream(7008, 0);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let i = rng.random_range(0..sample.m());
        let j = rng.random_range(0..sample.m());
        let x = sample.points[i].as_circle().expect("circle");
        let y = sample.points[j].as_circle().expect("circle");
        let avg = iterated
            .eval(&sample.points[i], &sample.points[j])
            .expect("eval");
        let cf = rotation_average_closed_form(a, y.value() - x.value());
        worst = worst.max((avg - cf).abs());
    }
    println!("[A7] max |birkhoff_avg - closed form| over 200 pairs at n=1e4: {worst:.5}");
    assert!(worst <= 0.02, "ergodic-limit deviation {worst} above 0.02");
}

/// A8: on 500 random instances of at most 12 points across the catalog,
/// the greedy net is never below the true minimum, stays within the
/// set-cover factor, and always satisfies the mass condition.
#[test]
fn a8_greedy_net_oracle() {
    let rotation = SystemSpec::golden_rotation();
    let pascal = SystemSpec::pascal(0.5, 64);
    let factor = 12.0f64.ln();

    let circle_metrics: Vec<Semimetric> = vec![
        half_cut(),
        indicator_semimetric(0.0, 0.5).expect("indicator"),
        arc_metric(),
        constant_metric(),
    ];
    let word_metrics: Vec<Semimetric> = vec![
        cut_semimetric(Partition::WordPrefix { k: 1 }).expect("cut"),
        dyadic_metric(),
        hamming_window_metric(16).expect("hamming"),
    ];

    let mut rng = stream(8008, 0);
    let mut done = 0usize;
    while done < 500 {
        let on_circle = rng.random::<f64>() < 0.6;
        let (sys, metrics) = if on_circle {
            (&rotation, &circle_metrics)
        } else {
            (&pascal, &word_metrics)
        };
        let metric = &metrics[rng.random_range(0..metrics.len())];
        let m = rng.random_range(5..=12);
        let eps = rng.random_range(0.05..0.45);
        let sample = sample_invariant(sys, m, 9000 + done as u64).expect("sample");

        let net = eps_entropy_hprime(metric, &sample, eps).expect("net");
        let opt = minimal_cover_bruteforce(metric, &sample, eps).expect("brute");
        let k = net.centers.len();
        assert!(
            k >= opt,
            "instance {done} ({}, m={m}, eps={eps:.3}): greedy {k} below optimum {opt}",
            metric.name()
        );
        assert!(
            k as f64 <= opt as f64 * factor + 1.0,
            "instance {done} ({}, m={m}, eps={eps:.3}): greedy {k} vs optimal {opt} breaks the set-cover factor",
            metric.name()
        );
        assert!(
            net.covered_mass > 1.0 - eps,
            "instance {done}: cover mass {} fails the (1-eps) condition",
            net.covered_mass
        );
        done += 1;
    }
    println!("[A8] 500 instances: greedy within set-cover bounds, zero mass-condition failures");
}

/// A9: 10⁴ random triples per cataloged metric and per iterated metric
/// at n ∈ {1, 8, 64}: no axiom violations beyond 1e-12; the constant
/// metric fails the admissibility probe (neighbor fraction 0 for every
/// ε < 1).
#[test]
fn a9_metric_axiom_suite() {
    let rotation = SystemSpec::golden_rotation();
    let pascal = SystemSpec::pascal(0.5, 64);
    let shift = SystemSpec::bernoulli_shift(0.5, 64, 128);
    let circle_sample = sample_invariant(&rotation, 500, 90).expect("sample");
    let word_sample = sample_invariant(&pascal, 500, 91).expect("sample");
    let shift_sample = sample_invariant(&shift, 500, 92).expect("sample");
    let trials = 10_000;
    let mut combinations = 0usize;

    let circle_metrics: Vec<Semimetric> = vec![
        half_cut(),
        indicator_semimetric(0.0, 0.5).expect("indicator"),
        arc_metric(),
        constant_metric(),
    ];
    for rho in &circle_metrics {
        let report = metric_axiom_check(rho, &circle_sample, trials).expect("check");
        assert!(report.clean(), "{}: {report:?}", rho.name());
        combinations += 1;
        for n in [1usize, 8, 64] {
            for mode in [Mode::Average, Mode::Sup] {
                let it = iterate(rho, &rotation, n, mode).expect("iterate");
                let report = metric_axiom_check(&it, &circle_sample, trials).expect("check");
                assert!(report.clean(), "{}: {report:?}", it.name());
                combinations += 1;
            }
        }
    }

    let word_metrics: Vec<Semimetric> = vec![
        cut_semimetric(Partition::WordPrefix { k: 1 }).expect("cut"),
        dyadic_metric(),
        hamming_window_metric(32).expect("hamming"),
    ];
    for rho in &word_metrics {
        let report = metric_axiom_check(rho, &word_sample, trials).expect("check");
        assert!(report.clean(), "{}: {report:?}", rho.name());
        combinations += 1;
        for n in [1usize, 8, 64] {
            for (sys, sample) in [(&pascal, &word_sample), (&shift, &shift_sample)] {
                let it = iterate(rho, sys, n, Mode::Average).expect("iterate");
                let report = metric_axiom_check(&it, sample, trials).expect("check");
                assert!(report.clean(), "{}: {report:?}", it.name());
                combinations += 1;
            }
        }
    }

    // the non-admissible fixture: empty balls below the diameter
    let reports =
        admissibility_probe(&constant_metric(), &circle_sample, &[0.25, 0.5, 0.75, 0.99])
            .expect("probe");
    for rep in &reports {
        assert_eq!(
            rep.neighbor_fraction, 0.0,
            "constant metric shows neighbors at eps={}",
            rep.eps
        );
    }

    println!("[A9] {combinations} metric/iterate combinations x {trials} triples: zero violations at 1e-12; constant metric degenerate at every eps < 1");
}
