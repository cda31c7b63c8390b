//! Cross-module verification suites, runnable without any configuration.
//!
//! Four suites cover the load-bearing numerics: metric axioms over the
//! whole catalog (base and iterated), the transport simplex against
//! exhaustive enumeration, the greedy net against brute-force minimal
//! covers, and the ε-net transport-plan bound. A deliberately broken
//! metric can be injected to confirm the axiom checker actually detects
//! violations.

use scalent::entropy::{eps_entropy_hprime, minimal_cover_bruteforce};
use scalent::metrics::{
    admissibility_probe, arc_metric, constant_metric, cut_semimetric, dyadic_metric,
    hamming_window_metric, indicator_semimetric, iterate, metric_axiom_check, Partition,
    Semimetric,
};
use scalent::rng;
use scalent::systems::{sample_invariant, SystemSpec};
use scalent::transport::{kantorovich, kantorovich_bruteforce, lemma3_plan, DiscreteMeasure};
use scalent::{MetricEval, Mode, Point};

use rand::Rng;

pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub fn run_all(inject_broken_metric: bool) -> Vec<SuiteResult> {
    vec![
        metric_axiom_suite(inject_broken_metric),
        admissibility_suite(),
        transport_suite(),
        greedy_cover_suite(),
        net_plan_bound_suite(),
    ]
}

fn metric_axiom_suite(inject_broken: bool) -> SuiteResult {
    let rotation = SystemSpec::golden_rotation();
    let pascal = SystemSpec::pascal(0.5, 64);
    let circle_sample = sample_invariant(&rotation, 400, 101).expect("sample");
    let word_sample = sample_invariant(&pascal, 400, 102).expect("sample");

    let mut failures = Vec::new();
    let mut checked = 0usize;

    let circle_metrics = vec![
        cut_semimetric(Partition::halves()).expect("cut"),
        indicator_semimetric(0.0, 0.5).expect("indicator"),
        arc_metric(),
        constant_metric(),
    ];
    let word_metrics = vec![
        cut_semimetric(Partition::WordPrefix { k: 1 }).expect("cut"),
        dyadic_metric(),
        hamming_window_metric(32).expect("hamming"),
    ];

    let trials = 3000;
    for rho in &circle_metrics {
        let report = metric_axiom_check(rho, &circle_sample, trials).expect("check");
        checked += 1;
        if !report.clean() {
            failures.push(format!("{}: {report:?}", rho.name()));
        }
        for n in [1usize, 8, 64] {
            for mode in [Mode::Average, Mode::Sup] {
                let it = iterate(rho, &rotation, n, mode).expect("iterate");
                let report = metric_axiom_check(&it, &circle_sample, trials).expect("check");
                checked += 1;
                if !report.clean() {
                    failures.push(format!("{}: {report:?}", it.name()));
                }
            }
        }
    }
    for rho in &word_metrics {
        let report = metric_axiom_check(rho, &word_sample, trials).expect("check");
        checked += 1;
        if !report.clean() {
            failures.push(format!("{}: {report:?}", rho.name()));
        }
        for n in [1usize, 8, 64] {
            let it = iterate(rho, &pascal, n, Mode::Average).expect("iterate");
            let report = metric_axiom_check(&it, &word_sample, trials).expect("check");
            checked += 1;
            if !report.clean() {
                failures.push(format!("{}: {report:?}", it.name()));
            }
        }
    }

    if inject_broken {
        let broken = Semimetric::from_fn("broken(signed-diff)", false, None, |x, y| {
            Ok(x.as_circle().expect("circle").value() - y.as_circle().expect("circle").value())
        });
        let report = metric_axiom_check(&broken, &circle_sample, trials).expect("check");
        checked += 1;
        if report.clean() {
            failures.push("injected broken metric was NOT detected".to_string());
        } else {
            failures.push(format!(
                "injected fixture correctly flagged: {} symmetry / {} negativity violations",
                report.symmetry_violations, report.nonnegativity_violations
            ));
        }
    }

    SuiteResult {
        name: "metric-axioms",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{checked} metric/iterate combinations clean at 1e-12")
        } else {
            failures.join("; ")
        },
    }
}

fn admissibility_suite() -> SuiteResult {
    let rotation = SystemSpec::golden_rotation();
    let sample = sample_invariant(&rotation, 400, 103).expect("sample");
    let mut failures = Vec::new();

    let arc = admissibility_probe(&arc_metric(), &sample, &[0.05, 0.1]).expect("probe");
    if arc.iter().any(|r| r.neighbor_fraction < 0.99) {
        failures.push(format!("arc metric looks degenerate: {arc:?}"));
    }
    let constant =
        admissibility_probe(&constant_metric(), &sample, &[0.25, 0.5, 0.9]).expect("probe");
    if constant.iter().any(|r| r.neighbor_fraction != 0.0) {
        failures.push("constant metric not flagged as degenerate".to_string());
    }

    SuiteResult {
        name: "admissibility-probe",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            "arc metric admissible, constant metric degenerate, as expected".to_string()
        } else {
            failures.join("; ")
        },
    }
}

fn transport_suite() -> SuiteResult {
    let rho = arc_metric();
    let mut rng = rng::stream(104, 0);
    let mut worst_gap = 0.0f64;
    let mut worst_diff = 0.0f64;
    let mut failures = Vec::new();
    for trial in 0..60 {
        let mk = |count: usize, rng: &mut rand_pcg::Pcg64Mcg| {
            let atoms: Vec<Point> = (0..count)
                .map(|_| Point::Circle(scalent::CirclePoint::new(rng.random::<f64>())))
                .collect();
            let mut weights: Vec<f64> = (0..count).map(|_| rng.random::<f64>() + 0.05).collect();
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            DiscreteMeasure::new(atoms, weights).expect("measure")
        };
        let mu = mk(rng.random_range(1..5), &mut rng);
        let nu = mk(rng.random_range(1..5), &mut rng);
        match (kantorovich(&mu, &nu, &rho), kantorovich_bruteforce(&mu, &nu, &rho)) {
            (Ok(sol), Ok(brute)) => {
                worst_gap = worst_gap.max(sol.duality_gap).max(sol.max_dual_violation);
                worst_diff = worst_diff.max((sol.value - brute).abs());
                if (sol.value - brute).abs() > 1e-9 || sol.duality_gap > 1e-9 {
                    failures.push(format!(
                        "trial {trial}: simplex {} vs enumeration {brute}, gap {}",
                        sol.value, sol.duality_gap
                    ));
                }
            }
            (Err(e), _) | (_, Err(e)) => failures.push(format!("trial {trial}: {e}")),
        }
    }
    SuiteResult {
        name: "transport-exactness",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("60 instances: max |simplex - enumeration| = {worst_diff:.2e}, max certificate slack = {worst_gap:.2e}")
        } else {
            failures.join("; ")
        },
    }
}

fn greedy_cover_suite() -> SuiteResult {
    let rotation = SystemSpec::golden_rotation();
    let rho = arc_metric();
    let factor = 12.0f64.ln();
    let mut failures = Vec::new();
    for seed in 200..260 {
        let sample = sample_invariant(&rotation, 12, seed).expect("sample");
        for eps in [0.05, 0.15, 0.3] {
            let net = eps_entropy_hprime(&rho, &sample, eps).expect("net");
            let opt = minimal_cover_bruteforce(&rho, &sample, eps).expect("brute");
            let k = net.centers.len();
            if k < opt || k as f64 > opt as f64 * factor + 1.0 {
                failures.push(format!("seed {seed} eps {eps}: greedy {k} vs optimal {opt}"));
            }
            if net.covered_mass <= 1.0 - eps {
                failures.push(format!("seed {seed} eps {eps}: mass condition violated"));
            }
        }
    }
    SuiteResult {
        name: "greedy-vs-minimal-cover",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            "180 instances within set-cover bounds, all covers proper".to_string()
        } else {
            failures.join("; ")
        },
    }
}

fn net_plan_bound_suite() -> SuiteResult {
    let rotation = SystemSpec::golden_rotation();
    let base = cut_semimetric(Partition::halves()).expect("cut");
    let mut failures = Vec::new();
    for seed in 0..5 {
        let sample = sample_invariant(&rotation, 500, seed).expect("sample");
        let eps = 0.1;
        let it = iterate(&base, &rotation, 64, Mode::Average).expect("iterate");
        let net = eps_entropy_hprime(&it, &sample, eps).expect("net");
        match lemma3_plan(&sample, &net.centers, eps, &it) {
            Ok(w) => {
                if w.cost > w.bound + 1e-12 {
                    failures.push(format!("seed {seed}: cost {} above bound {}", w.cost, w.bound));
                }
                if w.cost >= 2.0 * eps {
                    failures.push(format!("seed {seed}: cost {} not below 2eps", w.cost));
                }
            }
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    SuiteResult {
        name: "net-transport-bound",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            "5 seeds: plan cost within eps(1-eps)+eps and below 2eps".to_string()
        } else {
            failures.join("; ")
        },
    }
}
