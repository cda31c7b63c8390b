//! Scaling curves and their growth classification.
//!
//! A scaling curve records `ln k(n, ε)` — the greedy ε-entropy of the
//! sample under the n-step iterated metric — over a schedule of n values.
//! Classification fits the candidate growth families {constant, a + b·ln n,
//! a + b·n^α, a + b·n} per ε on the estimator's valid window and demands
//! one family dominate on every ε; the verdict feeds the spectral
//! diagnostic: bounded average-metric scaling is consistent with purely
//! discrete spectrum, unbounded average-metric scaling witnesses a
//! continuous component. Sup-mode curves never enter the verdict — sup
//! growth is logarithmic already for an irrational rotation, whose
//! spectrum is discrete.
//!
//! Two estimator artifacts shape the valid window:
//!
//! - saturation: once the net size approaches the coverage target itself
//!   (every ball nearly a singleton), `ln k` is pinned at `ln((1−ε)m)` by
//!   sample size, not by the metric's geometry. Cells at or past
//!   `sat_fraction` of that ceiling are flagged and excluded from fits.
//! - transient: growth classes are asymptotic statements; when the curve
//!   visibly settles (its tail is flat within `plateau_delta`), the
//!   pre-plateau rise is burn-in and is trimmed before fitting.

mod engine;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{coverage_target, greedy_cover};
use crate::error::{Error, Result};
use crate::metrics::{Mode, Semimetric};
use crate::systems::{sample_invariant, SystemSpec};

/// One `(n, ε)` measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveCell {
    pub n: usize,
    pub eps: f64,
    /// Greedy net size (0 for gap cells).
    pub k: usize,
    pub ln_k: f64,
    pub covered_mass: f64,
    /// Net size at or beyond `sat_fraction` of the coverage target: the
    /// estimate is a sample-size ceiling, not a geometry readout.
    pub saturated: bool,
    /// The orbit horizon ended before this n (excluded set, exhausted
    /// buffer); no value was computed.
    pub gap: bool,
}

/// Grid of `(n, ε) ↦ ln k` values with provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingCurve {
    pub system: String,
    pub metric: String,
    pub mode: String,
    pub m: usize,
    pub seed: u64,
    pub schedule: Vec<usize>,
    pub eps_grid: Vec<f64>,
    /// n-major: `cells[n_idx * eps_grid.len() + eps_idx]`.
    pub cells: Vec<CurveCell>,
}

impl ScalingCurve {
    pub fn cell(&self, n_idx: usize, eps_idx: usize) -> &CurveCell {
        &self.cells[n_idx * self.eps_grid.len() + eps_idx]
    }

    /// All cells of one ε column, in schedule order.
    pub fn series(&self, eps_idx: usize) -> Vec<&CurveCell> {
        (0..self.schedule.len())
            .map(|n_idx| self.cell(n_idx, eps_idx))
            .collect()
    }
}

/// Knobs of the curve computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveOptions {
    /// Rescale the base metric to diameter 1 before iterating (the
    /// convention the transport bounds assume).
    pub normalize: bool,
    /// Fraction of the coverage target at which a cell counts as
    /// saturated. At the default 0.5 a flagged net averages fewer than
    /// two covered points per ball — it enumerates the sample instead of
    /// measuring ball geometry.
    pub sat_fraction: f64,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions {
            normalize: true,
            sat_fraction: 0.5,
        }
    }
}

/// Default schedule: powers of two from 1 to 4096.
pub fn default_schedule() -> Vec<usize> {
    (0..=12).map(|e| 1usize << e).collect()
}

/// Default ε grid.
pub fn default_eps_grid() -> Vec<f64> {
    vec![0.05, 0.1, 0.2]
}

/// Sweep the schedule: one shared sample, one orbit pass per pair, a
/// greedy cover per `(n, ε)` cell.
#[allow(clippy::too_many_arguments)]
pub fn scaling_curve(
    sys: &SystemSpec,
    base: &Semimetric,
    mode: Mode,
    schedule: &[usize],
    eps_grid: &[f64],
    m: usize,
    seed: u64,
    opts: &CurveOptions,
) -> Result<ScalingCurve> {
    if schedule.is_empty() || schedule[0] == 0 {
        return Err(Error::InvalidArgument(
            "schedule must be nonempty with n >= 1".into(),
        ));
    }
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "schedule must be strictly increasing".into(),
        ));
    }
    for &eps in eps_grid {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidEps { eps });
        }
    }
    if let Mode::Lp(p) = mode {
        if p <= 1.0 || !p.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lp exponent {p} must be finite and > 1"
            )));
        }
    }

    let sample = sample_invariant(sys, m, seed)?;
    let base_used = if opts.normalize {
        base.normalized()?
    } else {
        base.clone()
    };

    let matrices = engine::build_cell_matrices(sys, &base_used, mode, sample, schedule, eps_grid)?;

    let cells: Vec<CurveCell> = matrices
        .per_cell
        .par_iter()
        .enumerate()
        .map(|(idx, matrix)| {
            let n = schedule[idx / eps_grid.len()];
            let eps = eps_grid[idx % eps_grid.len()];
            match matrix {
                None => CurveCell {
                    n,
                    eps,
                    k: 0,
                    ln_k: 0.0,
                    covered_mass: 0.0,
                    saturated: false,
                    gap: true,
                },
                Some(balls) => {
                    let target = coverage_target(m, eps);
                    let net = greedy_cover(balls, target);
                    let k = net.centers.len();
                    CurveCell {
                        n,
                        eps,
                        k,
                        ln_k: net.ln_k,
                        covered_mass: net.covered_mass,
                        saturated: k as f64 >= CURVE_SAT_GUARD.max(opts.sat_fraction) * target as f64,
                        gap: false,
                    }
                }
            }
        })
        .collect();

    Ok(ScalingCurve {
        system: sys.name.clone(),
        metric: base_used.name().to_string(),
        mode: mode.as_str().to_string(),
        m,
        seed,
        schedule: schedule.to_vec(),
        eps_grid: eps_grid.to_vec(),
        cells,
    })
}

// Lower bound on the saturation fraction so a misconfigured option cannot
// flag everything.
const CURVE_SAT_GUARD: f64 = 0.05;

use crate::metrics::MetricEval;

/// Candidate growth families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    Constant,
    Logarithmic,
    Power { alpha: f64 },
    Linear,
}

impl ModelKind {
    fn class(&self) -> GrowthClass {
        match self {
            ModelKind::Constant => GrowthClass::Bounded,
            ModelKind::Logarithmic => GrowthClass::Logarithmic,
            ModelKind::Power { alpha } => GrowthClass::Power { alpha: *alpha },
            ModelKind::Linear => GrowthClass::Linear,
        }
    }
}

/// One least-squares fit `y ≈ a + b·g(n)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFit {
    pub model: ModelKind,
    pub intercept: f64,
    pub slope: f64,
    pub sse: f64,
    pub r2: f64,
    pub bic: f64,
    /// `|slope| · (g(n_last) − g(n_first))`: how much the fitted model
    /// rises over the analysis window.
    pub predicted_rise: f64,
}

/// Growth class of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GrowthClass {
    Bounded,
    Logarithmic,
    Power { alpha: f64 },
    Linear,
    Inconclusive,
}

impl GrowthClass {
    /// Same family, ignoring the power exponent.
    pub fn same_kind(&self, other: &GrowthClass) -> bool {
        matches!(
            (self, other),
            (GrowthClass::Bounded, GrowthClass::Bounded)
                | (GrowthClass::Logarithmic, GrowthClass::Logarithmic)
                | (GrowthClass::Power { .. }, GrowthClass::Power { .. })
                | (GrowthClass::Linear, GrowthClass::Linear)
                | (GrowthClass::Inconclusive, GrowthClass::Inconclusive)
        )
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(
            self,
            GrowthClass::Logarithmic | GrowthClass::Power { .. } | GrowthClass::Linear
        )
    }
}

/// Per-ε diagnostics of one classification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpsReport {
    pub eps: f64,
    /// Enough valid cells to fit at all.
    pub informative: bool,
    pub class: GrowthClass,
    /// n values of the analysis window (post saturation cut and plateau
    /// trim).
    pub window: Vec<usize>,
    /// Mean of the window's last third minus mean of its first third.
    pub delta_thirds: f64,
    pub fits: Vec<ModelFit>,
    /// BIC gap between the winning growth model and the runner-up
    /// (0 when the bounded rule decided).
    pub dominance_gap: f64,
}

/// Classification result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthVerdict {
    pub class: GrowthClass,
    pub per_eps: Vec<EpsReport>,
}

/// Classifier thresholds; every default is a tunable estimator choice,
/// not a truth claim.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub min_schedule_points: usize,
    /// Minimum valid cells per ε for that ε to vote.
    pub min_window_points: usize,
    /// Boundedness: window's last-third mean must exceed its first-third
    /// mean by less than this (nats).
    pub bounded_delta: f64,
    /// Tail spread below which the curve counts as settled and the
    /// pre-plateau rise is trimmed (nats).
    pub plateau_delta: f64,
    /// A model whose fitted rise over the window stays below this is not
    /// growing (nats).
    pub rise_threshold: f64,
    /// Required BIC gap between the best and second-best growth model.
    pub dominance_margin: f64,
    pub alpha_grid: Vec<f64>,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            min_schedule_points: 6,
            min_window_points: 4,
            bounded_delta: 0.3,
            plateau_delta: 0.3,
            rise_threshold: 0.3,
            dominance_margin: 2.0,
            alpha_grid: vec![0.25, 0.5, 0.75],
        }
    }
}

const SSE_FLOOR: f64 = 1e-12;

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = ym - b * xm;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (a + b * x);
            r * r
        })
        .sum();
    (a, b, sse)
}

fn bic(sse: f64, n_pts: usize, params: usize) -> f64 {
    let n = n_pts as f64;
    n * (sse.max(SSE_FLOOR) / n).ln() + params as f64 * n.ln()
}

fn fit_model(kind: ModelKind, ns: &[f64], ys: &[f64], sst: f64) -> ModelFit {
    let n_pts = ns.len();
    let (intercept, slope, sse, rise) = match kind {
        ModelKind::Constant => {
            let mean = ys.iter().sum::<f64>() / n_pts as f64;
            (mean, 0.0, sst, 0.0)
        }
        _ => {
            let xs: Vec<f64> = ns
                .iter()
                .map(|&n| match kind {
                    ModelKind::Logarithmic => n.ln(),
                    ModelKind::Power { alpha } => n.powf(alpha),
                    ModelKind::Linear => n,
                    ModelKind::Constant => unreachable!(),
                })
                .collect();
            let (a, b, sse) = least_squares(&xs, ys);
            let rise = (b * (xs[xs.len() - 1] - xs[0])).abs();
            (a, b, sse, rise)
        }
    };
    let r2 = if sst <= SSE_FLOOR {
        if sse <= SSE_FLOOR {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - sse / sst
    };
    let params = if matches!(kind, ModelKind::Constant) { 1 } else { 2 };
    ModelFit {
        model: kind,
        intercept,
        slope,
        sse,
        r2,
        bic: bic(sse, n_pts, params),
        predicted_rise: rise,
    }
}

/// Classify one ε column on its analysis window.
fn classify_eps(
    eps: f64,
    cells: &[&CurveCell],
    opts: &ClassifyOptions,
) -> EpsReport {
    // Valid prefix: non-gap cells up to the first saturated one.
    let valid: Vec<&CurveCell> = cells
        .iter()
        .copied()
        .take_while(|c| !c.gap && !c.saturated)
        .collect();

    let uninformative = |window: Vec<usize>| EpsReport {
        eps,
        informative: false,
        class: GrowthClass::Inconclusive,
        window,
        delta_thirds: 0.0,
        fits: Vec::new(),
        dominance_gap: 0.0,
    };

    if valid.len() < opts.min_window_points {
        return uninformative(valid.iter().map(|c| c.n).collect());
    }

    // Plateau trim: when the tail has settled, the early rise is burn-in.
    let mut start = 0usize;
    {
        let t = valid.len().div_ceil(3);
        let tail = &valid[valid.len() - t..];
        let tail_max = tail.iter().map(|c| c.ln_k).fold(f64::MIN, f64::max);
        let tail_min = tail.iter().map(|c| c.ln_k).fold(f64::MAX, f64::min);
        if tail_max - tail_min <= opts.plateau_delta {
            let tail_mean = tail.iter().map(|c| c.ln_k).sum::<f64>() / t as f64;
            let mut s = 0usize;
            while s < valid.len() && (valid[s].ln_k - tail_mean).abs() > opts.plateau_delta {
                s += 1;
            }
            if valid.len() - s >= opts.min_window_points {
                start = s;
            }
        }
    }
    let window = &valid[start..];

    let ns: Vec<f64> = window.iter().map(|c| c.n as f64).collect();
    let ys: Vec<f64> = window.iter().map(|c| c.ln_k).collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let sst: f64 = ys.iter().map(|y| (y - mean) * (y - mean)).sum();

    let t = window.len().div_ceil(3);
    let first_third = &ys[..t];
    let last_third = &ys[ys.len() - t..];
    let delta_thirds = last_third.iter().sum::<f64>() / t as f64
        - first_third.iter().sum::<f64>() / t as f64;

    let mut fits = vec![fit_model(ModelKind::Constant, &ns, &ys, sst)];
    fits.push(fit_model(ModelKind::Logarithmic, &ns, &ys, sst));
    let best_power = opts
        .alpha_grid
        .iter()
        .map(|&alpha| fit_model(ModelKind::Power { alpha }, &ns, &ys, sst))
        .min_by(|a, b| a.sse.partial_cmp(&b.sse).expect("finite sse"))
        .expect("nonempty alpha grid");
    fits.push(best_power);
    fits.push(fit_model(ModelKind::Linear, &ns, &ys, sst));

    let growth_fits = &fits[1..];
    let all_flat = growth_fits
        .iter()
        .all(|f| f.predicted_rise < opts.rise_threshold);

    let (class, dominance_gap) = if all_flat {
        // No family sees real growth: the constant model dominates by the
        // rise criterion; boundedness additionally demands a flat
        // thirds-difference.
        if delta_thirds < opts.bounded_delta {
            (GrowthClass::Bounded, 0.0)
        } else {
            (GrowthClass::Inconclusive, 0.0)
        }
    } else {
        let mut order: Vec<&ModelFit> = growth_fits.iter().collect();
        order.sort_by(|a, b| a.bic.partial_cmp(&b.bic).expect("finite bic"));
        let gap = order[1].bic - order[0].bic;
        if gap >= opts.dominance_margin {
            (order[0].model.class(), gap)
        } else {
            (GrowthClass::Inconclusive, gap)
        }
    };

    EpsReport {
        eps,
        informative: true,
        class,
        window: window.iter().map(|c| c.n).collect(),
        delta_thirds,
        fits,
        dominance_gap,
    }
}

/// Fit the growth families per ε and demand coherence across the grid:
/// any disagreement (or any ambiguous ε) downgrades to `Inconclusive`,
/// never silently picks one ε.
pub fn classify_growth(curve: &ScalingCurve, opts: &ClassifyOptions) -> Result<GrowthVerdict> {
    if curve.schedule.len() < opts.min_schedule_points {
        return Err(Error::TooFewPoints {
            points: curve.schedule.len(),
            min: opts.min_schedule_points,
        });
    }

    let per_eps: Vec<EpsReport> = (0..curve.eps_grid.len())
        .map(|e| classify_eps(curve.eps_grid[e], &curve.series(e), opts))
        .collect();

    let informative: Vec<&EpsReport> = per_eps.iter().filter(|r| r.informative).collect();
    let class = if informative.is_empty() {
        GrowthClass::Inconclusive
    } else if informative
        .iter()
        .all(|r| r.class.same_kind(&informative[0].class))
        && !matches!(informative[0].class, GrowthClass::Inconclusive)
    {
        informative[0].class
    } else {
        GrowthClass::Inconclusive
    };

    Ok(GrowthVerdict { class, per_eps })
}

/// One classified curve entering the spectrum diagnostic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticInput {
    pub label: String,
    pub mode: String,
    pub class: GrowthClass,
}

impl DiagnosticInput {
    pub fn new(curve: &ScalingCurve, verdict: &GrowthVerdict) -> Self {
        DiagnosticInput {
            label: format!("{} / {} / {}", curve.system, curve.metric, curve.mode),
            mode: curve.mode.clone(),
            class: verdict.class,
        }
    }
}

/// Spectral-type reading of a set of growth verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumVerdict {
    /// Every average-mode curve is bounded.
    ConsistentWithDiscrete,
    /// Some average-mode curve grows without bound.
    ContinuousComponent,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumDiagnostic {
    pub verdict: SpectrumVerdict,
    pub explanation: String,
    pub average_curves: usize,
    pub sup_excluded: usize,
}

/// Combine average-mode growth verdicts into a spectrum diagnostic.
///
/// Sup-mode curves are reported but never counted: logarithmic sup growth
/// coexists with discrete spectrum (irrational rotation), so only the
/// average metric witnesses a continuous component.
pub fn spectrum_diagnostic(inputs: &[DiagnosticInput]) -> Result<SpectrumDiagnostic> {
    if inputs.is_empty() {
        return Err(Error::EmptyInput("no growth verdicts supplied"));
    }
    let (avg, rest): (Vec<_>, Vec<_>) = inputs.iter().partition(|i| i.mode == "average");
    let sup_excluded = rest.iter().filter(|i| i.mode == "sup").count();

    if avg.is_empty() {
        return Ok(SpectrumDiagnostic {
            verdict: SpectrumVerdict::Inconclusive,
            explanation: "no average-mode curves: sup-mode growth cannot witness a continuous \
                          spectral component (the irrational rotation has logarithmic sup \
                          scaling with discrete spectrum)"
                .to_string(),
            average_curves: 0,
            sup_excluded,
        });
    }

    let unbounded: Vec<&&DiagnosticInput> =
        avg.iter().filter(|i| i.class.is_unbounded()).collect();
    if !unbounded.is_empty() {
        let names: Vec<&str> = unbounded.iter().map(|i| i.label.as_str()).collect();
        return Ok(SpectrumDiagnostic {
            verdict: SpectrumVerdict::ContinuousComponent,
            explanation: format!(
                "spectrum contains a continuous component: unbounded average-metric scaling for {}",
                names.join("; ")
            ),
            average_curves: avg.len(),
            sup_excluded,
        });
    }

    if avg.iter().all(|i| matches!(i.class, GrowthClass::Bounded)) {
        return Ok(SpectrumDiagnostic {
            verdict: SpectrumVerdict::ConsistentWithDiscrete,
            explanation: format!(
                "consistent with purely discrete spectrum: every average-metric scaling \
                 sequence is bounded ({} curve(s))",
                avg.len()
            ),
            average_curves: avg.len(),
            sup_excluded,
        });
    }

    Ok(SpectrumDiagnostic {
        verdict: SpectrumVerdict::Inconclusive,
        explanation: "some average-mode curves are inconclusive".to_string(),
        average_curves: avg.len(),
        sup_excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{arc_metric, cut_semimetric, dyadic_metric, iterate, Partition};
    use crate::systems::SystemSpec;

    /// Synthetic curve with the same value at every ε.
    fn fixture_curve(values: &[f64]) -> ScalingCurve {
        let schedule: Vec<usize> = (0..values.len()).map(|e| 1usize << e).collect();
        let eps_grid = vec![0.05, 0.1, 0.2];
        let mut cells = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            for &eps in &eps_grid {
                cells.push(CurveCell {
                    n: schedule[i],
                    eps,
                    k: v.exp().round() as usize,
                    ln_k: v,
                    covered_mass: 1.0,
                    saturated: false,
                    gap: false,
                });
            }
        }
        ScalingCurve {
            system: "fixture".into(),
            metric: "fixture".into(),
            mode: "average".into(),
            m: 1000,
            seed: 0,
            schedule,
            eps_grid,
            cells,
        }
    }

    #[test]
    fn constant_fixture_is_bounded() {
        let curve = fixture_curve(&[2.0; 13]);
        let verdict = classify_growth(&curve, &ClassifyOptions::default()).unwrap();
        assert_eq!(verdict.class, GrowthClass::Bounded);
        for rep in &verdict.per_eps {
            assert!(rep.delta_thirds.abs() < 1e-12);
        }
    }

    #[test]
    fn log_fixture_is_logarithmic_with_unit_slope() {
        let values: Vec<f64> = (0..13).map(|e| ((1usize << e) as f64).ln()).collect();
        let curve = fixture_curve(&values);
        let verdict = classify_growth(&curve, &ClassifyOptions::default()).unwrap();
        assert_eq!(verdict.class, GrowthClass::Logarithmic);
        for rep in &verdict.per_eps {
            let log_fit = rep
                .fits
                .iter()
                .find(|f| matches!(f.model, ModelKind::Logarithmic))
                .unwrap();
            assert!((0.9..=1.1).contains(&log_fit.slope), "slope {}", log_fit.slope);
            assert!(log_fit.r2 > 0.999);
        }
    }

    #[test]
    fn linear_fixture_is_linear_with_expected_slope() {
        let values: Vec<f64> = (0..13).map(|e| 0.7 * (1usize << e) as f64).collect();
        let curve = fixture_curve(&values);
        let verdict = classify_growth(&curve, &ClassifyOptions::default()).unwrap();
        assert_eq!(verdict.class, GrowthClass::Linear);
        for rep in &verdict.per_eps {
            let lin = rep
                .fits
                .iter()
                .find(|f| matches!(f.model, ModelKind::Linear))
                .unwrap();
            assert!((0.63..=0.77).contains(&lin.slope));
        }
    }

    #[test]
    fn short_schedules_are_rejected() {
        let curve = fixture_curve(&[1.0; 5]);
        assert!(matches!(
            classify_growth(&curve, &ClassifyOptions::default()),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn saturated_tail_is_excluded_from_fits() {
        // linear rise then a hard ceiling flagged as saturated
        let mut curve = fixture_curve(&[0.7, 1.4, 2.8, 5.6, 7.5, 7.5, 7.5, 7.5, 7.5, 7.5]);
        for cell in curve.cells.iter_mut() {
            if cell.ln_k >= 7.5 {
                cell.saturated = true;
            }
        }
        let verdict = classify_growth(&curve, &ClassifyOptions::default()).unwrap();
        assert_eq!(verdict.class, GrowthClass::Linear);
        for rep in &verdict.per_eps {
            assert_eq!(rep.window, vec![1, 2, 4, 8]);
        }
    }

    #[test]
    fn plateau_trims_burn_in() {
        // early rise then a long flat tail must classify bounded
        let curve = fixture_curve(&[0.7, 1.4, 1.9, 2.5, 2.5, 2.47, 2.52, 2.5, 2.49, 2.51, 2.5, 2.5, 2.5]);
        let verdict = classify_growth(&curve, &ClassifyOptions::default()).unwrap();
        assert_eq!(verdict.class, GrowthClass::Bounded);
        for rep in &verdict.per_eps {
            assert!(rep.window[0] >= 8, "window {:?}", rep.window);
            assert!(rep.delta_thirds.abs() < 0.3);
        }
    }

    #[test]
    fn mixed_eps_classes_downgrade_to_inconclusive() {
        // same n column values differ per eps: log at one eps, linear at others
        let schedule: Vec<usize> = (0..10).map(|e| 1usize << e).collect();
        let eps_grid = vec![0.05, 0.1];
        let mut cells = Vec::new();
        for (i, &n) in schedule.iter().enumerate() {
            let _ = i;
            for (e, &eps) in eps_grid.iter().enumerate() {
                let v = if e == 0 {
                    0.5 * n as f64
                } else {
                    (n as f64).ln()
                };
                cells.push(CurveCell {
                    n,
                    eps,
                    k: 1,
                    ln_k: v,
                    covered_mass: 1.0,
                    saturated: false,
                    gap: false,
                });
            }
        }
        let curve = ScalingCurve {
            system: "fixture".into(),
            metric: "fixture".into(),
            mode: "average".into(),
            m: 100,
            seed: 0,
            schedule,
            eps_grid,
            cells,
        };
        let verdict = classify_growth(&curve, &ClassifyOptions::default()).unwrap();
        assert_eq!(verdict.class, GrowthClass::Inconclusive);
    }

    #[test]
    fn curve_n1_cell_matches_direct_hprime() {
        let sys = SystemSpec::golden_rotation();
        let base = cut_semimetric(Partition::halves()).unwrap();
        let schedule = [1, 2, 4, 8, 16, 32];
        let eps_grid = [0.1, 0.2];
        let curve = scaling_curve(
            &sys,
            &base,
            Mode::Average,
            &schedule,
            &eps_grid,
            200,
            7,
            &CurveOptions::default(),
        )
        .unwrap();
        let sample = crate::systems::sample_invariant(&sys, 200, 7).unwrap();
        for (e, &eps) in eps_grid.iter().enumerate() {
            let direct = crate::entropy::eps_entropy_hprime(&base, &sample, eps).unwrap();
            let cell = curve.cell(0, e);
            assert_eq!(cell.k, direct.centers.len(), "eps={eps}");
        }
    }

    #[test]
    fn sup_dominates_average_cellwise() {
        let sys = SystemSpec::golden_rotation();
        let base = cut_semimetric(Partition::halves()).unwrap();
        let schedule = [1, 2, 4, 8, 16, 32, 64];
        let eps_grid = [0.1, 0.2];
        let mk = |mode| {
            scaling_curve(
                &sys,
                &base,
                mode,
                &schedule,
                &eps_grid,
                300,
                11,
                &CurveOptions::default(),
            )
            .unwrap()
        };
        let avg = mk(Mode::Average);
        let sup = mk(Mode::Sup);
        for idx in 0..avg.cells.len() {
            assert!(
                sup.cells[idx].ln_k >= avg.cells[idx].ln_k - 1e-12,
                "cell {idx}: sup {} < avg {}",
                sup.cells[idx].ln_k,
                avg.cells[idx].ln_k
            );
        }
    }

    #[test]
    fn curve_inputs_are_validated() {
        let sys = SystemSpec::golden_rotation();
        let base = cut_semimetric(Partition::halves()).unwrap();
        let opts = CurveOptions::default();
        // non-increasing schedule
        assert!(scaling_curve(&sys, &base, Mode::Average, &[1, 4, 2], &[0.1], 50, 0, &opts).is_err());
        // n = 0
        assert!(scaling_curve(&sys, &base, Mode::Average, &[0, 1], &[0.1], 50, 0, &opts).is_err());
        // eps out of range
        assert!(matches!(
            scaling_curve(&sys, &base, Mode::Average, &[1, 2], &[1.0], 50, 0, &opts),
            Err(Error::InvalidEps { .. })
        ));
        // lp exponent must exceed 1
        assert!(scaling_curve(&sys, &base, Mode::Lp(1.0), &[1, 2], &[0.1], 50, 0, &opts).is_err());
    }

    #[test]
    fn exhausted_orbits_are_recorded_as_gaps() {
        // At depth 4 the excluded set is fat: orbits hit it quickly and
        // resampling cannot rescue them, so cells beyond the horizon are
        // gaps rather than silent wraparounds.
        let sys = SystemSpec::pascal(0.5, 4);
        let schedule = [1, 2, 4, 8, 16, 32];
        let curve = scaling_curve(
            &sys,
            &dyadic_metric(),
            Mode::Average,
            &schedule,
            &[0.2],
            50,
            1,
            &CurveOptions::default(),
        )
        .unwrap();
        assert!(!curve.cell(0, 0).gap, "n=1 must always be computable");
        assert!(
            curve.cells.iter().any(|c| c.gap),
            "depth-4 adic orbits cannot run 32 steps"
        );
        // gaps form a suffix of the schedule
        let first_gap = curve.cells.iter().position(|c| c.gap).unwrap();
        assert!(curve.cells[first_gap..].iter().all(|c| c.gap));

        // the shift runs out of buffer the same way
        let shift = SystemSpec::bernoulli_shift(0.5, 8, 4);
        let curve = scaling_curve(
            &shift,
            &cut_semimetric(Partition::WordPrefix { k: 1 }).unwrap(),
            Mode::Average,
            &schedule,
            &[0.2],
            50,
            1,
            &CurveOptions::default(),
        )
        .unwrap();
        let horizon = 5; // lookahead 4 => orbits of length 5
        for (n_idx, &n) in schedule.iter().enumerate() {
            assert_eq!(curve.cell(n_idx, 0).gap, n > horizon, "n={n}");
        }
    }

    #[test]
    fn curves_are_seed_reproducible() {
        let sys = SystemSpec::pascal(0.5, 64);
        let base = dyadic_metric();
        let schedule = [1, 2, 4, 8, 16];
        let eps_grid = [0.1];
        let mk = || {
            scaling_curve(
                &sys,
                &base,
                Mode::Sup,
                &schedule,
                &eps_grid,
                150,
                23,
                &CurveOptions::default(),
            )
            .unwrap()
        };
        let a = mk();
        let b = mk();
        for (ca, cb) in a.cells.iter().zip(&b.cells) {
            assert_eq!(ca.k, cb.k);
            assert_eq!(ca.ln_k, cb.ln_k);
        }
    }

    /// The bulk engine must agree with direct IteratedMetric evaluation on
    /// ball membership (up to knife-edge float ties).
    #[test]
    fn engine_matches_pointwise_iterated_metric() {
        let cases: Vec<(SystemSpec, Semimetric)> = vec![
            (
                SystemSpec::golden_rotation(),
                cut_semimetric(Partition::halves()).unwrap(),
            ),
            (SystemSpec::golden_rotation(), arc_metric()),
            (SystemSpec::pascal(0.5, 32), dyadic_metric()),
            (
                SystemSpec::bernoulli_shift(0.5, 16, 64),
                cut_semimetric(Partition::WordPrefix { k: 1 }).unwrap(),
            ),
            (SystemSpec::bernoulli_shift(0.5, 16, 64), dyadic_metric()),
        ];
        let schedule = [1, 2, 4, 8, 16, 32];
        let eps_grid = [0.07, 0.2, 0.5];
        let m = 40;
        for (sys, base) in &cases {
            for mode in [Mode::Average, Mode::Sup] {
                let opts = CurveOptions {
                    normalize: true,
                    sat_fraction: 1.0,
                };
                let sample = crate::systems::sample_invariant(sys, m, 31).unwrap();
                let normalized = base.normalized().unwrap();
                let matrices = engine::build_cell_matrices(
                    sys,
                    &normalized,
                    mode,
                    sample,
                    &schedule,
                    &eps_grid,
                )
                .unwrap();
                let _ = &opts;
                for (n_idx, &n) in schedule.iter().enumerate() {
                    if n > matrices.horizon {
                        continue;
                    }
                    let iterated = iterate(&normalized, sys, n, mode).unwrap();
                    for (e_idx, &eps) in eps_grid.iter().enumerate() {
                        let balls = matrices.per_cell[n_idx * eps_grid.len() + e_idx]
                            .as_ref()
                            .unwrap();
                        for i in (0..m).step_by(7) {
                            for j in (0..m).step_by(3) {
                                let d = iterated
                                    .eval(&matrices.sample.points[i], &matrices.sample.points[j])
                                    .unwrap();
                                if (d - eps).abs() < 1e-9 {
                                    continue; // knife-edge: either side is fine
                                }
                                assert_eq!(
                                    balls.grid.get(i, j),
                                    d <= eps,
                                    "{} {} n={n} eps={eps} i={i} j={j} d={d}",
                                    sys.name,
                                    base.name()
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn diagnostic_rules() {
        let mk = |mode: &str, class: GrowthClass| DiagnosticInput {
            label: format!("{mode}-{class:?}"),
            mode: mode.to_string(),
            class,
        };

        let d = spectrum_diagnostic(&[
            mk("average", GrowthClass::Bounded),
            mk("average", GrowthClass::Bounded),
        ])
        .unwrap();
        assert_eq!(d.verdict, SpectrumVerdict::ConsistentWithDiscrete);

        let d = spectrum_diagnostic(&[
            mk("average", GrowthClass::Bounded),
            mk("average", GrowthClass::Logarithmic),
        ])
        .unwrap();
        assert_eq!(d.verdict, SpectrumVerdict::ContinuousComponent);

        // sup-mode growth alone never decides
        let d = spectrum_diagnostic(&[mk("sup", GrowthClass::Logarithmic)]).unwrap();
        assert_eq!(d.verdict, SpectrumVerdict::Inconclusive);
        assert_eq!(d.sup_excluded, 1);

        // sup growth does not override bounded average curves
        let d = spectrum_diagnostic(&[
            mk("average", GrowthClass::Bounded),
            mk("sup", GrowthClass::Linear),
        ])
        .unwrap();
        assert_eq!(d.verdict, SpectrumVerdict::ConsistentWithDiscrete);

        let d = spectrum_diagnostic(&[
            mk("average", GrowthClass::Bounded),
            mk("average", GrowthClass::Inconclusive),
        ])
        .unwrap();
        assert_eq!(d.verdict, SpectrumVerdict::Inconclusive);

        assert!(matches!(
            spectrum_diagnostic(&[]),
            Err(Error::EmptyInput(_))
        ));
    }

    /// One-sided soundness: any unbounded average verdict forces a
    /// non-discrete reading, whatever else is present.
    #[test]
    fn diagnostic_never_discrete_with_unbounded_average() {
        let classes = [
            GrowthClass::Bounded,
            GrowthClass::Logarithmic,
            GrowthClass::Power { alpha: 0.5 },
            GrowthClass::Linear,
            GrowthClass::Inconclusive,
        ];
        for &a in &classes {
            for &b in &classes {
                let inputs = vec![
                    DiagnosticInput {
                        label: "a".into(),
                        mode: "average".into(),
                        class: a,
                    },
                    DiagnosticInput {
                        label: "b".into(),
                        mode: "average".into(),
                        class: b,
                    },
                ];
                let d = spectrum_diagnostic(&inputs).unwrap();
                if a.is_unbounded() || b.is_unbounded() {
                    assert_eq!(d.verdict, SpectrumVerdict::ContinuousComponent);
                    assert_ne!(d.verdict, SpectrumVerdict::ConsistentWithDiscrete);
                }
            }
        }
    }
}
