//! Admissible (semi)metrics, their orbit averages, and numeric probes.
//!
//! The catalog covers the bases actually used in experiments: cut
//! semimetrics of finite partitions, indicator semimetrics, the geodesic
//! arc metric on the circle, the 2-adic metric and windowed Hamming
//! distance on binary words, plus the (non-admissible) constant metric as
//! a negative fixture. [`iterate`] turns a base into its average / sup /
//! lᵖ combination along the orbit of a system.
//!
//! Probes are statistical, not proofs: the axiom checker samples triples,
//! the admissibility probe measures empirical ball masses (positive ball
//! mass for arbitrarily small radius is the non-degeneracy criterion),
//! the semicontinuity probe estimates the invariant profile
//! `φ(r) = ∫ ρ(z, z+r) dm(z)` by Monte Carlo, and the Lipschitz probe
//! reports the observed distortion ratio of one application of `T`.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::point::{CirclePoint, Point};
use crate::rng::{self, salt};
use crate::systems::{EmpiricalSample, SystemSpec};

/// Absolute tolerance for metric axiom checks. All cataloged kernels are
/// exact up to floating-point rounding, so violations beyond this are bugs.
pub const AXIOM_TOL: f64 = 1e-12;

/// Anything that can be evaluated as a distance between points.
pub trait MetricEval: Sync {
    fn eval(&self, x: &Point, y: &Point) -> Result<f64>;
    fn name(&self) -> &str;
    /// Upper bound on values, when known.
    fn diameter_hint(&self) -> Option<f64>;
}

/// A finite measurable partition that a cut semimetric can be built on.
#[derive(Debug, Clone, PartialEq)]
pub enum Partition {
    /// Circle split into arcs by sorted boundary points in `[0, 1)`;
    /// cell `i` is the arc `[b_i, b_{i+1})`, wrapping at the end.
    CircleArcs { boundaries: Vec<f64> },
    /// Word space split by the pattern of the first `k` symbols.
    WordPrefix { k: usize },
}

impl Partition {
    /// Two halves of the circle, `A = [0, 0.5)` and its complement.
    pub fn halves() -> Self {
        Partition::CircleArcs {
            boundaries: vec![0.0, 0.5],
        }
    }

    /// Index of the cell containing the point.
    pub fn cell(&self, p: &Point) -> Result<usize> {
        match (self, p) {
            (Partition::CircleArcs { boundaries }, Point::Circle(c)) => {
                let v = c.value();
                // partition_point returns how many boundaries are <= v;
                // boundary[0] may exceed v, in which case the point lies in
                // the wrapped last arc.
                let idx = boundaries.partition_point(|&b| b <= v);
                Ok(if idx == 0 { boundaries.len() - 1 } else { idx - 1 })
            }
            (Partition::WordPrefix { k }, Point::Word(w)) => {
                if *k > w.len() {
                    return Err(Error::InvalidArgument(format!(
                        "prefix {k} exceeds word length {}",
                        w.len()
                    )));
                }
                let mut cell = 0usize;
                for i in 0..*k {
                    cell = cell << 1 | w.get(i) as usize;
                }
                Ok(cell)
            }
            _ => Err(Error::PointKindMismatch {
                metric: "cut".to_string(),
                left: p.kind_name(),
                right: "partition",
            }),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Partition::CircleArcs { boundaries } => {
                if boundaries.len() < 2 {
                    return Err(Error::InvalidArgument(
                        "cut partition needs at least two boundaries".into(),
                    ));
                }
                if boundaries.windows(2).any(|w| w[0] >= w[1])
                    || boundaries.iter().any(|b| !(0.0..1.0).contains(b))
                {
                    return Err(Error::InvalidArgument(
                        "cut boundaries must be strictly increasing within [0,1)".into(),
                    ));
                }
                Ok(())
            }
            Partition::WordPrefix { k } => {
                if *k == 0 || *k > 20 {
                    return Err(Error::InvalidArgument(format!(
                        "word prefix length {k} outside 1..=20"
                    )));
                }
                Ok(())
            }
        }
    }
}

type CustomFn = Arc<dyn Fn(&Point, &Point) -> Result<f64> + Send + Sync>;

#[derive(Clone)]
enum Kernel {
    Cut(Partition),
    /// `|χ_A(x) − χ_A(y)|` for the arc `A = [lo, hi)`.
    Indicator { lo: f64, hi: f64 },
    Arc,
    Dyadic,
    HammingWindow { k: usize },
    /// Distance `value` between any two distinct points.
    Constant { value: f64 },
    Custom(CustomFn),
}

/// An evaluatable symmetric nonnegative kernel with metadata.
///
/// Symmetry and `ρ(x,x) = 0` hold exactly for every cataloged kernel; the
/// triangle inequality is verified statistically by [`metric_axiom_check`].
#[derive(Clone)]
pub struct Semimetric {
    name: String,
    kernel: Kernel,
    /// Whether distinct points are always separated (metric) or may
    /// collapse to distance zero (proper semimetric).
    pub is_metric: bool,
    pub bounded: bool,
    pub diameter: Option<f64>,
    /// Multiplier applied on top of the raw kernel (1.0 unless rescaled).
    scale: f64,
}

impl std::fmt::Debug for Semimetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Semimetric")
            .field("name", &self.name)
            .field("is_metric", &self.is_metric)
            .field("diameter", &self.diameter)
            .finish()
    }
}

/// Cut semimetric of a partition: 0 within a cell, 1 across cells.
pub fn cut_semimetric(partition: Partition) -> Result<Semimetric> {
    partition.validate()?;
    let name = match &partition {
        Partition::CircleArcs { boundaries } => format!("cut(arcs={})", boundaries.len()),
        Partition::WordPrefix { k } => format!("cut(prefix={k})"),
    };
    Ok(Semimetric {
        name,
        kernel: Kernel::Cut(partition),
        is_metric: false,
        bounded: true,
        diameter: Some(1.0),
        scale: 1.0,
    })
}

/// Indicator semimetric of the arc `A = [lo, hi)`: 1 iff exactly one
/// argument lies in `A`.
pub fn indicator_semimetric(lo: f64, hi: f64) -> Result<Semimetric> {
    if !(0.0..1.0).contains(&lo) || !(lo < hi && hi <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "indicator arc [{lo},{hi}) is not a sub-arc of [0,1)"
        )));
    }
    Ok(Semimetric {
        name: format!("indicator[{lo},{hi})"),
        kernel: Kernel::Indicator { lo, hi },
        is_metric: false,
        bounded: true,
        diameter: Some(1.0),
        scale: 1.0,
    })
}

/// Geodesic metric on the circle: `min(|x−y|, 1−|x−y|)`.
pub fn arc_metric() -> Semimetric {
    Semimetric {
        name: "arc".to_string(),
        kernel: Kernel::Arc,
        is_metric: true,
        bounded: true,
        diameter: Some(0.5),
        scale: 1.0,
    }
}

/// 2-adic metric on binary words: `2^-n` where `n` is the 1-based index of
/// the first differing symbol, 0 if the words agree through their depth.
pub fn dyadic_metric() -> Semimetric {
    Semimetric {
        name: "dyadic".to_string(),
        kernel: Kernel::Dyadic,
        is_metric: true,
        bounded: true,
        diameter: Some(0.5),
        scale: 1.0,
    }
}

/// Normalized Hamming distance over the first `k` symbols.
pub fn hamming_window_metric(k: usize) -> Result<Semimetric> {
    if k == 0 {
        return Err(Error::InvalidArgument("hamming window must be >= 1".into()));
    }
    Ok(Semimetric {
        name: format!("hamming({k})"),
        kernel: Kernel::HammingWindow { k },
        is_metric: false,
        bounded: true,
        diameter: Some(1.0),
        scale: 1.0,
    })
}

/// The constant metric: distance 1 between any two distinct points.
/// A metric in the ordinary sense, but not admissible on a continuous
/// measure — every ball of radius below 1 carries only its own center.
pub fn constant_metric() -> Semimetric {
    Semimetric {
        name: "constant".to_string(),
        kernel: Kernel::Constant { value: 1.0 },
        is_metric: true,
        bounded: true,
        diameter: Some(1.0),
        scale: 1.0,
    }
}

impl Semimetric {
    /// Wrap an arbitrary kernel (test fixtures, experimental metrics).
    pub fn from_fn(
        name: impl Into<String>,
        is_metric: bool,
        diameter: Option<f64>,
        f: impl Fn(&Point, &Point) -> Result<f64> + Send + Sync + 'static,
    ) -> Semimetric {
        Semimetric {
            name: name.into(),
            kernel: Kernel::Custom(Arc::new(f)),
            is_metric,
            bounded: diameter.is_some(),
            diameter,
            scale: 1.0,
        }
    }

    /// The same kernel rescaled to diameter 1 (the convention the
    /// transport bounds assume). Metrics already at diameter 1 are
    /// returned unchanged; unbounded metrics cannot be normalized.
    pub fn normalized(&self) -> Result<Semimetric> {
        let d = self.diameter.ok_or_else(|| {
            Error::InvalidArgument(format!("cannot normalize unbounded metric {}", self.name))
        })?;
        if d <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "metric {} has nonpositive diameter {d}",
                self.name
            )));
        }
        if (d - 1.0).abs() < 1e-15 {
            return Ok(self.clone());
        }
        let mut out = self.clone();
        out.scale = self.scale / d;
        out.diameter = Some(1.0);
        out.name = format!("{}/diam", self.name);
        Ok(out)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub(crate) fn kernel_class(&self) -> KernelClass {
        match &self.kernel {
            Kernel::Cut(Partition::CircleArcs { boundaries }) if boundaries.len() == 2 => {
                KernelClass::BinaryCircle {
                    lo: boundaries[0],
                    hi: boundaries[1],
                }
            }
            Kernel::Indicator { lo, hi } => KernelClass::BinaryCircle { lo: *lo, hi: *hi },
            Kernel::Cut(Partition::WordPrefix { k: 1 }) => KernelClass::BinaryWordBit,
            Kernel::Cut(p) => KernelClass::Cut(p.clone()),
            Kernel::Dyadic => KernelClass::Dyadic,
            Kernel::HammingWindow { k } => KernelClass::HammingWindow { k: *k },
            Kernel::Arc => KernelClass::Arc,
            Kernel::Constant { .. } | Kernel::Custom(_) => KernelClass::Opaque,
        }
    }

    fn raw_eval(&self, x: &Point, y: &Point) -> Result<f64> {
        let mismatch = |left: &Point, right: &Point| Error::PointKindMismatch {
            metric: self.name.clone(),
            left: left.kind_name(),
            right: right.kind_name(),
        };
        match &self.kernel {
            Kernel::Cut(p) => Ok((p.cell(x)? != p.cell(y)?) as u8 as f64),
            Kernel::Indicator { lo, hi } => match (x, y) {
                (Point::Circle(a), Point::Circle(b)) => {
                    let ina = (*lo..*hi).contains(&a.value());
                    let inb = (*lo..*hi).contains(&b.value());
                    Ok((ina != inb) as u8 as f64)
                }
                _ => Err(mismatch(x, y)),
            },
            Kernel::Arc => match (x, y) {
                (Point::Circle(a), Point::Circle(b)) => Ok(a.arc_distance(*b)),
                _ => Err(mismatch(x, y)),
            },
            Kernel::Dyadic => match (x, y) {
                (Point::Word(a), Point::Word(b)) => Ok(match a.first_diff(b)? {
                    Some(i) => (-((i + 1) as f64)).exp2(),
                    None => 0.0,
                }),
                _ => Err(mismatch(x, y)),
            },
            Kernel::HammingWindow { k } => match (x, y) {
                (Point::Word(a), Point::Word(b)) => {
                    Ok(a.mismatches_within(b, *k)? as f64 / *k as f64)
                }
                _ => Err(mismatch(x, y)),
            },
            Kernel::Constant { value } => Ok(if x == y { 0.0 } else { *value }),
            Kernel::Custom(f) => f(x, y),
        }
    }
}

impl MetricEval for Semimetric {
    fn eval(&self, x: &Point, y: &Point) -> Result<f64> {
        Ok(self.scale * self.raw_eval(x, y)?)
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn diameter_hint(&self) -> Option<f64> {
        self.diameter
    }
}

/// Structural view of a kernel, used by the bulk curve engine to pick a
/// fast evaluation path. `Opaque` falls back to pointwise evaluation.
#[derive(Debug, Clone)]
pub(crate) enum KernelClass {
    BinaryCircle { lo: f64, hi: f64 },
    BinaryWordBit,
    Cut(Partition),
    Dyadic,
    HammingWindow { k: usize },
    Arc,
    Opaque,
}

/// How the base metric is combined along an orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// Birkhoff average `(1/n) Σ ρ(T^k x, T^k y)`.
    Average,
    /// `max_{k<n} ρ(T^k x, T^k y)`.
    Sup,
    /// `((1/n) Σ ρ(T^k x, T^k y)^p)^(1/p)` for `p > 1`.
    Lp(f64),
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Average => "average",
            Mode::Sup => "sup",
            Mode::Lp(_) => "lp",
        }
    }
}

/// A base metric iterated `n` steps along a system's orbits.
#[derive(Debug, Clone)]
pub struct IteratedMetric {
    pub base: Semimetric,
    pub system: SystemSpec,
    pub n: usize,
    pub mode: Mode,
    name: String,
}

/// Build the iterated metric; evaluation walks one orbit pass per pair.
pub fn iterate(base: &Semimetric, system: &SystemSpec, n: usize, mode: Mode) -> Result<IteratedMetric> {
    if n == 0 {
        return Err(Error::InvalidArgument("iteration count must be >= 1".into()));
    }
    if let Mode::Lp(p) = mode {
        if p <= 1.0 || !p.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lp exponent {p} must be finite and > 1"
            )));
        }
    }
    Ok(IteratedMetric {
        name: format!("{}_{}({})", mode.as_str(), n, base.name()),
        base: base.clone(),
        system: system.clone(),
        n,
        mode,
    })
}

impl MetricEval for IteratedMetric {
    fn eval(&self, x: &Point, y: &Point) -> Result<f64> {
        let mut cx = x.clone();
        let mut cy = y.clone();
        let mut acc: f64 = 0.0;
        for k in 0..self.n {
            // metrics compare observables; shift points carry sampler
            // lookahead beyond the truncation depth
            let v = self
                .base
                .eval(&self.system.observe(&cx), &self.system.observe(&cy))?;
            match self.mode {
                Mode::Average => acc += v,
                Mode::Sup => acc = acc.max(v),
                Mode::Lp(p) => acc += v.powf(p),
            }
            if k + 1 < self.n {
                cx = self.system.step(&cx)?;
                cy = self.system.step(&cy)?;
            }
        }
        Ok(match self.mode {
            Mode::Average => acc / self.n as f64,
            Mode::Sup => acc,
            Mode::Lp(p) => (acc / self.n as f64).powf(1.0 / p),
        })
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn diameter_hint(&self) -> Option<f64> {
        self.base.diameter
    }
}

/// Closed form of the limiting average of the indicator semimetric of
/// `A = [0, a)` under an ergodic rotation: the Lebesgue measure of the
/// symmetric difference `A Δ (A + r)`.
pub fn rotation_average_closed_form(a: f64, r: f64) -> f64 {
    let fr = r.abs().rem_euclid(1.0);
    let d = fr.min(1.0 - fr);
    2.0 * (a - (a - d).max(0.0) - (a + d - 1.0).max(0.0))
}

/// Invariant-metric profile on the circle: `φ(r) = ρ(x, x + r)` averaged
/// over the Haar measure, tabulated on a grid.
#[derive(Debug, Clone)]
pub struct GroupMetricProfile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl GroupMetricProfile {
    /// Smallest profile value over the grid (zero radius excluded);
    /// vanishing infimum near zero is the semicontinuity signature.
    pub fn inf_small_r(&self) -> f64 {
        self.grid
            .iter()
            .zip(&self.values)
            .filter(|(r, _)| **r > 0.0)
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Report of [`metric_axiom_check`].
#[derive(Debug, Clone, Default)]
pub struct AxiomReport {
    pub trials: usize,
    pub symmetry_violations: usize,
    pub nonnegativity_violations: usize,
    pub triangle_violations: usize,
    pub max_triangle_excess: f64,
}

impl AxiomReport {
    pub fn clean(&self) -> bool {
        self.symmetry_violations == 0
            && self.nonnegativity_violations == 0
            && self.triangle_violations == 0
    }
}

/// Draw random triples from the sample and count axiom violations beyond
/// [`AXIOM_TOL`].
pub fn metric_axiom_check(
    rho: &dyn MetricEval,
    sample: &EmpiricalSample,
    trials: usize,
) -> Result<AxiomReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let mut rng = rng::stream(sample.seed, salt::probe(1));
    let m = sample.m();
    let mut report = AxiomReport {
        trials,
        ..AxiomReport::default()
    };
    for _ in 0..trials {
        let i = rng.random_range(0..m);
        let j = rng.random_range(0..m);
        let k = rng.random_range(0..m);
        let (x, y, z) = (&sample.points[i], &sample.points[j], &sample.points[k]);
        let dxy = rho.eval(x, y)?;
        let dyx = rho.eval(y, x)?;
        let dyz = rho.eval(y, z)?;
        let dxz = rho.eval(x, z)?;
        if (dxy - dyx).abs() > AXIOM_TOL {
            report.symmetry_violations += 1;
        }
        if dxy < -AXIOM_TOL || dyz < -AXIOM_TOL || dxz < -AXIOM_TOL {
            report.nonnegativity_violations += 1;
        }
        let excess = dxz - (dxy + dyz);
        if excess > AXIOM_TOL {
            report.triangle_violations += 1;
            report.max_triangle_excess = report.max_triangle_excess.max(excess);
        }
    }
    Ok(report)
}

/// Per-ε empirical ball statistics.
#[derive(Debug, Clone)]
pub struct BallReport {
    pub eps: f64,
    /// Fraction of sample points whose ε-ball contains at least one other
    /// sample point. Tending to 1 with growing sample size is consistent
    /// with admissibility; sticking at 0 (constant metric) is the
    /// non-admissible signature.
    pub neighbor_fraction: f64,
    /// Minimum over points of the empirical ball mass (center included).
    pub min_ball_mass: f64,
}

/// Empirical ball-mass probe for the non-degeneracy criterion.
pub fn admissibility_probe(
    rho: &dyn MetricEval,
    sample: &EmpiricalSample,
    eps_list: &[f64],
) -> Result<Vec<BallReport>> {
    let m = sample.m();
    if m < 100 {
        return Err(Error::InvalidArgument(format!(
            "admissibility probe needs at least 100 points, got {m}"
        )));
    }
    let mut ball_counts = vec![vec![1usize; m]; eps_list.len()]; // self included
    for i in 0..m {
        for j in i + 1..m {
            let d = rho.eval(&sample.points[i], &sample.points[j])?;
            for (e, &eps) in eps_list.iter().enumerate() {
                if d <= eps {
                    ball_counts[e][i] += 1;
                    ball_counts[e][j] += 1;
                }
            }
        }
    }
    Ok(eps_list
        .iter()
        .zip(ball_counts)
        .map(|(&eps, counts)| {
            let with_neighbor = counts.iter().filter(|&&c| c > 1).count();
            let min_count = counts.iter().copied().min().unwrap_or(1);
            BallReport {
                eps,
                neighbor_fraction: with_neighbor as f64 / m as f64,
                min_ball_mass: min_count as f64 / m as f64,
            }
        })
        .collect())
}

/// Monte-Carlo estimate of the invariant profile `φ(r) = ∫ ρ(z, z+r) dm(z)`
/// on the circle.
pub fn semicontinuity_probe(
    rho: &dyn MetricEval,
    r_grid: &[f64],
    mc_points: usize,
    seed: u64,
) -> Result<GroupMetricProfile> {
    if mc_points == 0 {
        return Err(Error::InvalidArgument("mc_points must be >= 1".into()));
    }
    let mut rng = rng::stream(seed, salt::probe(2));
    let zs: Vec<f64> = (0..mc_points).map(|_| rng.random::<f64>()).collect();
    let mut values = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let mut acc = 0.0;
        for &z in &zs {
            let a = Point::Circle(CirclePoint::new(z));
            let b = Point::Circle(CirclePoint::new(z + r));
            acc += rho.eval(&a, &b)?;
        }
        values.push(acc / mc_points as f64);
    }
    Ok(GroupMetricProfile {
        grid: r_grid.to_vec(),
        values,
    })
}

/// Report of [`lipschitz_probe`].
#[derive(Debug, Clone)]
pub struct LipschitzReport {
    pub max_ratio: f64,
    /// (quantile, ratio) pairs over the sampled non-degenerate pairs.
    pub quantiles: Vec<(f64, f64)>,
    pub pairs_used: usize,
    pub pairs_skipped: usize,
}

/// Empirical Lipschitz constant of one application of `T`:
/// `max ρ(Tx, Ty) / ρ(x, y)` over sampled pairs with `ρ(x, y) > 0`.
pub fn lipschitz_probe(
    rho: &dyn MetricEval,
    sys: &SystemSpec,
    sample: &EmpiricalSample,
    pairs: usize,
) -> Result<LipschitzReport> {
    if pairs == 0 {
        return Err(Error::InvalidArgument("pairs must be >= 1".into()));
    }
    let mut rng = rng::stream(sample.seed, salt::probe(3));
    let m = sample.m();
    let mut ratios = Vec::with_capacity(pairs);
    let mut skipped = 0usize;
    for _ in 0..pairs {
        let i = rng.random_range(0..m);
        let j = rng.random_range(0..m);
        let x = &sample.points[i];
        let y = &sample.points[j];
        let d = rho.eval(&sys.observe(x), &sys.observe(y))?;
        if d <= 0.0 {
            skipped += 1;
            continue;
        }
        let dt = rho.eval(&sys.observe(&sys.step(x)?), &sys.observe(&sys.step(y)?))?;
        ratios.push(dt / d);
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));
    let max_ratio = ratios.last().copied().unwrap_or(0.0);
    let quantiles = [0.5, 0.9, 0.99, 1.0]
        .iter()
        .map(|&q| {
            let idx = ((ratios.len() as f64 - 1.0) * q).round() as usize;
            (q, ratios.get(idx).copied().unwrap_or(0.0))
        })
        .collect();
    Ok(LipschitzReport {
        max_ratio,
        quantiles,
        pairs_used: ratios.len(),
        pairs_skipped: skipped,
    })
}
