//! Measure-preserving transformations and exact samplers for their
//! invariant measures.
//!
//! Three systems are supported:
//!
//! - irrational rotation of the circle (Lebesgue measure),
//! - the one-sided Bernoulli shift on binary words (Bernoulli(p) measure),
//! - the Pascal adic transformation on binary words (Bernoulli(p) measure),
//!   given by the prefix rewrite `1^i 0^j 1 ↦ 0^(j-1) 1^(i+1) 0`.
//!
//! Infinite sequences are truncated to a configurable depth. Words that
//! hit the truncation limit under iteration raise errors instead of
//! wrapping silently; the excluded set has measure zero, so callers
//! resample.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{BitWord, CirclePoint, Point};
use crate::rng::{self, salt};

/// Fractional part of the golden ratio; the default rotation angle.
/// Its extreme Diophantine type gives the most uniform Birkhoff sums.
pub const GOLDEN_ALPHA: f64 = 0.6180339887498949;

/// Default truncation depth for word-space systems.
pub const DEFAULT_DEPTH: usize = 64;

/// Which transformation, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SystemKind {
    /// `x ↦ x + alpha (mod 1)` on the circle.
    Rotation { alpha: f64 },
    /// Coordinate shift on binary words. A point carries `depth + lookahead`
    /// sampled symbols so that `lookahead` iterations never consume an
    /// unsampled tail.
    BernoulliShift {
        p: f64,
        depth: usize,
        lookahead: usize,
    },
    /// Pascal adic transformation at truncation depth `depth`.
    Pascal { p: f64, depth: usize },
}

/// A measure-preserving transformation plus its invariant-measure sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub name: String,
}

impl SystemSpec {
    pub fn rotation(alpha: f64) -> Self {
        SystemSpec {
            kind: SystemKind::Rotation { alpha },
            name: format!("rotation(alpha={alpha})"),
        }
    }

    /// Golden-ratio rotation, the default ergodic benchmark.
    pub fn golden_rotation() -> Self {
        let mut s = SystemSpec::rotation(GOLDEN_ALPHA);
        s.name = "rotation(golden)".to_string();
        s
    }

    pub fn bernoulli_shift(p: f64, depth: usize, lookahead: usize) -> Self {
        SystemSpec {
            kind: SystemKind::BernoulliShift { p, depth, lookahead },
            name: format!("bernoulli_shift(p={p},N={depth})"),
        }
    }

    pub fn pascal(p: f64, depth: usize) -> Self {
        SystemSpec {
            kind: SystemKind::Pascal { p, depth },
            name: format!("pascal(p={p},N={depth})"),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Check parameter ranges. Rationality of `alpha` is a convention the
    /// caller controls (rational angles are legitimate oracle runs), so only
    /// hard range violations are rejected here.
    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            SystemKind::Rotation { alpha } => {
                if !alpha.is_finite() || !(0.0..1.0).contains(alpha) {
                    return Err(Error::InvalidArgument(format!(
                        "rotation angle {alpha} outside [0,1)"
                    )));
                }
            }
            SystemKind::BernoulliShift { p, depth, .. } | SystemKind::Pascal { p, depth } => {
                if !p.is_finite() || !(*p > 0.0 && *p < 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "Bernoulli parameter {p} outside (0,1)"
                    )));
                }
                if *depth == 0 {
                    return Err(Error::InvalidArgument("depth must be >= 1".into()));
                }
            }
        }
        Ok(())
    }

    /// One application of the transformation.
    pub fn step(&self, x: &Point) -> Result<Point> {
        match (&self.kind, x) {
            (SystemKind::Rotation { alpha }, Point::Circle(c)) => {
                Ok(Point::Circle(rotation_step(*c, *alpha)))
            }
            (SystemKind::BernoulliShift { depth, .. }, Point::Word(w)) => {
                Ok(Point::Word(shift_step(w, *depth)?))
            }
            (SystemKind::Pascal { .. }, Point::Word(w)) => Ok(Point::Word(pascal_step(w)?)),
            (_, p) => Err(Error::InvalidArgument(format!(
                "system {} cannot act on a {} point",
                self.name,
                p.kind_name()
            ))),
        }
    }

    /// The observable coordinates of a point. Shift-system points carry
    /// extra sampled lookahead symbols that future steps consume; metrics
    /// see only the truncation-depth prefix. All other points are their
    /// own observables.
    pub fn observe(&self, p: &Point) -> Point {
        match (&self.kind, p) {
            (SystemKind::BernoulliShift { depth, .. }, Point::Word(w)) if w.len() > *depth => {
                Point::Word(w.prefix(*depth))
            }
            _ => p.clone(),
        }
    }

    /// Draw one point of the invariant measure from the given stream.
    pub fn sample_point<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match &self.kind {
            SystemKind::Rotation { .. } => Point::Circle(CirclePoint::new(rng.random::<f64>())),
            SystemKind::BernoulliShift { p, depth, lookahead } => {
                Point::Word(BitWord::sample(depth + lookahead, *p, rng))
            }
            SystemKind::Pascal { p, depth } => Point::Word(BitWord::sample(*depth, *p, rng)),
        }
    }
}

/// Rotation by `alpha`: mod-1 reduction after every step.
pub fn rotation_step(x: CirclePoint, alpha: f64) -> CirclePoint {
    let s = x.value() + alpha;
    CirclePoint::new(if s >= 1.0 { s - 1.0 } else { s })
}

/// Drop the first symbol of a buffered word.
///
/// The word must keep at least `depth` symbols after the step; otherwise
/// iteration would read unsampled tail symbols.
pub fn shift_step(w: &BitWord, depth: usize) -> Result<BitWord> {
    if w.len() <= depth {
        return Err(Error::BufferExhausted {
            steps: 1,
            available: w.len().saturating_sub(depth),
        });
    }
    Ok(w.drop_first())
}

/// Pascal adic successor: rewrite the prefix `1^i 0^j 1` (i ≥ 0, j > 0)
/// to `0^(j-1) 1^(i+1) 0`, leaving the suffix unchanged.
pub fn pascal_step(w: &BitWord) -> Result<BitWord> {
    let i = w.leading_ones();
    let overflow = Error::DomainOverflow { depth: w.len() };
    if i >= w.len() {
        return Err(overflow);
    }
    let Some(next_one) = w.first_one_from(i) else {
        return Err(overflow);
    };
    let j = next_one - i; // length of the zero run; j >= 1
    let mut out = w.clone();
    out.fill_range(0, j - 1, false);
    out.fill_range(j - 1, i + 1, true);
    out.set(i + j, false);
    Ok(out)
}

/// Pascal adic predecessor: rewrite the prefix `0^a 1^b 0` (a ≥ 0, b > 0)
/// back to `1^(b-1) 0^(a+1) 1`.
pub fn pascal_step_inverse(w: &BitWord) -> Result<BitWord> {
    let overflow = Error::DomainOverflow { depth: w.len() };
    let Some(first_one) = w.first_one_from(0) else {
        return Err(overflow);
    };
    let a = first_one;
    let mut end = first_one;
    while end < w.len() && w.get(end) {
        end += 1;
    }
    if end >= w.len() {
        return Err(overflow);
    }
    let b = end - first_one;
    let mut out = w.clone();
    out.fill_range(0, b - 1, true);
    out.fill_range(b - 1, a + 1, false);
    out.set(a + b, true);
    Ok(out)
}

/// The orbit `x, Tx, …, T^(n-1) x`.
pub fn orbit(sys: &SystemSpec, x: &Point, n: usize) -> Result<Vec<Point>> {
    if n == 0 {
        return Err(Error::InvalidArgument("orbit length must be >= 1".into()));
    }
    let mut points = Vec::with_capacity(n);
    points.push(x.clone());
    for _ in 1..n {
        let next = sys.step(points.last().expect("nonempty"))?;
        points.push(next);
    }
    Ok(points)
}

/// i.i.d. points of the invariant measure with uniform weights.
#[derive(Debug, Clone)]
pub struct EmpiricalSample {
    pub points: Vec<Point>,
    pub seed: u64,
    pub system: String,
}

impl EmpiricalSample {
    pub fn m(&self) -> usize {
        self.points.len()
    }

    /// Uniform weight of each atom.
    pub fn weight(&self) -> f64 {
        1.0 / self.points.len() as f64
    }
}

/// Draw `m` i.i.d. sample points, reproducibly from `seed`.
///
/// Point `i` uses its own derived stream (see [`crate::rng`]), so samples
/// may be generated in any order or in parallel.
pub fn sample_invariant(sys: &SystemSpec, m: usize, seed: u64) -> Result<EmpiricalSample> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "sample size {m} too small (need m >= 2)"
        )));
    }
    sys.validate()?;
    let points = (0..m)
        .map(|i| {
            let mut rng = rng::stream(seed, salt::sample_point(i));
            sys.sample_point(&mut rng)
        })
        .collect();
    Ok(EmpiricalSample {
        points,
        seed,
        system: sys.name.clone(),
    })
}

/// Fresh replacement for sample point `i` (used when an orbit hits the
/// excluded set); attempts draw from disjoint streams.
pub fn resample_point(sys: &SystemSpec, seed: u64, i: usize, attempt: usize) -> Point {
    let mut rng = rng::stream(seed, salt::resample(i, attempt));
    sys.sample_point(&mut rng)
}
