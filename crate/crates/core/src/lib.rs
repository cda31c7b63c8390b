//! Scaling entropy of measure-preserving transformations.
//!
//! The pipeline implemented here follows one experimental recipe:
//!
//! 1. pick a transformation `T` of a probability space together with an
//!    exact sampler for its invariant measure ([`systems`]),
//! 2. pick an admissible (semi)metric `ρ` and iterate it along orbits,
//!    forming the average metric `(1/n) Σ ρ(T^k x, T^k y)` or its sup/lᵖ
//!    variants ([`metrics`]),
//! 3. estimate the ε-entropy `H'` of the invariant measure under the
//!    iterated metric by greedy ε-net covers on an empirical sample
//!    ([`entropy`]), certified against exact optimal transport bounds
//!    ([`transport`]),
//! 4. sweep `n`, classify the growth of `n ↦ H'(ρ_n, ε)`, and read off the
//!    spectral diagnostic: bounded scaling is the signature of a purely
//!    point (discrete) spectrum, unbounded average-metric scaling witnesses
//!    a continuous spectral component ([`scaling`]).
//!
//! Everything is deterministic given a root seed; samples, orbits and
//! curve cells can be computed concurrently without changing any output
//! bit.
//!
//! ```
//! use scalent::metrics::{cut_semimetric, Partition};
//! use scalent::scaling::{
//!     classify_growth, scaling_curve, spectrum_diagnostic, ClassifyOptions, CurveOptions,
//!     DiagnosticInput, GrowthClass, SpectrumVerdict,
//! };
//! use scalent::systems::SystemSpec;
//! use scalent::Mode;
//!
//! // Average the half-circle cut along golden-rotation orbits and read
//! // off the spectral diagnostic from the growth of the eps-entropy.
//! let system = SystemSpec::golden_rotation();
//! let cut = cut_semimetric(Partition::halves())?;
//! let schedule = [1, 2, 4, 8, 16, 32, 64, 128];
//! let curve = scaling_curve(
//!     &system, &cut, Mode::Average, &schedule, &[0.1, 0.2],
//!     400,  // sample size
//!     7,    // root seed
//!     &CurveOptions::default(),
//! )?;
//! let verdict = classify_growth(&curve, &ClassifyOptions::default())?;
//! assert_eq!(verdict.class, GrowthClass::Bounded);
//!
//! let diagnostic = spectrum_diagnostic(&[DiagnosticInput::new(&curve, &verdict)])?;
//! assert_eq!(diagnostic.verdict, SpectrumVerdict::ConsistentWithDiscrete);
//! # Ok::<(), scalent::Error>(())
//! ```

#![forbid(unsafe_code)]

pub mod entropy;
mod error;
pub mod metrics;
pub mod point;
pub mod rng;
pub mod scaling;
pub mod systems;
pub mod transport;

pub use error::{Error, Result};
pub use metrics::{IteratedMetric, MetricEval, Mode, Semimetric};
pub use point::{BitWord, CirclePoint, Point};
pub use scaling::{GrowthClass, GrowthVerdict, ScalingCurve, SpectrumVerdict};
pub use systems::{EmpiricalSample, SystemKind, SystemSpec};
pub use transport::{DiscreteMeasure, TransportPlan};
