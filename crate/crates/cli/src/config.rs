//! Experiment configuration: a single TOML document describing the
//! system, the metrics, the iteration modes and grids. Unknown keys are
//! rejected; validation failures name the offending field.

use serde::{Deserialize, Serialize};

use scalent::metrics::{
    arc_metric, constant_metric, cut_semimetric, dyadic_metric, hamming_window_metric,
    indicator_semimetric, Partition, Semimetric,
};
use scalent::scaling::{default_eps_grid, default_schedule, ClassifyOptions, CurveOptions};
use scalent::systems::{SystemSpec, DEFAULT_DEPTH, GOLDEN_ALPHA};
use scalent::Mode;

/// A field-level configuration problem.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error at `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn bad(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Default sample size: keeps pairwise work near 4e6 evaluations per
/// (n, eps) cell at desk scale.
pub const DEFAULT_SAMPLE_SIZE: usize = 2000;

fn default_m() -> usize {
    DEFAULT_SAMPLE_SIZE
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    /// Sample size (default 2000).
    #[serde(default = "default_m")]
    pub m: usize,
    pub system: SystemConfig,
    pub metrics: Vec<MetricConfig>,
    pub run: RunConfig,
    #[serde(default)]
    pub classify: ClassifySection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum SystemConfig {
    Rotation {
        /// Rotation angle in [0, 1); defaults to the golden ratio
        /// fractional part.
        alpha: Option<f64>,
    },
    BernoulliShift {
        p: Option<f64>,
        depth: Option<usize>,
    },
    Pascal {
        p: Option<f64>,
        depth: Option<usize>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum MetricConfig {
    /// Cut semimetric of a circle-arc partition.
    Cut { boundaries: Vec<f64> },
    /// Cut semimetric of the first word coordinate.
    FirstCoordinateCut,
    /// Cut semimetric of the first `k` word coordinates.
    PrefixCut { k: usize },
    /// Indicator semimetric of the arc `[lo, hi)`.
    Indicator { arc: [f64; 2] },
    Arc,
    Dyadic,
    HammingWindow { window: usize },
    /// Non-admissible fixture.
    Constant,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub modes: Vec<String>,
    /// Exponent for `lp` mode.
    pub lp_exponent: Option<f64>,
    /// Explicit n schedule (strictly increasing), or
    pub schedule: Option<Vec<usize>>,
    /// … powers of two from 1 up to this value.
    pub schedule_max: Option<usize>,
    pub eps: Option<Vec<f64>>,
    #[serde(default = "default_true")]
    pub normalize: bool,
    pub sat_fraction: Option<f64>,
}

fn default_true() -> bool {
    true
}

/// Optional classifier overrides; anything unset keeps the library
/// default.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifySection {
    pub bounded_delta: Option<f64>,
    pub plateau_delta: Option<f64>,
    pub rise_threshold: Option<f64>,
    pub dominance_margin: Option<f64>,
    pub min_window_points: Option<usize>,
}

/// Everything `run` needs, resolved and validated.
#[derive(Debug)]
pub struct ResolvedExperiment {
    pub config: ExperimentConfig,
    pub system: SystemSpec,
    pub metrics: Vec<Semimetric>,
    pub modes: Vec<Mode>,
    pub schedule: Vec<usize>,
    pub eps_grid: Vec<f64>,
    pub curve_options: CurveOptions,
    pub classify_options: ClassifyOptions,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError {
            field: "<document>".to_string(),
            message: e.to_string(),
        })
    }

    pub fn resolve(self) -> Result<ResolvedExperiment, ConfigError> {
        if self.m < 2 {
            return Err(bad("m", format!("sample size {} too small (m >= 2)", self.m)));
        }
        if self.metrics.is_empty() {
            return Err(bad("metrics", "at least one metric entry required"));
        }

        let schedule = match (&self.run.schedule, self.run.schedule_max) {
            (Some(_), Some(_)) => {
                return Err(bad(
                    "run.schedule",
                    "give either `schedule` or `schedule_max`, not both",
                ))
            }
            (Some(list), None) => {
                if list.is_empty() || list[0] == 0 || list.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(bad(
                        "run.schedule",
                        "schedule must be strictly increasing with n >= 1",
                    ));
                }
                list.clone()
            }
            (None, Some(max)) => {
                if max < 1 {
                    return Err(bad("run.schedule_max", "must be >= 1"));
                }
                let mut s = Vec::new();
                let mut n = 1usize;
                while n <= max {
                    s.push(n);
                    n *= 2;
                }
                s
            }
            (None, None) => default_schedule(),
        };
        let n_max = *schedule.last().expect("nonempty");

        let system = match &self.system {
            SystemConfig::Rotation { alpha } => {
                let alpha = alpha.unwrap_or(GOLDEN_ALPHA);
                if !(0.0..1.0).contains(&alpha) {
                    return Err(bad("system.alpha", format!("{alpha} outside [0, 1)")));
                }
                if alpha == GOLDEN_ALPHA {
                    SystemSpec::golden_rotation()
                } else {
                    SystemSpec::rotation(alpha)
                }
            }
            SystemConfig::BernoulliShift { p, depth } => {
                let p = p.unwrap_or(0.5);
                let depth = depth.unwrap_or(DEFAULT_DEPTH);
                if !(p > 0.0 && p < 1.0) {
                    return Err(bad("system.p", format!("{p} outside (0, 1)")));
                }
                if depth == 0 {
                    return Err(bad("system.depth", "must be >= 1"));
                }
                // buffer long enough that the whole schedule never reads
                // an unsampled tail
                SystemSpec::bernoulli_shift(p, depth, n_max)
            }
            SystemConfig::Pascal { p, depth } => {
                let p = p.unwrap_or(0.5);
                let depth = depth.unwrap_or(DEFAULT_DEPTH);
                if !(p > 0.0 && p < 1.0) {
                    return Err(bad("system.p", format!("{p} outside (0, 1)")));
                }
                if depth == 0 {
                    return Err(bad("system.depth", "must be >= 1"));
                }
                SystemSpec::pascal(p, depth)
            }
        };

        let mut metrics = Vec::new();
        for (i, entry) in self.metrics.iter().enumerate() {
            let field = format!("metrics[{i}]");
            let metric = match entry {
                MetricConfig::Cut { boundaries } => {
                    cut_semimetric(Partition::CircleArcs {
                        boundaries: boundaries.clone(),
                    })
                    .map_err(|e| bad(&field, e.to_string()))?
                }
                MetricConfig::FirstCoordinateCut => {
                    cut_semimetric(Partition::WordPrefix { k: 1 })
                        .map_err(|e| bad(&field, e.to_string()))?
                }
                MetricConfig::PrefixCut { k } => cut_semimetric(Partition::WordPrefix { k: *k })
                    .map_err(|e| bad(&field, e.to_string()))?,
                MetricConfig::Indicator { arc } => indicator_semimetric(arc[0], arc[1])
                    .map_err(|e| bad(&field, e.to_string()))?,
                MetricConfig::Arc => arc_metric(),
                MetricConfig::Dyadic => dyadic_metric(),
                MetricConfig::HammingWindow { window } => {
                    hamming_window_metric(*window).map_err(|e| bad(&field, e.to_string()))?
                }
                MetricConfig::Constant => constant_metric(),
            };
            metrics.push(metric);
        }

        if self.run.modes.is_empty() {
            return Err(bad("run.modes", "at least one mode required"));
        }
        let mut modes = Vec::new();
        for mode in &self.run.modes {
            modes.push(match mode.as_str() {
                "average" => Mode::Average,
                "sup" => Mode::Sup,
                "lp" => {
                    let p = self.run.lp_exponent.ok_or_else(|| {
                        bad("run.lp_exponent", "required when modes includes `lp`")
                    })?;
                    if p <= 1.0 {
                        return Err(bad("run.lp_exponent", format!("{p} must be > 1")));
                    }
                    Mode::Lp(p)
                }
                other => {
                    return Err(bad(
                        "run.modes",
                        format!("unknown mode {other:?} (average | sup | lp)"),
                    ))
                }
            });
        }

        let eps_grid = self.run.eps.clone().unwrap_or_else(default_eps_grid);
        for &eps in &eps_grid {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(bad("run.eps", format!("{eps} outside (0, 1)")));
            }
        }

        let mut curve_options = CurveOptions {
            normalize: self.run.normalize,
            ..CurveOptions::default()
        };
        if let Some(f) = self.run.sat_fraction {
            if !(0.0..=1.0).contains(&f) {
                return Err(bad("run.sat_fraction", format!("{f} outside [0, 1]")));
            }
            curve_options.sat_fraction = f;
        }

        let mut classify_options = ClassifyOptions::default();
        let c = &self.classify;
        if let Some(v) = c.bounded_delta {
            classify_options.bounded_delta = v;
        }
        if let Some(v) = c.plateau_delta {
            classify_options.plateau_delta = v;
        }
        if let Some(v) = c.rise_threshold {
            classify_options.rise_threshold = v;
        }
        if let Some(v) = c.dominance_margin {
            classify_options.dominance_margin = v;
        }
        if let Some(v) = c.min_window_points {
            classify_options.min_window_points = v;
        }

        Ok(ResolvedExperiment {
            system,
            metrics,
            modes,
            schedule,
            eps_grid,
            curve_options,
            classify_options,
            config: self,
        })
    }
}

/// Bundled benchmark configurations, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    (
        "rotation_average",
        r#"# Golden-ratio rotation, half-circle cut semimetric, average metric.
# The scaling sequence stays bounded: the signature of discrete spectrum.
name = "rotation_average"
seed = 1
m = 2000

[system]
kind = "rotation"

[[metrics]]
kind = "cut"
boundaries = [0.0, 0.5]

[run]
modes = ["average"]
schedule_max = 4096
eps = [0.05, 0.1, 0.2]
"#,
    ),
    (
        "rotation_sup",
        r#"# Same rotation and cut, sup combinator: grows like ln n even though
# the spectrum is discrete - sup growth is not a spectral witness.
name = "rotation_sup"
seed = 1
m = 2000

[system]
kind = "rotation"

[[metrics]]
kind = "cut"
boundaries = [0.0, 0.5]

[run]
modes = ["sup"]
schedule_max = 4096
eps = [0.05, 0.1, 0.2]
"#,
    ),
    (
        "bernoulli_average",
        r#"# Bernoulli(1/2) shift, first-coordinate cut, average metric.
# Positive entropy shows as linear growth with slope near ln 2 before the
# estimator saturates at ln((1-eps) m).
name = "bernoulli_average"
seed = 1
m = 2000

[system]
kind = "bernoulli_shift"
p = 0.5
depth = 64

[[metrics]]
kind = "first_coordinate_cut"

[run]
modes = ["average"]
schedule_max = 4096
eps = [0.05, 0.1, 0.2]
"#,
    ),
    (
        "pascal_sup",
        r#"# Pascal adic transformation, 2-adic metric, sup combinator.
# The schedule stays below the m = 2000 saturation range (n ~ 512) so the
# logarithmic growth of the net count is read off the live region.
name = "pascal_sup"
seed = 1
m = 2000

[system]
kind = "pascal"
p = 0.5
depth = 64

[[metrics]]
kind = "dyadic"

[run]
modes = ["sup"]
schedule_max = 128
eps = [0.05, 0.1, 0.2]
"#,
    ),
    (
        "pascal_average",
        r#"# Pascal adic transformation, 2-adic metric, average combinator.
# Reported without a pass condition: whether the average-metric scaling
# of the Pascal automorphism is unbounded is the open question this
# tooling is meant to probe.
name = "pascal_average"
seed = 1
m = 1000

[system]
kind = "pascal"
p = 0.5
depth = 64

[[metrics]]
kind = "dyadic"

[run]
modes = ["average"]
schedule_max = 1024
eps = [0.05, 0.1, 0.2]
"#,
    ),
];

/// Look up a bundled config by name.
pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}
