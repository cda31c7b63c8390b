//! Experiment execution and result persistence.
//!
//! A run produces, under the output directory:
//! - `bundle.json`: the full machine-readable result document (config
//!   echo, curves, verdicts, diagnostic, timing, library version),
//! - `table.csv`: one flat row per computed `(system, metric, mode, n, ε)`
//!   cell,
//! - `config_echo.toml`: the configuration as executed (rerunnable),
//! - `plots/<metric>_<mode>_eps*.dat`: two-column `(n, ln_k)` series.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use scalent::MetricEval;
use scalent::scaling::{
    classify_growth, scaling_curve, spectrum_diagnostic, DiagnosticInput, GrowthVerdict,
    ScalingCurve, SpectrumDiagnostic,
};

use crate::config::ResolvedExperiment;

#[derive(Debug, Serialize, Deserialize)]
pub struct ResultBundle {
    pub library_version: String,
    pub config: crate::config::ExperimentConfig,
    pub elapsed_secs: f64,
    pub curves: Vec<ScalingCurve>,
    pub verdicts: Vec<GrowthVerdict>,
    pub diagnostic: Option<SpectrumDiagnostic>,
    /// Curves that failed, with the error text (partial results are
    /// flushed before the run aborts).
    pub failures: Vec<String>,
}

pub fn run(exp: &ResolvedExperiment, out_dir: &Path, quiet: bool) -> Result<ResultBundle> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    fs::create_dir_all(out_dir.join("plots")).context("cannot create plots directory")?;

    let started = Instant::now();
    let mut bundle = ResultBundle {
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        config: exp.config.clone(),
        elapsed_secs: 0.0,
        curves: Vec::new(),
        verdicts: Vec::new(),
        diagnostic: None,
        failures: Vec::new(),
    };

    let mut failed = None;
    'outer: for metric in &exp.metrics {
        for &mode in &exp.modes {
            if !quiet {
                eprintln!(
                    "running {} / {} / {} (m={}, n<={})",
                    exp.system.name,
                    metric.name(),
                    mode.as_str(),
                    exp.config.m,
                    exp.schedule.last().unwrap()
                );
            }
            let t = Instant::now();
            match scaling_curve(
                &exp.system,
                metric,
                mode,
                &exp.schedule,
                &exp.eps_grid,
                exp.config.m,
                exp.config.seed,
                &exp.curve_options,
            ) {
                Ok(curve) => {
                    let verdict = classify_growth(&curve, &exp.classify_options)
                        .context("growth classification failed")?;
                    if !quiet {
                        eprintln!(
                            "  -> {:?} in {:.1}s",
                            verdict.class,
                            t.elapsed().as_secs_f64()
                        );
                    }
                    bundle.curves.push(curve);
                    bundle.verdicts.push(verdict);
                    // flush partial results after every curve
                    bundle.elapsed_secs = started.elapsed().as_secs_f64();
                    persist(&bundle, out_dir)?;
                }
                Err(e) => {
                    bundle.failures.push(format!(
                        "{} / {} / {}: {e}",
                        exp.system.name,
                        metric.name(),
                        mode.as_str()
                    ));
                    bundle.elapsed_secs = started.elapsed().as_secs_f64();
                    persist(&bundle, out_dir)?;
                    failed = Some(e);
                    break 'outer;
                }
            }
        }
    }

    let inputs: Vec<DiagnosticInput> = bundle
        .curves
        .iter()
        .zip(&bundle.verdicts)
        .map(|(c, v)| DiagnosticInput::new(c, v))
        .collect();
    if !inputs.is_empty() {
        bundle.diagnostic = Some(spectrum_diagnostic(&inputs)?);
    }
    bundle.elapsed_secs = started.elapsed().as_secs_f64();
    persist(&bundle, out_dir)?;

    if let Some(e) = failed {
        return Err(anyhow::Error::new(e).context("curve computation failed; partial results kept"));
    }

    if !quiet {
        if let Some(d) = &bundle.diagnostic {
            eprintln!("diagnostic: {:?} - {}", d.verdict, d.explanation);
        }
        eprintln!("results in {}", out_dir.display());
    }
    Ok(bundle)
}

fn persist(bundle: &ResultBundle, out_dir: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(bundle).context("bundle serialization")?;
    fs::write(out_dir.join("bundle.json"), json).context("writing bundle.json")?;

    let echo = toml::to_string_pretty(&bundle.config).context("config echo serialization")?;
    fs::write(out_dir.join("config_echo.toml"), echo).context("writing config_echo.toml")?;

    fs::write(out_dir.join("table.csv"), flat_table(bundle)).context("writing table.csv")?;

    for curve in &bundle.curves {
        for (e_idx, &eps) in curve.eps_grid.iter().enumerate() {
            let mut dat = String::new();
            for cell in curve.series(e_idx) {
                if cell.gap {
                    continue;
                }
                dat.push_str(&format!("{} {}\n", cell.n, cell.ln_k));
            }
            let path = out_dir
                .join("plots")
                .join(format!("{}_eps{}.dat", curve_tag(curve), eps));
            fs::write(&path, dat)
                .with_context(|| format!("writing plot file {}", path.display()))?;
        }
    }
    Ok(())
}

fn curve_tag(curve: &ScalingCurve) -> String {
    let sanitize = |s: &str| -> String {
        s.chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
            .collect()
    };
    format!("{}_{}", sanitize(&curve.metric), sanitize(&curve.mode))
}

/// Flat CSV with the fixed column set; gap cells carry no measurement and
/// are omitted.
pub fn flat_table(bundle: &ResultBundle) -> String {
    let mut out = String::from("system,metric,mode,n,epsilon,k,ln_k,m,seed\n");
    for curve in &bundle.curves {
        for cell in &curve.cells {
            if cell.gap {
                continue;
            }
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                curve.system,
                curve.metric,
                curve.mode,
                cell.n,
                cell.eps,
                cell.k,
                cell.ln_k,
                curve.m,
                curve.seed
            ));
        }
    }
    out
}
