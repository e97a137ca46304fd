use lite_core::landscapes::{alignment_experiment, mlp_alignment, AlignmentConfig, CoverageCurve, KroneckerQuadratic};
use lite_core::{regime_report, SplitMix64};

use crate::config::{ExperimentConfig, LandscapeConfig};
use crate::csv::{fmt_float, Table};
use crate::error::HarnessError;

/// `points` evenly spaced curvatures from `lambda_min` to `lambda_max` inclusive.
pub fn quadratic_report(
    alpha: f64,
    beta: f64,
    eta: f64,
    lambda_min: f64,
    lambda_max: f64,
    points: usize,
) -> Result<Table, HarnessError> {
    if points == 0 {
        return Err(HarnessError::Usage("--points must be positive".into()));
    }
    if !(lambda_min <= lambda_max) || ![alpha, beta, eta, lambda_min, lambda_max].iter().all(|x| x.is_finite()) {
        return Err(HarnessError::Usage("need finite arguments with lambda-min ≤ lambda-max".into()));
    }
    let mut t = Table::new(["lambda", "T", "D", "discriminant", "regime", "dominant_modulus"]);
    for i in 0..points {
        let lambda = if points == 1 {
            lambda_min
        } else {
            lambda_min + (lambda_max - lambda_min) * i as f64 / (points - 1) as f64
        };
        let r = regime_report(lambda, alpha, beta, eta)?;
        t.push(vec![
            fmt_float(lambda),
            fmt_float(r.t),
            fmt_float(r.d),
            fmt_float(r.discriminant),
            r.regime.name().to_string(),
            fmt_float(r.dominant_modulus),
        ]);
    }
    Ok(t)
}

pub fn coverage_table(curves: &[CoverageCurve<f64>]) -> Table {
    let mut t = Table::new(["block", "axis", "index", "d_s", "k", "coverage"]);
    for c in curves {
        for (k, s) in c.ks.iter().zip(&c.scores) {
            t.push(vec![
                c.block.clone(),
                c.axis.name().to_string(),
                c.index.to_string(),
                c.d_s.to_string(),
                k.to_string(),
                fmt_float(*s),
            ]);
        }
    }
    t
}

/// Coverage curves for an `mlp` landscape (after `align.train_steps` AdamW steps)
/// or a `kronecker` landscape (at `W = 0`).
pub fn run_alignment(cfg: &ExperimentConfig) -> Result<Vec<CoverageCurve<f64>>, HarnessError> {
    let acfg = AlignmentConfig {
        d_s: cfg.align.d_s,
        k_grid: cfg.align.k_grid.clone(),
        gram_batches: cfg.align.gram_batches,
    };
    match &cfg.landscape {
        LandscapeConfig::Mlp(spec) => Ok(mlp_alignment(spec.clone(), cfg.seed, cfg.align.train_steps, &acfg)?),
        LandscapeConfig::Kronecker {
            row_spectrum,
            col_spectrum,
            noise_std,
        } => {
            let k = KroneckerQuadratic::with_spectra(row_spectrum, col_spectrum, *noise_std, cfg.seed)?;
            let w = lite_core::Landscape::initial_point(&k);
            Ok(alignment_experiment(&k, &w, &acfg, &mut SplitMix64::child(cfg.seed, "align"))?)
        }
        other => Err(HarnessError::Config {
            line: None,
            msg: format!("align needs an mlp or kronecker landscape, got {}", other.kind()),
        }),
    }
}
