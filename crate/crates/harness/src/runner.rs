use std::io::Write;

use lite_core::dynamics::{discrete_step, DynamicsState, FlowParams};
use lite_core::landscapes::{KroneckerQuadratic, Landscape, QuadraticLandscape, RiverValleyLandscape};
use lite_core::optim::{lr_at, StepDiagnostics};
use lite_core::{Error, MlpLandscape, QuadraticSpec, Trainer};

use crate::config::{ExperimentConfig, LandscapeConfig, OptimizerChoice};
use crate::csv::{fmt_float, write_row};
use crate::error::HarnessError;

pub fn build_landscape(cfg: &ExperimentConfig) -> Result<Box<dyn Landscape<f64>>, HarnessError> {
    let l: Box<dyn Landscape<f64>> = match &cfg.landscape {
        LandscapeConfig::Quadratic {
            eigenvalues,
            offsets,
            init,
        } => {
            let mut q = QuadraticLandscape::new(QuadraticSpec::new(eigenvalues.clone(), offsets.clone())?);
            if let Some(w) = init {
                let n = q.dim();
                q = q.with_init(expand(w, n))?;
            }
            Box::new(q)
        }
        LandscapeConfig::RiverValley { spec, init } => {
            let mut r = RiverValleyLandscape::new(spec.clone())?;
            if let Some(w) = init {
                let n = r.dim();
                r = r.with_init(expand(w, n))?;
            }
            Box::new(r)
        }
        LandscapeConfig::Mlp(spec) => Box::new(MlpLandscape::new(spec.clone(), cfg.seed)?),
        LandscapeConfig::Kronecker {
            row_spectrum,
            col_spectrum,
            noise_std,
        } => Box::new(KroneckerQuadratic::with_spectra(row_spectrum, col_spectrum, *noise_std, cfg.seed)?),
    };
    Ok(l)
}

/// A single value broadcasts to every coordinate.
fn expand(w: &[f64], n: usize) -> Vec<f64> {
    if w.len() == 1 {
        vec![w[0]; n]
    } else {
        w.to_vec()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps_completed: usize,
    /// Loss at the final parameters (non-finite after divergence).
    pub final_loss: f64,
    pub diverged_at: Option<usize>,
    pub rows_written: usize,
}

impl RunSummary {
    pub fn line(&self) -> String {
        match self.diverged_at {
            Some(n) => format!("status=diverged divergence at step {n}"),
            None => format!(
                "status=ok steps={} final_loss={}",
                self.steps_completed,
                fmt_float(self.final_loss)
            ),
        }
    }
}

const BLOCK_FIELDS: [&str; 5] = ["update_rms", "sharp_mass", "l", "l_s", "l_smooth"];

/// Column names: `step,lr,loss,global_grad_norm` then five per block in name order.
pub fn csv_header(landscape: &dyn Landscape<f64>) -> Vec<String> {
    let mut names: Vec<String> = landscape.layout().slots().iter().map(|s| s.name.clone()).collect();
    names.sort();
    let mut h: Vec<String> = ["step", "lr", "loss", "global_grad_norm"].map(String::from).to_vec();
    for n in &names {
        h.extend(BLOCK_FIELDS.iter().map(|f| format!("{n}.{f}")));
    }
    h
}

fn row(step: usize, lr: f64, loss: f64, grad_norm: f64, blocks: &[StepDiagnostics<f64>]) -> Vec<String> {
    let mut r = vec![step.to_string(), fmt_float(lr), fmt_float(loss), fmt_float(grad_norm)];
    for d in blocks {
        r.extend([d.update_rms, d.sharp_mass, d.l, d.l_s, d.l_smooth].map(fmt_float));
    }
    r
}

fn divergence_row(step: usize, lr: Option<f64>, loss: f64, width: usize) -> Vec<String> {
    let mut r = vec![step.to_string(), lr.map(fmt_float).unwrap_or_default(), fmt_float(loss)];
    r.resize(width, String::new());
    r
}

fn io_err(e: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: "output".into(),
        msg: e.to_string(),
    }
}

/// Runs the configured loop, writing one CSV row per logged step (every
/// `log_every` steps and the last one). A non-finite loss ends the run with a
/// divergence row whose trailing columns are empty; it is reported in the
/// summary, not as an error.
pub fn run_experiment<W: Write>(cfg: &ExperimentConfig, out: &mut W) -> Result<RunSummary, HarnessError> {
    let landscape = build_landscape(cfg)?;
    let header = csv_header(landscape.as_ref());
    let width = header.len();
    write_row(out, &header).map_err(io_err)?;
    let mut rows = 0;
    let logged = |k: usize| k % cfg.log_every == 0 || k + 1 == cfg.steps;

    let diverge = |out: &mut W, step: usize, loss: f64, rows: usize| -> Result<RunSummary, HarnessError> {
        let lr = lr_at(&cfg.schedule, step).ok();
        write_row(out, &divergence_row(step, lr, loss, width)).map_err(io_err)?;
        out.flush().map_err(io_err)?;
        Ok(RunSummary {
            steps_completed: step,
            final_loss: loss,
            diverged_at: Some(step),
            rows_written: rows + 1,
        })
    };

    let final_w = match &cfg.optimizer {
        OptimizerChoice::Routed(opt) => {
            let mut trainer = Trainer::for_landscape(landscape.as_ref(), opt.clone(), cfg.schedule)?;
            for k in 0..cfg.steps {
                match trainer.step(landscape.as_ref()) {
                    Ok(ts) => {
                        if logged(k) {
                            let diags: Vec<_> = ts.report.blocks.iter().map(|(_, d)| *d).collect();
                            write_row(out, &row(k, ts.report.lr, ts.loss, ts.report.grad_norm, &diags)).map_err(io_err)?;
                            out.flush().map_err(io_err)?;
                            rows += 1;
                        }
                    }
                    Err(Error::NonFinite("loss")) => {
                        return diverge(out, k, landscape.loss(&trainer.params()), rows);
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            trainer.params()
        }
        OptimizerChoice::Momentum { alpha, beta } => {
            let mut s = DynamicsState::at_rest(landscape.initial_point());
            for k in 0..cfg.steps {
                let loss = landscape.loss(&s.w);
                if !loss.is_finite() {
                    return diverge(out, k, loss, rows);
                }
                let lr = lr_at(&cfg.schedule, k)?;
                let g = landscape.grad(&s.w);
                let next = discrete_step(&s, landscape.as_ref(), &FlowParams::constant(*alpha, *beta, lr));
                if logged(k) {
                    let n = s.w.len() as f64;
                    let update_rms = (s.w.iter().zip(&next.w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n).sqrt();
                    let grad_norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let d = StepDiagnostics {
                        update_rms,
                        ..StepDiagnostics::default()
                    };
                    write_row(out, &row(k, lr, loss, grad_norm, &[d])).map_err(io_err)?;
                    out.flush().map_err(io_err)?;
                    rows += 1;
                }
                s = next;
            }
            s.w
        }
    };
    let final_loss = landscape.loss(&final_w);
    if !final_loss.is_finite() {
        return diverge(out, cfg.steps, final_loss, rows);
    }
    Ok(RunSummary {
        steps_completed: cfg.steps,
        final_loss,
        diverged_at: None,
        rows_written: rows,
    })
}

/// [`run_experiment`] into a string.
pub fn run_to_string(cfg: &ExperimentConfig) -> Result<(String, RunSummary), HarnessError> {
    let mut buf = Vec::new();
    let summary = run_experiment(cfg, &mut buf)?;
    Ok((String::from_utf8(buf).expect("CSV is UTF-8"), summary))
}
