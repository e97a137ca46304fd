use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Real;

use super::config::{Family, OptimizerConfig};
use super::lite::{step_adam_lite, step_muon_lite, step_soap_lite, LiteCoefficients};
use super::schedule::{lr_at, ScheduleSpec};
use super::state::{clip_global_norm, BlockOptState, BlockRole, MatrixBlock, StepDiagnostics};
use super::steppers::{
    step_ademamix, step_adamw, step_lion, step_mars, step_muon, step_n_adamw, step_soap,
};

/// The stepper a (family, role) pair dispatches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepper {
    AdamW,
    NAdamW,
    Lion,
    Mars,
    AdEMAMix,
    Muon,
    Soap,
    MuonLite,
    SoapLite,
    AdamLite,
}

/// Elementwise families drive every block; matrix families keep AdamW (or
/// Adam-LITE for embedding/norm under a LITE family) off the hidden matrices,
/// and output blocks always get plain AdamW.
pub fn stepper_for(family: Family, role: BlockRole) -> Stepper {
    use BlockRole as R;
    match family {
        Family::AdamW => Stepper::AdamW,
        Family::NAdamW => Stepper::NAdamW,
        Family::Lion => Stepper::Lion,
        Family::Mars => Stepper::Mars,
        Family::AdEMAMix => Stepper::AdEMAMix,
        Family::Muon | Family::Soap | Family::MuonLite | Family::SoapLite => match role {
            R::Output => Stepper::AdamW,
            R::Muon => match family {
                Family::Muon => Stepper::Muon,
                Family::Soap => Stepper::Soap,
                Family::MuonLite => Stepper::MuonLite,
                _ => Stepper::SoapLite,
            },
            R::Adam | R::Embedding | R::Norm => {
                if family.is_lite() {
                    Stepper::AdamLite
                } else {
                    Stepper::AdamW
                }
            }
        },
    }
}

/// Telemetry for one routed step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport<T> {
    pub lr: T,
    /// Joint gradient norm before clipping.
    pub grad_norm: T,
    /// Per block, in name order.
    pub blocks: Vec<(String, StepDiagnostics<T>)>,
}

/// Steps one block with an explicit stepper.
pub fn step_block<T: Real>(
    stepper: Stepper,
    block: &mut MatrixBlock<T>,
    state: &mut BlockOptState<T>,
    g: &DenseMatrix<T>,
    lr: T,
    cfg: &OptimizerConfig<T>,
) -> Result<()> {
    let policy = || {
        cfg.lite
            .as_ref()
            .ok_or_else(|| Error::Config(format!("family {} needs a lite policy", cfg.family)))
    };
    match stepper {
        Stepper::AdamW => step_adamw(block, state, g, lr, cfg),
        Stepper::NAdamW => step_n_adamw(block, state, g, lr, cfg),
        Stepper::Lion => step_lion(block, state, g, lr, cfg),
        Stepper::Mars => step_mars(block, state, g, lr, cfg),
        Stepper::AdEMAMix => step_ademamix(block, state, g, lr, cfg),
        Stepper::Muon => step_muon(block, state, g, lr, cfg),
        Stepper::Soap => step_soap(block, state, g, lr, cfg),
        Stepper::MuonLite => step_muon_lite(block, state, g, lr, cfg, policy()?),
        Stepper::SoapLite => step_soap_lite(block, state, g, lr, cfg, policy()?),
        Stepper::AdamLite => {
            let p = policy()?;
            let chi = match block.role {
                BlockRole::Embedding => p.chi_embedding.unwrap_or(p.chi),
                BlockRole::Norm => p.chi_norm.unwrap_or(p.chi),
                _ => p.chi,
            };
            let coef = LiteCoefficients::new(chi, p.adam_beta1, p.adam_beta2);
            step_adam_lite(block, state, g, lr, cfg, p, coef)
        }
    }
}

/// One optimizer step over all blocks: a single global clip, then each block
/// dispatched by `(family, role)` in lexicographic name order with
/// `lr = lr_at(schedule, step)`.
///
/// Missing states are created on first use; every block needs a gradient.
pub fn route_and_step<T: Real>(
    blocks: &mut [MatrixBlock<T>],
    states: &mut BTreeMap<String, BlockOptState<T>>,
    grads: &BTreeMap<String, DenseMatrix<T>>,
    step: usize,
    schedule: &ScheduleSpec<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<StepReport<T>> {
    cfg.validate()?;
    let lr = lr_at(schedule, step)?;
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    order.sort_by(|&a, &b| blocks[a].name.cmp(&blocks[b].name));
    if order.windows(2).any(|w| blocks[w[0]].name == blocks[w[1]].name) {
        return Err(Error::Config("duplicate block names".into()));
    }
    let mut clipped = Vec::with_capacity(blocks.len());
    for &i in &order {
        let g = grads
            .get(&blocks[i].name)
            .ok_or_else(|| Error::Config(format!("no gradient for block {}", blocks[i].name)))?;
        clipped.push(g.clone());
    }
    let grad_norm = match cfg.clip_norm {
        Some(c) => clip_global_norm(&mut clipped, c),
        None => clipped.iter().map(|g| g.frobenius_norm_sq()).sum::<T>().sqrt(),
    };
    let mut report = Vec::with_capacity(blocks.len());
    for (&i, g) in order.iter().zip(&clipped) {
        let block = &mut blocks[i];
        let state = states
            .entry(block.name.clone())
            .or_insert_with(|| BlockOptState::for_block(block));
        step_block(stepper_for(cfg.family, block.role), block, state, g, lr, cfg)?;
        report.push((block.name.clone(), state.diagnostics));
    }
    Ok(StepReport {
        lr,
        grad_norm,
        blocks: report,
    })
}
