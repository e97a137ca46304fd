//! LITE steppers: the baseline direction plus `(χ−1)` times its flat part and a
//! gradient term weighted `β₁` on sharp and `χ·β₂` on flat directions.
//!
//! Writing the flat amplification as `d + (χ−1)·Q·d` rather than
//! `(P + χQ)·d` makes `χ = 1, β₁ = β₂ = 0` add exact zeros to the shared
//! baseline direction, so those settings reproduce the baseline bit for bit.

use crate::error::Result;
use crate::linalg::DenseMatrix;
use crate::polar::{composite_sharp_projection, ns_polar, RankController};
use crate::scalar::Real;
use crate::subspace::{count_above, smoothed_sharp_mask, SoapMaskController};

use super::config::{LitePolicy, OptimizerConfig};
use super::state::{BlockOptState, MatrixBlock, StepDiagnostics};
use super::steppers::{
    adam_moments, adaptive, finish, muon_momentum, muon_scale, soap_prepare,
    soap_unrotate_and_refresh,
};

/// LITE coefficients resolved for one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiteCoefficients<T> {
    pub chi: T,
    pub beta1: T,
    pub beta2: T,
}

impl<T: Real> LiteCoefficients<T> {
    pub fn new(chi: T, beta1: T, beta2: T) -> Self {
        Self { chi, beta1, beta2 }
    }
}

/// `U = N₁ + (χ−1)·N₁(I−P) + N_g·(β₁P + χβ₂(I−P))` for `n × n` projector `P`.
pub fn muon_lite_direction<T: Real>(
    n1: &DenseMatrix<T>,
    ng: &DenseMatrix<T>,
    p: &DenseMatrix<T>,
    coef: LiteCoefficients<T>,
) -> Result<DenseMatrix<T>> {
    let flat = DenseMatrix::identity(p.rows()).sub(p)?;
    let amplified = n1.matmul(&flat)?;
    let chi_b2 = coef.chi * coef.beta2;
    let weights = p.zip_map(&flat, |s, f| coef.beta1 * s + chi_b2 * f)?;
    let grad_term = ng.matmul(&weights)?;
    let extra = coef.chi - T::one();
    let mut u = n1.zip_map(&amplified, |a, b| a + extra * b)?;
    u.axpy(T::one(), &grad_term)?;
    Ok(u)
}

/// Entrywise analogue for a mask `P ∈ [0,1]`: `d + (χ−1)·Q⊙d + (β₁P + χβ₂Q)⊙g̃`.
pub fn elementwise_lite_direction<T: Real>(
    base: &DenseMatrix<T>,
    grad_term: &DenseMatrix<T>,
    mask: &DenseMatrix<T>,
    coef: LiteCoefficients<T>,
) -> Result<DenseMatrix<T>> {
    let extra = coef.chi - T::one();
    let chi_b2 = coef.chi * coef.beta2;
    let data = base
        .as_slice()
        .iter()
        .zip(grad_term.as_slice())
        .zip(mask.as_slice())
        .map(|((&d, &gt), &p)| {
            let q = T::one() - p;
            d + extra * (q * d) + (coef.beta1 * p + chi_b2 * q) * gt
        })
        .collect();
    DenseMatrix::new(base.rows(), base.cols(), data)
}

pub fn step_muon_lite<T: Real>(
    block: &mut MatrixBlock<T>,
    state: &mut BlockOptState<T>,
    g: &DenseMatrix<T>,
    lr: T,
    cfg: &OptimizerConfig<T>,
    policy: &LitePolicy<T>,
) -> Result<()> {
    state.check_shape(g)?;
    state.step += 1;
    let u = muon_momentum(state, g, cfg.theta)?;
    let wide = u.rows() < u.cols();
    let (u_o, g_o) = if wide {
        (u.transpose(), g.transpose())
    } else {
        (u, g.clone())
    };
    let n = u_o.cols();
    let ctrl = *state
        .rank_ctrl
        .get_or_insert_with(|| RankController::for_columns(n, policy.sharp_dim(n)));
    let proj = composite_sharp_projection(&u_o, &ctrl, &cfg.ns)?;
    let ng = ns_polar(&g_o, &cfg.ns);
    let coef = LiteCoefficients::new(policy.chi, policy.beta1, policy.beta2);
    let dir = muon_lite_direction(&proj.polar, &ng, &proj.p, coef)?;
    let dir = if wide { dir.transpose() } else { dir };
    let p_frob = proj.frobenius();
    state.rank_ctrl = Some(ctrl.updated(p_frob));
    let diag = StepDiagnostics {
        sharp_mass: p_frob * p_frob,
        l: ctrl.scale_l,
        ..StepDiagnostics::default()
    };
    let (r, c) = g.shape();
    finish(block, state, &dir, lr, muon_scale(r, c), cfg, diag)
}

/// Mask from the second moment, then the controller update from strict counts.
fn mask_and_advance<T: Real>(
    state: &mut BlockOptState<T>,
    policy: &LitePolicy<T>,
) -> Result<(DenseMatrix<T>, StepDiagnostics<T>)> {
    let count = state.v.len();
    let ctrl = *state.mask_ctrl.get_or_insert_with(|| {
        SoapMaskController::new(policy.sharp_dim(count), policy.smooth_dim(count))
    });
    let mask = smoothed_sharp_mask(&state.v, &ctrl)?;
    let (tau_s, tau_smooth) = ctrl.thresholds(state.v.mean());
    state.mask_ctrl = Some(ctrl.updated(
        count_above(&state.v, tau_s),
        count_above(&state.v, tau_smooth),
    ));
    let diag = StepDiagnostics {
        sharp_mass: mask.sum(),
        l_s: ctrl.l_s,
        l_smooth: ctrl.l_smooth,
        ..StepDiagnostics::default()
    };
    Ok((mask, diag))
}

pub fn step_soap_lite<T: Real>(
    block: &mut MatrixBlock<T>,
    state: &mut BlockOptState<T>,
    g: &DenseMatrix<T>,
    lr: T,
    cfg: &OptimizerConfig<T>,
    policy: &LitePolicy<T>,
) -> Result<()> {
    state.check_shape(g)?;
    state.step += 1;
    let rot = soap_prepare(state, g, cfg)?;
    let (mask, diag) = mask_and_advance(state, policy)?;
    let grad_term = adaptive(&rot.g_rot, &state.v, cfg.epsilon);
    let coef = LiteCoefficients::new(policy.chi, policy.beta1, policy.beta2);
    let u_rot = elementwise_lite_direction(&rot.base, &grad_term, &mask, coef)?;
    let d = soap_unrotate_and_refresh(state, g, &u_rot, cfg)?;
    finish(block, state, &d, lr, T::one(), cfg, diag)
}

/// SOAP-LITE with identity rotations, for embedding and norm blocks.
pub fn step_adam_lite<T: Real>(
    block: &mut MatrixBlock<T>,
    state: &mut BlockOptState<T>,
    g: &DenseMatrix<T>,
    lr: T,
    cfg: &OptimizerConfig<T>,
    policy: &LitePolicy<T>,
    coef: LiteCoefficients<T>,
) -> Result<()> {
    state.check_shape(g)?;
    state.step += 1;
    adam_moments(state, g, cfg.theta, cfg.beta_v);
    let (mask, diag) = mask_and_advance(state, policy)?;
    let base = adaptive(&state.m, &state.v, cfg.epsilon);
    let grad_term = adaptive(g, &state.v, cfg.epsilon);
    let d = elementwise_lite_direction(&base, &grad_term, &mask, coef)?;
    finish(block, state, &d, lr, T::one(), cfg, diag)
}
