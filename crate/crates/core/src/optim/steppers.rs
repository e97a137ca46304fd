//! Baseline steppers. Every stepper applies `w ← (1 − lr·λ)·w − lr·scale·d`
//! with a family-specific direction `d`, so `g ≡ 0` leaves pure decay.

use crate::error::{Error, Result};
use crate::linalg::{qr_decompose, DenseMatrix};
use crate::polar::ns_polar;
use crate::scalar::Real;

use super::config::OptimizerConfig;
use super::state::{BlockOptState, MatrixBlock, StepDiagnostics};

/// `num/(√v + ε)`, with `0` wherever the denominator vanishes.
#[inline]
pub(crate) fn adaptive_ratio<T: Real>(num: T, v: T, eps: T) -> T {
    let den = v.sqrt() + eps;
    if den == T::zero() {
        T::zero()
    } else {
        num / den
    }
}

pub(crate) fn adaptive<T: Real>(num: &DenseMatrix<T>, v: &DenseMatrix<T>, eps: T) -> DenseMatrix<T> {
    num.zip_map(v, |n, vi| adaptive_ratio(n, vi, eps))
        .expect("moment shapes match")
}

/// Decoupled decay plus scaled step; returns the RMS of `lr·scale·d`.
pub(crate) fn apply_update<T: Real>(
    w: &mut DenseMatrix<T>,
    d: &DenseMatrix<T>,
    lr: T,
    scale: T,
    weight_decay: T,
) -> T {
    let decay = T::one() - lr * weight_decay;
    let step = lr * scale;
    let mut sq = T::zero();
    for (wi, &di) in w.as_mut_slice().iter_mut().zip(d.as_slice()) {
        let delta = step * di;
        sq += delta * delta;
        *wi = decay * *wi - delta;
    }
    (sq / T::from_usize_lossy(d.len())).sqrt()
}

pub(crate) fn finish<T: Real>(
    block: &mut MatrixBlock<T>,
    state: &mut BlockOptState<T>,
    d: &DenseMatrix<T>,
    lr: T,
    scale: T,
    cfg: &OptimizerConfig<T>,
    mut diag: StepDiagnostics<T>,
) -> Result<()> {
    diag.update_rms = apply_update(&mut block.matrix, d, lr, scale, cfg.weight_decay);
    state.diagnostics = diag;
    if !block.matrix.is_finite() {
        return Err(Error::NonFinite("parameter update"));
    }
    Ok(())
}

/// `m ← θm + (1−θ)c`, `v ← β_v·v + (1−β_v)·c⊙c`.
pub(crate) fn adam_moments<T: Real>(state: &mut BlockOptState<T>, c: &DenseMatrix<T>, theta: T, beta_v: T) {
    let a = T::one() - theta;
    let b = T::one() - beta_v;
    for ((m, v), &ci) in state
        .m
        .as_mut_slice()
        .iter_mut()
        .zip(state.v.as_mut_slice())
        .zip(c.as_slice())
    {
        *m = theta * *m + a * ci;
        *v = beta_v * *v + b * ci * ci;
    }
}

/// `0.2·√max(rows, cols)`.
pub fn muon_scale<T: Real>(rows: usize, cols: usize) -> T {
    T::lit(0.2) * T::from_usize_lossy(rows.max(cols)).sqrt()
}

pub fn step_adamw<T: Real>(
    block: &mut MatrixBlock<T>,
    state: &mut BlockOptState<T>,
    g: &DenseMatrix<T>,
    lr: T,
    cfg: &OptimizerConfig<T>,
) -> Result<()> {
    state.check_shape(g)?;
    state.step += 1;
    adam_moments(state, g, cfg.theta, cfg.beta_v);
    let d = adaptive(&state.m, &state.v, cfg.epsilon);
    finish(block, state, &d, lr, T::one(), cfg, StepDiagnostics::default())
}

/// AdamW with numerator `m + β·g`.
pub fn step_n_adamw<T: Real>(
    block: &mut MatrixBlock<T>,
    state: &mut BlockOptState<T>,
    g: &DenseMatrix<T>,
    lr: T,
    cfg: &OptimizerConfig<T>,
) -> Result<()> {
    state.check_shape(g)?;
    state.step += 1;
    adam_moments(state, g, cfg.theta, cfg.beta_v);
    let beta = cfg.nesterov_beta;
    let num = state.m.zip_map(g, |m, gi| m + beta * gi)?;
    let d = adaptive(&num, &state.v, cfg.epsilon);
    finish(block, state, &d, lr, T::one(), cfg, StepDiagnostics::default())
}

#[inline]
fn sign<T: Real>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

pub fn step_lion<T: Real>(
    block: &mut MatrixBlock<T>,
    state: &mut BlockOptState<T>,
    g: &DenseMatrix<T>,
    lr: T,
    cfg: &OptimizerConfig<T>,
) -> Result<()> {
    state.check_shape(g)?;
    state.step += 1;
    let (theta, beta) = (cfg.theta, cfg.beta_v);
    let u = state.m.zip_map(g, |m, gi| theta * m + (T::one() - theta) * gi)?;
    state.m = state.m.zip_map(g, |m, gi| beta * m + (T::one() - beta) * gi)?;
    let d = u.map(sign);
    finish(block, state, &d, lr, T::one(), cfg, StepDiagnostics::default())
}

/// AdamW driven by `c = g + γ·θ/(1−θ)·(g − g_prev)`.
pub fn step_mars<T: Real>(
    block: &mut MatrixBlock<T>,
    state: &mut BlockOptState<T>,
    g: &DenseMatrix<T>,
    lr: T,
    cfg: &OptimizerConfig<T>,
) -> Result<()> {
    state.check_shape(g)?;
    if cfg.mars_gamma == T::one() {
        return Err(Error::Config("mars_gamma must differ from 1".into()));
    }
    state.step += 1;
    let k = cfg.mars_gamma * cfg.theta / (T::one() - cfg.theta);
    let c = g.zip_map(&state.prev_g, |gi, pi| gi + k * (gi - pi))?;
    adam_moments(state, &c, cfg.theta, cfg.beta_v);
    state.prev_g = g.clone();
    let d = adaptive(&state.m, &state.v, cfg.epsilon);
    finish(block, state, &d, lr, T::one(), cfg, StepDiagnostics::default())
}

/// Fast and slow EMAs combined as `(m_fast + κ·m_slow)/(√v + ε)`.
pub fn step_ademamix<T: Real>(
    block: &mut MatrixBlock<T>,
    state: &mut BlockOptState<T>,
    g: &DenseMatrix<T>,
    lr: T,
    cfg: &OptimizerConfig<T>,
) -> Result<()> {
    state.check_shape(g)?;
    state.step += 1;
    let (a1, a2, bv) = (cfg.alpha_fast, cfg.alpha_slow, cfg.beta_v);
    state.m = state.m.zip_map(g, |m, gi| (T::one() - a1) * m + a1 * gi)?;
    state.m_slow = state.m_slow.zip_map(g, |m, gi| (T::one() - a2) * m + a2 * gi)?;
    state.v = state.v.zip_map(g, |v, gi| bv * v + (T::one() - bv) * gi * gi)?;
    let kappa = cfg.ademamix_kappa;
    let num = state.m.zip_map(&state.m_slow, |f, s| f + kappa * s)?;
    let d = adaptive(&num, &state.v, cfg.epsilon);
    finish(block, state, &d, lr, T::one(), cfg, StepDiagnostics::default())
}

/// `m ← θm + g`; returns the Nesterov vector `u = θm + g`.
pub(crate) fn muon_momentum<T: Real>(
    state: &mut BlockOptState<T>,
    g: &DenseMatrix<T>,
    theta: T,
) -> Result<DenseMatrix<T>> {
    state.m = state.m.zip_map(g, |m, gi| theta * m + gi)?;
    Ok(state.m.zip_map(g, |m, gi| theta * m + gi)?)
}

pub fn step_muon<T: Real>(
    block: &mut MatrixBlock<T>,
    state: &mut BlockOptState<T>,
    g: &DenseMatrix<T>,
    lr: T,
    cfg: &OptimizerConfig<T>,
) -> Result<()> {
    state.check_shape(g)?;
    state.step += 1;
    let u = muon_momentum(state, g, cfg.theta)?;
    let d = ns_polar(&u, &cfg.ns);
    let (r, c) = g.shape();
    finish(block, state, &d, lr, muon_scale(r, c), cfg, StepDiagnostics::default())
}

/// Rotated SOAP quantities for the current step.
pub(crate) struct SoapRotated<T> {
    pub g_rot: DenseMatrix<T>,
    /// `Q_lᵀ M Q_r / (√V + ε)`.
    pub base: DenseMatrix<T>,
}

/// Moment updates in the current eigenbasis.
pub(crate) fn soap_prepare<T: Real>(
    state: &mut BlockOptState<T>,
    g: &DenseMatrix<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<SoapRotated<T>> {
    let g_rot = state.q_l.t_matmul(g)?.matmul(&state.q_r)?;
    let (theta, bv) = (cfg.theta, cfg.beta_v);
    state.m = state.m.zip_map(g, |m, gi| theta * m + (T::one() - theta) * gi)?;
    state.v = state
        .v
        .zip_map(&g_rot, |v, gi| bv * v + (T::one() - bv) * gi * gi)?;
    let m_rot = state.q_l.t_matmul(&state.m)?.matmul(&state.q_r)?;
    let base = adaptive(&m_rot, &state.v, cfg.epsilon);
    Ok(SoapRotated { g_rot, base })
}

/// Rotates a direction back, then advances the Gram EMAs and refreshes the
/// eigenbases every `qr_refresh_every` steps.
pub(crate) fn soap_unrotate_and_refresh<T: Real>(
    state: &mut BlockOptState<T>,
    g: &DenseMatrix<T>,
    u_rot: &DenseMatrix<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<DenseMatrix<T>> {
    let d = state.q_l.matmul(u_rot)?.matmul(&state.q_r.transpose())?;
    let ts = cfg.theta_shampoo;
    let ggt = g.matmul(&g.transpose())?;
    let gtg = g.t_matmul(g)?;
    state.gram_l = state
        .gram_l
        .zip_map(&ggt, |l, x| ts * l + (T::one() - ts) * x)?;
    state.gram_r = state
        .gram_r
        .zip_map(&gtg, |r, x| ts * r + (T::one() - ts) * x)?;
    if state.step % cfg.qr_refresh_every == 0 {
        state.q_l = qr_decompose(&state.gram_l.matmul(&state.q_l)?)?.q;
        state.q_r = qr_decompose(&state.gram_r.matmul(&state.q_r)?)?.q;
    }
    Ok(d)
}

pub fn step_soap<T: Real>(
    block: &mut MatrixBlock<T>,
    state: &mut BlockOptState<T>,
    g: &DenseMatrix<T>,
    lr: T,
    cfg: &OptimizerConfig<T>,
) -> Result<()> {
    state.check_shape(g)?;
    state.step += 1;
    let rot = soap_prepare(state, g, cfg)?;
    let d = soap_unrotate_and_refresh(state, g, &rot.base, cfg)?;
    finish(block, state, &d, lr, T::one(), cfg, StepDiagnostics::default())
}
