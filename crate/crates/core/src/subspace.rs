//! Elementwise sharp/flat masks for the SOAP family and the coverage score.

use crate::error::{contract, Result};
use crate::linalg::{svd_oracle, DenseMatrix};
use crate::scalar::Real;

/// Dual-threshold controller: entries of the second moment above `l_s·mean(V)`
/// are sharp, entries below `l_smooth·mean(V)` are flat, and the band between
/// is interpolated linearly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoapMaskController<T> {
    pub l_s: T,
    pub l_smooth: T,
    pub d_s: usize,
    pub d_smooth: usize,
}

impl<T: Real> SoapMaskController<T> {
    /// Starts at `l_s = 1.0`, `l_smooth = 0.5`.
    pub fn new(d_s: usize, d_smooth: usize) -> Self {
        Self {
            l_s: T::one(),
            l_smooth: T::lit(0.5),
            d_s,
            d_smooth,
        }
    }

    /// `(τ_s, τ_smooth)` for a given mean second moment.
    pub fn thresholds(&self, mean_v: T) -> (T, T) {
        (self.l_s * mean_v, self.l_smooth * mean_v)
    }

    pub fn updated(&self, count_above_s: usize, count_above_smooth: usize) -> Self {
        update_soap_controller(*self, count_above_s, count_above_smooth)
    }
}

/// Piecewise-linear mask with `P = 1` for `v ≥ τ_s` and `P = 0` for `v ≤ τ_smooth`.
///
/// A zero tensor gives `τ_s = τ_smooth = 0` and the all-ones mask.
pub fn smoothed_sharp_mask<T: Real>(
    v: &DenseMatrix<T>,
    ctrl: &SoapMaskController<T>,
) -> Result<DenseMatrix<T>> {
    if v.as_slice().iter().any(|&x| x < T::zero()) {
        return Err(contract("second-moment entries must be non-negative"));
    }
    if !(ctrl.l_smooth < ctrl.l_s) || !(ctrl.l_smooth > T::zero()) {
        return Err(contract(format!(
            "mask thresholds collapse: l_s = {}, l_smooth = {}",
            ctrl.l_s, ctrl.l_smooth
        )));
    }
    let (tau_s, tau_smooth) = ctrl.thresholds(v.mean());
    Ok(v.map(|x| mask_value(x, tau_s, tau_smooth)))
}

#[inline]
fn mask_value<T: Real>(x: T, tau_s: T, tau_smooth: T) -> T {
    if x >= tau_s {
        T::one()
    } else if x <= tau_smooth {
        T::zero()
    } else {
        (x - tau_smooth) / (tau_s - tau_smooth)
    }
}

/// Number of entries strictly above `tau`.
pub fn count_above<T: Real>(v: &DenseMatrix<T>, tau: T) -> usize {
    v.as_slice().iter().filter(|&&x| x > tau).count()
}

/// `l_s` follows `count_above_s ≥ d_s`, `l_smooth` follows
/// `count_above_smooth ≥ d_s + d_smooth`; afterwards `l_smooth ≤ 0.95·l_s`.
pub fn update_soap_controller<T: Real>(
    ctrl: SoapMaskController<T>,
    count_above_s: usize,
    count_above_smooth: usize,
) -> SoapMaskController<T> {
    let up = T::lit(1.05);
    let down = T::lit(0.95);
    let l_s = ctrl.l_s * if count_above_s >= ctrl.d_s { up } else { down };
    let l_smooth = ctrl.l_smooth
        * if count_above_smooth >= ctrl.d_s + ctrl.d_smooth {
            up
        } else {
            down
        };
    SoapMaskController {
        l_s,
        l_smooth: l_smooth.min(down * l_s),
        ..ctrl
    }
}

/// `(1/k_A)·‖AᵀB‖_*` for orthonormal bases `A` (`d×k_A`) and `B` (`d×k_B`), `k_A ≤ k_B`.
pub fn coverage_score<T: Real>(basis_a: &DenseMatrix<T>, basis_b: &DenseMatrix<T>) -> Result<T> {
    if basis_a.rows() != basis_b.rows() {
        return Err(crate::error::Error::Shape {
            op: "coverage_score",
            left: basis_a.shape(),
            right: basis_b.shape(),
        });
    }
    if basis_a.cols() > basis_b.cols() {
        return Err(contract("coverage_score needs k_A ≤ k_B"));
    }
    let tol = T::lit(1e-8).max(T::lit(1e3) * T::epsilon());
    for (name, basis) in [("basis_a", basis_a), ("basis_b", basis_b)] {
        let r = basis.orthonormality_residual();
        if !(r <= tol) {
            return Err(contract(format!("{name} columns are not orthonormal (residual {r})")));
        }
    }
    let cross = basis_a.t_matmul(basis_b)?;
    let nuclear: T = svd_oracle(&cross)?.sigma.iter().copied().sum();
    let score = nuclear / T::from_usize_lossy(basis_a.cols());
    Ok(score.max(T::zero()).min(T::one()))
}
