//! Newton–Schulz polar factors and the composite sharp-subspace projector.
//!
//! `ns_polar` approximates `U·Vᵀ` for `A = U·Σ·Vᵀ` with a fixed number of odd
//! quintic steps `X ← aX + bX(XᵀX) + cX(XᵀX)²` after Frobenius normalization.
//! The composite projector averages two such polar factors to build a spectral
//! step function: singular directions above a threshold `τ` map to 1, those
//! below map to 0.

use crate::error::{contract, Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Real;

/// Minimax odd quintics for singular values in `[1e-3, 1]`, one row per step.
/// Each row was fitted on the image interval of the previous step; six steps
/// bring every singular value in `[1e-3, 1]` within `1e-3` of one.
const MINIMAX_TABLE: [(f64, f64, f64); 6] = [
    (8.470340501510421, -25.10815501407851, 18.629344172651255),
    (4.182935470538935, -3.108803854541153, 0.5806270388266055),
    (3.9622271501891375, -2.954347378060488, 0.563015288228669),
    (3.2874703215834584, -2.4653801199683203, 0.5074319855196581),
    (2.2744791380529095, -1.6453202686812265, 0.416262021514615),
    (1.8887829189286311, -1.2652307053437664, 0.3765264280403365),
];

/// `p(x) = (15x − 10x³ + 3x⁵)/8`: fixed point at 1 with `p'(1) = p''(1) = 0`.
const CONVERGENT_TAIL: (f64, f64, f64) = (1.875, -1.25, 0.375);

const NORM_GUARD: f64 = 1e-12;

/// Coefficient schedule for [`ns_polar`].
///
/// Any injected schedule must use odd polynomials: the composite projector
/// feeds matrices whose "singular values" carry a sign and relies on the map
/// preserving it.
#[derive(Debug, Clone, PartialEq)]
pub struct NsSchedule<T> {
    coefficients: Vec<(T, T, T)>,
    tail: (T, T, T),
    iterations: usize,
}

impl<T: Real> Default for NsSchedule<T> {
    fn default() -> Self {
        Self::minimax(6)
    }
}

impl<T: Real> NsSchedule<T> {
    /// The built-in minimax table; steps past the table use the convergent quintic.
    pub fn minimax(iterations: usize) -> Self {
        assert!(iterations >= 1, "at least one Newton–Schulz iteration");
        let lit = |(a, b, c): (f64, f64, f64)| (T::lit(a), T::lit(b), T::lit(c));
        Self {
            coefficients: MINIMAX_TABLE.iter().copied().map(lit).collect(),
            tail: lit(CONVERGENT_TAIL),
            iterations,
        }
    }

    /// Explicit per-iteration coefficients.
    pub fn from_table(coefficients: Vec<(T, T, T)>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(contract("Newton–Schulz schedule needs at least one step"));
        }
        let tail = *coefficients.last().unwrap();
        Ok(Self {
            iterations: coefficients.len(),
            coefficients,
            tail,
        })
    }

    /// The same triple at every step.
    pub fn constant(a: T, b: T, c: T, iterations: usize) -> Self {
        assert!(iterations >= 1, "at least one Newton–Schulz iteration");
        Self {
            coefficients: vec![(a, b, c)],
            tail: (a, b, c),
            iterations,
        }
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        assert!(iterations >= 1, "at least one Newton–Schulz iteration");
        self.iterations = iterations;
        self
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn coefficient(&self, step: usize) -> (T, T, T) {
        self.coefficients.get(step).copied().unwrap_or(self.tail)
    }

    /// Applies the scalar polynomial chain to one singular value.
    pub fn apply_scalar(&self, mut x: T) -> T {
        for k in 0..self.iterations {
            let (a, b, c) = self.coefficient(k);
            let x2 = x * x;
            x = a * x + b * x * x2 + c * x * x2 * x2;
        }
        x
    }
}

/// Approximate polar factor `U·Vᵀ` of `a`. The all-zero matrix maps to zero.
pub fn ns_polar<T: Real>(a: &DenseMatrix<T>, schedule: &NsSchedule<T>) -> DenseMatrix<T> {
    if a.rows() < a.cols() {
        return ns_polar(&a.transpose(), schedule).transpose();
    }
    let norm = a.frobenius_norm();
    if norm == T::zero() {
        return DenseMatrix::zeros(a.rows(), a.cols());
    }
    let mut x = a.scale(T::one() / norm.max(T::lit(NORM_GUARD)));
    for k in 0..schedule.iterations() {
        let (ca, cb, cc) = schedule.coefficient(k);
        let gram = x.t_matmul(&x).expect("square gram");
        let gram2 = gram.matmul(&gram).expect("square gram");
        let poly = gram
            .zip_map(&gram2, |g, g2| cb * g + cc * g2)
            .expect("same shape");
        let tail = x.matmul(&poly).expect("conforming");
        x = x.zip_map(&tail, |xi, ti| ca * xi + ti).expect("same shape");
    }
    x
}

/// Multiplicative controller steering the sharp rank `‖P‖_F²` towards `target_dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankController<T> {
    /// `l_k`; the threshold is `τ = l_k·‖M̃‖_F`.
    pub scale_l: T,
    pub target_dim: usize,
    pub up_factor: T,
    pub down_factor: T,
}

impl<T: Real> RankController<T> {
    pub fn new(scale_l: T, target_dim: usize) -> Result<Self> {
        if !(scale_l > T::zero()) || !scale_l.is_finite() {
            return Err(contract("rank controller scale must be positive"));
        }
        Ok(Self {
            scale_l,
            target_dim,
            up_factor: T::lit(1.05),
            down_factor: T::lit(0.95),
        })
    }

    /// Controller for a block whose oriented column count is `n`, starting at `l₀ = 1/√n`.
    pub fn for_columns(n: usize, target_dim: usize) -> Self {
        Self::new(T::one() / T::from_usize_lossy(n).sqrt(), target_dim).expect("n ≥ 1")
    }

    pub fn threshold(&self, m_tilde_frobenius: T) -> T {
        self.scale_l * m_tilde_frobenius
    }

    pub fn updated(&self, p_frob: T) -> Self {
        update_rank_controller(*self, p_frob)
    }
}

/// `l ← 1.05·l` when `‖P‖_F ≥ √d_s`, else `l ← 0.95·l`.
pub fn update_rank_controller<T: Real>(controller: RankController<T>, p_frob: T) -> RankController<T> {
    let target = T::from_usize_lossy(controller.target_dim).sqrt();
    let factor = if p_frob >= target {
        controller.up_factor
    } else {
        controller.down_factor
    };
    RankController {
        scale_l: controller.scale_l * factor,
        ..controller
    }
}

/// Output of [`composite_sharp_projection`].
#[derive(Debug, Clone)]
pub struct SharpProjection<T> {
    /// `n × n` approximate projector onto the sharp right-singular subspace.
    pub p: DenseMatrix<T>,
    /// `m × n` truncated orthogonal factor `U·diag(1,…,1,0,…,0)·Vᵀ`.
    pub t: DenseMatrix<T>,
    /// `ns_polar(m_tilde)`, reused by callers that also need the full polar factor.
    pub polar: DenseMatrix<T>,
    pub tau: T,
}

impl<T: Real> SharpProjection<T> {
    /// `‖P‖_F`, the controller's feedback signal.
    pub fn frobenius(&self) -> T {
        self.p.frobenius_norm()
    }
}

/// `T = ½·NS(M̃) + ½·NS(M̃/τ − NS(M̃))`, `P = TᵀT` with `τ = l·‖M̃‖_F`.
pub fn composite_sharp_projection<T: Real>(
    m_tilde: &DenseMatrix<T>,
    controller: &RankController<T>,
    schedule: &NsSchedule<T>,
) -> Result<SharpProjection<T>> {
    let (m, n) = m_tilde.shape();
    if m < n {
        return Err(Error::Shape {
            op: "composite_sharp_projection",
            left: (m, n),
            right: (n, m),
        });
    }
    if !(controller.scale_l > T::zero()) {
        return Err(contract("rank controller scale must be positive"));
    }
    let polar = ns_polar(m_tilde, schedule);
    let tau = controller.threshold(m_tilde.frobenius_norm());
    if tau == T::zero() {
        return Ok(SharpProjection {
            p: DenseMatrix::zeros(n, n),
            t: DenseMatrix::zeros(m, n),
            polar,
            tau,
        });
    }
    let inv_tau = T::one() / tau;
    let shifted = m_tilde
        .zip_map(&polar, |x, q| x * inv_tau - q)
        .expect("same shape");
    let sign = ns_polar(&shifted, schedule);
    let half = T::lit(0.5);
    let t = polar
        .zip_map(&sign, |a, b| half * a + half * b)
        .expect("same shape");
    let p = t.t_matmul(&t)?;
    Ok(SharpProjection { p, t, polar, tau })
}
