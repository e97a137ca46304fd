//! Continuous-time momentum flows and their discretizations.
//!
//! The first-order system is
//! `ẇ = −η(t)·F⁻¹(m + β∇f(w))`, `ṁ = −αm + ∇f(w)` with a constant SPD metric `F`.

use std::fmt;
use std::sync::Arc;

use crate::error::{contract, Error, Result};
use crate::landscapes::Landscape;
use crate::linalg::{sym_eig, DenseMatrix};
use crate::quadratic::QuadraticSpec;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsState<T> {
    pub w: Vec<T>,
    pub m: Vec<T>,
    pub t: T,
}

impl<T: Real> DynamicsState<T> {
    pub fn new(w: Vec<T>, m: Vec<T>, t: T) -> Result<Self> {
        if w.len() != m.len() {
            return Err(contract("w and m must have equal length"));
        }
        if !w.iter().chain(&m).all(|x| x.is_finite()) || !t.is_finite() {
            return Err(Error::NonFinite("dynamics state"));
        }
        Ok(Self { w, m, t })
    }

    /// `m = 0` at `t = 0`.
    pub fn at_rest(w: Vec<T>) -> Self {
        let n = w.len();
        Self {
            w,
            m: vec![T::zero(); n],
            t: T::zero(),
        }
    }

    fn max_gap(&self, other: &Self) -> T {
        self.w
            .iter()
            .zip(&other.w)
            .chain(self.m.iter().zip(&other.m))
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }
}

type EtaFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
type ProjectorFn<T> = Arc<dyn Fn(&[T]) -> DenseMatrix<T> + Send + Sync>;

/// Coefficients of the first-order flow.
#[derive(Clone)]
pub struct FlowParams<T> {
    pub alpha: T,
    pub beta: T,
    eta: EtaFn<T>,
    metric_inv: Option<DenseMatrix<T>>,
}

impl<T: Real> fmt::Debug for FlowParams<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowParams")
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("eta(0)", &(self.eta)(T::zero()))
            .field("metric", &self.metric_inv.is_some())
            .finish()
    }
}

impl<T: Real> FlowParams<T> {
    /// Constant step size and identity metric.
    pub fn constant(alpha: T, beta: T, eta: T) -> Self {
        Self {
            alpha,
            beta,
            eta: Arc::new(move |_| eta),
            metric_inv: None,
        }
    }

    pub fn with_eta_fn(mut self, eta: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        self.eta = Arc::new(eta);
        self
    }

    /// Constant SPD metric `F`; its inverse is formed once.
    pub fn with_metric(mut self, f: &DenseMatrix<T>) -> Result<Self> {
        if !f.is_square() || f.asymmetry() > T::lit(1e-12) * (T::one() + f.max_abs()) {
            return Err(contract("metric must be square and symmetric"));
        }
        let eig = sym_eig(f)?;
        if !eig.values.iter().all(|&v| v > T::zero()) {
            return Err(contract("metric must be positive definite"));
        }
        let n = f.rows();
        let v = &eig.vectors;
        let inv = DenseMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * v[(j, k)] / eig.values[k]).sum()
        });
        self.metric_inv = Some(inv);
        Ok(self)
    }

    pub fn eta_at(&self, t: T) -> T {
        (self.eta)(t)
    }

    fn precondition(&self, v: Vec<T>) -> Vec<T> {
        match &self.metric_inv {
            None => v,
            Some(inv) => (0..v.len())
                .map(|i| inv.row(i).iter().zip(&v).map(|(&a, &b)| a * b).sum())
                .collect(),
        }
    }
}

/// Flow with separate sharp/flat treatment:
/// `ẇ = −ηF⁻¹P(m + β₁∇f) − χηF⁻¹Q(m + β₂∇f)`, `Q = I − P`.
#[derive(Clone)]
pub struct LiteFlowParams<T> {
    pub base: FlowParams<T>,
    pub beta1: T,
    pub beta2: T,
    pub chi: T,
    projector: ProjectorFn<T>,
}

impl<T: Real> fmt::Debug for LiteFlowParams<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LiteFlowParams")
            .field("base", &self.base)
            .field("beta1", &self.beta1)
            .field("beta2", &self.beta2)
            .field("chi", &self.chi)
            .finish()
    }
}

impl<T: Real> LiteFlowParams<T> {
    /// `base.beta` is ignored; `beta1`/`beta2` act on the sharp/flat parts.
    pub fn new(
        base: FlowParams<T>,
        beta1: T,
        beta2: T,
        chi: T,
        projector: impl Fn(&[T]) -> DenseMatrix<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            base,
            beta1,
            beta2,
            chi,
            projector: Arc::new(projector),
        }
    }

    pub fn with_constant_projector(base: FlowParams<T>, beta1: T, beta2: T, chi: T, p: DenseMatrix<T>) -> Self {
        Self::new(base, beta1, beta2, chi, move |_| p.clone())
    }

    /// Projector at `w`, checked for symmetry and idempotence within 1e-8.
    pub fn projector_at(&self, w: &[T]) -> Result<DenseMatrix<T>> {
        let p = (self.projector)(w);
        if p.shape() != (w.len(), w.len()) {
            return Err(contract("projector must be n×n"));
        }
        let tol = T::lit(1e-8);
        if p.asymmetry() > tol {
            return Err(contract("projector is not symmetric"));
        }
        if p.matmul(&p)?.sub(&p)?.max_abs() > tol {
            return Err(contract("projector is not idempotent"));
        }
        Ok(p)
    }
}

fn momentum_rhs<T: Real>(alpha: T, m: &[T], g: &[T]) -> Vec<T> {
    m.iter().zip(g).map(|(&mi, &gi)| gi - alpha * mi).collect()
}

/// `(ẇ, ṁ)` of the first-order flow.
pub fn first_order_rhs<T: Real, L: Landscape<T> + ?Sized>(
    state: &DynamicsState<T>,
    landscape: &L,
    params: &FlowParams<T>,
) -> (Vec<T>, Vec<T>) {
    let g = landscape.grad(&state.w);
    let eta = params.eta_at(state.t);
    let u: Vec<T> = state.m.iter().zip(&g).map(|(&m, &gi)| m + params.beta * gi).collect();
    let wdot = params.precondition(u).into_iter().map(|x| -eta * x).collect();
    (wdot, momentum_rhs(params.alpha, &state.m, &g))
}

fn lite_direction<T: Real>(p: &DenseMatrix<T>, m: &[T], g: &[T], lite: &LiteFlowParams<T>) -> Vec<T> {
    let n = m.len();
    let u1: Vec<T> = m.iter().zip(g).map(|(&a, &b)| a + lite.beta1 * b).collect();
    let u2: Vec<T> = m.iter().zip(g).map(|(&a, &b)| a + lite.beta2 * b).collect();
    (0..n)
        .map(|i| {
            let row = p.row(i);
            let pu1: T = row.iter().zip(&u1).map(|(&a, &b)| a * b).sum();
            let pu2: T = row.iter().zip(&u2).map(|(&a, &b)| a * b).sum();
            pu1 + lite.chi * (u2[i] - pu2)
        })
        .collect()
}

/// `(ẇ, ṁ)` of the LITE flow.
pub fn lite_flow_rhs<T: Real, L: Landscape<T> + ?Sized>(
    state: &DynamicsState<T>,
    landscape: &L,
    lite: &LiteFlowParams<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    let p = lite.projector_at(&state.w)?;
    let g = landscape.grad(&state.w);
    let eta = lite.base.eta_at(state.t);
    let d = lite_direction(&p, &state.m, &g, lite);
    let wdot = lite.base.precondition(d).into_iter().map(|x| -eta * x).collect();
    Ok((wdot, momentum_rhs(lite.base.alpha, &state.m, &g)))
}

fn check_h<T: Real>(h: T) -> Result<()> {
    if !(h > T::zero()) {
        return Err(contract("step size h must be positive"));
    }
    Ok(())
}

/// Semi-implicit Euler: `m ← (1 − hα)m + h∇f(w)`, then
/// `w ← w − h·η(t)F⁻¹(m_new + β∇f(w))`. At `h = 1` this is [`discrete_step`] bit for bit.
pub fn semi_implicit_step<T: Real, L: Landscape<T> + ?Sized>(
    state: &DynamicsState<T>,
    landscape: &L,
    params: &FlowParams<T>,
    h: T,
) -> Result<DynamicsState<T>> {
    check_h(h)?;
    let g = landscape.grad(&state.w);
    let decay = T::one() - h * params.alpha;
    let m: Vec<T> = state.m.iter().zip(&g).map(|(&mi, &gi)| decay * mi + h * gi).collect();
    let u: Vec<T> = m.iter().zip(&g).map(|(&mi, &gi)| mi + params.beta * gi).collect();
    let eta = params.eta_at(state.t);
    let step = params.precondition(u);
    let w = state.w.iter().zip(&step).map(|(&wi, &s)| wi - h * (eta * s)).collect();
    Ok(DynamicsState { w, m, t: state.t + h })
}

/// Semi-implicit Euler for the LITE flow.
pub fn lite_semi_implicit_step<T: Real, L: Landscape<T> + ?Sized>(
    state: &DynamicsState<T>,
    landscape: &L,
    lite: &LiteFlowParams<T>,
    h: T,
) -> Result<DynamicsState<T>> {
    check_h(h)?;
    let p = lite.projector_at(&state.w)?;
    let g = landscape.grad(&state.w);
    let decay = T::one() - h * lite.base.alpha;
    let m: Vec<T> = state.m.iter().zip(&g).map(|(&mi, &gi)| decay * mi + h * gi).collect();
    let eta = lite.base.eta_at(state.t);
    let step = lite.base.precondition(lite_direction(&p, &m, &g, lite));
    let w = state.w.iter().zip(&step).map(|(&wi, &s)| wi - h * (eta * s)).collect();
    Ok(DynamicsState { w, m, t: state.t + h })
}

/// One step of the discrete optimizer
/// `m_k = (1−α)m_{k−1} + ∇f(w_k)`, `w_{k+1} = w_k − η_kF⁻¹(m_k + β∇f(w_k))`.
pub fn discrete_step<T: Real, L: Landscape<T> + ?Sized>(
    state: &DynamicsState<T>,
    landscape: &L,
    params: &FlowParams<T>,
) -> DynamicsState<T> {
    let g = landscape.grad(&state.w);
    let decay = T::one() - params.alpha;
    let m: Vec<T> = state.m.iter().zip(&g).map(|(&mi, &gi)| decay * mi + gi).collect();
    let u: Vec<T> = m.iter().zip(&g).map(|(&mi, &gi)| mi + params.beta * gi).collect();
    let eta = params.eta_at(state.t);
    let step = params.precondition(u);
    let w = state.w.iter().zip(&step).map(|(&wi, &s)| wi - eta * s).collect();
    DynamicsState {
        w,
        m,
        t: state.t + T::one(),
    }
}

/// Classical fourth-order Runge–Kutta step for a `(w, m)` vector field.
pub fn rk4_step<T: Real>(
    state: &DynamicsState<T>,
    h: T,
    rhs: impl Fn(&DynamicsState<T>) -> (Vec<T>, Vec<T>),
) -> DynamicsState<T> {
    let shifted = |k: &(Vec<T>, Vec<T>), c: T| DynamicsState {
        w: state.w.iter().zip(&k.0).map(|(&a, &b)| a + c * b).collect(),
        m: state.m.iter().zip(&k.1).map(|(&a, &b)| a + c * b).collect(),
        t: state.t + c,
    };
    let half = h / T::lit(2.0);
    let k1 = rhs(state);
    let k2 = rhs(&shifted(&k1, half));
    let k3 = rhs(&shifted(&k2, half));
    let k4 = rhs(&shifted(&k3, h));
    let six = T::lit(6.0);
    let two = T::lit(2.0);
    let comb = |a: &[T], b: &[T], c: &[T], d: &[T], x: &[T]| -> Vec<T> {
        (0..x.len())
            .map(|i| x[i] + h / six * (a[i] + two * b[i] + two * c[i] + d[i]))
            .collect()
    };
    DynamicsState {
        w: comb(&k1.0, &k2.0, &k3.0, &k4.0, &state.w),
        m: comb(&k1.1, &k2.1, &k3.1, &k4.1, &state.m),
        t: state.t + h,
    }
}

/// Integrates the first-order flow over `[state.t, state.t + steps·h]` with RK4.
pub fn integrate_rk4<T: Real, L: Landscape<T> + ?Sized>(
    state: &DynamicsState<T>,
    landscape: &L,
    params: &FlowParams<T>,
    h: T,
    steps: usize,
) -> Result<DynamicsState<T>> {
    check_h(h)?;
    let mut s = state.clone();
    for _ in 0..steps {
        s = rk4_step(&s, h, |x| first_order_rhs(x, landscape, params));
    }
    Ok(s)
}

/// Semi-implicit errors against a fine RK4 reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport<T> {
    pub step_sizes: Vec<T>,
    /// Max-norm gap to the reference at the final time, per step size.
    pub errors: Vec<T>,
    /// Least-squares slope of `log(error)` against `log(h)`.
    pub order: T,
}

/// Integrates to `t_end` with `h = 2^{-k}` for each `k`, compares against RK4
/// at `h = 1e-3`, and fits the observed order.
pub fn discretization_order<T: Real, L: Landscape<T> + ?Sized>(
    state: &DynamicsState<T>,
    landscape: &L,
    params: &FlowParams<T>,
    t_end: T,
    exponents: &[u32],
) -> Result<ConvergenceReport<T>> {
    if exponents.len() < 2 {
        return Err(contract("need at least two step sizes"));
    }
    let fine = T::lit(1e-3);
    let fine_steps = (t_end / fine).round().to_usize().ok_or_else(|| contract("bad t_end"))?;
    let reference = integrate_rk4(state, landscape, params, fine, fine_steps)?;
    let mut step_sizes = Vec::new();
    let mut errors = Vec::new();
    for &k in exponents {
        let h = T::lit(0.5f64.powi(k as i32));
        let n = (t_end / h).round().to_usize().ok_or_else(|| contract("bad t_end"))?;
        let mut s = state.clone();
        for _ in 0..n {
            s = semi_implicit_step(&s, landscape, params, h)?;
        }
        step_sizes.push(h);
        errors.push(s.max_gap(&reference));
    }
    let xs: Vec<T> = step_sizes.iter().map(|h| h.ln()).collect();
    let ys: Vec<T> = errors.iter().map(|e| e.ln()).collect();
    let n = T::from_usize_lossy(xs.len());
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxy: T = xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    Ok(ConvergenceReport {
        step_sizes,
        errors,
        order: sxy / sxx,
    })
}

/// `(α_t, β_t, γ_t) = (α − η̇/η, βη, η(1 + αβ))` for the inertial form.
pub fn ishd_coefficients<T: Real>(alpha: T, beta: T, eta: T, eta_dot: T) -> (T, T, T) {
    (alpha - eta_dot / eta, beta * eta, eta * (T::one() + alpha * beta))
}

/// `ẅ = −α_t ẇ − β_t ∇²f(w)ẇ − γ_t ∇f(w)`.
pub fn ishd_acceleration<T: Real, L: Landscape<T> + ?Sized>(
    w: &[T],
    wdot: &[T],
    landscape: &L,
    alpha_t: T,
    beta_t: T,
    gamma_t: T,
) -> Vec<T> {
    let hv = landscape.hvp(w, wdot);
    let g = landscape.grad(w);
    (0..w.len())
        .map(|i| -alpha_t * wdot[i] - beta_t * hv[i] - gamma_t * g[i])
        .collect()
}

/// Both Nesterov formulations from the same start.
#[derive(Debug, Clone, PartialEq)]
pub struct NesterovTrace<T> {
    /// `x_k = w_{k−1} − η∇f(w_{k−1})`, `w_k = x_k + (1−α)(x_k − x_{k−1})`, `x_0 = w_0`.
    pub extrapolated: Vec<Vec<T>>,
    /// `m_k = (1−α)m_{k−1} + ∇f(w_k)`, `w_{k+1} = w_k − η₁(m_k + β∇f(w_k))`
    /// with `η₁ = η/(1+αβ)`, `β = 1/(1−α)`, `m_{−1} = 0`.
    pub corrected: Vec<Vec<T>>,
    pub max_gap: T,
}

pub fn nesterov_forms_trace<T: Real>(
    spec: &QuadraticSpec<T>,
    w0: &[T],
    alpha: T,
    eta: T,
    steps: usize,
) -> Result<NesterovTrace<T>> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(contract("Nesterov equivalence needs α ∈ (0, 1)"));
    }
    if w0.len() != spec.dim() {
        return Err(contract("start point does not match the quadratic"));
    }
    let one = T::one();
    let keep = one - alpha;

    let mut a = vec![w0.to_vec()];
    let mut x_prev = w0.to_vec();
    for _ in 0..steps {
        let w = a.last().expect("non-empty");
        let g = spec.grad(w);
        let x: Vec<T> = w.iter().zip(&g).map(|(&wi, &gi)| wi - eta * gi).collect();
        let next = x.iter().zip(&x_prev).map(|(&xi, &xp)| xi + keep * (xi - xp)).collect();
        x_prev = x;
        a.push(next);
    }

    let beta = one / keep;
    let eta1 = eta / (one + alpha * beta);
    let mut b = vec![w0.to_vec()];
    let mut m = vec![T::zero(); spec.dim()];
    for _ in 0..steps {
        let w = b.last().expect("non-empty");
        let g = spec.grad(w);
        for (mi, &gi) in m.iter_mut().zip(&g) {
            *mi = keep * *mi + gi;
        }
        let next = (0..w.len()).map(|i| w[i] - eta1 * (m[i] + beta * g[i])).collect();
        b.push(next);
    }

    let max_gap = a
        .iter()
        .zip(&b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(&p, &q)| (p - q).abs()))
        .fold(T::zero(), T::max);
    Ok(NesterovTrace {
        extrapolated: a,
        corrected: b,
        max_gap,
    })
}

/// Constant-coefficient AdEMAMix flow without preconditioner:
/// `ṁ_f = α₁(∇f − m_f)`, `ṁ_s = α₂(∇f − m_s)`, `ẇ = −η(m_f + κm_s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdemamixFlow<T> {
    pub alpha1: T,
    pub alpha2: T,
    pub kappa: T,
    pub eta: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdemamixResidual<T> {
    /// Max residual of
    /// `w⃛ + (α₁+α₂)ẅ + α₁α₂ẇ + η(α₁+κα₂)∇²f ẇ + ηα₁α₂(1+κ)∇f`.
    pub max_residual: T,
    /// Same with the gradient coefficient `η(1 + α₁α₂)`, for comparison.
    pub max_residual_alt_gradient: T,
    /// For `κ = 0`: max residual of `ẅ + α₁ẇ + ηα₁∇f`.
    pub second_order_residual: Option<T>,
    pub samples: usize,
}

struct Ademamix3<T> {
    w: Vec<T>,
    mf: Vec<T>,
    ms: Vec<T>,
}

/// Integrates the AdEMAMix flow on a diagonal quadratic with RK4 at step `h`
/// over `[0, t_end]`, evaluating the third-order identity at every grid point
/// with derivatives taken analytically from the linear system.
pub fn ademamix_ode_residual<T: Real>(
    spec: &QuadraticSpec<T>,
    flow: &AdemamixFlow<T>,
    w0: &[T],
    t_end: T,
    h: T,
) -> Result<AdemamixResidual<T>> {
    check_h(h)?;
    if w0.len() != spec.dim() {
        return Err(contract("start point does not match the quadratic"));
    }
    let n = spec.dim();
    let lam = spec.eigenvalues();
    let (a1, a2, k, eta) = (flow.alpha1, flow.alpha2, flow.kappa, flow.eta);
    let deriv = |s: &Ademamix3<T>| -> Ademamix3<T> {
        let g = spec.grad(&s.w);
        Ademamix3 {
            w: (0..n).map(|i| -eta * (s.mf[i] + k * s.ms[i])).collect(),
            mf: (0..n).map(|i| a1 * (g[i] - s.mf[i])).collect(),
            ms: (0..n).map(|i| a2 * (g[i] - s.ms[i])).collect(),
        }
    };
    let mut worst = T::zero();
    let mut worst_alt = T::zero();
    let mut worst_second = T::zero();
    let mut check = |s: &Ademamix3<T>| {
        let g = spec.grad(&s.w);
        for i in 0..n {
            let wd = -eta * (s.mf[i] + k * s.ms[i]);
            let mfd = a1 * (g[i] - s.mf[i]);
            let msd = a2 * (g[i] - s.ms[i]);
            let wdd = -eta * (mfd + k * msd);
            let gd = lam[i] * wd;
            let wddd = -eta * (a1 * (gd - mfd) + k * a2 * (gd - msd));
            let common = wddd + (a1 + a2) * wdd + a1 * a2 * wd + eta * (a1 + k * a2) * lam[i] * wd;
            let r = common + eta * a1 * a2 * (T::one() + k) * g[i];
            let r_alt = common + eta * (T::one() + a1 * a2) * g[i];
            worst = worst.max(r.abs());
            worst_alt = worst_alt.max(r_alt.abs());
            worst_second = worst_second.max((wdd + a1 * wd + eta * a1 * g[i]).abs());
        }
    };
    let mut s = Ademamix3 {
        w: w0.to_vec(),
        mf: vec![T::zero(); n],
        ms: vec![T::zero(); n],
    };
    let steps = (t_end / h).round().to_usize().ok_or_else(|| contract("bad t_end"))?;
    check(&s);
    let axpy = |s: &Ademamix3<T>, d: &Ademamix3<T>, c: T| Ademamix3 {
        w: (0..n).map(|i| s.w[i] + c * d.w[i]).collect(),
        mf: (0..n).map(|i| s.mf[i] + c * d.mf[i]).collect(),
        ms: (0..n).map(|i| s.ms[i] + c * d.ms[i]).collect(),
    };
    let half = h / T::lit(2.0);
    let (two, six) = (T::lit(2.0), T::lit(6.0));
    for _ in 0..steps {
        let k1 = deriv(&s);
        let k2 = deriv(&axpy(&s, &k1, half));
        let k3 = deriv(&axpy(&s, &k2, half));
        let k4 = deriv(&axpy(&s, &k3, h));
        let comb = |x: &[T], a: &[T], b: &[T], c: &[T], d: &[T]| -> Vec<T> {
            (0..n).map(|i| x[i] + h / six * (a[i] + two * b[i] + two * c[i] + d[i])).collect()
        };
        s = Ademamix3 {
            w: comb(&s.w, &k1.w, &k2.w, &k3.w, &k4.w),
            mf: comb(&s.mf, &k1.mf, &k2.mf, &k3.mf, &k4.mf),
            ms: comb(&s.ms, &k1.ms, &k2.ms, &k3.ms, &k4.ms),
        };
        check(&s);
    }
    Ok(AdemamixResidual {
        max_residual: worst,
        max_residual_alt_gradient: worst_alt,
        second_order_residual: (k == T::zero()).then_some(worst_second),
        samples: steps + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscapes::QuadraticLandscape;
    use crate::quadratic::{lite_mode_params, simulate_modes, stability_bound};
    use crate::rng::SplitMix64;

    fn quad(l: Vec<f64>) -> QuadraticLandscape<f64> {
        QuadraticLandscape::new(QuadraticSpec::centered(l).unwrap())
    }

    #[test]
    fn rhs_examples() {
        let q = quad(vec![2.0, 0.5]);
        let p = FlowParams::constant(0.1, 1.0, 0.1);
        let (wd, md) = first_order_rhs(&DynamicsState::at_rest(vec![0.0, 0.0]), &q, &p);
        assert_eq!((wd, md), (vec![0.0, 0.0], vec![0.0, 0.0]));

        let w = vec![1.0, -2.0];
        let g = q.grad(&w);
        let s = DynamicsState::new(w, g.clone(), 0.0).unwrap();
        let (wd, md) = first_order_rhs(&s, &q, &FlowParams::constant(0.1, 0.0, 0.3));
        for i in 0..2 {
            assert!((wd[i] + 0.3 * g[i]).abs() < 1e-15);
            assert!((md[i] - 0.9 * g[i]).abs() < 1e-15);
        }

        let lam = 7.0;
        let q = quad(vec![lam]);
        let (wd, md) = first_order_rhs(&DynamicsState::at_rest(vec![1.0]), &q, &FlowParams::constant(0.1, 1.0, 0.1));
        assert!((wd[0] + 0.1 * lam).abs() < 1e-15 && md[0] == lam);
    }

    #[test]
    fn metric_preconditions_velocity() {
        let q = quad(vec![1.0, 1.0]);
        let f = DenseMatrix::from_rows(&[&[2.0, 0.0], &[0.0, 4.0]]);
        let p = FlowParams::constant(0.1, 0.0, 1.0).with_metric(&f).unwrap();
        let s = DynamicsState::new(vec![0.0, 0.0], vec![1.0, 1.0], 0.0).unwrap();
        let (wd, _) = first_order_rhs(&s, &q, &p);
        assert!((wd[0] + 0.5).abs() < 1e-15 && (wd[1] + 0.25).abs() < 1e-15);
        let bad = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        assert!(FlowParams::constant(0.1, 0.0, 1.0).with_metric(&bad).is_err());
    }

    #[test]
    fn lite_flow_reductions() {
        let q = quad(vec![3.0, 1.0, 0.01]);
        let s = DynamicsState::new(vec![1.0, -1.0, 2.0], vec![0.3, 0.2, -0.1], 0.0).unwrap();
        let base = FlowParams::constant(0.1, 0.7, 0.05);
        let reference = first_order_rhs(&s, &q, &base);
        let mut rng = SplitMix64::new(4);
        let basis = crate::linalg::qr_decompose(&DenseMatrix::from_fn(3, 3, |_, _| rng.next_normal()))
            .unwrap()
            .q
            .leading_columns(2);
        let p = basis.matmul(&basis.transpose()).unwrap().symmetrized();
        let same = LiteFlowParams::with_constant_projector(base.clone(), 0.7, 0.7, 1.0, p);
        let (wd, md) = lite_flow_rhs(&s, &q, &same).unwrap();
        for i in 0..3 {
            assert!((wd[i] - reference.0[i]).abs() < 1e-14);
            assert_eq!(md[i], reference.1[i]);
        }
        let full = LiteFlowParams::with_constant_projector(base.clone(), 0.7, 5.0, 3.0, DenseMatrix::identity(3));
        let (wd, _) = lite_flow_rhs(&s, &q, &full).unwrap();
        for i in 0..3 {
            assert!((wd[i] - reference.0[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn lite_flow_scales_flat_velocity() {
        let q = quad(vec![5.0, 0.1, 0.1]);
        let s = DynamicsState::new(vec![1.0, 1.0, -1.0], vec![0.0, 0.5, 0.2], 0.0).unwrap();
        let e1 = DenseMatrix::from_diag(&[1.0, 0.0, 0.0]);
        let base = FlowParams::constant(0.1, 0.0, 0.1);
        let one = LiteFlowParams::with_constant_projector(base.clone(), 0.5, 1.0, 1.0, e1.clone());
        let two = LiteFlowParams::with_constant_projector(base, 0.5, 1.0, 2.0, e1);
        let (a, _) = lite_flow_rhs(&s, &q, &one).unwrap();
        let (b, _) = lite_flow_rhs(&s, &q, &two).unwrap();
        assert_eq!(a[0], b[0]);
        for i in 1..3 {
            assert!((b[i] - 2.0 * a[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn lite_flow_rejects_non_projectors() {
        let q = quad(vec![1.0, 1.0]);
        let s = DynamicsState::at_rest(vec![1.0, 1.0]);
        let base = FlowParams::constant(0.1, 0.0, 0.1);
        let half = DenseMatrix::from_diag(&[0.5, 1.0]);
        let skew = DenseMatrix::from_rows(&[&[1.0, 0.5], &[0.0, 0.0]]);
        for p in [half, skew] {
            let l = LiteFlowParams::with_constant_projector(base.clone(), 0.0, 0.0, 1.0, p);
            assert!(lite_flow_rhs(&s, &q, &l).is_err());
        }
    }

    #[test]
    fn unit_step_equals_discrete_optimizer() {
        let spec = QuadraticSpec::new(vec![4.0, 1.0, -0.3], vec![0.2, 0.0, -0.1]).unwrap();
        let q = QuadraticLandscape::new(spec.clone());
        for beta in [0.0, 0.8] {
            let p = FlowParams::constant(0.1, beta, 0.05);
            let mut a = DynamicsState::new(vec![1.0, -2.0, 0.5], vec![0.1, 0.0, 0.3], 0.0).unwrap();
            let mut b = a.clone();
            for _ in 0..50 {
                a = semi_implicit_step(&a, &q, &p, 1.0).unwrap();
                b = discrete_step(&b, &q, &p);
                assert_eq!(a, b);
            }
            // same iterates as the quadratic simulator
            let w0 = [1.0, -2.0, 0.5];
            let sim = crate::quadratic::simulate_recurrence(&spec, 0.1, beta, 0.05, &w0, &[0.0; 3], 10).unwrap();
            let mut c = DynamicsState::new(w0.to_vec(), vec![0.0; 3], 0.0).unwrap();
            let star = spec.stationary_point();
            for k in 1..=10 {
                c = semi_implicit_step(&c, &q, &p, 1.0).unwrap();
                for i in 0..3 {
                    assert_eq!(c.w[i] - star[i], sim.errors[k][i]);
                }
            }
        }
    }

    #[test]
    fn lite_unit_step_matches_per_mode_update() {
        let spec = QuadraticSpec::centered(vec![50.0, 0.02, 0.01]).unwrap();
        let q = QuadraticLandscape::new(spec.clone());
        let base = FlowParams::constant(0.1, 0.0, 0.01);
        let lite = LiteFlowParams::with_constant_projector(base, 0.0, 1.0, 4.0, DenseMatrix::from_diag(&[1.0, 0.0, 0.0]));
        let w0 = vec![1.0, 1.0, 1.0];
        let modes = lite_mode_params(&spec, 0.01, 0.0, 4.0, 1.0, 1);
        let sim = simulate_modes(&spec, 0.1, &modes, &w0, &[0.0; 3], 20).unwrap();
        let mut s = DynamicsState::at_rest(w0);
        for k in 1..=20 {
            s = lite_semi_implicit_step(&s, &q, &lite, 1.0).unwrap();
            for i in 0..3 {
                let e: f64 = sim.errors[k][i];
                assert!((s.w[i] - e).abs() <= 1e-14 * (1.0 + e.abs()));
            }
        }
    }

    #[test]
    fn zero_gradient_drifts_linearly() {
        let q = quad(vec![0.0, 0.0]);
        let p = FlowParams::constant(0.0, 0.5, 0.2);
        let mut s = DynamicsState::new(vec![1.0, 2.0], vec![1.0, -1.0], 0.0).unwrap();
        for k in 1..=8 {
            s = semi_implicit_step(&s, &q, &p, 0.25).unwrap();
            assert_eq!(s.m, vec![1.0, -1.0]);
            let t = 0.25 * k as f64;
            assert!((s.w[0] - (1.0 - 0.2 * t)).abs() < 1e-14);
            assert!((s.w[1] - (2.0 + 0.2 * t)).abs() < 1e-14);
        }
        assert!(semi_implicit_step(&s, &q, &p, 0.0).is_err());
    }

    #[test]
    fn first_order_convergence() {
        let q = quad(vec![2.0, 0.5, -0.1]);
        let p = FlowParams::constant(0.5, 1.0, 0.5);
        let s = DynamicsState::at_rest(vec![1.0, -1.0, 0.5]);
        let rep = discretization_order(&s, &q, &p, 4.0, &[4, 5, 6, 7, 8]).unwrap();
        assert!((0.8..=1.2).contains(&rep.order), "{rep:?}");
        for e in rep.errors.windows(2) {
            assert!(e[1] < e[0]);
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        let q = quad(vec![1.5]);
        let p = FlowParams::constant(0.3, 0.5, 1.0);
        let s = DynamicsState::at_rest(vec![1.0]);
        let reference = integrate_rk4(&s, &q, &p, 1e-3, 2000).unwrap();
        let coarse = integrate_rk4(&s, &q, &p, 0.1, 20).unwrap();
        let finer = integrate_rk4(&s, &q, &p, 0.05, 40).unwrap();
        let e1 = coarse.max_gap(&reference);
        let e2 = finer.max_gap(&reference);
        assert!((e1 / e2).log2() > 3.5);
    }

    #[test]
    fn ishd_examples() {
        let q = quad(vec![3.0]);
        assert_eq!(ishd_acceleration(&[0.0], &[0.0], &q, 0.1, 0.2, 0.3), vec![0.0]);
        let (a, b, c) = (0.1, 0.2, 0.3);
        let acc = ishd_acceleration(&[2.0], &[-0.5], &q, a, b, c);
        let expect = -(a + b * 3.0) * -0.5 - c * 3.0 * 2.0;
        assert!((acc[0] - expect).abs() < 1e-15);
        let (at, bt, gt) = ishd_coefficients(0.1f64, 2.0, 0.5, -0.05);
        assert!((at - 0.2).abs() < 1e-15 && bt == 1.0 && (gt - 0.6).abs() < 1e-15);
    }

    #[test]
    fn first_order_flow_satisfies_ishd() {
        // decaying step size exercises the α − η̇/η term
        let q = QuadraticLandscape::new(QuadraticSpec::new(vec![2.0, 0.3], vec![0.5, -0.2]).unwrap());
        let (alpha, beta) = (0.4, 0.6);
        let eta = |t: f64| 0.8 / (1.0 + 0.1 * t);
        let eta_dot = |t: f64| -0.08 / (1.0 + 0.1 * t).powi(2);
        for b in [0.0, beta] {
            let p = FlowParams::constant(alpha, b, 0.0).with_eta_fn(eta);
            let h = 1e-3;
            let mut s = DynamicsState::new(vec![1.0, -1.0], vec![0.2, 0.1], 0.0).unwrap();
            let mut traj = vec![s.clone()];
            for _ in 0..3000 {
                s = rk4_step(&s, h, |x| first_order_rhs(x, &q, &p));
                traj.push(s.clone());
            }
            for k in (500..2500).step_by(250) {
                let vel = |x: &DynamicsState<f64>| first_order_rhs(x, &q, &p).0;
                let (vp, vm) = (vel(&traj[k + 1]), vel(&traj[k - 1]));
                let wdd: Vec<f64> = (0..2).map(|i| (vp[i] - vm[i]) / (2.0 * h)).collect();
                let t = traj[k].t;
                let (at, bt, gt) = ishd_coefficients(alpha, b, eta(t), eta_dot(t));
                let acc = ishd_acceleration(&traj[k].w, &vel(&traj[k]), &q, at, bt, gt);
                for i in 0..2 {
                    assert!((acc[i] - wdd[i]).abs() < 1e-6, "β={b} t={t}");
                }
            }
        }
    }

    #[test]
    fn nesterov_examples() {
        let spec = QuadraticSpec::centered(vec![4.0, 1.0]).unwrap();
        let tr = nesterov_forms_trace(&spec, &[1.0, -1.0], 0.1, 0.01, 100).unwrap();
        assert!(tr.max_gap <= 1e-10);
        assert_eq!(tr.extrapolated.len(), 101);
        // first step: w₁ = w₀ − η(2−α)∇f(w₀) in both forms
        let g = spec.grad(&[1.0, -1.0]);
        for i in 0..2 {
            let w1: f64 = [1.0, -1.0][i] - 0.01 * 1.9 * g[i];
            assert!((tr.extrapolated[1][i] - w1).abs() < 1e-15);
            assert!((tr.corrected[1][i] - w1).abs() < 1e-15);
        }
        let still = nesterov_forms_trace(&spec, &[1.0, -1.0], 0.1, 0.0, 10).unwrap();
        assert!(still.extrapolated.iter().chain(&still.corrected).all(|w| w == &vec![1.0, -1.0]));
        assert!(nesterov_forms_trace(&spec, &[1.0, -1.0], 1.0, 0.01, 10).is_err());
    }

    #[test]
    fn ademamix_identity() {
        let spec = QuadraticSpec::centered(vec![1.0]).unwrap();
        let flow = AdemamixFlow {
            alpha1: 0.1,
            alpha2: 1e-3,
            kappa: 2.0,
            eta: 0.5,
        };
        let r = ademamix_ode_residual(&spec, &flow, &[1.0], 10.0, 1e-3).unwrap();
        assert!(r.max_residual <= 1e-8, "{r:?}");
        assert!(r.max_residual_alt_gradient > 1e-3);
        assert!(r.second_order_residual.is_none());

        let reduced = AdemamixFlow { kappa: 0.0, ..flow };
        let r = ademamix_ode_residual(&spec, &reduced, &[1.0], 10.0, 1e-3).unwrap();
        assert!(r.max_residual <= 1e-8 && r.second_order_residual.unwrap() <= 1e-8);

        let offset = QuadraticSpec::new(vec![2.0], vec![1.0]).unwrap();
        let r = ademamix_ode_residual(&offset, &flow, &[-0.5], 10.0, 1e-3).unwrap();
        assert_eq!(r.max_residual, 0.0);
    }

    /// `Σ_k (Aᵀ)^k A^k` for the companion matrix of one mode.
    fn lyapunov(t: f64, d: f64) -> [[f64; 2]; 2] {
        let a = [[2.0 * t, -d], [1.0, 0.0]];
        let mut p = [[0.0; 2]; 2];
        let mut ak = [[1.0, 0.0], [0.0, 1.0]];
        for _ in 0..200_000 {
            for i in 0..2 {
                for j in 0..2 {
                    p[i][j] += ak[0][i] * ak[0][j] + ak[1][i] * ak[1][j];
                }
            }
            let next = [
                [a[0][0] * ak[0][0] + a[0][1] * ak[1][0], a[0][0] * ak[0][1] + a[0][1] * ak[1][1]],
                [a[1][0] * ak[0][0] + a[1][1] * ak[1][0], a[1][0] * ak[0][1] + a[1][1] * ak[1][1]],
            ];
            ak = next;
            if ak.iter().flatten().all(|x| x.abs() < 1e-18) {
                break;
            }
        }
        p
    }

    #[test]
    fn lyapunov_energy_decays() {
        let mut rng = SplitMix64::new(21);
        for _ in 0..10 {
            let lam = vec![rng.uniform(5.0, 20.0), rng.uniform(0.5, 2.0), rng.uniform(0.05, 0.2)];
            let spec = QuadraticSpec::centered(lam.clone()).unwrap();
            let (alpha, beta) = (rng.uniform(0.1, 0.5), rng.uniform(0.0, 1.5));
            let eta = 0.5 * stability_bound(lam[0], alpha, beta).unwrap();
            let sim = crate::quadratic::simulate_recurrence(&spec, alpha, beta, eta, &[1.0; 3], &[0.0; 3], 400).unwrap();
            let ps: Vec<_> = lam
                .iter()
                .map(|&l| {
                    let (t, d) = crate::quadratic::recurrence_coeffs(l, alpha, beta, eta);
                    lyapunov(t, d)
                })
                .collect();
            let energy = |k: usize| -> f64 {
                (0..3)
                    .map(|i| {
                        let z = [sim.errors[k][i], sim.errors[k - 1][i]];
                        let p = ps[i];
                        z[0] * (p[0][0] * z[0] + p[0][1] * z[1]) + z[1] * (p[1][0] * z[0] + p[1][1] * z[1])
                            + 0.5 * lam[i] * z[0] * z[0]
                    })
                    .sum()
            };
            let start = 40;
            for k in start + 1..=400 {
                assert!(energy(k) <= energy(k - 1) * (1.0 + 1e-12));
            }
        }
    }
}
