//! Closed-form analysis of momentum dynamics on diagonal quadratics
//! `f(w) = ½Σλᵢwᵢ² + bᵀw` with identity preconditioner.
//!
//! Each coordinate's error `e_k = w_k − w⋆` obeys
//! `e_{k+1} − 2T·e_k + D·e_{k−1} = 0` with
//! `T = 1 − (α + ηλ(β+1))/2` and `D = (1−α)(1 − ηβλ)`.

use num_complex::Complex;

use crate::error::{contract, Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSpec<T> {
    eigenvalues: Vec<T>,
    offsets: Vec<T>,
}

impl<T: Real> QuadraticSpec<T> {
    /// `eigenvalues` must be sorted in descending order and match `offsets` in length.
    pub fn new(eigenvalues: Vec<T>, offsets: Vec<T>) -> Result<Self> {
        if eigenvalues.len() != offsets.len() || eigenvalues.is_empty() {
            return Err(contract("eigenvalues and offsets must be non-empty and equally long"));
        }
        if eigenvalues.windows(2).any(|w| !(w[0] >= w[1])) {
            return Err(contract("eigenvalues must be sorted in descending order"));
        }
        if eigenvalues.iter().chain(&offsets).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("quadratic spec"));
        }
        Ok(Self { eigenvalues, offsets })
    }

    pub fn centered(eigenvalues: Vec<T>) -> Result<Self> {
        let n = eigenvalues.len();
        Self::new(eigenvalues, vec![T::zero(); n])
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn offsets(&self) -> &[T] {
        &self.offsets
    }

    /// `w⋆ᵢ = −bᵢ/λᵢ`; zero-curvature coordinates use 0.
    pub fn stationary_point(&self) -> Vec<T> {
        self.eigenvalues
            .iter()
            .zip(&self.offsets)
            .map(|(&l, &b)| if l == T::zero() { T::zero() } else { -b / l })
            .collect()
    }

    pub fn loss(&self, w: &[T]) -> T {
        let half = T::lit(0.5);
        self.eigenvalues
            .iter()
            .zip(&self.offsets)
            .zip(w)
            .map(|((&l, &b), &x)| half * l * x * x + b * x)
            .sum()
    }

    pub fn grad(&self, w: &[T]) -> Vec<T> {
        self.eigenvalues
            .iter()
            .zip(&self.offsets)
            .zip(w)
            .map(|((&l, &b), &x)| l * x + b)
            .collect()
    }

    /// `½Σλᵢ(wᵢ − w⋆ᵢ)²`, i.e. `f(w) − f(w⋆)` without cancellation.
    pub fn excess_loss(&self, w: &[T]) -> T {
        let half = T::lit(0.5);
        self.eigenvalues
            .iter()
            .zip(self.stationary_point())
            .zip(w)
            .map(|((&l, s), &x)| half * l * (x - s) * (x - s))
            .sum()
    }
}

/// `(T, D)` for one eigenvalue.
pub fn recurrence_coeffs<T: Real>(lambda: T, alpha: T, beta: T, eta: T) -> (T, T) {
    let one = T::one();
    let t = one - (alpha + eta * lambda * (beta + one)) / T::lit(2.0);
    let d = (one - alpha) * (one - eta * beta * lambda);
    (t, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Overdamped,
    Critical,
    Underdamped,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Overdamped => "overdamped",
            Regime::Critical => "critical",
            Regime::Underdamped => "underdamped",
        }
    }
}

/// Roots of `r² − 2Tr + D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicRoots<T> {
    pub discriminant: T,
    /// `roots[0] = T + √Δ`, `roots[1] = T − √Δ`.
    pub roots: [Complex<T>; 2],
    pub regime: Regime,
    /// `arccos(T/√D)` in the underdamped regime.
    pub theta: Option<T>,
    pub dominant_modulus: T,
}

impl<T: Real> CharacteristicRoots<T> {
    /// The larger real root `r₁ = T + √Δ` (real part when underdamped).
    pub fn r1(&self) -> T {
        self.roots[0].re
    }
}

/// `|Δ| < 1e-14·max(1, T²)` counts as critical.
pub fn characteristic_roots<T: Real>(t: T, d: T) -> Result<CharacteristicRoots<T>> {
    let disc = t * t - d;
    let tol = T::lit(1e-14) * T::one().max(t * t);
    let real = |x: T| Complex::new(x, T::zero());
    if disc.abs() < tol {
        return Ok(CharacteristicRoots {
            discriminant: disc,
            roots: [real(t), real(t)],
            regime: Regime::Critical,
            theta: None,
            dominant_modulus: t.abs(),
        });
    }
    if disc > T::zero() {
        let s = disc.sqrt();
        // larger-magnitude root first, then Vieta for the other
        let big = if t >= T::zero() { t + s } else { t - s };
        let small = if big == T::zero() { T::zero() } else { d / big };
        let (r1, r2) = if big >= small { (big, small) } else { (small, big) };
        return Ok(CharacteristicRoots {
            discriminant: disc,
            roots: [real(r1), real(r2)],
            regime: Regime::Overdamped,
            theta: None,
            dominant_modulus: r1.abs().max(r2.abs()),
        });
    }
    if !(d > T::zero()) {
        return Err(contract("underdamped roots need D > 0"));
    }
    let s = (-disc).sqrt();
    let modulus = d.sqrt();
    let cos = (t / modulus).max(-T::one()).min(T::one());
    Ok(CharacteristicRoots {
        discriminant: disc,
        roots: [Complex::new(t, s), Complex::new(t, -s)],
        regime: Regime::Underdamped,
        theta: Some(cos.acos()),
        dominant_modulus: modulus,
    })
}

/// Full closed-form picture for one eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport<T> {
    pub lambda: T,
    pub t: T,
    pub d: T,
    pub discriminant: T,
    pub roots: [Complex<T>; 2],
    pub regime: Regime,
    pub theta: Option<T>,
    pub dominant_modulus: T,
}

pub fn regime_report<T: Real>(lambda: T, alpha: T, beta: T, eta: T) -> Result<RegimeReport<T>> {
    let (t, d) = recurrence_coeffs(lambda, alpha, beta, eta);
    let r = characteristic_roots(t, d)?;
    Ok(RegimeReport {
        lambda,
        t,
        d,
        discriminant: r.discriminant,
        roots: r.roots,
        regime: r.regime,
        theta: r.theta,
        dominant_modulus: r.dominant_modulus,
    })
}

pub fn classify_regime<T: Real>(lambda: T, alpha: T, beta: T, eta: T) -> Result<Regime> {
    Ok(regime_report(lambda, alpha, beta, eta)?.regime)
}

/// Dominant root `r₁ = T + √(T² − D)` of one mode.
pub fn dominant_root<T: Real>(lambda: T, alpha: T, beta: T, eta: T) -> Result<T> {
    let (t, d) = recurrence_coeffs(lambda, alpha, beta, eta);
    Ok(characteristic_roots(t, d)?.r1())
}

/// Largest step keeping every root of a mode with curvature `lambda_max` in the unit disc:
/// `2(2−α) / (λ·max{1 + 2β − αβ, 2β(1−α)})`. Exact for `α ∈ (0, 1)`, `β ≥ 0`.
pub fn stability_bound<T: Real>(lambda_max: T, alpha: T, beta: T) -> Result<T> {
    if !(lambda_max > T::zero()) {
        return Err(contract("stability bound needs a positive curvature"));
    }
    let two = T::lit(2.0);
    if alpha >= two {
        return Ok(T::zero());
    }
    let one = T::one();
    let denom = (one + two * beta - alpha * beta).max(two * beta * (one - alpha));
    if !(denom > T::zero()) {
        return Err(contract("stability bound undefined: non-positive denominator"));
    }
    Ok(two * (two - alpha) / (lambda_max * denom))
}

/// `T(λ)² − D(λ)`, whose sign separates the regimes.
pub fn discriminant_at<T: Real>(lambda: T, alpha: T, beta: T, eta: T) -> T {
    let (t, d) = recurrence_coeffs(lambda, alpha, beta, eta);
    t * t - d
}

/// Curvatures `λ̃₁ < λ̃₂` where `T² = D`; the band `0 < λ < λ̃₁` is overdamped.
///
/// With `x = ηλ` the condition reads
/// `((β+1)²/4)·x² + [(1−α)β − (1−α/2)(β+1)]·x + α²/4 = 0`.
pub fn regime_boundaries<T: Real>(alpha: T, beta: T, eta: T) -> Result<(T, T)> {
    let no_split = |why: &str| {
        Error::NoRegimeSplit(format!("alpha = {alpha}, beta = {beta}, eta = {eta}: {why}"))
    };
    if !(eta > T::zero()) {
        return Err(no_split("eta must be positive"));
    }
    let one = T::one();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let a = (beta + one) * (beta + one) / four;
    let b = (one - alpha) * beta - (one - alpha / two) * (beta + one);
    let c = alpha * alpha / four;
    let disc = b * b - four * a * c;
    if !(disc > T::zero()) || !(b < T::zero()) || !(c > T::zero()) {
        return Err(no_split("no pair of distinct positive roots"));
    }
    let sq = disc.sqrt();
    let x1 = two * c / (-b + sq);
    let x2 = (-b + sq) / (two * a);
    let f = |lam: T| discriminant_at(lam, alpha, beta, eta);
    let l1 = polish_root(&f, x1 / eta);
    let l2 = polish_root(&f, x2 / eta);
    Ok((l1, l2))
}

/// Bisection on a narrow bracket around a closed-form root; keeps the
/// closed-form value when the bracket shows no sign change.
fn polish_root<T: Real>(f: &impl Fn(T) -> T, x: T) -> T {
    let width = T::lit(1e-8) * x.abs().max(T::min_positive_value());
    let (mut lo, mut hi) = (x - width, x + width);
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == T::zero() {
        return lo;
    }
    if fhi == T::zero() {
        return hi;
    }
    if (flo > T::zero()) == (fhi > T::zero()) {
        return x;
    }
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == T::zero() {
            return mid;
        }
        if (fm > T::zero()) == (flo > T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / T::lit(2.0)
}

/// Step size and Nesterov coefficient acting on one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeParams<T> {
    pub eta: T,
    pub beta: T,
}

/// LITE on a diagonal quadratic: the `sharp_count` largest eigenvalues keep
/// `(η, β₁)`, all others run with `(χη, β₂)`.
pub fn lite_mode_params<T: Real>(
    spec: &QuadraticSpec<T>,
    eta: T,
    beta1: T,
    chi: T,
    beta2: T,
    sharp_count: usize,
) -> Vec<ModeParams<T>> {
    (0..spec.dim())
        .map(|i| {
            if i < sharp_count {
                ModeParams { eta, beta: beta1 }
            } else {
                ModeParams {
                    eta: chi * eta,
                    beta: beta2,
                }
            }
        })
        .collect()
}

/// Trajectory of the unified momentum method and per-mode decay fits.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation<T> {
    /// `errors[k][i] = (w_k − w⋆)_i` for `k = 0..=steps_run`.
    pub errors: Vec<Vec<T>>,
    /// Least-squares slope of `log‖(e_k, e_{k−1})‖` over the last half of the
    /// run, per mode; compare with `log(dominant_modulus)`.
    pub log_rates: Vec<Option<T>>,
    /// `max_k |e_k| / |e_0|` per mode (infinite once a mode overflows).
    pub max_growth: Vec<T>,
    /// First step whose iterate was non-finite.
    pub diverged_at: Option<usize>,
}

/// Runs `m_k = (1−α)m_{k−1} + ∇f(w_k)`, `w_{k+1} = w_k − η(m_k + β∇f(w_k))`
/// with the same `(η, β)` on every mode. `m0` is `m_{−1}`.
pub fn simulate_recurrence<T: Real>(
    spec: &QuadraticSpec<T>,
    alpha: T,
    beta: T,
    eta: T,
    w0: &[T],
    m0: &[T],
    steps: usize,
) -> Result<Simulation<T>> {
    let params = vec![ModeParams { eta, beta }; spec.dim()];
    simulate_modes(spec, alpha, &params, w0, m0, steps)
}

/// [`simulate_recurrence`] with per-mode `(η, β)`.
pub fn simulate_modes<T: Real>(
    spec: &QuadraticSpec<T>,
    alpha: T,
    params: &[ModeParams<T>],
    w0: &[T],
    m0: &[T],
    steps: usize,
) -> Result<Simulation<T>> {
    let p = spec.dim();
    if params.len() != p || w0.len() != p || m0.len() != p {
        return Err(contract("simulation inputs must match the spec dimension"));
    }
    let star = spec.stationary_point();
    let mut w = w0.to_vec();
    let mut m = m0.to_vec();
    let mut errors = Vec::with_capacity(steps + 1);
    errors.push(w.iter().zip(&star).map(|(&x, &s)| x - s).collect::<Vec<T>>());
    let mut diverged_at = None;
    let one = T::one();
    for k in 1..=steps {
        let g = spec.grad(&w);
        for i in 0..p {
            m[i] = (one - alpha) * m[i] + g[i];
            w[i] = w[i] - params[i].eta * (m[i] + params[i].beta * g[i]);
        }
        let e: Vec<T> = w.iter().zip(&star).map(|(&x, &s)| x - s).collect();
        let finite = e.iter().all(|x| x.is_finite());
        errors.push(e);
        if !finite {
            diverged_at = Some(k);
            break;
        }
    }
    let e0: Vec<T> = errors[0].clone();
    let max_growth = (0..p)
        .map(|i| {
            let peak = errors
                .iter()
                .map(|e| if e[i].is_finite() { e[i].abs() } else { T::infinity() })
                .fold(T::zero(), T::max);
            if e0[i] == T::zero() {
                if peak == T::zero() {
                    T::zero()
                } else {
                    T::infinity()
                }
            } else {
                peak / e0[i].abs()
            }
        })
        .collect();
    let log_rates = (0..p).map(|i| fit_log_rate(&errors, i)).collect();
    Ok(Simulation {
        errors,
        log_rates,
        max_growth,
        diverged_at,
    })
}

fn fit_log_rate<T: Real>(errors: &[Vec<T>], i: usize) -> Option<T> {
    let floor = T::min_positive_value().sqrt();
    let mut pts: Vec<(T, T)> = Vec::new();
    for k in 1..errors.len() {
        let a = errors[k][i];
        let b = errors[k - 1][i];
        let norm = (a * a + b * b).sqrt();
        if !norm.is_finite() || norm <= floor {
            break;
        }
        pts.push((T::from_usize_lossy(k), norm.ln()));
    }
    let tail = &pts[pts.len() / 2..];
    if tail.len() < 4 {
        return None;
    }
    let n = T::from_usize_lossy(tail.len());
    let mx = tail.iter().map(|p| p.0).sum::<T>() / n;
    let my = tail.iter().map(|p| p.1).sum::<T>() / n;
    let sxy: T = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: T = tail.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// First iteration count at which `f(w_k) − f⋆ ≤ tol`, if reached within `max_steps`.
pub fn steps_to_tolerance<T: Real>(
    spec: &QuadraticSpec<T>,
    alpha: T,
    params: &[ModeParams<T>],
    w0: &[T],
    tol: T,
    max_steps: usize,
) -> Result<Option<usize>> {
    let p = spec.dim();
    if params.len() != p || w0.len() != p {
        return Err(contract("inputs must match the spec dimension"));
    }
    let mut w = w0.to_vec();
    let mut m = vec![T::zero(); p];
    let one = T::one();
    for k in 0..=max_steps {
        let excess = spec.excess_loss(&w);
        if !excess.is_finite() {
            return Ok(None);
        }
        if excess <= tol {
            return Ok(Some(k));
        }
        let g = spec.grad(&w);
        for i in 0..p {
            m[i] = (one - alpha) * m[i] + g[i];
            w[i] = w[i] - params[i].eta * (m[i] + params[i].beta * g[i]);
        }
    }
    Ok(None)
}

/// Monotonicity of `r₁` over an `η × β` grid for one curvature.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityTable<T> {
    pub lambda: T,
    pub eta_grid: Vec<T>,
    pub beta_grid: Vec<T>,
    /// `r1[i][j]` for `(eta_grid[i], beta_grid[j])`; `None` for excluded points.
    pub r1: Vec<Vec<Option<T>>>,
    /// Points outside the analysed band (overdamped, and `λ < λ̃₁` when `λ > 0`).
    pub excluded: Vec<(usize, usize)>,
    /// Consecutive included pairs that break the expected direction.
    pub violations: Vec<((usize, usize), (usize, usize))>,
    /// `true` when `r₁` should increase along both axes (`λ < 0`).
    pub expect_increasing: bool,
}

impl<T> MonotonicityTable<T> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Negative curvature should make `r₁` strictly increasing in `η` and `β`;
/// convex curvature inside the overdamped band strictly decreasing.
pub fn monotonicity_probe<T: Real>(
    lambda: T,
    alpha: T,
    eta_grid: &[T],
    beta_grid: &[T],
) -> Result<MonotonicityTable<T>> {
    if lambda == T::zero() {
        return Err(contract("monotonicity probes need λ ≠ 0"));
    }
    let ascending = |g: &[T]| g.windows(2).all(|w| w[0] < w[1]);
    if !ascending(eta_grid) || !ascending(beta_grid) {
        return Err(contract("probe grids must be strictly ascending"));
    }
    let expect_increasing = lambda < T::zero();
    let mut r1 = vec![vec![None; beta_grid.len()]; eta_grid.len()];
    let mut excluded = Vec::new();
    for (i, &eta) in eta_grid.iter().enumerate() {
        for (j, &beta) in beta_grid.iter().enumerate() {
            let (t, d) = recurrence_coeffs(lambda, alpha, beta, eta);
            let roots = characteristic_roots(t, d)?;
            let in_band = roots.regime == Regime::Overdamped
                && (expect_increasing
                    || matches!(regime_boundaries(alpha, beta, eta), Ok((l1, _)) if lambda < l1));
            if in_band {
                r1[i][j] = Some(roots.r1());
            } else {
                excluded.push((i, j));
            }
        }
    }
    let mut violations = Vec::new();
    let ok = |a: T, b: T| if expect_increasing { b > a } else { b < a };
    for i in 0..eta_grid.len() {
        for j in 0..beta_grid.len() {
            let Some(here) = r1[i][j] else { continue };
            if let Some(Some(next)) = r1.get(i + 1).map(|row| row[j]) {
                if !ok(here, next) {
                    violations.push(((i, j), (i + 1, j)));
                }
            }
            if let Some(&Some(next)) = r1[i].get(j + 1) {
                if !ok(here, next) {
                    violations.push(((i, j), (i, j + 1)));
                }
            }
        }
    }
    Ok(MonotonicityTable {
        lambda,
        eta_grid: eta_grid.to_vec(),
        beta_grid: beta_grid.to_vec(),
        r1,
        excluded,
        violations,
        expect_increasing,
    })
}
