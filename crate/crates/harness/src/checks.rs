//! Consistency checks for the continuous-time flows and their discretizations.

use lite_core::dynamics::{
    ademamix_ode_residual, discrete_step, discretization_order, first_order_rhs, ishd_acceleration,
    ishd_coefficients, nesterov_forms_trace, rk4_step, semi_implicit_step, AdemamixFlow, DynamicsState, FlowParams,
};
use lite_core::landscapes::QuadraticLandscape;
use lite_core::{QuadraticSpec, Result, SplitMix64};

use crate::csv::{fmt_float, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl CheckResult {
    fn at_most(name: &'static str, value: f64, upper: f64) -> Self {
        Self {
            name,
            value,
            lower: f64::NEG_INFINITY,
            upper,
        }
    }

    pub fn passed(&self) -> bool {
        self.value >= self.lower && self.value <= self.upper
    }
}

pub fn checks_table(checks: &[CheckResult]) -> Table {
    let mut t = Table::new(["check", "value", "lower", "upper", "status"]);
    for c in checks {
        t.push(vec![
            c.name.to_string(),
            fmt_float(c.value),
            fmt_float(c.lower),
            fmt_float(c.upper),
            if c.passed() { "pass" } else { "fail" }.to_string(),
        ]);
    }
    t
}

/// Seeded diagonal quadratic with `n` curvatures in `[lo, hi]` (descending) and offsets in `[-1, 1]`.
pub fn seeded_quadratic(rng: &mut SplitMix64, n: usize, lo: f64, hi: f64) -> QuadraticSpec<f64> {
    let mut eig: Vec<f64> = (0..n).map(|_| rng.uniform(lo, hi)).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    let offsets = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    QuadraticSpec::new(eig, offsets).expect("valid seeded quadratic")
}

/// Largest entrywise gap between `semi_implicit_step(h = 1)` and the discrete
/// step over `steps` iterations on seeded quadratics.
pub fn unit_step_gap(seed: u64, cases: usize, steps: usize) -> Result<f64> {
    let mut rng = SplitMix64::child(seed, "unit-step");
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let spec = seeded_quadratic(&mut rng, 4, -0.5, 5.0);
        let q = QuadraticLandscape::new(spec);
        let p = FlowParams::constant(rng.uniform(0.01, 0.5), rng.uniform(0.0, 2.0), rng.uniform(0.01, 0.1));
        let w0: Vec<f64> = (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let m0: Vec<f64> = (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let mut a = DynamicsState::new(w0, m0, 0.0)?;
        let mut b = a.clone();
        for _ in 0..steps {
            a = semi_implicit_step(&a, &q, &p, 1.0)?;
            b = discrete_step(&b, &q, &p);
            let gap = a.w.iter().zip(&b.w).chain(a.m.iter().zip(&b.m)).map(|(x, y)| (x - y).abs());
            worst = gap.fold(worst, f64::max);
        }
    }
    Ok(worst)
}

/// Observed order of semi-implicit Euler for `h = 2^-4 … 2^-8` on a fixed quadratic.
pub fn semi_implicit_order() -> Result<f64> {
    let q = QuadraticLandscape::new(QuadraticSpec::new(vec![2.0, 0.5, -0.1], vec![0.3, 0.0, -0.2])?);
    let p = FlowParams::constant(0.5, 1.0, 0.5);
    let s = DynamicsState::at_rest(vec![1.0, -1.0, 0.5]);
    Ok(discretization_order(&s, &q, &p, 4.0, &[4, 5, 6, 7, 8])?.order)
}

/// Largest gap between the two Nesterov forms over `steps` on seeded quadratics.
pub fn nesterov_gap(seed: u64, cases: usize, steps: usize) -> Result<f64> {
    let mut rng = SplitMix64::child(seed, "nesterov");
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let spec = seeded_quadratic(&mut rng, 5, 0.01, 10.0);
        let w0: Vec<f64> = (0..5).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let alpha = rng.uniform(0.05, 0.9);
        let eta = rng.uniform(0.01, 0.09);
        worst = worst.max(nesterov_forms_trace(&spec, &w0, alpha, eta, steps)?.max_gap);
    }
    Ok(worst)
}

/// AdEMAMix residuals on scalar quadratics over `t ∈ [0, 10]`:
/// (third-order identity, κ = 0 second-order identity).
pub fn ademamix_residuals(seed: u64, cases: usize) -> Result<(f64, f64)> {
    let mut rng = SplitMix64::child(seed, "ademamix");
    let base = AdemamixFlow {
        alpha1: 0.1,
        alpha2: 1e-3,
        kappa: 2.0,
        eta: 1.0,
    };
    let mut flows = vec![(QuadraticSpec::centered(vec![1.0])?, base, 1.0)];
    for _ in 0..cases.saturating_sub(1) {
        let spec = QuadraticSpec::new(vec![rng.uniform(0.1, 2.0)], vec![rng.uniform(-1.0, 1.0)])?;
        let flow = AdemamixFlow {
            alpha1: rng.uniform(0.05, 0.5),
            alpha2: rng.uniform(1e-4, 1e-2),
            kappa: rng.uniform(0.0, 5.0),
            eta: rng.uniform(0.1, 1.0),
        };
        flows.push((spec, flow, rng.uniform(-1.0, 1.0)));
    }
    let mut third: f64 = 0.0;
    let mut second: f64 = 0.0;
    for (spec, flow, w0) in flows {
        third = third.max(ademamix_ode_residual(&spec, &flow, &[w0], 10.0, 1e-3)?.max_residual);
        let reduced = AdemamixFlow { kappa: 0.0, ..flow };
        let r = ademamix_ode_residual(&spec, &reduced, &[w0], 10.0, 1e-3)?;
        second = second.max(r.second_order_residual.unwrap_or(f64::NAN));
    }
    Ok((third, second))
}

/// Gap between the inertial-form acceleration and a central difference of the
/// first-order velocity along an RK4 trajectory with a decaying step size.
pub fn ishd_gap() -> Result<f64> {
    let q = QuadraticLandscape::new(QuadraticSpec::new(vec![2.0, 0.3], vec![0.5, -0.2])?);
    let (alpha, beta) = (0.4, 0.6);
    let eta = |t: f64| 0.8 / (1.0 + 0.1 * t);
    let eta_dot = |t: f64| -0.08 / (1.0 + 0.1 * t).powi(2);
    let p = FlowParams::constant(alpha, beta, 0.0).with_eta_fn(eta);
    let h = 1e-3;
    let mut s = DynamicsState::new(vec![1.0, -1.0], vec![0.2, 0.1], 0.0)?;
    let mut traj = vec![s.clone()];
    for _ in 0..3000 {
        s = rk4_step(&s, h, |x| first_order_rhs(x, &q, &p));
        traj.push(s.clone());
    }
    let vel = |x: &DynamicsState<f64>| first_order_rhs(x, &q, &p).0;
    let mut worst: f64 = 0.0;
    for k in (100..2900).step_by(100) {
        let (vp, vm, v) = (vel(&traj[k + 1]), vel(&traj[k - 1]), vel(&traj[k]));
        let t = traj[k].t;
        let (at, bt, gt) = ishd_coefficients(alpha, beta, eta(t), eta_dot(t));
        let acc = ishd_acceleration(&traj[k].w, &v, &q, at, bt, gt);
        for i in 0..2 {
            worst = worst.max((acc[i] - (vp[i] - vm[i]) / (2.0 * h)).abs());
        }
    }
    Ok(worst)
}

/// Everything `lite dynamics-check` reports.
pub fn dynamics_checks(seed: u64) -> Result<Vec<CheckResult>> {
    let (third, second) = ademamix_residuals(seed, 10)?;
    Ok(vec![
        CheckResult::at_most("semi_implicit_unit_step_gap", unit_step_gap(seed, 10, 100)?, 0.0),
        CheckResult {
            name: "semi_implicit_order",
            value: semi_implicit_order()?,
            lower: 0.8,
            upper: 1.2,
        },
        CheckResult::at_most("nesterov_form_gap", nesterov_gap(seed, 10, 100)?, 1e-10),
        CheckResult::at_most("ademamix_third_order_residual", third, 1e-8),
        CheckResult::at_most("ademamix_second_order_residual", second, 1e-8),
        CheckResult::at_most("inertial_form_gap", ishd_gap()?, 1e-5),
    ])
}
