//! Numerical core for flat-direction accelerated optimizers.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! the common double-precision instantiations.

pub mod dynamics;
pub mod error;
pub mod landscapes;
pub mod linalg;
pub mod optim;
pub mod polar;
pub mod quadratic;
pub mod rng;
pub mod scalar;
pub mod subspace;

pub use dynamics::{
    ademamix_ode_residual, discrete_step, first_order_rhs, ishd_acceleration, ishd_coefficients, lite_flow_rhs,
    nesterov_forms_trace, semi_implicit_step, AdemamixFlow, DynamicsState, FlowParams, LiteFlowParams,
};
pub use error::{Error, Result};
pub use landscapes::{Landscape, MlpLandscape, MlpSpec, QuadraticLandscape, RiverValleyLandscape, Trainer};
pub use linalg::DenseMatrix;
pub use optim::{route_and_step, Family, OptimizerConfig, ScheduleSpec};
pub use polar::{composite_sharp_projection, ns_polar, NsSchedule, RankController, SharpProjection};
pub use quadratic::{
    characteristic_roots, recurrence_coeffs, regime_boundaries, regime_report, stability_bound, QuadraticSpec, Regime,
};
pub use rng::SplitMix64;
pub use scalar::Real;
pub use subspace::{coverage_score, smoothed_sharp_mask, SoapMaskController};

pub type Matrix = DenseMatrix<f64>;
pub type Matrix32 = DenseMatrix<f32>;
