//! Optimizer steppers, LITE variants, schedules and the block router.

mod config;
mod lite;
mod router;
mod schedule;
mod state;
mod steppers;

pub use config::{Family, LitePolicy, OptimizerConfig};
pub use lite::{
    elementwise_lite_direction, muon_lite_direction, step_adam_lite, step_muon_lite,
    step_soap_lite, LiteCoefficients,
};
pub use router::{route_and_step, step_block, stepper_for, StepReport, Stepper};
pub use schedule::{lr_at, ScheduleKind, ScheduleSpec};
pub use state::{clip_global_norm, BlockOptState, BlockRole, MatrixBlock, StepDiagnostics};
pub use steppers::{
    muon_scale, step_ademamix, step_adamw, step_lion, step_mars, step_muon, step_n_adamw,
    step_soap,
};
