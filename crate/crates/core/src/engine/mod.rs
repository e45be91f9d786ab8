mod integrate;
mod pursuit_loop;
mod record;
mod state;

pub use integrate::{
    run, step, velocity_field, IntegratorConfig, PursuitError, RunFailure, StepOutcome,
};
pub use pursuit_loop::{loop_metrics, LoopMetrics, PursuitLoop};
pub use record::{Event, EventKind, Sample, TrajectoryRecord};
pub use state::PursuitState;
