//! Measurements on loops and trajectories: capture-time bounds, exterior
//! angles, convergence to closed geodesics, homotopy classes, trapping
//! regions and the normal-coordinate angle comparison.

mod bounds;
mod chart;
mod convergence;
mod homotopy;
mod series;
mod trap;

pub use crate::engine::{loop_metrics, LoopMetrics};
pub use bounds::{borsuk_check, finite_time_bounds, BorsukReport, FiniteTimeBounds};
pub use chart::{angle_chart_comparison, normal_coordinates, AnglePair};
pub use convergence::{
    assess, conv_distance, fit_oracle, sup_dist_to_image, Assessment, ConvergenceOptions,
    ConvergenceReport, Verdict,
};
pub use homotopy::{lift_loop, torus_homotopy_class};
pub use series::{
    lambda_min_check, monotone_image_distance, rate_identity_check, theta_max_series,
    LambdaMinCheck, RateIdentityCheck,
};
pub use trap::{convex_trap_check, TrapRegion, TrapReport};
