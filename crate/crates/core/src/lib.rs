//! Cyclic pursuit of `n` bugs on Riemannian manifolds.
//!
//! Bug `i` moves at unit speed along the shortest geodesic toward bug
//! `i + 1 (mod n)`. The crate provides the geometry of a few model spaces,
//! an RK4 integrator with capture and merging, and diagnostics that decide
//! whether a run collapses to a point or settles on a closed geodesic.

// `!(x > a)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod engine;
mod error;
mod manifold;
mod scalar;
pub mod spaces;

pub use error::{GeometryError, Result};
pub use manifold::{
    Coords, GeodesicSegment, Manifold, ManifoldPoint, SpaceCapabilities, SpaceFlags, SpaceKind,
    SpaceTag, TangentVec, Tolerances,
};
pub use scalar::Real;

/// Library version, for provenance records.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type EuclideanSpace = spaces::Euclidean<f64>;
pub type Torus = spaces::FlatQuotient<f64>;
pub type Mobius = spaces::FlatQuotient<f64>;
pub type Sphere = spaces::SphereLike<f64>;
pub type ProjectivePlane = spaces::SphereLike<f64>;
pub type Dumbbell = spaces::Dumbbell<f64>;
pub type Point = ManifoldPoint<f64>;
pub type Tangent = TangentVec<f64>;
pub type State = engine::PursuitState<f64>;
pub type Loop = engine::PursuitLoop<f64>;
pub type Record = engine::TrajectoryRecord<f64>;
pub type Config = engine::IntegratorConfig<f64>;
