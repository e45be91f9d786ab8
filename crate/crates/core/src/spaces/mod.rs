//! Concrete manifolds and their catalogs of closed geodesics.

mod euclidean;
mod flat_quotient;
mod oracle;
mod revolution;
mod sphere;

pub use euclidean::Euclidean;
pub use flat_quotient::{DeckTransform, FlatQuotient, QuotientKind};
pub(crate) use oracle::{golden_min, plane_frame};
pub use oracle::{oracle_geodesics, ClosedGeodesicOracle, OracleCurve, OracleSelector};
pub use revolution::{
    Dumbbell, DumbbellProfile, GeodesicPath, PathSample, Profile, SurfaceOfRevolution,
};
pub use sphere::SphereLike;
