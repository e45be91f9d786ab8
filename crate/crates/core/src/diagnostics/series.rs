use crate::engine::{PursuitLoop, TrajectoryRecord};
use crate::error::Result;
use crate::manifold::Manifold;
use crate::scalar::Real;
use crate::spaces::ClosedGeodesicOracle;

/// `(t, theta_max)` for every recorded sample.
pub fn theta_max_series<T: Real>(record: &TrajectoryRecord<T>) -> Vec<(T, T)> {
    record
        .samples
        .iter()
        .map(|s| (s.t(), s.theta_max))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateIdentityCheck<T> {
    pub max_residual: T,
    pub threshold: T,
    pub holds: bool,
}

/// Compares the finite-difference length rate with `sum (cos theta - 1)`
/// over every checked step; the tolerance is `1e-4 * n`.
pub fn rate_identity_check<T: Real>(record: &TrajectoryRecord<T>) -> RateIdentityCheck<T> {
    let threshold = T::lit(1e-4) * T::of_usize(record.n());
    RateIdentityCheck {
        max_residual: record.max_rate_residual,
        threshold,
        holds: record.max_rate_residual < threshold,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaMinCheck<T> {
    pub lambda_min: T,
    /// First recorded time with loop length below the shortest closed
    /// geodesic.
    pub first_below: Option<T>,
    pub collapsed: bool,
    pub holds: bool,
}

/// A loop shorter than every closed geodesic must collapse. `None` when the
/// space has no known shortest closed geodesic.
pub fn lambda_min_check<T: Real, M: Manifold<T> + ?Sized>(
    space: &M,
    record: &TrajectoryRecord<T>,
) -> Option<LambdaMinCheck<T>> {
    let lambda_min = space.shortest_closed_geodesic()?;
    let cutoff = lambda_min * (T::one() - T::lit(1e-9));
    let first_below = record
        .samples
        .iter()
        .find(|s| s.length < cutoff)
        .map(|s| s.t());
    let collapsed = record.collapsed();
    Some(LambdaMinCheck {
        lambda_min,
        first_below,
        collapsed,
        holds: first_below.is_none() || collapsed,
    })
}

/// Largest increase of the sup distance to the oracle image between
/// consecutive samples recorded at or after `from`.
pub fn monotone_image_distance<T: Real, M: Manifold<T> + ?Sized>(
    space: &M,
    record: &TrajectoryRecord<T>,
    oracle: &ClosedGeodesicOracle<T>,
    from: T,
    grid: usize,
) -> Result<T> {
    let mut prev: Option<T> = None;
    let mut worst = T::neg_infinity();
    for s in record.samples.iter().filter(|s| s.t() >= from) {
        let lp = PursuitLoop::from_state(space, &s.state)?;
        let d = super::sup_dist_to_image(space, &lp, oracle, grid)?;
        if let Some(p) = prev {
            worst = worst.max(d - p);
        }
        prev = Some(d);
    }
    Ok(worst)
}
