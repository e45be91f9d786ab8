use crate::engine::TrajectoryRecord;
use crate::error::{GeometryError, Result};
use crate::manifold::{Manifold, ManifoldPoint};
use crate::scalar::Real;
use crate::spaces::ClosedGeodesicOracle;

#[derive(Clone, Debug, PartialEq)]
pub enum TrapRegion<T> {
    /// Closed metric ball.
    Ball { center: ManifoldPoint<T>, radius: T },
    /// Closed tube of the given radius around an oracle curve.
    Tube {
        oracle: ClosedGeodesicOracle<T>,
        radius: T,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrapReport<T> {
    /// First recorded time with every bug inside the region.
    pub entered_at: Option<T>,
    /// First later time some bug is outside by more than the slack.
    pub first_violation: Option<T>,
    /// Largest `distance - radius` seen after entry.
    pub max_excursion: T,
}

impl<T: Real> TrapReport<T> {
    pub fn trapped(&self) -> bool {
        self.entered_at.is_some() && self.first_violation.is_none()
    }
}

const SLACK: f64 = 1e-6;

type DepthFn<'a, T> = Box<dyn Fn(&ManifoldPoint<T>) -> Result<T> + 'a>;

/// Scans the recorded states for the first time all bugs lie in `region`
/// and flags any later exit. Balls must be smaller than half the
/// injectivity radius so that they are geodesically convex.
pub fn convex_trap_check<T: Real, M: Manifold<T> + ?Sized>(
    space: &M,
    record: &TrajectoryRecord<T>,
    region: &TrapRegion<T>,
) -> Result<TrapReport<T>> {
    let (radius, depth): (T, DepthFn<'_, T>) = match region {
        TrapRegion::Ball { center, radius } => {
            let limit = space.capabilities().injectivity_radius * T::half();
            if !(*radius > T::zero() && *radius < limit) {
                return Err(GeometryError::Usage(format!(
                    "ball radius {radius} must lie in (0, {limit})"
                )));
            }
            (*radius, Box::new(move |p| space.dist(center, p)))
        }
        TrapRegion::Tube { oracle, radius } => {
            if !(*radius > T::zero()) {
                return Err(GeometryError::Usage("tube radius must be positive".into()));
            }
            (*radius, Box::new(move |p| oracle.image_distance(space, p)))
        }
    };
    let slack = T::lit(SLACK);
    let mut report = TrapReport {
        entered_at: None,
        first_violation: None,
        max_excursion: T::neg_infinity(),
    };
    for sample in &record.samples {
        let worst = sample
            .state
            .positions()
            .iter()
            .map(&depth)
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(T::neg_infinity(), T::max);
        let excess = worst - radius;
        match report.entered_at {
            None => {
                if excess <= T::zero() {
                    report.entered_at = Some(sample.t());
                    report.max_excursion = excess;
                }
            }
            Some(_) => {
                report.max_excursion = report.max_excursion.max(excess);
                if excess > slack && report.first_violation.is_none() {
                    report.first_violation = Some(sample.t());
                }
            }
        }
    }
    Ok(report)
}
