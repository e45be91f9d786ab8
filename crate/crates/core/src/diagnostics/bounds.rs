use crate::engine::{loop_metrics, PursuitLoop};
use crate::error::{GeometryError, Result};
use crate::scalar::Real;
use crate::spaces::Euclidean;

/// Upper bounds on the Euclidean capture time of `n` bugs with initial loop
/// length `l0`, and the exact time for a regular polygon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiniteTimeBounds<T> {
    pub coarse: T,
    pub refined: T,
    pub exact_ngon: T,
}

pub fn finite_time_bounds<T: Real>(n: usize, l0: T) -> Result<FiniteTimeBounds<T>> {
    if n < 2 || !(l0 > T::zero()) {
        return Err(GeometryError::Usage(format!(
            "bounds need n >= 2 and l0 > 0, got n = {n}, l0 = {l0}"
        )));
    }
    let nn = T::of_usize(n);
    let gap = T::one() - (T::TAU() / nn).cos();
    Ok(FiniteTimeBounds {
        coarse: l0 / gap,
        refined: l0 / T::one().min(nn * gap),
        exact_ngon: l0 / (nn * gap),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BorsukReport<T> {
    pub angle_sum: T,
    pub holds: bool,
}

/// Exterior-angle sum of a piecewise-linear loop against `2 pi`.
pub fn borsuk_check<T: Real>(space: &Euclidean<T>, lp: &PursuitLoop<T>) -> Result<BorsukReport<T>> {
    if lp.segments().len() < 3 {
        return Err(GeometryError::Usage(
            "exterior-angle bound needs at least three distinct vertices".into(),
        ));
    }
    let m = loop_metrics(space, lp)?;
    Ok(BorsukReport {
        angle_sum: m.angle_sum,
        holds: m.angle_sum >= T::TAU() - T::lit(1e-9),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Manifold;
    use approx::assert_relative_eq;

    #[test]
    fn polygon_capture_times() {
        let b = finite_time_bounds(3, 3.0).unwrap();
        assert_relative_eq!(b.exact_ngon, 2.0 / 3.0, epsilon = 1e-14);
        let b = finite_time_bounds(4, 4.0).unwrap();
        assert_relative_eq!(b.exact_ngon, 1.0, epsilon = 1e-14);
        let b = finite_time_bounds(2, 2.0_f64).unwrap();
        assert_relative_eq!(b.exact_ngon, 0.5, epsilon = 1e-14);
        assert_relative_eq!(b.refined, 2.0, epsilon = 1e-14);
        assert_relative_eq!(b.coarse, 1.0, epsilon = 1e-14);
        assert!(finite_time_bounds(1, 1.0_f64).is_err());
    }

    #[test]
    fn planar_polygons_reach_two_pi() {
        let e = Euclidean::<f64>::new(2).unwrap();
        for n in [3, 6] {
            let pts: Vec<_> = (0..n)
                .map(|k| {
                    let a = std::f64::consts::TAU * k as f64 / n as f64;
                    e.point(&[a.cos(), a.sin()]).unwrap()
                })
                .collect();
            let r = borsuk_check(&e, &PursuitLoop::through(&e, &pts).unwrap()).unwrap();
            assert!(r.holds);
            assert_relative_eq!(r.angle_sum, std::f64::consts::TAU, epsilon = 1e-12);
        }
        let pts: Vec<_> = [[0.0, 0.0], [1.0, 0.0]]
            .iter()
            .map(|c| e.point(c).unwrap())
            .collect();
        assert!(borsuk_check(&e, &PursuitLoop::through(&e, &pts).unwrap()).is_err());
    }
}
