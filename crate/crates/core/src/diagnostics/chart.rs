use crate::error::{GeometryError, Result};
use crate::manifold::{Coords, Manifold, ManifoldPoint, TangentVec};
use crate::scalar::{norm, Real};

/// Two geodesics `s -> exp(s u)` and `s -> exp(s v)`, `s` in `[0, 1]`,
/// leaving a common base point.
#[derive(Clone, Debug, PartialEq)]
pub struct AnglePair<T> {
    pub u: TangentVec<T>,
    pub v: TangentVec<T>,
}

/// Coordinates of `x` in the normal chart at `p`: the components of
/// `log_p(x)` in an orthonormal frame at `p`.
pub fn normal_coordinates<T: Real, M: Manifold<T> + ?Sized>(
    space: &M,
    p: &ManifoldPoint<T>,
    frame: &[Coords<T>],
    x: &ManifoldPoint<T>,
) -> Result<Coords<T>> {
    if space.same_point(p, x) {
        return Ok(frame.iter().map(|_| T::zero()).collect());
    }
    let v = space.log(p, x)?;
    Ok(frame
        .iter()
        .map(|e| space.inner(p, v.components(), e))
        .collect())
}

fn euclidean_angle<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    let (na, nb) = (norm(a), norm(b));
    if na.is_zero() || nb.is_zero() {
        return Err(GeometryError::Degenerate("zero chord in chart angle"));
    }
    let diff: Coords<T> = a.iter().zip(b).map(|(&x, &y)| x / na - y / nb).collect();
    let sum: Coords<T> = a.iter().zip(b).map(|(&x, &y)| x / na + y / nb).collect();
    Ok(T::two() * norm(&diff).atan2(norm(&sum)))
}

/// Largest gap between the metric angle of each pair and the Euclidean angle
/// between the chord vectors of the two geodesics in normal coordinates
/// centred at `center`. Every geodesic must stay inside the ball of the
/// given radius.
pub fn angle_chart_comparison<T: Real, M: Manifold<T> + ?Sized>(
    space: &M,
    center: &ManifoldPoint<T>,
    radius: T,
    pairs: &[AnglePair<T>],
) -> Result<T> {
    let frame = space.orthonormal_frame(center);
    let inside = |x: &ManifoldPoint<T>| -> Result<()> {
        let d = space.dist(center, x)?;
        if d > radius {
            return Err(GeometryError::Usage(format!(
                "geodesic leaves the ball of radius {radius} (distance {d})"
            )));
        }
        Ok(())
    };
    let mut worst = T::zero();
    for pair in pairs {
        let q = pair.u.base();
        inside(q)?;
        let metric = space.angle(&pair.u, &pair.v)?;
        let q0 = normal_coordinates(space, center, &frame, q)?;
        let mut chords = Vec::with_capacity(2);
        for w in [&pair.u, &pair.v] {
            let mid = space.exp(&w.scaled(T::half()))?;
            inside(&mid)?;
            let end = space.exp(w)?;
            inside(&end)?;
            let e = normal_coordinates(space, center, &frame, &end)?;
            chords.push(
                e.iter()
                    .zip(&q0)
                    .map(|(&a, &b)| a - b)
                    .collect::<Coords<T>>(),
            );
        }
        let chart = euclidean_angle(&chords[0], &chords[1])?;
        worst = worst.max((metric - chart).abs());
    }
    Ok(worst)
}
