use crate::engine::PursuitLoop;
use crate::error::{GeometryError, Result};
use crate::manifold::{Coords, Manifold, SpaceKind};
use crate::scalar::Real;
use crate::spaces::{FlatQuotient, QuotientKind};

/// Continuous lift of the loop's vertices into the chart of the base point,
/// closing with the lift of the base point again. On flat quotients this is
/// the covering plane; on `RP^2` the sphere.
pub fn lift_loop<T: Real, M: Manifold<T> + ?Sized>(
    space: &M,
    lp: &PursuitLoop<T>,
) -> Result<Vec<Coords<T>>> {
    let mut x: Coords<T> = lp.basepoint().coords().iter().copied().collect();
    let mut out = vec![x.clone()];
    match space.tag().kind() {
        SpaceKind::Sphere | SpaceKind::ProjectivePlane => {
            let vertices = lp.vertices();
            let k = vertices.len();
            for i in 1..=k {
                let v = vertices[i % k].coords();
                let s = if v.iter().zip(&x).map(|(&a, &b)| a * b).sum::<T>() < T::zero() {
                    -T::one()
                } else {
                    T::one()
                };
                x = v.iter().map(|&c| c * s).collect();
                out.push(x.clone());
            }
        }
        _ => {
            let (_, mut signs) = space.project(&x)?;
            for seg in lp.segments() {
                let d = seg.initial_tangent().components();
                x = x
                    .iter()
                    .zip(d)
                    .zip(&signs)
                    .map(|((&a, &b), &s)| a + s * b)
                    .collect();
                signs = space.project(&x)?.1;
                out.push(x.clone());
            }
        }
    }
    Ok(out)
}

/// Lattice class of a loop on a flat torus.
pub fn torus_homotopy_class<T: Real>(
    space: &FlatQuotient<T>,
    lp: &PursuitLoop<T>,
) -> Result<Vec<i64>> {
    let QuotientKind::Torus { periods } = space.kind() else {
        return Err(GeometryError::Usage(
            "homotopy class is defined on flat tori only".into(),
        ));
    };
    let lift = lift_loop(space, lp)?;
    let (first, last) = (&lift[0], &lift[lift.len() - 1]);
    periods
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let w = (last[j] - first[j]) / p;
            let k = w.round();
            if (w - k).abs() > T::lit(0.1) {
                return Err(GeometryError::Degenerate(
                    "loop lift does not close on the lattice",
                ));
            }
            Ok(k.to_i64().expect("finite winding"))
        })
        .collect()
}
