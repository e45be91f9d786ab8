use crate::error::{GeometryError, Result};
use crate::manifold::{
    check_finite, check_owned, Coords, GeodesicSegment, Manifold, ManifoldPoint, SpaceCapabilities,
    SpaceFlags, SpaceKind, SpaceTag, TangentVec,
};
use crate::scalar::{dot, norm, Real};
use crate::spaces::{ClosedGeodesicOracle, OracleCurve, OracleSelector};

/// Flat `R^d` in Cartesian coordinates.
#[derive(Clone, Debug)]
pub struct Euclidean<T> {
    dim: usize,
    tag: SpaceTag,
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Real> Euclidean<T> {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(GeometryError::Usage("dimension must be positive".into()));
        }
        Ok(Euclidean {
            dim,
            tag: SpaceTag::fresh(SpaceKind::Euclidean),
            _scalar: std::marker::PhantomData,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_len(&self, coords: &[T]) -> Result<()> {
        if coords.len() != self.dim {
            return Err(GeometryError::Usage(format!(
                "expected {} coordinates, got {}",
                self.dim,
                coords.len()
            )));
        }
        Ok(())
    }
}

impl<T: Real> Manifold<T> for Euclidean<T> {
    fn tag(&self) -> SpaceTag {
        self.tag
    }

    fn capabilities(&self) -> SpaceCapabilities<T> {
        SpaceCapabilities {
            dim: self.dim,
            injectivity_radius: T::infinity(),
            flags: SpaceFlags {
                closed_form_geodesics: true,
                quotient: false,
                boundary: false,
            },
        }
    }

    fn coord_dim(&self) -> usize {
        self.dim
    }

    fn point(&self, coords: &[T]) -> Result<ManifoldPoint<T>> {
        self.check_len(coords)?;
        check_finite(coords)?;
        Ok(ManifoldPoint::from_canonical(self.tag, coords.into()))
    }

    fn project(&self, raw: &[T]) -> Result<(ManifoldPoint<T>, Coords<T>)> {
        let p = self.point(raw)?;
        Ok((p, std::iter::repeat_n(T::one(), self.dim).collect()))
    }

    fn inner(&self, _base: &ManifoldPoint<T>, u: &[T], v: &[T]) -> T {
        dot(u, v)
    }

    fn dist(&self, p: &ManifoldPoint<T>, q: &ManifoldPoint<T>) -> Result<T> {
        check_owned(self.tag, &[p, q])?;
        Ok(p.coords()
            .iter()
            .zip(q.coords())
            .map(|(&a, &b)| (b - a) * (b - a))
            .sum::<T>()
            .sqrt())
    }

    fn log(&self, p: &ManifoldPoint<T>, q: &ManifoldPoint<T>) -> Result<TangentVec<T>> {
        check_owned(self.tag, &[p, q])?;
        let d: Coords<T> = p
            .coords()
            .iter()
            .zip(q.coords())
            .map(|(&a, &b)| b - a)
            .collect();
        if d.iter().all(|c| c.is_zero()) {
            return Err(GeometryError::DegenerateLog);
        }
        Ok(TangentVec::from_parts(p.clone(), d))
    }

    fn exp(&self, v: &TangentVec<T>) -> Result<ManifoldPoint<T>> {
        check_owned(self.tag, &[v.base()])?;
        let c: Coords<T> = v
            .base()
            .coords()
            .iter()
            .zip(v.components())
            .map(|(&a, &b)| a + b)
            .collect();
        self.point(&c)
    }

    fn end_tangent(&self, seg: &GeodesicSegment<T>) -> Result<TangentVec<T>> {
        if seg.length().is_zero() {
            return Err(GeometryError::Degenerate("zero-length segment"));
        }
        Ok(TangentVec::from_parts(
            seg.end().clone(),
            seg.initial_tangent().components().into(),
        ))
    }

    /// `R^d` has no closed geodesics; only reference circles are offered.
    fn closed_geodesic(&self, selector: &OracleSelector<T>) -> Result<ClosedGeodesicOracle<T>> {
        match selector {
            OracleSelector::Circle {
                center,
                radius,
                e1,
                e2,
            } => {
                if center.len() != self.dim || e1.len() != self.dim || e2.len() != self.dim {
                    return Err(GeometryError::Usage("circle dimension mismatch".into()));
                }
                if !(*radius > T::zero()) {
                    return Err(GeometryError::Usage(
                        "circle radius must be positive".into(),
                    ));
                }
                let n1 = norm(e1);
                let u1: Coords<T> = e1.iter().map(|&c| c / n1).collect();
                let k = dot(e2, &u1);
                let w: Coords<T> = e2.iter().zip(&u1).map(|(&a, &b)| a - k * b).collect();
                let n2 = norm(&w);
                if !(n1 > T::zero() && n2 > T::zero()) {
                    return Err(GeometryError::Usage("circle frame is degenerate".into()));
                }
                let u2 = w.iter().map(|&c| c / n2).collect();
                Ok(ClosedGeodesicOracle::new(
                    self.tag,
                    selector.clone(),
                    OracleCurve::Circle {
                        center: center.iter().copied().collect(),
                        e1: u1,
                        e2: u2,
                        radius: *radius,
                    },
                    T::TAU() * *radius,
                ))
            }
            _ => Err(GeometryError::Usage(
                "euclidean space has no closed geodesics".into(),
            )),
        }
    }

    fn image_distance(&self, curve: &OracleCurve<T>, p: &ManifoldPoint<T>) -> Option<Result<T>> {
        let OracleCurve::Circle {
            center,
            e1,
            e2,
            radius,
        } = curve
        else {
            return None;
        };
        if let Err(e) = check_owned(self.tag, &[p]) {
            return Some(Err(e));
        }
        let w: Coords<T> = p
            .coords()
            .iter()
            .zip(center)
            .map(|(&a, &b)| a - b)
            .collect();
        let (a, b) = (dot(&w, e1), dot(&w, e2));
        let perp: Coords<T> = (0..self.dim)
            .map(|i| w[i] - a * e1[i] - b * e2[i])
            .collect();
        Some(Ok(((a * a + b * b).sqrt() - *radius).hypot(norm(&perp))))
    }

    fn orthonormal_frame(&self, _p: &ManifoldPoint<T>) -> Vec<Coords<T>> {
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| if i == j { T::one() } else { T::zero() })
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pythagoras() {
        let e = Euclidean::<f64>::new(2).unwrap();
        let p = e.point(&[0.0, 0.0]).unwrap();
        let q = e.point(&[3.0, 4.0]).unwrap();
        assert_eq!(e.dist(&p, &q).unwrap(), 5.0);
        assert_eq!(e.log(&p, &q).unwrap().components(), &[3.0, 4.0]);
        assert_eq!(e.log(&p, &p), Err(GeometryError::DegenerateLog));
    }

    #[test]
    fn exp_translates() {
        let e = Euclidean::<f64>::new(2).unwrap();
        let p = e.point(&[1.0, 1.0]).unwrap();
        let v = e.tangent(&p, &[2.0, 0.0]).unwrap();
        assert_eq!(e.exp(&v).unwrap().coords(), &[3.0, 1.0]);
        let zero = e.tangent(&p, &[0.0, 0.0]).unwrap();
        assert_eq!(e.exp(&zero).unwrap(), p);
    }

    #[test]
    fn rejects_non_finite_and_foreign_points() {
        let e = Euclidean::<f64>::new(2).unwrap();
        assert!(matches!(
            e.point(&[f64::NAN, 0.0]),
            Err(GeometryError::NonFinite(_))
        ));
        let other = Euclidean::<f64>::new(2).unwrap();
        let p = e.point(&[0.0, 0.0]).unwrap();
        let q = other.point(&[1.0, 0.0]).unwrap();
        assert!(matches!(e.dist(&p, &q), Err(GeometryError::Usage(_))));
    }

    #[test]
    fn segment_midpoint_and_end_tangent() {
        let e = Euclidean::<f64>::new(2).unwrap();
        let p = e.point(&[0.0, 0.0]).unwrap();
        let seg = e.segment(&p, &e.point(&[2.0, 0.0]).unwrap()).unwrap();
        assert_eq!(e.geodesic_eval(&seg, 0.5).unwrap().coords(), &[1.0, 0.0]);
        assert_eq!(e.geodesic_eval(&seg, 1.0).unwrap(), *seg.end());
        assert!(e.geodesic_eval(&seg, 1.5).is_err());

        let seg = e.segment(&p, &e.point(&[3.0, 4.0]).unwrap()).unwrap();
        let t = e.end_tangent(&seg).unwrap();
        assert_eq!(t.components(), &[3.0, 4.0]);
        assert_eq!(t.base().coords(), &[3.0, 4.0]);
    }

    #[test]
    fn angles() {
        use std::f64::consts::PI;
        let e = Euclidean::<f64>::new(2).unwrap();
        let p = e.point(&[0.0, 0.0]).unwrap();
        let u = e.tangent(&p, &[1.0, 0.0]).unwrap();
        let v = e.tangent(&p, &[0.0, 1.0]).unwrap();
        let w = e.tangent(&p, &[-1.0, 0.0]).unwrap();
        assert!((e.angle(&u, &v).unwrap() - PI / 2.0).abs() < 1e-15);
        assert_eq!(e.angle(&u, &u).unwrap(), 0.0);
        assert!((e.angle(&u, &w).unwrap() - PI).abs() < 1e-15);
        let zero = e.tangent(&p, &[0.0, 0.0]).unwrap();
        assert!(e.angle(&u, &zero).is_err());
        let elsewhere = e
            .tangent(&e.point(&[1.0, 0.0]).unwrap(), &[1.0, 0.0])
            .unwrap();
        assert!(matches!(
            e.angle(&u, &elsewhere),
            Err(GeometryError::Usage(_))
        ));
    }
}
