//! Round sphere of radius `r` and its antipodal quotient RP^2, both stored as
//! unit 3-vectors. Tangent components are ambient vectors on the radius-`r`
//! embedding, so their metric norm is the Euclidean norm.

use crate::error::{GeometryError, Result};
use crate::manifold::{
    check_finite, check_owned, Coords, GeodesicSegment, Manifold, ManifoldPoint, SpaceCapabilities,
    SpaceFlags, SpaceKind, SpaceTag, TangentVec, Tolerances,
};
use crate::scalar::{cross, dot, norm, Real};
use crate::spaces::{plane_frame, ClosedGeodesicOracle, OracleCurve, OracleSelector};

#[derive(Clone, Debug)]
pub struct SphereLike<T> {
    tag: SpaceTag,
    radius: T,
    antipodal_quotient: bool,
    tol: Tolerances<T>,
}

impl<T: Real> SphereLike<T> {
    pub fn sphere(radius: T) -> Result<Self> {
        Self::build(radius, false)
    }

    pub fn projective_plane(radius: T) -> Result<Self> {
        Self::build(radius, true)
    }

    fn build(radius: T, antipodal_quotient: bool) -> Result<Self> {
        if !(radius > T::zero() && radius.is_finite()) {
            return Err(GeometryError::Usage("radius must be positive".into()));
        }
        let kind = if antipodal_quotient {
            SpaceKind::ProjectivePlane
        } else {
            SpaceKind::Sphere
        };
        Ok(SphereLike {
            tag: SpaceTag::fresh(kind),
            radius,
            antipodal_quotient,
            tol: Tolerances::default(),
        })
    }

    pub fn with_tolerances(mut self, tol: Tolerances<T>) -> Self {
        self.tol = tol;
        self
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn is_projective(&self) -> bool {
        self.antipodal_quotient
    }

    fn inj(&self) -> T {
        if self.antipodal_quotient {
            T::PI() * self.radius / T::two()
        } else {
            T::PI() * self.radius
        }
    }

    /// Canonical representative of `{x, -x}`: last nonzero coordinate positive.
    fn canonical_flip(x: &[T]) -> bool {
        for &c in x.iter().rev() {
            if c > T::zero() {
                return false;
            }
            if c < T::zero() {
                return true;
            }
        }
        false
    }

    fn normalize(&self, raw: &[T]) -> Result<([T; 3], T)> {
        if raw.len() != 3 {
            return Err(GeometryError::Usage(format!(
                "expected 3 ambient coordinates, got {}",
                raw.len()
            )));
        }
        check_finite(raw)?;
        let n = norm(raw);
        if n.is_zero() {
            return Err(GeometryError::Degenerate(
                "zero vector is not a point of the sphere",
            ));
        }
        let mut u = [raw[0] / n, raw[1] / n, raw[2] / n];
        let mut sign = T::one();
        if self.antipodal_quotient && Self::canonical_flip(&u) {
            u = [-u[0], -u[1], -u[2]];
            sign = -T::one();
        }
        Ok((u, sign))
    }

    /// Central angle between unit vectors, or between lines for RP^2.
    fn central_angle(&self, p: &[T], q: &[T]) -> T {
        let c = dot(p, q);
        let s = norm(&cross(p, q));
        if self.antipodal_quotient {
            s.atan2(c.abs())
        } else {
            s.atan2(c)
        }
    }

    fn point_from_unit(&self, u: [T; 3]) -> ManifoldPoint<T> {
        ManifoldPoint::from_canonical(self.tag, u.into_iter().collect())
    }
}

impl<T: Real> Manifold<T> for SphereLike<T> {
    fn tag(&self) -> SpaceTag {
        self.tag
    }

    fn capabilities(&self) -> SpaceCapabilities<T> {
        SpaceCapabilities {
            dim: 2,
            injectivity_radius: self.inj(),
            flags: SpaceFlags {
                closed_form_geodesics: true,
                quotient: self.antipodal_quotient,
                boundary: false,
            },
        }
    }

    fn coord_dim(&self) -> usize {
        3
    }

    fn tolerances(&self) -> Tolerances<T> {
        self.tol
    }

    fn point(&self, coords: &[T]) -> Result<ManifoldPoint<T>> {
        let (u, _) = self.normalize(coords)?;
        Ok(self.point_from_unit(u))
    }

    fn project(&self, raw: &[T]) -> Result<(ManifoldPoint<T>, Coords<T>)> {
        let (u, sign) = self.normalize(raw)?;
        Ok((self.point_from_unit(u), [sign; 3].into_iter().collect()))
    }

    fn inner(&self, _base: &ManifoldPoint<T>, u: &[T], v: &[T]) -> T {
        dot(u, v)
    }

    /// Drops the normal component so the result is tangent at `base`.
    fn tangent(&self, base: &ManifoldPoint<T>, components: &[T]) -> Result<TangentVec<T>> {
        check_owned(self.tag, &[base])?;
        if components.len() != 3 {
            return Err(GeometryError::Usage(
                "sphere tangents have 3 components".into(),
            ));
        }
        check_finite(components)?;
        let p = base.coords();
        let k = dot(components, p);
        let v = components.iter().zip(p).map(|(&c, &x)| c - k * x).collect();
        Ok(TangentVec::from_parts(base.clone(), v))
    }

    fn dist(&self, p: &ManifoldPoint<T>, q: &ManifoldPoint<T>) -> Result<T> {
        check_owned(self.tag, &[p, q])?;
        Ok(self.radius * self.central_angle(p.coords(), q.coords()))
    }

    fn log(&self, p: &ManifoldPoint<T>, q: &ManifoldPoint<T>) -> Result<TangentVec<T>> {
        check_owned(self.tag, &[p, q])?;
        let pc = p.coords();
        let mut qc: [T; 3] = [q.coords()[0], q.coords()[1], q.coords()[2]];
        if self.antipodal_quotient && dot(pc, &qc) < T::zero() {
            qc = [-qc[0], -qc[1], -qc[2]];
        }
        let c = dot(pc, &qc);
        let perp: [T; 3] = [qc[0] - c * pc[0], qc[1] - c * pc[1], qc[2] - c * pc[2]];
        let s = norm(&perp);
        let alpha = s.atan2(c);
        if alpha <= self.tol.point_eq {
            return Err(GeometryError::DegenerateLog);
        }
        let distance = self.radius * alpha;
        let inj = self.inj();
        if distance >= inj * (T::one() - self.tol.point_eq) || s <= self.tol.point_eq {
            return Err(GeometryError::OutOfInjectivity {
                distance: distance.as_f64(),
                injectivity_radius: inj.as_f64(),
            });
        }
        let k = distance / s;
        Ok(TangentVec::from_parts(
            p.clone(),
            perp.iter().map(|&x| x * k).collect(),
        ))
    }

    fn exp(&self, v: &TangentVec<T>) -> Result<ManifoldPoint<T>> {
        check_owned(self.tag, &[v.base()])?;
        let len = norm(v.components());
        if len.is_zero() {
            return Ok(v.base().clone());
        }
        let theta = len / self.radius;
        let p = v.base().coords();
        let (s, c) = theta.sin_cos();
        let raw: Coords<T> = p
            .iter()
            .zip(v.components())
            .map(|(&x, &e)| c * x + s * e / len)
            .collect();
        self.point(&raw)
    }

    fn end_tangent(&self, seg: &GeodesicSegment<T>) -> Result<TangentVec<T>> {
        let len = seg.length();
        if len.is_zero() {
            return Err(GeometryError::Degenerate("zero-length segment"));
        }
        let p = seg.start().coords();
        let e: Coords<T> = seg
            .initial_tangent()
            .components()
            .iter()
            .map(|&c| c / len)
            .collect();
        let alpha = len / self.radius;
        let (s, c) = alpha.sin_cos();
        // Endpoint of the lift; RP^2 may store its antipode.
        let lifted: [T; 3] = [
            c * p[0] + s * e[0],
            c * p[1] + s * e[1],
            c * p[2] + s * e[2],
        ];
        let (_, sign) = self.normalize(&lifted)?;
        let comps = p
            .iter()
            .zip(&e)
            .map(|(&x, &ei)| sign * len * (-s * x + c * ei))
            .collect();
        Ok(TangentVec::from_parts(seg.end().clone(), comps))
    }

    fn orthonormal_frame(&self, p: &ManifoldPoint<T>) -> Vec<Coords<T>> {
        let x = p.coords();
        let axis = (0..3)
            .min_by(|&i, &j| x[i].abs().partial_cmp(&x[j].abs()).unwrap())
            .unwrap();
        let mut a = [T::zero(); 3];
        a[axis] = T::one();
        let k = dot(&a, x);
        let e1: [T; 3] = [a[0] - k * x[0], a[1] - k * x[1], a[2] - k * x[2]];
        let n = norm(&e1);
        let e1 = [e1[0] / n, e1[1] / n, e1[2] / n];
        let e2 = cross(x, &e1);
        vec![e1.into_iter().collect(), e2.into_iter().collect()]
    }

    fn image_distance(&self, curve: &OracleCurve<T>, p: &ManifoldPoint<T>) -> Option<Result<T>> {
        match curve {
            OracleCurve::GreatCircle { e1, e2, .. } => {
                if let Err(e) = check_owned(self.tag, &[p]) {
                    return Some(Err(e));
                }
                let n = cross(e1, e2);
                let s = dot(&n, p.coords()).abs().min(T::one());
                Some(Ok(self.radius * s.asin()))
            }
            _ => None,
        }
    }

    fn closed_geodesic(&self, selector: &OracleSelector<T>) -> Result<ClosedGeodesicOracle<T>> {
        let (normal, turns) = match (self.antipodal_quotient, selector) {
            (false, OracleSelector::GreatCircle { normal }) => (normal, T::one()),
            (true, OracleSelector::ProjectedGreatCircle { normal }) => (normal, T::half()),
            _ => {
                return Err(GeometryError::Usage(format!(
                    "selector {selector:?} is not supported on {}",
                    self.tag.kind().name()
                )))
            }
        };
        let (e1, e2) = plane_frame(normal)?;
        Ok(ClosedGeodesicOracle::new(
            self.tag,
            selector.clone(),
            OracleCurve::GreatCircle { e1, e2, turns },
            T::TAU() * turns * self.radius,
        ))
    }

    fn shortest_closed_geodesic(&self) -> Option<T> {
        let full = T::TAU() * self.radius;
        Some(if self.antipodal_quotient {
            full / T::two()
        } else {
            full
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn pole_to_equator() {
        let s = SphereLike::<f64>::sphere(1.0).unwrap();
        let n = s.point(&[0.0, 0.0, 1.0]).unwrap();
        let e = s.point(&[1.0, 0.0, 0.0]).unwrap();
        assert!((s.dist(&n, &e).unwrap() - FRAC_PI_2).abs() < 1e-15);
        let v = s.log(&n, &e).unwrap();
        assert!((v.components()[0] - FRAC_PI_2).abs() < 1e-15);
        assert!(v.components()[1].abs() < 1e-15 && v.components()[2].abs() < 1e-15);
    }

    #[test]
    fn exp_to_antipode() {
        let s = SphereLike::<f64>::sphere(1.0).unwrap();
        let n = s.point(&[0.0, 0.0, 1.0]).unwrap();
        let v = s.tangent(&n, &[PI, 0.0, 0.0]).unwrap();
        let q = s.exp(&v).unwrap();
        assert!((q.coords()[2] + 1.0).abs() < 1e-15);
        assert!(q.coords()[0].abs() < 1e-15);
        assert!(matches!(
            s.log(&n, &q),
            Err(GeometryError::OutOfInjectivity { .. })
        ));
    }

    #[test]
    fn quarter_arc_end_tangent() {
        // d/ds [cos(s t) p + sin(s t) e] at s=1, t=pi/2: -t p
        let s = SphereLike::<f64>::sphere(1.0).unwrap();
        let seg = s
            .segment(
                &s.point(&[0.0, 0.0, 1.0]).unwrap(),
                &s.point(&[1.0, 0.0, 0.0]).unwrap(),
            )
            .unwrap();
        let t = s.end_tangent(&seg).unwrap();
        let c = t.components();
        assert!(c[0].abs() < 1e-15 && c[1].abs() < 1e-15);
        assert!((c[2] + FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn rp2_identifies_antipodes() {
        let rp = SphereLike::<f64>::projective_plane(1.0).unwrap();
        let a = rp.point(&[0.0, 0.0, 1.0]).unwrap();
        let b = rp.point(&[0.0, 0.0, -1.0]).unwrap();
        assert_eq!(a, b);
        assert_eq!(rp.log(&a, &b), Err(GeometryError::DegenerateLog));
    }

    #[test]
    fn rp2_picks_nearer_lift() {
        let rp = SphereLike::<f64>::projective_plane(1.0).unwrap();
        let p = rp.point(&[0.0, 0.0, 1.0]).unwrap();
        let q_raw = [1.6f64.sin(), 0.0, 1.6f64.cos()];
        let q = rp.point(&q_raw).unwrap();
        // Both lifts, compared directly.
        let ang = |x: [f64; 3]| x[2].clamp(-1.0, 1.0).acos();
        let neg = [-q_raw[0], -q_raw[1], -q_raw[2]];
        let expected = ang(q_raw).min(ang(neg));
        assert!((expected - (PI - 1.6)).abs() < 1e-12);
        let v = rp.log(&p, &q).unwrap();
        assert!((rp.norm(&v) - expected).abs() < 1e-12);
        assert!(v.components()[0] < 0.0);
        assert!((v.components()[0] / rp.norm(&v) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn tangent_projection_removes_normal_part() {
        let s = SphereLike::<f64>::sphere(2.0).unwrap();
        let p = s.point(&[1.0, 1.0, 1.0]).unwrap();
        let v = s.tangent(&p, &[1.0, 2.0, 3.0]).unwrap();
        assert!(dot(v.components(), p.coords()).abs() < 1e-10);
    }

    #[test]
    fn rp2_end_tangent_matches_stored_representative() {
        let rp = SphereLike::<f64>::projective_plane(1.0).unwrap();
        let p = rp.point(&[0.0, 0.3, 1.0]).unwrap();
        let v = rp.tangent(&p, &[0.0, 1.4, 0.0]).unwrap();
        let seg = rp.segment_from_tangent(&v).unwrap();
        let t = rp.end_tangent(&seg).unwrap();
        // Finite-difference velocity along the geodesic, read at the stored end.
        let h = 1e-6;
        let before = rp.geodesic_eval(&seg, 1.0 - h).unwrap();
        let end = seg.end().coords();
        let b = before.coords();
        let sign = if dot(b, end) < 0.0 { -1.0 } else { 1.0 };
        for i in 0..3 {
            let fd = (end[i] - sign * b[i]) / h;
            assert!(
                (fd - t.components()[i]).abs() < 1e-5,
                "{fd} vs {:?}",
                t.components()
            );
        }
    }
}
