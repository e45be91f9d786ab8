use crate::error::{GeometryError, Result};
use crate::manifold::Coords;
use crate::manifold::{Manifold, ManifoldPoint, SpaceTag, TangentVec};
use crate::scalar::{cross, norm, Real};

/// Which closed geodesic (or reference loop) to compare against.
#[derive(Clone, Debug, PartialEq)]
pub enum OracleSelector<T> {
    /// Torus lattice class: the straight loop with displacement `class * periods`.
    TorusClass(Vec<i64>),
    /// Great circle of the sphere orthogonal to `normal`.
    GreatCircle { normal: [T; 3] },
    /// Image in RP^2 of the great circle orthogonal to `normal`.
    ProjectedGreatCircle { normal: [T; 3] },
    /// Neck parallel of a surface of revolution.
    Neck,
    /// Core circle `y = 0` of the Möbius band.
    MobiusCore,
    /// Round circle in `R^d` (a reference loop, not a geodesic).
    Circle {
        center: Vec<T>,
        radius: T,
        e1: Vec<T>,
        e2: Vec<T>,
    },
}

/// Closed-form description of an oracle curve `S^1 -> M`.
#[derive(Clone, Debug, PartialEq)]
pub enum OracleCurve<T> {
    /// `s -> origin + s * velocity`, reduced into the quotient.
    FlatLine {
        origin: Coords<T>,
        velocity: Coords<T>,
    },
    /// `s -> cos(2 pi turns s) e1 + sin(2 pi turns s) e2` on the unit sphere.
    GreatCircle { e1: [T; 3], e2: [T; 3], turns: T },
    /// `s -> (z, phase + 2 pi direction s)` on a surface of revolution.
    Parallel { z: T, phase: T, direction: T },
    /// `s -> center + radius (cos(2 pi s) e1 + sin(2 pi s) e2)` in `R^d`.
    Circle {
        center: Coords<T>,
        e1: Coords<T>,
        e2: Coords<T>,
        radius: T,
    },
}

/// Constant-speed closed curve with known length, used as the convergence
/// target.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedGeodesicOracle<T> {
    tag: SpaceTag,
    family: OracleSelector<T>,
    curve: OracleCurve<T>,
    length: T,
}

impl<T: Real> ClosedGeodesicOracle<T> {
    pub(crate) fn new(
        tag: SpaceTag,
        family: OracleSelector<T>,
        curve: OracleCurve<T>,
        length: T,
    ) -> Self {
        ClosedGeodesicOracle {
            tag,
            family,
            curve,
            length,
        }
    }

    pub fn tag(&self) -> SpaceTag {
        self.tag
    }

    pub fn family(&self) -> &OracleSelector<T> {
        &self.family
    }

    pub fn curve(&self) -> &OracleCurve<T> {
        &self.curve
    }

    pub fn length(&self) -> T {
        self.length
    }

    /// Same family member with a different curve description.
    pub fn with_curve(&self, curve: OracleCurve<T>) -> Self {
        ClosedGeodesicOracle {
            curve,
            ..self.clone()
        }
    }

    fn check_space<M: Manifold<T> + ?Sized>(&self, space: &M) -> Result<()> {
        if space.tag() != self.tag {
            return Err(GeometryError::Usage(
                "oracle used with a different space".into(),
            ));
        }
        Ok(())
    }

    /// Point at parameter `s` (taken mod 1).
    pub fn eval<M: Manifold<T> + ?Sized>(&self, space: &M, s: T) -> Result<ManifoldPoint<T>> {
        self.check_space(space)?;
        let s = s - s.floor();
        match &self.curve {
            OracleCurve::FlatLine { origin, velocity } => {
                let raw: Coords<T> = origin
                    .iter()
                    .zip(velocity)
                    .map(|(&o, &v)| o + s * v)
                    .collect();
                space.point(&raw)
            }
            OracleCurve::GreatCircle { e1, e2, turns } => {
                let (sn, cs) = (T::TAU() * *turns * s).sin_cos();
                let raw: Coords<T> = (0..3).map(|i| cs * e1[i] + sn * e2[i]).collect();
                space.point(&raw)
            }
            OracleCurve::Parallel {
                z,
                phase,
                direction,
            } => space.point(&[*z, *phase + *direction * T::TAU() * s]),
            OracleCurve::Circle {
                center,
                e1,
                e2,
                radius,
            } => {
                let (sn, cs) = (T::TAU() * s).sin_cos();
                let raw: Coords<T> = (0..center.len())
                    .map(|i| center[i] + *radius * (cs * e1[i] + sn * e2[i]))
                    .collect();
                space.point(&raw)
            }
        }
    }

    /// Unit normal to the curve at parameter `s`, tangent to the space.
    pub fn normal_at<M: Manifold<T> + ?Sized>(&self, space: &M, s: T) -> Result<TangentVec<T>> {
        let p = self.eval(space, s)?;
        let comps: Coords<T> = match &self.curve {
            OracleCurve::FlatLine { origin, velocity } => {
                if velocity.len() != 2 {
                    return Err(GeometryError::Usage(
                        "normals are only defined for planar quotients".into(),
                    ));
                }
                let n = norm(velocity);
                // Read the normal in the chart of the stored representative.
                let s = s - s.floor();
                let raw: Coords<T> = origin
                    .iter()
                    .zip(velocity)
                    .map(|(&o, &v)| o + s * v)
                    .collect();
                let (_, signs) = space.project(&raw)?;
                [-velocity[1] / n * signs[0], velocity[0] / n * signs[1]]
                    .into_iter()
                    .collect()
            }
            OracleCurve::GreatCircle { e1, e2, .. } => cross(e1, e2).into_iter().collect(),
            OracleCurve::Parallel { .. } => {
                let frame = space.orthonormal_frame(&p);
                frame[0].clone()
            }
            OracleCurve::Circle { e1, e2, center, .. } => {
                let (sn, cs) = (T::TAU() * (s - s.floor())).sin_cos();
                (0..center.len()).map(|i| cs * e1[i] + sn * e2[i]).collect()
            }
        };
        space.tangent(&p, &comps)
    }

    /// Distance from `p` to the image of the curve. Uses the space's closed
    /// form when available, otherwise dense sampling with golden-section
    /// refinement.
    pub fn image_distance<M: Manifold<T> + ?Sized>(
        &self,
        space: &M,
        p: &ManifoldPoint<T>,
    ) -> Result<T> {
        self.check_space(space)?;
        if let Some(d) = space.image_distance(&self.curve, p) {
            return d;
        }
        let n = 1024;
        let f = |s: T| -> Result<T> { space.dist(p, &self.eval(space, s)?) };
        let mut best = (T::zero(), T::infinity());
        for k in 0..n {
            let s = T::of_usize(k) / T::of_usize(n);
            let d = f(s)?;
            if d < best.1 {
                best = (s, d);
            }
        }
        let h = T::one() / T::of_usize(n);
        let (_, d) = golden_min(f, best.0 - h, best.0 + h, T::lit(1e-10))?;
        Ok(d.min(best.1))
    }
}

/// Golden-section minimization of `f` on `[a, b]` to bracket width `tol`.
pub(crate) fn golden_min<T: Real>(
    mut f: impl FnMut(T) -> Result<T>,
    mut a: T,
    mut b: T,
    tol: T,
) -> Result<(T, T)> {
    let invphi = T::lit(0.618_033_988_749_894_8);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut guard = 0;
    while (b - a).abs() > tol && guard < 200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d)?;
        }
        guard += 1;
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// Looks up the oracle described by `selector` on `space`.
pub fn oracle_geodesics<T: Real, M: Manifold<T> + ?Sized>(
    space: &M,
    selector: &OracleSelector<T>,
) -> Result<ClosedGeodesicOracle<T>> {
    space.closed_geodesic(selector)
}

/// Completes `normal` to a right-handed orthonormal frame `(e1, e2, n)`.
pub(crate) fn plane_frame<T: Real>(normal: &[T; 3]) -> Result<([T; 3], [T; 3])> {
    let nn = norm(normal);
    if !(nn > T::zero()) || !nn.is_finite() {
        return Err(GeometryError::Usage(
            "great-circle normal must be nonzero".into(),
        ));
    }
    let n = [normal[0] / nn, normal[1] / nn, normal[2] / nn];
    let axis = (0..3)
        .min_by(|&i, &j| n[i].abs().partial_cmp(&n[j].abs()).unwrap())
        .unwrap();
    let mut a = [T::zero(); 3];
    a[axis] = T::one();
    let k = a[0] * n[0] + a[1] * n[1] + a[2] * n[2];
    let e1 = [a[0] - k * n[0], a[1] - k * n[1], a[2] - k * n[2]];
    let m = norm(&e1);
    let e1 = [e1[0] / m, e1[1] / m, e1[2] / m];
    let e2 = cross(&n, &e1);
    Ok((e1, e2))
}
