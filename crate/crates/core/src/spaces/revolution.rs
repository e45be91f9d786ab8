//! Surfaces of revolution `(z, phi) -> (r(z) cos phi, r(z) sin phi, z)` with
//! metric `ds^2 = (1 + r'^2) dz^2 + r^2 dphi^2`. Geodesics are integrated
//! with fixed-step RK4; the logarithm is found by Newton shooting.

use std::fmt::Debug;

use crate::error::{GeometryError, Result};
use crate::manifold::{
    check_finite, check_owned, to_f64s, Coords, GeodesicSegment, Manifold, ManifoldPoint,
    SpaceCapabilities, SpaceFlags, SpaceKind, SpaceTag, TangentVec, Tolerances,
};
use crate::scalar::{wrap_angle, Real};
use crate::spaces::{ClosedGeodesicOracle, OracleCurve, OracleSelector};

/// Smooth positive profile `r(z)` with two derivatives.
pub trait Profile<T: Real>: Debug + Clone + Send + Sync {
    /// `(r, r', r'')` at `z`.
    fn eval(&self, z: T) -> (T, T, T);

    /// Interior critical point with `r'' > 0`, if the profile has one.
    fn neck(&self) -> Option<T>;
}

/// `r(z) = base - depth * exp(-z^2)`: a single neck at `z = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DumbbellProfile<T> {
    pub base: T,
    pub depth: T,
}

impl<T: Real> Default for DumbbellProfile<T> {
    fn default() -> Self {
        DumbbellProfile {
            base: T::one(),
            depth: T::lit(0.6),
        }
    }
}

impl<T: Real> Profile<T> for DumbbellProfile<T> {
    #[inline]
    fn eval(&self, z: T) -> (T, T, T) {
        let g = (-z * z).exp();
        let r = self.base - self.depth * g;
        let r1 = T::two() * self.depth * z * g;
        let r2 = T::two() * self.depth * (T::one() - T::two() * z * z) * g;
        (r, r1, r2)
    }

    fn neck(&self) -> Option<T> {
        Some(T::zero())
    }
}

/// One sample along an integrated geodesic (unit-speed arc length `s`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathSample<T> {
    pub s: T,
    pub z: T,
    pub phi: T,
    pub dz: T,
    pub dphi: T,
}

#[derive(Clone, Debug, Default)]
pub struct GeodesicPath<T> {
    pub samples: Vec<PathSample<T>>,
}

#[derive(Clone, Debug)]
pub struct SurfaceOfRevolution<T, P> {
    tag: SpaceTag,
    profile: P,
    z_min: T,
    z_max: T,
    inj_lower_bound: T,
    tol: Tolerances<T>,
}

pub type Dumbbell<T> = SurfaceOfRevolution<T, DumbbellProfile<T>>;

impl<T: Real> Dumbbell<T> {
    /// The default dumbbell on `z in [-2, 2]`, neck radius 0.4.
    pub fn dumbbell() -> Self {
        SurfaceOfRevolution::new(DumbbellProfile::default(), -T::two(), T::two(), T::one())
            .expect("default dumbbell is valid")
    }
}

type State<T> = [T; 4];

impl<T: Real, P: Profile<T>> SurfaceOfRevolution<T, P> {
    pub fn new(profile: P, z_min: T, z_max: T, inj_lower_bound: T) -> Result<Self> {
        if !(z_min < z_max) || !(inj_lower_bound > T::zero()) {
            return Err(GeometryError::Usage(
                "need z_min < z_max and a positive injectivity bound".into(),
            ));
        }
        // Check positivity on a fine grid of the working interval.
        let n = 1000;
        for k in 0..=n {
            let z = z_min + (z_max - z_min) * T::of_usize(k) / T::of_usize(n);
            let (r, _, _) = profile.eval(z);
            if !(r > T::zero()) {
                return Err(GeometryError::Usage(format!(
                    "profile radius {r} is not positive at z = {z}"
                )));
            }
        }
        Ok(SurfaceOfRevolution {
            tag: SpaceTag::fresh(SpaceKind::SurfaceOfRevolution),
            profile,
            z_min,
            z_max,
            inj_lower_bound,
            tol: Tolerances::default(),
        })
    }

    pub fn with_tolerances(mut self, tol: Tolerances<T>) -> Self {
        self.tol = tol;
        self
    }

    pub fn profile(&self) -> &P {
        &self.profile
    }

    pub fn z_range(&self) -> (T, T) {
        (self.z_min, self.z_max)
    }

    /// Gaussian curvature `-r'' / (r (1 + r'^2)^2)`.
    pub fn gaussian_curvature(&self, z: T) -> T {
        let (r, r1, r2) = self.profile.eval(z);
        let e = T::one() + r1 * r1;
        -r2 / (r * e * e)
    }

    /// Clairaut quantity `r sin(psi)` for a velocity `(dz, dphi)` at height `z`.
    pub fn clairaut(&self, z: T, dz: T, dphi: T) -> T {
        let (r, r1, _) = self.profile.eval(z);
        let speed = ((T::one() + r1 * r1) * dz * dz + r * r * dphi * dphi).sqrt();
        r * r * dphi / speed
    }

    /// Meridian arc length between heights `a` and `b` (composite Simpson).
    pub fn meridian_length(&self, a: T, b: T) -> T {
        let n = 64;
        let h = (b - a) / T::of_usize(n);
        let f = |z: T| {
            let (_, r1, _) = self.profile.eval(z);
            (T::one() + r1 * r1).sqrt()
        };
        let mut acc = f(a) + f(b);
        for k in 1..n {
            let w = if k % 2 == 1 { T::lit(4.0) } else { T::two() };
            acc += w * f(a + h * T::of_usize(k));
        }
        (acc * h / T::lit(3.0)).abs()
    }

    fn neck_radius(&self, fallback_z: T) -> T {
        let z = self.profile.neck().unwrap_or(fallback_z);
        self.profile.eval(z).0
    }

    fn check_z(&self, z: T) -> Result<()> {
        if z >= self.z_min && z <= self.z_max && z.is_finite() {
            Ok(())
        } else {
            Err(GeometryError::DomainExit { z: z.as_f64() })
        }
    }

    #[inline]
    fn rhs(&self, y: &State<T>) -> State<T> {
        let (r, r1, r2) = self.profile.eval(y[0]);
        let e = T::one() + r1 * r1;
        let zz = -(r1 * r2 * y[2] * y[2] - r * r1 * y[3] * y[3]) / e;
        let pp = -T::two() * (r1 / r) * y[2] * y[3];
        [y[2], y[3], zz, pp]
    }

    /// Unit-speed coordinate velocity making angle `psi` with the meridian.
    fn unit_velocity(&self, z: T, psi: T) -> (T, T) {
        let (r, r1, _) = self.profile.eval(z);
        let (s, c) = psi.sin_cos();
        (c / (T::one() + r1 * r1).sqrt(), s / r)
    }

    /// RK4 steps of at most `2e-3` arc length (global error near `1e-11`
    /// per unit length on the default dumbbell), never fewer than 32.
    fn step_count(length: T) -> usize {
        let by_cap = (length / T::lit(2e-3))
            .ceil()
            .to_usize()
            .unwrap_or(usize::MAX);
        by_cap.max(32)
    }

    /// Integrates the unit-speed geodesic from `y0` for arc length `length`,
    /// calling `sink` after every step.
    fn integrate(
        &self,
        y0: State<T>,
        length: T,
        mut sink: impl FnMut(usize, T, &State<T>),
    ) -> Result<State<T>> {
        let n = Self::step_count(length);
        let h = length / T::of_usize(n);
        let half = h * T::half();
        let sixth = h / T::lit(6.0);
        let mut y = y0;
        let add = |a: &State<T>, k: &State<T>, s: T| -> State<T> {
            [
                a[0] + s * k[0],
                a[1] + s * k[1],
                a[2] + s * k[2],
                a[3] + s * k[3],
            ]
        };
        for i in 0..n {
            let k1 = self.rhs(&y);
            let y2 = add(&y, &k1, half);
            self.check_z(y2[0])?;
            let k2 = self.rhs(&y2);
            let y3 = add(&y, &k2, half);
            self.check_z(y3[0])?;
            let k3 = self.rhs(&y3);
            let y4 = add(&y, &k3, h);
            self.check_z(y4[0])?;
            let k4 = self.rhs(&y4);
            for j in 0..4 {
                y[j] += sixth * (k1[j] + T::two() * (k2[j] + k3[j]) + k4[j]);
            }
            self.check_z(y[0])?;
            sink(i + 1, h * T::of_usize(i + 1), &y);
        }
        Ok(y)
    }

    fn unit_state(&self, v: &TangentVec<T>) -> (State<T>, T) {
        let len = self.norm(v);
        let p = v.base().coords();
        let c = v.components();
        ([p[0], p[1], c[0] / len, c[1] / len], len)
    }

    /// Integrates the geodesic from `v.base()` in direction `v` for arc
    /// length `length`, keeping every `sample_every`-th step.
    pub fn geodesic_ivp(
        &self,
        v: &TangentVec<T>,
        length: T,
        sample_every: usize,
    ) -> Result<GeodesicPath<T>> {
        check_owned(self.tag, &[v.base()])?;
        if v.is_zero() {
            return Err(GeometryError::Degenerate("zero initial tangent"));
        }
        self.check_z(v.base().coords()[0])?;
        let (y0, _) = self.unit_state(v);
        let every = sample_every.max(1);
        let mut samples = vec![PathSample {
            s: T::zero(),
            z: y0[0],
            phi: y0[1],
            dz: y0[2],
            dphi: y0[3],
        }];
        let n = Self::step_count(length);
        self.integrate(y0, length, |i, s, y| {
            if i % every == 0 || i == n {
                samples.push(PathSample {
                    s,
                    z: y[0],
                    phi: y[1],
                    dz: y[2],
                    dphi: y[3],
                });
            }
        })?;
        Ok(GeodesicPath { samples })
    }

    fn endpoint(&self, z: T, phi: T, psi: T, length: T) -> Result<State<T>> {
        let (dz, dphi) = self.unit_velocity(z, psi);
        self.integrate([z, phi, dz, dphi], length, |_, _, _| {})
    }

    fn mismatch(&self, p: &[T], q: &[T], psi: T, length: T) -> Result<[T; 2]> {
        let y = self.endpoint(p[0], p[1], psi, length)?;
        Ok([y[0] - q[0], wrap_angle(y[1] - q[1])])
    }

    /// Newton iteration on `(psi, length)`; `None` when this start fails.
    fn newton(&self, p: &[T], q: &[T], psi0: T, len0: T) -> (Option<(T, T)>, T) {
        let tol = self.tol.shooting_residual;
        let h = self.tol.fd_step;
        let rnorm = |f: &[T; 2]| (f[0] * f[0] + f[1] * f[1]).sqrt();
        let (mut psi, mut len) = (psi0, len0);
        let mut f = match self.mismatch(p, q, psi, len) {
            Ok(f) => f,
            Err(_) => return (None, T::infinity()),
        };
        let mut res = rnorm(&f);
        for _ in 0..self.tol.newton_max_iter {
            if res < tol {
                return (Some((psi, len)), res);
            }
            let col = |a: Result<[T; 2]>, b: Result<[T; 2]>| -> Option<[T; 2]> {
                let (a, b) = (a.ok()?, b.ok()?);
                Some([
                    (a[0] - b[0]) / (T::two() * h),
                    (a[1] - b[1]) / (T::two() * h),
                ])
            };
            let Some(jp) = col(
                self.mismatch(p, q, psi + h, len),
                self.mismatch(p, q, psi - h, len),
            ) else {
                return (None, res);
            };
            let Some(jl) = col(
                self.mismatch(p, q, psi, len + h),
                self.mismatch(p, q, psi, len - h),
            ) else {
                return (None, res);
            };
            let det = jp[0] * jl[1] - jl[0] * jp[1];
            if det.abs() < T::lit(1e-300).max(T::min_positive_value()) || !det.is_finite() {
                return (None, res);
            }
            let d_psi = -(jl[1] * f[0] - jl[0] * f[1]) / det;
            let d_len = -(-jp[1] * f[0] + jp[0] * f[1]) / det;
            let mut lambda = T::one();
            let mut accepted = false;
            for _ in 0..12 {
                let (np, mut nl) = (psi + lambda * d_psi, len + lambda * d_len);
                let mut npsi = np;
                if nl < T::zero() {
                    nl = -nl;
                    npsi += T::PI();
                }
                if let Ok(nf) = self.mismatch(p, q, npsi, nl) {
                    let nr = rnorm(&nf);
                    if nr < res {
                        psi = wrap_angle(npsi);
                        len = nl;
                        f = nf;
                        res = nr;
                        accepted = true;
                        break;
                    }
                }
                lambda *= T::half();
            }
            if !accepted {
                return (None, res);
            }
        }
        if res < tol {
            (Some((psi, len)), res)
        } else {
            (None, res)
        }
    }

    fn tangent_from_angle(&self, p: &ManifoldPoint<T>, psi: T, len: T) -> TangentVec<T> {
        let (dz, dphi) = self.unit_velocity(p.coords()[0], psi);
        TangentVec::from_parts(p.clone(), [dz * len, dphi * len].into_iter().collect())
    }
}

impl<T: Real, P: Profile<T>> Manifold<T> for SurfaceOfRevolution<T, P> {
    fn tag(&self) -> SpaceTag {
        self.tag
    }

    fn capabilities(&self) -> SpaceCapabilities<T> {
        SpaceCapabilities {
            dim: 2,
            injectivity_radius: self.inj_lower_bound,
            flags: SpaceFlags {
                closed_form_geodesics: false,
                quotient: false,
                boundary: true,
            },
        }
    }

    fn coord_dim(&self) -> usize {
        2
    }

    fn tolerances(&self) -> Tolerances<T> {
        self.tol
    }

    fn point(&self, coords: &[T]) -> Result<ManifoldPoint<T>> {
        if coords.len() != 2 {
            return Err(GeometryError::Usage("expected (z, phi)".into()));
        }
        check_finite(coords)?;
        if !(coords[0] > self.z_min && coords[0] < self.z_max) {
            return Err(GeometryError::OutOfDomain {
                space: "surface_of_revolution",
                coords: to_f64s(coords),
            });
        }
        let tau = T::TAU();
        let mut phi = coords[1] - tau * (coords[1] / tau).floor();
        if phi >= tau || phi < T::zero() {
            phi = T::zero();
        }
        Ok(ManifoldPoint::from_canonical(
            self.tag,
            [coords[0], phi].into_iter().collect(),
        ))
    }

    fn project(&self, raw: &[T]) -> Result<(ManifoldPoint<T>, Coords<T>)> {
        Ok((self.point(raw)?, [T::one(), T::one()].into_iter().collect()))
    }

    fn inner(&self, base: &ManifoldPoint<T>, u: &[T], v: &[T]) -> T {
        let (r, r1, _) = self.profile.eval(base.coords()[0]);
        (T::one() + r1 * r1) * u[0] * v[0] + r * r * u[1] * v[1]
    }

    fn dist(&self, p: &ManifoldPoint<T>, q: &ManifoldPoint<T>) -> Result<T> {
        check_owned(self.tag, &[p, q])?;
        let (pc, qc) = (p.coords(), q.coords());
        if (qc[0] - pc[0]).abs() <= self.tol.point_eq
            && wrap_angle(qc[1] - pc[1]).abs() <= self.tol.point_eq
        {
            // Below the log threshold the frozen chord is exact to second order.
            return self.approx_dist(p, q);
        }
        let v = self.log(p, q)?;
        Ok(self.norm(&v))
    }

    fn log(&self, p: &ManifoldPoint<T>, q: &ManifoldPoint<T>) -> Result<TangentVec<T>> {
        check_owned(self.tag, &[p, q])?;
        let (pc, qc) = (p.coords(), q.coords());
        let dz = qc[0] - pc[0];
        let dphi = wrap_angle(qc[1] - pc[1]);
        if dz.abs() <= self.tol.point_eq && dphi.abs() <= self.tol.point_eq {
            return Err(GeometryError::DegenerateLog);
        }
        let estimate = self.approx_dist(p, q)?;
        if estimate >= self.inj_lower_bound {
            return Err(GeometryError::OutOfInjectivity {
                distance: estimate.as_f64(),
                injectivity_radius: self.inj_lower_bound.as_f64(),
            });
        }
        // Flat chord in (z, r(z*) phi) coordinates.
        let rs = self.neck_radius((pc[0] + qc[0]) * T::half());
        let psi0 = (rs * dphi).atan2(dz);
        let len0 = (dz * dz + rs * rs * dphi * dphi).sqrt();
        let starts = std::iter::once(psi0).chain(
            (0..self.tol.shooting_restarts)
                .map(|k| T::TAU() * T::of_usize(k) / T::of_usize(self.tol.shooting_restarts)),
        );
        let mut best = T::infinity();
        for psi in starts {
            let (found, res) = self.newton(pc, qc, psi, len0);
            best = best.min(res);
            if let Some((psi, len)) = found {
                if len < self.inj_lower_bound {
                    return Ok(self.tangent_from_angle(p, psi, len));
                }
            }
        }
        Err(GeometryError::SolverNotConverged {
            residual: best.as_f64(),
        })
    }

    fn exp(&self, v: &TangentVec<T>) -> Result<ManifoldPoint<T>> {
        check_owned(self.tag, &[v.base()])?;
        if v.is_zero() {
            return Ok(v.base().clone());
        }
        let (y0, len) = self.unit_state(v);
        let y = self.integrate(y0, len, |_, _, _| {})?;
        self.point(&[y[0], y[1]])
    }

    fn end_tangent(&self, seg: &GeodesicSegment<T>) -> Result<TangentVec<T>> {
        let len = seg.length();
        if len.is_zero() {
            return Err(GeometryError::Degenerate("zero-length segment"));
        }
        let (y0, _) = self.unit_state(seg.initial_tangent());
        let y = self.integrate(y0, len, |_, _, _| {})?;
        Ok(TangentVec::from_parts(
            seg.end().clone(),
            [y[2] * len, y[3] * len].into_iter().collect(),
        ))
    }

    /// Chord length in the metric frozen at the midpoint height.
    fn approx_dist(&self, p: &ManifoldPoint<T>, q: &ManifoldPoint<T>) -> Result<T> {
        check_owned(self.tag, &[p, q])?;
        let (pc, qc) = (p.coords(), q.coords());
        let dz = qc[0] - pc[0];
        let dphi = wrap_angle(qc[1] - pc[1]);
        let (r, r1, _) = self.profile.eval((pc[0] + qc[0]) * T::half());
        Ok(((T::one() + r1 * r1) * dz * dz + r * r * dphi * dphi).sqrt())
    }

    fn orthonormal_frame(&self, p: &ManifoldPoint<T>) -> Vec<Coords<T>> {
        let (r, r1, _) = self.profile.eval(p.coords()[0]);
        vec![
            [T::one() / (T::one() + r1 * r1).sqrt(), T::zero()]
                .into_iter()
                .collect(),
            [T::zero(), T::one() / r].into_iter().collect(),
        ]
    }

    fn closed_geodesic(&self, selector: &OracleSelector<T>) -> Result<ClosedGeodesicOracle<T>> {
        match (selector, self.profile.neck()) {
            (OracleSelector::Neck, Some(z)) => {
                let (r, _, _) = self.profile.eval(z);
                Ok(ClosedGeodesicOracle::new(
                    self.tag,
                    selector.clone(),
                    OracleCurve::Parallel {
                        z,
                        phase: T::zero(),
                        direction: T::one(),
                    },
                    T::TAU() * r,
                ))
            }
            _ => Err(GeometryError::Usage(format!(
                "selector {selector:?} is not supported on this surface of revolution"
            ))),
        }
    }

    fn image_distance(&self, curve: &OracleCurve<T>, p: &ManifoldPoint<T>) -> Option<Result<T>> {
        match curve {
            OracleCurve::Parallel { z, .. } => {
                if let Err(e) = check_owned(self.tag, &[p]) {
                    return Some(Err(e));
                }
                Some(Ok(self.meridian_length(*z, p.coords()[0])))
            }
            _ => None,
        }
    }
}
