//! Capability contract shared by every concrete space, plus the geometric
//! value types passed between the engine and the diagnostics.

use std::fmt::Debug;
use std::sync::atomic::{AtomicU32, Ordering};

use smallvec::SmallVec;

use crate::error::{GeometryError, Result};
use crate::scalar::Real;
use crate::spaces::{ClosedGeodesicOracle, OracleCurve, OracleSelector};

/// Coordinate storage for points and tangent components.
pub type Coords<T> = SmallVec<[T; 4]>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Euclidean,
    Torus,
    Mobius,
    Sphere,
    ProjectivePlane,
    SurfaceOfRevolution,
}

impl SpaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::Euclidean => "euclidean",
            SpaceKind::Torus => "torus",
            SpaceKind::Mobius => "mobius",
            SpaceKind::Sphere => "sphere",
            SpaceKind::ProjectivePlane => "rp2",
            SpaceKind::SurfaceOfRevolution => "surface_of_revolution",
        }
    }
}

/// Identifies the space instance a point belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpaceTag {
    kind: SpaceKind,
    id: u32,
}

static NEXT_SPACE_ID: AtomicU32 = AtomicU32::new(1);

impl SpaceTag {
    pub(crate) fn fresh(kind: SpaceKind) -> Self {
        SpaceTag {
            kind,
            id: NEXT_SPACE_ID.fetch_add(1, Ordering::Relaxed),
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }
}

/// A point stored in its space's canonical representation.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldPoint<T> {
    coords: Coords<T>,
    tag: SpaceTag,
}

impl<T: Real> ManifoldPoint<T> {
    /// Spaces call this after validating and reducing `coords`.
    pub(crate) fn from_canonical(tag: SpaceTag, coords: Coords<T>) -> Self {
        ManifoldPoint { coords, tag }
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn tag(&self) -> SpaceTag {
        self.tag
    }

    /// Coordinate equality within `tol` (max-norm).
    pub fn approx_eq(&self, other: &Self, tol: T) -> bool {
        self.tag == other.tag
            && self.coords.len() == other.coords.len()
            && self
                .coords
                .iter()
                .zip(&other.coords)
                .all(|(&a, &b)| (a - b).abs() <= tol)
    }
}

/// A tangent vector; its norm is always taken through the owning space.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVec<T> {
    base: ManifoldPoint<T>,
    components: Coords<T>,
}

impl<T: Real> TangentVec<T> {
    pub(crate) fn from_parts(base: ManifoldPoint<T>, components: Coords<T>) -> Self {
        TangentVec { base, components }
    }

    pub fn base(&self) -> &ManifoldPoint<T> {
        &self.base
    }

    pub fn components(&self) -> &[T] {
        &self.components
    }

    pub fn scaled(&self, k: T) -> Self {
        TangentVec {
            base: self.base.clone(),
            components: self.components.iter().map(|&c| c * k).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }
}

/// Shortest geodesic `[start, end]` parameterized over `[0, 1]` at constant
/// speed, so `|initial_tangent| == length`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicSegment<T> {
    start: ManifoldPoint<T>,
    end: ManifoldPoint<T>,
    initial_tangent: TangentVec<T>,
    length: T,
}

impl<T: Real> GeodesicSegment<T> {
    pub fn start(&self) -> &ManifoldPoint<T> {
        &self.start
    }

    pub fn end(&self) -> &ManifoldPoint<T> {
        &self.end
    }

    pub fn initial_tangent(&self) -> &TangentVec<T> {
        &self.initial_tangent
    }

    pub fn length(&self) -> T {
        self.length
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpaceFlags {
    pub closed_form_geodesics: bool,
    pub quotient: bool,
    pub boundary: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceCapabilities<T> {
    pub dim: usize,
    /// Conservative lower bound on the injectivity radius; `+inf` for `R^d`.
    pub injectivity_radius: T,
    pub flags: SpaceFlags,
}

/// Numerical tolerances used by the spaces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T> {
    /// Coordinate tolerance for point equality after reduction.
    pub point_eq: T,
    /// Shooting stops once the endpoint mismatch is below this.
    pub shooting_residual: T,
    /// Central finite-difference step for the shooting Jacobian.
    pub fd_step: T,
    pub newton_max_iter: usize,
    pub shooting_restarts: usize,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Tolerances {
            point_eq: T::lit(1e-12),
            shooting_residual: T::lit(1e-8),
            fd_step: T::lit(1e-6),
            newton_max_iter: 50,
            shooting_restarts: 8,
        }
    }
}

pub(crate) fn check_owned<T: Real>(tag: SpaceTag, points: &[&ManifoldPoint<T>]) -> Result<()> {
    for p in points {
        if p.tag != tag {
            return Err(GeometryError::Usage(format!(
                "point from space {:?} used with space {:?}",
                p.tag, tag
            )));
        }
    }
    Ok(())
}

pub(crate) fn check_finite<T: Real>(coords: &[T]) -> Result<()> {
    if coords.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(GeometryError::NonFinite(
            coords.iter().map(|c| c.as_f64()).collect(),
        ))
    }
}

pub(crate) fn to_f64s<T: Real>(coords: &[T]) -> Vec<f64> {
    coords.iter().map(|c| c.as_f64()).collect()
}

/// The operations every concrete space provides.
///
/// Implementations are immutable after construction, so a space can be
/// shared across threads freely.
pub trait Manifold<T: Real>: Debug + Send + Sync {
    fn tag(&self) -> SpaceTag;

    fn capabilities(&self) -> SpaceCapabilities<T>;

    /// Length of the coordinate vectors used for points and tangents.
    fn coord_dim(&self) -> usize;

    fn tolerances(&self) -> Tolerances<T> {
        Tolerances::default()
    }

    /// Validates `coords` and reduces them to the canonical representative.
    fn point(&self, coords: &[T]) -> Result<ManifoldPoint<T>>;

    /// Maps raw chart coordinates near a known point back onto the space.
    ///
    /// Alongside the reduced point this returns a diagonal sign map `s`:
    /// tangent components `w` at the reduced point read as `s * w` in the
    /// raw chart. It is all ones unless reduction applied a flip (glide
    /// reflection, antipodal identification).
    fn project(&self, raw: &[T]) -> Result<(ManifoldPoint<T>, Coords<T>)>;

    /// Metric inner product of two component vectors at `base`.
    fn inner(&self, base: &ManifoldPoint<T>, u: &[T], v: &[T]) -> T;

    fn tangent(&self, base: &ManifoldPoint<T>, components: &[T]) -> Result<TangentVec<T>> {
        check_owned(self.tag(), &[base])?;
        if components.len() != self.coord_dim() {
            return Err(GeometryError::Usage(format!(
                "tangent has {} components, expected {}",
                components.len(),
                self.coord_dim()
            )));
        }
        check_finite(components)?;
        Ok(TangentVec::from_parts(base.clone(), components.into()))
    }

    fn dist(&self, p: &ManifoldPoint<T>, q: &ManifoldPoint<T>) -> Result<T>;

    /// Initial velocity of the shortest geodesic from `p` to `q`.
    fn log(&self, p: &ManifoldPoint<T>, q: &ManifoldPoint<T>) -> Result<TangentVec<T>>;

    fn exp(&self, v: &TangentVec<T>) -> Result<ManifoldPoint<T>>;

    /// Velocity of `seg` at `s = 1`, based at `seg.end()`.
    fn end_tangent(&self, seg: &GeodesicSegment<T>) -> Result<TangentVec<T>> {
        if seg.length.is_zero() {
            return Err(GeometryError::Degenerate("zero-length segment"));
        }
        Ok(self.log(&seg.end, &seg.start)?.scaled(-T::one()))
    }

    /// Cheap distance estimate; equal to `dist` on closed-form spaces.
    fn approx_dist(&self, p: &ManifoldPoint<T>, q: &ManifoldPoint<T>) -> Result<T> {
        self.dist(p, q)
    }

    /// Orthonormal basis of the tangent space at `p`, in component form.
    fn orthonormal_frame(&self, p: &ManifoldPoint<T>) -> Vec<Coords<T>>;

    /// Closed-form distance from `p` to the image of `curve`, when known.
    fn image_distance(&self, _curve: &OracleCurve<T>, _p: &ManifoldPoint<T>) -> Option<Result<T>> {
        None
    }

    /// The closed geodesic (or reference loop) named by `selector`.
    fn closed_geodesic(&self, selector: &OracleSelector<T>) -> Result<ClosedGeodesicOracle<T>> {
        Err(GeometryError::Usage(format!(
            "selector {selector:?} is not supported on {}",
            self.tag().kind().name()
        )))
    }

    /// Length of the shortest closed geodesic, for spaces where it is known.
    fn shortest_closed_geodesic(&self) -> Option<T> {
        None
    }

    fn norm(&self, v: &TangentVec<T>) -> T {
        self.inner(&v.base, &v.components, &v.components)
            .max(T::zero())
            .sqrt()
    }

    fn same_point(&self, p: &ManifoldPoint<T>, q: &ManifoldPoint<T>) -> bool {
        p.approx_eq(q, self.tolerances().point_eq)
    }

    /// Builds `[p, q]`.
    fn segment(&self, p: &ManifoldPoint<T>, q: &ManifoldPoint<T>) -> Result<GeodesicSegment<T>> {
        let v = self.log(p, q)?;
        let length = self.norm(&v);
        Ok(GeodesicSegment {
            start: p.clone(),
            end: q.clone(),
            initial_tangent: v,
            length,
        })
    }

    /// Builds the segment `s -> exp(s v)`, `s` in `[0, 1]`.
    fn segment_from_tangent(&self, v: &TangentVec<T>) -> Result<GeodesicSegment<T>> {
        let end = self.exp(v)?;
        Ok(GeodesicSegment {
            start: v.base.clone(),
            end,
            initial_tangent: v.clone(),
            length: self.norm(v),
        })
    }

    fn geodesic_eval(&self, seg: &GeodesicSegment<T>, s: T) -> Result<ManifoldPoint<T>> {
        if !(s >= T::zero() && s <= T::one()) {
            return Err(GeometryError::Usage(format!(
                "segment parameter {s} outside [0, 1]"
            )));
        }
        if s.is_zero() {
            Ok(seg.start.clone())
        } else if s == T::one() {
            Ok(seg.end.clone())
        } else {
            self.exp(&seg.initial_tangent.scaled(s))
        }
    }

    /// Angle in `[0, pi]` between two nonzero tangents at the same point.
    fn angle(&self, u: &TangentVec<T>, v: &TangentVec<T>) -> Result<T> {
        check_owned(self.tag(), &[&u.base, &v.base])?;
        if !self.same_point(&u.base, &v.base) {
            return Err(GeometryError::Usage(
                "angle between tangents at different base points".into(),
            ));
        }
        let nu = self.norm(u);
        let nv = self.norm(v);
        if nu.is_zero() || nv.is_zero() {
            return Err(GeometryError::Degenerate("zero tangent in angle"));
        }
        let base = &u.base;
        let uu: Coords<T> = u.components.iter().map(|&c| c / nu).collect();
        let vv: Coords<T> = v.components.iter().map(|&c| c / nv).collect();
        let diff: Coords<T> = uu.iter().zip(&vv).map(|(&a, &b)| a - b).collect();
        let sum: Coords<T> = uu.iter().zip(&vv).map(|(&a, &b)| a + b).collect();
        let nd = self.inner(base, &diff, &diff).max(T::zero()).sqrt();
        let ns = self.inner(base, &sum, &sum).max(T::zero()).sqrt();
        // Half-angle form; equals arccos of the clamped cosine but keeps full
        // precision near 0 and pi.
        let theta = T::two() * nd.atan2(ns);
        Ok(theta.max(T::zero()).min(T::PI()))
    }
}
