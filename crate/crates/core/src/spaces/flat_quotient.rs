//! Flat quotients of the plane (and of `R^d` for tori) by a discrete group of
//! deck transformations: the flat torus and the open flat Möbius band.

use crate::error::{GeometryError, Result};
use crate::manifold::{
    check_finite, check_owned, to_f64s, Coords, GeodesicSegment, Manifold, ManifoldPoint,
    SpaceCapabilities, SpaceFlags, SpaceKind, SpaceTag, TangentVec, Tolerances,
};
use crate::scalar::{dot, norm, Real};
use crate::spaces::{ClosedGeodesicOracle, OracleCurve, OracleSelector};

/// Affine isometry `x -> signs * x + shift` of the covering space.
#[derive(Clone, Debug, PartialEq)]
pub struct DeckTransform<T> {
    signs: Coords<T>,
    shift: Coords<T>,
}

impl<T: Real> DeckTransform<T> {
    pub fn apply(&self, x: &[T]) -> Coords<T> {
        x.iter()
            .zip(&self.signs)
            .zip(&self.shift)
            .map(|((&x, &s), &t)| s * x + t)
            .collect()
    }

    pub fn signs(&self) -> &[T] {
        &self.signs
    }

    pub fn shift(&self) -> &[T] {
        &self.shift
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum QuotientKind<T> {
    /// `R^d` modulo the rectangular lattice with the given periods.
    Torus { periods: Coords<T> },
    /// The strip `R x (-w, w)` modulo the glide `(x, y) -> (x + length, -y)`.
    Mobius { length: T, half_width: T },
}

#[derive(Clone, Debug)]
pub struct FlatQuotient<T> {
    tag: SpaceTag,
    kind: QuotientKind<T>,
    deck: Vec<DeckTransform<T>>,
    inj: T,
    tol: Tolerances<T>,
}

impl<T: Real> FlatQuotient<T> {
    pub fn torus(periods: &[T]) -> Result<Self> {
        if periods.is_empty() || periods.iter().any(|&p| !(p > T::zero() && p.is_finite())) {
            return Err(GeometryError::Usage(
                "torus periods must be positive and finite".into(),
            ));
        }
        let inj = periods.iter().copied().fold(T::infinity(), T::min) / T::two();
        let diam = norm(periods);
        let reach = T::two() * inj + diam;

        // Every lattice translation displacing the origin by at most `reach`,
        // in lexicographic order of the integer index vector.
        let bounds: Vec<i64> = periods
            .iter()
            .map(|&p| (reach / p).floor().to_i64().unwrap_or(0))
            .collect();
        let d = periods.len();
        let mut deck = Vec::new();
        let mut idx: Vec<i64> = bounds.iter().map(|b| -b).collect();
        'odometer: loop {
            let shift: Coords<T> = idx
                .iter()
                .zip(periods)
                .map(|(&k, &p)| T::from_i64(k).unwrap() * p)
                .collect();
            if norm(&shift) <= reach {
                deck.push(DeckTransform {
                    signs: std::iter::repeat_n(T::one(), d).collect(),
                    shift,
                });
            }
            let mut axis = d;
            while axis > 0 {
                axis -= 1;
                if idx[axis] < bounds[axis] {
                    idx[axis] += 1;
                    for j in axis + 1..d {
                        idx[j] = -bounds[j];
                    }
                    continue 'odometer;
                }
            }
            break;
        }
        Ok(FlatQuotient {
            tag: SpaceTag::fresh(SpaceKind::Torus),
            kind: QuotientKind::Torus {
                periods: periods.into(),
            },
            deck,
            inj,
            tol: Tolerances::default(),
        })
    }

    pub fn unit_torus(dim: usize) -> Result<Self> {
        Self::torus(&vec![T::one(); dim])
    }

    pub fn mobius(length: T, half_width: T) -> Result<Self> {
        if !(length > T::zero() && half_width > T::zero()) || !length.is_finite() {
            return Err(GeometryError::Usage(
                "Mobius band length and half-width must be positive".into(),
            ));
        }
        let inj = length / T::two();
        let diam = (length * length + T::lit(4.0) * half_width * half_width).sqrt();
        let reach = T::two() * inj + diam;
        let kmax = (reach / length).floor().to_i64().unwrap_or(0);
        let deck = (-kmax..=kmax)
            .map(|k| {
                let flip = if k.rem_euclid(2) == 0 {
                    T::one()
                } else {
                    -T::one()
                };
                DeckTransform {
                    signs: [T::one(), flip].into_iter().collect(),
                    shift: [T::from_i64(k).unwrap() * length, T::zero()]
                        .into_iter()
                        .collect(),
                }
            })
            .collect();
        Ok(FlatQuotient {
            tag: SpaceTag::fresh(SpaceKind::Mobius),
            kind: QuotientKind::Mobius { length, half_width },
            deck,
            inj,
            tol: Tolerances::default(),
        })
    }

    pub fn with_tolerances(mut self, tol: Tolerances<T>) -> Self {
        self.tol = tol;
        self
    }

    pub fn kind(&self) -> &QuotientKind<T> {
        &self.kind
    }

    pub fn deck_transforms(&self) -> &[DeckTransform<T>] {
        &self.deck
    }

    /// Periods of the lattice, for tori.
    pub fn periods(&self) -> Option<&[T]> {
        match &self.kind {
            QuotientKind::Torus { periods } => Some(periods),
            QuotientKind::Mobius { .. } => None,
        }
    }

    fn dim(&self) -> usize {
        match &self.kind {
            QuotientKind::Torus { periods } => periods.len(),
            QuotientKind::Mobius { .. } => 2,
        }
    }

    fn reduce(&self, raw: &[T]) -> Result<(Coords<T>, Coords<T>)> {
        if raw.len() != self.dim() {
            return Err(GeometryError::Usage(format!(
                "expected {} coordinates, got {}",
                self.dim(),
                raw.len()
            )));
        }
        check_finite(raw)?;
        match &self.kind {
            QuotientKind::Torus { periods } => {
                let c = raw
                    .iter()
                    .zip(periods)
                    .map(|(&x, &p)| {
                        let r = x - p * (x / p).floor();
                        if r >= p || r < T::zero() {
                            T::zero()
                        } else {
                            r
                        }
                    })
                    .collect();
                Ok((c, std::iter::repeat_n(T::one(), periods.len()).collect()))
            }
            QuotientKind::Mobius { length, half_width } => {
                if raw[1].abs() >= *half_width {
                    return Err(GeometryError::OutOfDomain {
                        space: "mobius",
                        coords: to_f64s(raw),
                    });
                }
                let mut k = (raw[0] / *length).floor();
                let mut x = raw[0] - k * *length;
                if x >= *length {
                    x -= *length;
                    k += T::one();
                }
                if x < T::zero() {
                    x = T::zero();
                }
                let odd = k.to_i64().unwrap_or(0).rem_euclid(2) == 1;
                let flip = if odd { -T::one() } else { T::one() };
                Ok((
                    [x, flip * raw[1]].into_iter().collect(),
                    [T::one(), flip].into_iter().collect(),
                ))
            }
        }
    }

    /// Displacement from `p` to the nearest deck image of `q`, with the
    /// index of the transform realizing it and the runner-up distance.
    fn nearest_image(&self, p: &[T], q: &[T]) -> (Coords<T>, usize, T) {
        let mut best: Option<(Coords<T>, usize, T)> = None;
        let mut second = T::infinity();
        for (i, g) in self.deck.iter().enumerate() {
            let d: Coords<T> = g.apply(q).iter().zip(p).map(|(&a, &b)| a - b).collect();
            let n = norm(&d);
            match &best {
                Some((_, _, bn)) if n >= *bn => {
                    if n < second {
                        second = n;
                    }
                }
                _ => {
                    if let Some((_, _, bn)) = &best {
                        second = *bn;
                    }
                    best = Some((d, i, n));
                }
            }
        }
        let (d, i, _) = best.expect("deck list contains the identity");
        (d, i, second)
    }

    /// Perpendicular distance from `p` to the nearest deck image of the
    /// line `origin + t * direction`.
    fn distance_to_line(&self, origin: &[T], direction: &[T], p: &[T]) -> T {
        let dn = norm(direction);
        let u: Coords<T> = direction.iter().map(|&c| c / dn).collect();
        self.deck
            .iter()
            .map(|g| {
                let x = g.apply(p);
                let r: Coords<T> = x.iter().zip(origin).map(|(&a, &b)| a - b).collect();
                let along = dot(&r, &u);
                let perp: Coords<T> = r.iter().zip(&u).map(|(&a, &b)| a - along * b).collect();
                norm(&perp)
            })
            .fold(T::infinity(), T::min)
    }
}

impl<T: Real> Manifold<T> for FlatQuotient<T> {
    fn tag(&self) -> SpaceTag {
        self.tag
    }

    fn capabilities(&self) -> SpaceCapabilities<T> {
        SpaceCapabilities {
            dim: self.dim(),
            injectivity_radius: self.inj,
            flags: SpaceFlags {
                closed_form_geodesics: true,
                quotient: true,
                boundary: matches!(self.kind, QuotientKind::Mobius { .. }),
            },
        }
    }

    fn coord_dim(&self) -> usize {
        self.dim()
    }

    fn tolerances(&self) -> Tolerances<T> {
        self.tol
    }

    fn point(&self, coords: &[T]) -> Result<ManifoldPoint<T>> {
        let (c, _) = self.reduce(coords)?;
        Ok(ManifoldPoint::from_canonical(self.tag, c))
    }

    fn project(&self, raw: &[T]) -> Result<(ManifoldPoint<T>, Coords<T>)> {
        let (c, s) = self.reduce(raw)?;
        Ok((ManifoldPoint::from_canonical(self.tag, c), s))
    }

    fn inner(&self, _base: &ManifoldPoint<T>, u: &[T], v: &[T]) -> T {
        dot(u, v)
    }

    fn dist(&self, p: &ManifoldPoint<T>, q: &ManifoldPoint<T>) -> Result<T> {
        check_owned(self.tag, &[p, q])?;
        Ok(norm(&self.nearest_image(p.coords(), q.coords()).0))
    }

    fn log(&self, p: &ManifoldPoint<T>, q: &ManifoldPoint<T>) -> Result<TangentVec<T>> {
        check_owned(self.tag, &[p, q])?;
        let (d, _, second) = self.nearest_image(p.coords(), q.coords());
        let n = norm(&d);
        if d.iter().all(|c| c.abs() <= self.tol.point_eq) {
            return Err(GeometryError::DegenerateLog);
        }
        if n >= self.inj || (second - n).abs() <= self.tol.point_eq {
            return Err(GeometryError::OutOfInjectivity {
                distance: n.as_f64(),
                injectivity_radius: self.inj.as_f64(),
            });
        }
        Ok(TangentVec::from_parts(p.clone(), d))
    }

    fn exp(&self, v: &TangentVec<T>) -> Result<ManifoldPoint<T>> {
        check_owned(self.tag, &[v.base()])?;
        let raw: Coords<T> = v
            .base()
            .coords()
            .iter()
            .zip(v.components())
            .map(|(&a, &b)| a + b)
            .collect();
        self.point(&raw)
    }

    fn end_tangent(&self, seg: &GeodesicSegment<T>) -> Result<TangentVec<T>> {
        if seg.length().is_zero() {
            return Err(GeometryError::Degenerate("zero-length segment"));
        }
        let v = seg.initial_tangent();
        let raw: Coords<T> = v
            .base()
            .coords()
            .iter()
            .zip(v.components())
            .map(|(&a, &b)| a + b)
            .collect();
        let (end, signs) = self.project(&raw)?;
        let comps = v
            .components()
            .iter()
            .zip(&signs)
            .map(|(&c, &s)| c * s)
            .collect();
        Ok(TangentVec::from_parts(end, comps))
    }

    fn orthonormal_frame(&self, _p: &ManifoldPoint<T>) -> Vec<Coords<T>> {
        let d = self.dim();
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| if i == j { T::one() } else { T::zero() })
                    .collect()
            })
            .collect()
    }

    fn image_distance(&self, curve: &OracleCurve<T>, p: &ManifoldPoint<T>) -> Option<Result<T>> {
        match curve {
            OracleCurve::FlatLine { origin, velocity } => {
                if let Err(e) = check_owned(self.tag, &[p]) {
                    return Some(Err(e));
                }
                Some(Ok(self.distance_to_line(origin, velocity, p.coords())))
            }
            _ => None,
        }
    }

    fn closed_geodesic(&self, selector: &OracleSelector<T>) -> Result<ClosedGeodesicOracle<T>> {
        match (&self.kind, selector) {
            (QuotientKind::Torus { periods }, OracleSelector::TorusClass(class)) => {
                if class.len() != periods.len() || class.iter().all(|&k| k == 0) {
                    return Err(GeometryError::Usage(format!(
                        "torus class must be a nonzero integer vector of length {}",
                        periods.len()
                    )));
                }
                let velocity: Coords<T> = class
                    .iter()
                    .zip(periods)
                    .map(|(&k, &p)| T::from_i64(k).unwrap() * p)
                    .collect();
                let length = norm(&velocity);
                let origin = std::iter::repeat_n(T::zero(), periods.len()).collect();
                Ok(ClosedGeodesicOracle::new(
                    self.tag,
                    selector.clone(),
                    OracleCurve::FlatLine { origin, velocity },
                    length,
                ))
            }
            (QuotientKind::Mobius { length, .. }, OracleSelector::MobiusCore) => {
                Ok(ClosedGeodesicOracle::new(
                    self.tag,
                    selector.clone(),
                    OracleCurve::FlatLine {
                        origin: [T::zero(), T::zero()].into_iter().collect(),
                        velocity: [*length, T::zero()].into_iter().collect(),
                    },
                    *length,
                ))
            }
            _ => Err(GeometryError::Usage(format!(
                "selector {selector:?} is not supported on {}",
                self.tag.kind().name()
            ))),
        }
    }

    fn shortest_closed_geodesic(&self) -> Option<T> {
        match &self.kind {
            QuotientKind::Torus { periods } => {
                Some(periods.iter().copied().fold(T::infinity(), T::min))
            }
            QuotientKind::Mobius { .. } => None,
        }
    }
}
