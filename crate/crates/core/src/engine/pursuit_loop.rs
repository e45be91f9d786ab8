use crate::engine::state::PursuitState;
use crate::error::Result;
use crate::manifold::{GeodesicSegment, Manifold, ManifoldPoint, TangentVec};
use crate::scalar::Real;

/// Closed broken geodesic through the live group positions, parameterized by
/// arc length over `[0, 1)` with base point at the group of bug 0.
#[derive(Clone, Debug, PartialEq)]
pub struct PursuitLoop<T> {
    basepoint: ManifoldPoint<T>,
    groups: Vec<usize>,
    segments: Vec<GeodesicSegment<T>>,
    cumulative: Vec<T>,
    length: T,
}

impl<T: Real> PursuitLoop<T> {
    /// Loop of the current partition: one segment per live group.
    pub fn from_state<M: Manifold<T> + ?Sized>(space: &M, state: &PursuitState<T>) -> Result<Self> {
        let groups = state.live_groups();
        if state.is_collapsed() {
            return Ok(Self::constant(state.positions()[groups[0]].clone(), groups));
        }
        let points: Vec<_> = groups
            .iter()
            .map(|&g| state.positions()[g].clone())
            .collect();
        Self::build(space, &points, groups)
    }

    /// Loop through arbitrary points, dropping consecutive repeats.
    pub fn through<M: Manifold<T> + ?Sized>(
        space: &M,
        points: &[ManifoldPoint<T>],
    ) -> Result<Self> {
        let mut kept: Vec<ManifoldPoint<T>> = Vec::with_capacity(points.len());
        let mut ids = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if kept.last().is_some_and(|q| space.same_point(p, q)) {
                continue;
            }
            kept.push(p.clone());
            ids.push(i);
        }
        while kept.len() > 1 && space.same_point(&kept[0], kept.last().unwrap()) {
            kept.pop();
            ids.pop();
        }
        match kept.len() {
            0 => Err(crate::error::GeometryError::Usage(
                "loop through no points".into(),
            )),
            1 => Ok(Self::constant(kept.pop().unwrap(), ids)),
            _ => Self::build(space, &kept, ids),
        }
    }

    fn constant(basepoint: ManifoldPoint<T>, groups: Vec<usize>) -> Self {
        PursuitLoop {
            basepoint,
            groups,
            segments: Vec::new(),
            cumulative: vec![T::zero()],
            length: T::zero(),
        }
    }

    fn build<M: Manifold<T> + ?Sized>(
        space: &M,
        points: &[ManifoldPoint<T>],
        groups: Vec<usize>,
    ) -> Result<Self> {
        let k = points.len();
        let segments = (0..k)
            .map(|i| space.segment(&points[i], &points[(i + 1) % k]))
            .collect::<Result<Vec<_>>>()?;
        let mut cumulative = Vec::with_capacity(k + 1);
        let mut acc = T::zero();
        cumulative.push(acc);
        for seg in &segments {
            acc += seg.length();
            cumulative.push(acc);
        }
        Ok(PursuitLoop {
            basepoint: points[0].clone(),
            groups,
            segments,
            cumulative,
            length: acc,
        })
    }

    pub fn basepoint(&self) -> &ManifoldPoint<T> {
        &self.basepoint
    }

    /// Leader (or source index) of each vertex, in loop order.
    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn segments(&self) -> &[GeodesicSegment<T>] {
        &self.segments
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn is_point(&self) -> bool {
        self.segments.is_empty()
    }

    /// Vertex positions in loop order.
    pub fn vertices(&self) -> Vec<ManifoldPoint<T>> {
        if self.segments.is_empty() {
            return vec![self.basepoint.clone()];
        }
        self.segments.iter().map(|s| s.start().clone()).collect()
    }

    /// Loop parameter of each vertex.
    pub fn vertex_params(&self) -> Vec<T> {
        if self.length.is_zero() {
            return vec![T::zero()];
        }
        self.cumulative[..self.segments.len()]
            .iter()
            .map(|&c| c / self.length)
            .collect()
    }

    /// Point at parameter `s`, taken modulo 1.
    pub fn eval<M: Manifold<T> + ?Sized>(&self, space: &M, s: T) -> Result<ManifoldPoint<T>> {
        if self.segments.is_empty() || self.length.is_zero() {
            return Ok(self.basepoint.clone());
        }
        let s = s - s.floor();
        let target = s * self.length;
        let k = self.cumulative[1..]
            .iter()
            .position(|&c| target < c)
            .unwrap_or(self.segments.len() - 1);
        let seg = &self.segments[k];
        if seg.length().is_zero() {
            return Ok(seg.start().clone());
        }
        let local = ((target - self.cumulative[k]) / seg.length())
            .max(T::zero())
            .min(T::one());
        space.geodesic_eval(seg, local)
    }

    /// Exterior angle at each vertex: the angle between the incoming end
    /// tangent and the outgoing initial tangent. Vertex `k` is the start of
    /// segment `k`.
    pub fn corner_angles<M: Manifold<T> + ?Sized>(&self, space: &M) -> Result<Vec<T>> {
        let k = self.segments.len();
        if k == 0 {
            return Ok(Vec::new());
        }
        let ends = self
            .segments
            .iter()
            .map(|s| space.end_tangent(s))
            .collect::<Result<Vec<TangentVec<T>>>>()?;
        (0..k)
            .map(|i| {
                let incoming = &ends[(i + k - 1) % k];
                space.angle(incoming, self.segments[i].initial_tangent())
            })
            .collect()
    }
}

/// Length and exterior angles of a loop.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopMetrics<T> {
    pub segment_lengths: Vec<T>,
    pub length: T,
    pub angles: Vec<T>,
    pub theta_max: T,
    /// Total exterior angle; at least `2 pi` for Euclidean loops.
    pub angle_sum: T,
    /// `sum (cos theta - 1)`, the instantaneous rate of change of length.
    pub length_rate: T,
}

pub fn loop_metrics<T: Real, M: Manifold<T> + ?Sized>(
    space: &M,
    lp: &PursuitLoop<T>,
) -> Result<LoopMetrics<T>> {
    let angles = lp.corner_angles(space)?;
    let theta_max = angles.iter().copied().fold(T::zero(), T::max);
    let length_rate = angles.iter().map(|&a| a.cos() - T::one()).sum();
    Ok(LoopMetrics {
        segment_lengths: lp.segments().iter().map(|s| s.length()).collect(),
        length: lp.length(),
        angle_sum: angles.iter().copied().sum(),
        angles,
        theta_max,
        length_rate,
    })
}
