use crate::error::{GeometryError, Result};
use crate::manifold::{Manifold, ManifoldPoint};
use crate::scalar::Real;

/// Bug positions at time `t` together with the merge partition.
///
/// Bug `i` chases bug `i + 1 (mod n)`. Once two consecutive bugs meet they
/// form one group forever; a group is a cyclic run of indices whose *leader*
/// is the last bug of the run, the one chasing the next group.
#[derive(Clone, Debug, PartialEq)]
pub struct PursuitState<T> {
    pub(crate) t: T,
    pub(crate) positions: Vec<ManifoldPoint<T>>,
    /// `joined[i]`: bug `i` has merged with bug `i + 1`.
    pub(crate) joined: Vec<bool>,
    pub(crate) leader: Vec<usize>,
    pub(crate) collapsed: bool,
}

impl<T: Real> PursuitState<T> {
    /// Initial state at `t = 0`. Requires at least two bugs and every
    /// consecutive distance below the injectivity radius; exactly coincident
    /// neighbours start merged.
    pub fn new<M: Manifold<T> + ?Sized>(
        space: &M,
        positions: Vec<ManifoldPoint<T>>,
    ) -> Result<Self> {
        let n = positions.len();
        if n < 2 {
            return Err(GeometryError::Usage(
                "pursuit needs at least two bugs".into(),
            ));
        }
        let inj = space.capabilities().injectivity_radius;
        let mut joined = vec![false; n];
        for i in 0..n {
            let j = (i + 1) % n;
            let d = space.dist(&positions[i], &positions[j])?;
            if !(d < inj) {
                return Err(GeometryError::OutOfInjectivity {
                    distance: d.as_f64(),
                    injectivity_radius: inj.as_f64(),
                });
            }
            joined[i] = space.same_point(&positions[i], &positions[j]);
        }
        let mut state = PursuitState {
            t: T::zero(),
            positions,
            joined,
            leader: vec![0; n],
            collapsed: false,
        };
        state.refresh_partition(0);
        Ok(state)
    }

    pub fn t(&self) -> T {
        self.t
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[ManifoldPoint<T>] {
        &self.positions
    }

    pub fn is_collapsed(&self) -> bool {
        self.collapsed
    }

    /// Leader of the live group containing `bug`.
    pub fn leader_of(&self, bug: usize) -> usize {
        self.leader[bug]
    }

    pub fn leaders(&self) -> &[usize] {
        &self.leader
    }

    /// Whether `bug` has merged with its prey.
    pub fn is_joined(&self, bug: usize) -> bool {
        self.joined[bug]
    }

    /// Live group leaders in loop order, starting with the group of bug 0.
    pub fn live_groups(&self) -> Vec<usize> {
        if self.collapsed {
            return vec![self.leader[0]];
        }
        let n = self.n();
        let first = self.leader[0];
        (0..n)
            .map(|k| (first + k) % n)
            .filter(|&i| !self.joined[i])
            .collect()
    }

    /// Recomputes leaders from `joined` and snaps group members onto their
    /// leader. `fallback` supplies the common position when every bug is joined.
    pub(crate) fn refresh_partition(&mut self, fallback: usize) {
        let n = self.n();
        // A single remaining group is already a point.
        let mut heads = (0..n).filter(|&i| !self.joined[i]);
        if let (head, None) = (heads.next(), heads.next()) {
            self.collapsed = true;
            let head = head.unwrap_or(fallback);
            let pos = self.positions[head].clone();
            for i in 0..n {
                self.leader[i] = head;
                self.positions[i] = pos.clone();
            }
            return;
        }
        for i in 0..n {
            let mut j = i;
            while self.joined[j] {
                j = (j + 1) % n;
            }
            self.leader[i] = j;
        }
        for i in 0..n {
            if self.leader[i] != i {
                self.positions[i] = self.positions[self.leader[i]].clone();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{Euclidean, FlatQuotient};

    #[test]
    fn coincident_neighbours_start_merged() {
        let e = Euclidean::<f64>::new(2).unwrap();
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
            .iter()
            .map(|c| e.point(c).unwrap())
            .collect();
        let s = PursuitState::new(&e, pts).unwrap();
        assert!(s.is_joined(1));
        assert_eq!(s.leader_of(1), 2);
        assert_eq!(s.live_groups(), vec![0, 2, 3]);
    }

    #[test]
    fn rejects_gaps_beyond_injectivity() {
        let t = FlatQuotient::<f64>::unit_torus(2).unwrap();
        let pts = vec![t.point(&[0.0, 0.0]).unwrap(), t.point(&[0.5, 0.5]).unwrap()];
        assert!(matches!(
            PursuitState::new(&t, pts),
            Err(GeometryError::OutOfInjectivity { .. })
        ));
    }

    #[test]
    fn wrapping_group_has_last_index_as_leader() {
        let e = Euclidean::<f64>::new(1).unwrap();
        let pts = [[0.0], [1.0], [2.0], [0.0]]
            .iter()
            .map(|c| e.point(c).unwrap())
            .collect();
        let s = PursuitState::new(&e, pts).unwrap();
        // Bug 3 coincides with bug 0, so {3, 0} is one group led by 0.
        assert!(s.is_joined(3));
        assert_eq!(s.leader_of(3), 0);
        assert_eq!(s.live_groups(), vec![0, 1, 2]);
    }

    #[test]
    fn one_remaining_group_is_collapsed() {
        let e = Euclidean::<f64>::new(1).unwrap();
        let pts = [[0.0], [1.0], [2.0]]
            .iter()
            .map(|c| e.point(c).unwrap())
            .collect();
        let mut s = PursuitState::new(&e, pts).unwrap();
        s.joined[0] = true;
        s.joined[2] = true;
        s.refresh_partition(0);
        assert!(s.is_collapsed());
        assert!(s.positions().iter().all(|p| p.coords()[0] == 1.0));
        assert_eq!(s.live_groups(), vec![1]);
    }
}
