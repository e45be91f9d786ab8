use crate::engine::state::PursuitState;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub enum EventKind {
    /// The listed bugs joined the group ahead of them.
    Merge {
        bugs: Vec<usize>,
    },
    Collapse,
    SolverFailure {
        message: String,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event<T> {
    pub t: T,
    pub kind: EventKind,
}

/// One recorded instant.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample<T> {
    pub state: PursuitState<T>,
    /// Gap `l_i` from bug `i` to bug `i + 1`; zero inside a group.
    pub gaps: Vec<T>,
    /// Exterior angle at each live vertex, in loop order.
    pub angles: Vec<T>,
    pub length: T,
    pub theta_max: T,
    pub length_rate: T,
    /// Largest rate-identity residual over the steps since the previous
    /// sample, if any step was checked.
    pub rate_residual: Option<T>,
}

impl<T: Real> Sample<T> {
    pub fn t(&self) -> T {
        self.state.t()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord<T> {
    pub samples: Vec<Sample<T>>,
    pub events: Vec<Event<T>>,
    pub steps: usize,
    pub rejected_steps: usize,
    pub initial_length: T,
    pub capture_eps: T,
    pub collapse_time: Option<T>,
    pub max_rate_residual: T,
    pub final_state: PursuitState<T>,
}

impl<T: Real> TrajectoryRecord<T> {
    pub fn n(&self) -> usize {
        self.final_state.n()
    }

    pub fn last(&self) -> &Sample<T> {
        self.samples
            .last()
            .expect("a record always holds the initial sample")
    }

    pub fn collapsed(&self) -> bool {
        self.collapse_time.is_some()
    }
}
