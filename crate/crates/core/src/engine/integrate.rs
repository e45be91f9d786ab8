use std::fmt;

use thiserror::Error;

use crate::engine::pursuit_loop::{loop_metrics, LoopMetrics, PursuitLoop};
use crate::engine::record::{Event, EventKind, Sample, TrajectoryRecord};
use crate::engine::state::PursuitState;
use crate::error::GeometryError;
use crate::manifold::{Coords, Manifold, ManifoldPoint, TangentVec};
use crate::scalar::Real;

const MAX_HALVINGS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig<T> {
    pub dt_max: T,
    /// Merge threshold; `None` picks `1e-9 * inj`, or `1e-6 * l(0)` when the
    /// injectivity radius is infinite.
    pub capture_eps: Option<T>,
    pub step_safety: T,
    pub t_max: T,
    pub record_every: usize,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        IntegratorConfig {
            dt_max: T::lit(1e-2),
            capture_eps: None,
            step_safety: T::lit(0.1),
            t_max: T::lit(100.0),
            record_every: 1,
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn validate(&self, injectivity_radius: T) -> Result<(), PursuitError> {
        let bad = |msg: String| Err(PursuitError::InvalidConfig(msg));
        if !(self.dt_max > T::zero() && self.dt_max.is_finite()) {
            return bad(format!("dt_max must be positive, got {}", self.dt_max));
        }
        if !(self.step_safety > T::zero() && self.step_safety <= T::one()) {
            return bad(format!(
                "step_safety must lie in (0, 1], got {}",
                self.step_safety
            ));
        }
        if !(self.t_max > T::zero() && self.t_max.is_finite()) {
            return bad(format!("t_max must be positive, got {}", self.t_max));
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        if let Some(eps) = self.capture_eps {
            if !(eps > T::zero() && eps.is_finite()) {
                return bad(format!("capture_eps must be positive, got {eps}"));
            }
            if injectivity_radius.is_finite() && !(eps < T::lit(1e-3) * injectivity_radius) {
                return bad(format!(
                    "capture_eps {eps} must be below 1e-3 * inj = {}",
                    T::lit(1e-3) * injectivity_radius
                ));
            }
        }
        Ok(())
    }

    pub fn resolve_capture_eps(&self, injectivity_radius: T, initial_length: T) -> T {
        if let Some(eps) = self.capture_eps {
            return eps;
        }
        if injectivity_radius.is_finite() {
            return T::lit(1e-9) * injectivity_radius;
        }
        // Tailing pairs close at a rate proportional to their gap, and
        // h <= step_safety * gap then makes a tiny threshold very costly.
        let scale = if initial_length > T::zero() {
            initial_length
        } else {
            T::one()
        };
        T::lit(1e-6) * scale
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PursuitError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid initial condition: {0}")]
    InitialCondition(#[source] GeometryError),
    #[error("geometry failure at t = {t}: {source}")]
    Geometry { t: f64, source: GeometryError },
    #[error("step at t = {t} still failing after {halvings} halvings: {source}")]
    StepRejected {
        t: f64,
        halvings: usize,
        source: GeometryError,
    },
    #[error("gap of bug {bug} grew by {increase:e} during the step ending at t = {t}")]
    Monotonicity { t: f64, bug: usize, increase: f64 },
}

impl PursuitError {
    /// Time of failure, when the error happened mid-run.
    pub fn time(&self) -> Option<f64> {
        match self {
            PursuitError::Geometry { t, .. }
            | PursuitError::StepRejected { t, .. }
            | PursuitError::Monotonicity { t, .. } => Some(*t),
            _ => None,
        }
    }
}

/// A failed run together with whatever was recorded before the failure.
#[derive(Debug, Clone)]
pub struct RunFailure<T> {
    pub error: PursuitError,
    pub partial: Option<TrajectoryRecord<T>>,
}

impl<T> fmt::Display for RunFailure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

impl<T: fmt::Debug> std::error::Error for RunFailure<T> {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome<T> {
    pub state: PursuitState<T>,
    pub h: T,
    pub halvings: usize,
    /// Merge and collapse events inside the step.
    pub events: Vec<Event<T>>,
    /// Dense-output estimate of the live positions at `t + h / 2`, in loop
    /// order. Empty when the step merged bugs.
    pub midpoint: Vec<ManifoldPoint<T>>,
}

/// Unit velocity of every bug; merged followers share their leader's vector
/// and a collapsed state has the zero field.
pub fn velocity_field<T: Real, M: Manifold<T> + ?Sized>(
    space: &M,
    state: &PursuitState<T>,
) -> Result<Vec<TangentVec<T>>, GeometryError> {
    let n = state.n();
    if state.is_collapsed() {
        let zero: Coords<T> = (0..space.coord_dim()).map(|_| T::zero()).collect();
        return state
            .positions()
            .iter()
            .map(|p| space.tangent(p, &zero))
            .collect();
    }
    let groups = state.live_groups();
    let mut by_leader = vec![None; n];
    for (k, &g) in groups.iter().enumerate() {
        let prey = groups[(k + 1) % groups.len()];
        let v = space.log(&state.positions()[g], &state.positions()[prey])?;
        let len = space.norm(&v);
        by_leader[g] = Some(v.scaled(T::one() / len));
    }
    Ok((0..n)
        .map(|i| {
            by_leader[state.leader_of(i)]
                .clone()
                .expect("leader is live")
        })
        .collect())
}

/// One RK4 step of at most `cfg.dt_max`, followed by capture.
pub fn step<T: Real, M: Manifold<T> + ?Sized>(
    space: &M,
    state: &PursuitState<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<StepOutcome<T>, PursuitError> {
    if state.is_collapsed() {
        return Ok(StepOutcome {
            state: state.clone(),
            h: T::zero(),
            halvings: 0,
            events: Vec::new(),
            midpoint: Vec::new(),
        });
    }
    let lp = PursuitLoop::from_state(space, state).map_err(|e| geometry(state.t(), e))?;
    let eps = cfg.resolve_capture_eps(space.capabilities().injectivity_radius, lp.length());
    advance(space, state, &lp, cfg.dt_max, cfg.step_safety, eps)
}

fn geometry<T: Real>(t: T, source: GeometryError) -> PursuitError {
    PursuitError::Geometry {
        t: t.as_f64(),
        source,
    }
}

fn retryable(e: &GeometryError) -> bool {
    matches!(
        e,
        GeometryError::OutOfInjectivity { .. } | GeometryError::DegenerateLog
    )
}

fn advance<T: Real, M: Manifold<T> + ?Sized>(
    space: &M,
    state: &PursuitState<T>,
    lp: &PursuitLoop<T>,
    h_cap: T,
    safety: T,
    eps: T,
) -> Result<StepOutcome<T>, PursuitError> {
    let groups = lp.groups();
    let x: Vec<Coords<T>> = groups
        .iter()
        .map(|&g| state.positions()[g].coords().iter().copied().collect())
        .collect();
    let k1: Vec<Coords<T>> = lp
        .segments()
        .iter()
        .map(|s| {
            let inv = T::one() / s.length();
            s.initial_tangent()
                .components()
                .iter()
                .map(|&c| c * inv)
                .collect()
        })
        .collect();
    let min_gap = lp
        .segments()
        .iter()
        .map(|s| s.length())
        .fold(T::infinity(), T::min);
    let mut h = h_cap.min(safety * min_gap);
    let mut halvings = 0;
    let (moved, raw) = loop {
        match rk4(space, &x, &k1, h) {
            Ok(v) => break v,
            Err(e) if retryable(&e) => {
                if halvings == MAX_HALVINGS {
                    return Err(PursuitError::StepRejected {
                        t: state.t().as_f64(),
                        halvings,
                        source: e,
                    });
                }
                halvings += 1;
                h *= T::half();
            }
            Err(e) => return Err(geometry(state.t(), e)),
        }
    };

    let mut next = state.clone();
    next.t = state.t() + h;
    for (&g, p) in groups.iter().zip(&moved) {
        next.positions[g] = p.0.clone();
    }
    let new_gaps = groups
        .iter()
        .enumerate()
        .map(|(k, &g)| {
            space.approx_dist(
                &next.positions[g],
                &next.positions[groups[(k + 1) % groups.len()]],
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| geometry(next.t, e))?;
    let old_gaps: Vec<T> = lp.segments().iter().map(|s| s.length()).collect();
    let events = capture(&mut next, groups, &old_gaps, &new_gaps, state.t(), h, eps);
    let midpoint = if events.is_empty() {
        hermite_midpoint(space, &x, &k1, &raw, &moved, h).map_err(|e| geometry(next.t, e))?
    } else {
        Vec::new()
    };
    Ok(StepOutcome {
        state: next,
        h,
        halvings,
        events,
        midpoint,
    })
}

/// Joins every live pair closer than `eps`. `old_gaps[k]` and `new_gaps[k]`
/// are the gaps from group `k` to its prey at the start and the end of a
/// step of size `h` beginning at `t0`.
fn capture<T: Real>(
    state: &mut PursuitState<T>,
    groups: &[usize],
    old_gaps: &[T],
    new_gaps: &[T],
    t0: T,
    h: T,
    eps: T,
) -> Vec<Event<T>> {
    let mut events = Vec::new();
    let mut last = t0;
    for (k, &g) in groups.iter().enumerate() {
        if !(new_gaps[k] < eps) {
            continue;
        }
        let (g0, g1) = (old_gaps[k], new_gaps[k]);
        let frac = if g0 > g1 {
            ((g0 - eps) / (g0 - g1)).max(T::zero()).min(T::one())
        } else {
            T::zero()
        };
        let t = t0 + h * frac;
        last = last.max(t);
        let bugs = (0..state.n()).filter(|&i| state.leader[i] == g).collect();
        state.joined[g] = true;
        events.push(Event {
            t,
            kind: EventKind::Merge { bugs },
        });
    }
    state.refresh_partition(groups[0]);
    if !events.is_empty() {
        // Sort merges by time; equal times keep loop order.
        events.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap_or(std::cmp::Ordering::Equal));
        if state.collapsed {
            events.push(Event {
                t: last,
                kind: EventKind::Collapse,
            });
        }
    }
    events
}

type Projected<T> = (ManifoldPoint<T>, Coords<T>);

/// Projected stage-end positions and the combined RK4 increment.
type StepResult<T> = (Vec<Projected<T>>, Vec<Coords<T>>);
/// Returns the reduced end points with their sign maps, and the raw end
/// coordinates in the chart of each start point.
fn rk4<T: Real, M: Manifold<T> + ?Sized>(
    space: &M,
    x: &[Coords<T>],
    k1: &[Coords<T>],
    h: T,
) -> Result<StepResult<T>, GeometryError> {
    let k2 = stage(space, x, k1, h * T::half())?;
    let k3 = stage(space, x, &k2, h * T::half())?;
    let k4 = stage(space, x, &k3, h)?;
    let sixth = h / T::lit(6.0);
    let raw: Vec<Coords<T>> = x
        .iter()
        .enumerate()
        .map(|(i, xi)| {
            (0..xi.len())
                .map(|j| xi[j] + sixth * (k1[i][j] + T::two() * (k2[i][j] + k3[i][j]) + k4[i][j]))
                .collect()
        })
        .collect();
    let points = raw
        .iter()
        .map(|r| space.project(r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((points, raw))
}

/// Cubic Hermite midpoint `(x0 + x1) / 2 + h (f0 - f1) / 8`.
fn hermite_midpoint<T: Real, M: Manifold<T> + ?Sized>(
    space: &M,
    x: &[Coords<T>],
    f0: &[Coords<T>],
    raw: &[Coords<T>],
    end: &[Projected<T>],
    h: T,
) -> Result<Vec<ManifoldPoint<T>>, GeometryError> {
    let g = end.len();
    let eighth = h / T::lit(8.0);
    (0..g)
        .map(|i| {
            let v = space.log(&end[i].0, &end[(i + 1) % g].0)?;
            let len = space.norm(&v);
            if !(len > T::zero()) {
                return Err(GeometryError::DegenerateLog);
            }
            let mid: Coords<T> = (0..x[i].len())
                .map(|j| {
                    let f1 = v.components()[j] * end[i].1[j] / len;
                    T::half() * (x[i][j] + raw[i][j]) + eighth * (f0[i][j] - f1)
                })
                .collect();
            space.project(&mid).map(|(p, _)| p)
        })
        .collect()
}

/// Unit field at `x + a k`, expressed in the chart of `x`.
fn stage<T: Real, M: Manifold<T> + ?Sized>(
    space: &M,
    x: &[Coords<T>],
    k: &[Coords<T>],
    a: T,
) -> Result<Vec<Coords<T>>, GeometryError> {
    let (points, signs): (Vec<_>, Vec<_>) = x
        .iter()
        .zip(k)
        .map(|(xi, ki)| {
            let raw: Coords<T> = xi.iter().zip(ki).map(|(&p, &v)| p + a * v).collect();
            space.project(&raw)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .unzip();
    let g = points.len();
    (0..g)
        .map(|i| {
            let v = space.log(&points[i], &points[(i + 1) % g])?;
            let len = space.norm(&v);
            if !(len > T::zero()) {
                return Err(GeometryError::DegenerateLog);
            }
            Ok(v.components()
                .iter()
                .zip(&signs[i])
                .map(|(&c, &s)| c * s / len)
                .collect())
        })
        .collect()
}

fn per_bug_gaps<T: Real>(n: usize, lp: &PursuitLoop<T>) -> Vec<T> {
    let mut gaps = vec![T::zero(); n];
    for (seg, &g) in lp.segments().iter().zip(lp.groups()) {
        gaps[g] = seg.length();
    }
    gaps
}

fn sample<T: Real>(
    state: &PursuitState<T>,
    lp: &PursuitLoop<T>,
    m: &LoopMetrics<T>,
    rate_residual: Option<T>,
) -> Sample<T> {
    Sample {
        state: state.clone(),
        gaps: per_bug_gaps(state.n(), lp),
        angles: m.angles.clone(),
        length: m.length,
        theta_max: m.theta_max,
        length_rate: m.length_rate,
        rate_residual,
    }
}

/// Integrates from `initial` until collapse or `cfg.t_max`.
pub fn run<T: Real, M: Manifold<T> + ?Sized>(
    space: &M,
    initial: Vec<ManifoldPoint<T>>,
    cfg: &IntegratorConfig<T>,
) -> Result<TrajectoryRecord<T>, Box<RunFailure<T>>> {
    let fail = |error: PursuitError, partial: Option<TrajectoryRecord<T>>| {
        Box::new(RunFailure { error, partial })
    };
    let inj = space.capabilities().injectivity_radius;
    cfg.validate(inj).map_err(|e| fail(e, None))?;
    let mut state = PursuitState::new(space, initial)
        .map_err(|e| fail(PursuitError::InitialCondition(e), None))?;
    let mut lp = PursuitLoop::from_state(space, &state)
        .map_err(|e| fail(PursuitError::InitialCondition(e), None))?;
    let l0 = lp.length();
    let eps = cfg.resolve_capture_eps(inj, l0);

    let mut events = Vec::new();
    if !state.is_collapsed() {
        let gaps: Vec<T> = lp.segments().iter().map(|s| s.length()).collect();
        let groups = lp.groups().to_vec();
        events = capture(&mut state, &groups, &gaps, &gaps, T::zero(), T::zero(), eps);
        if !events.is_empty() {
            lp = PursuitLoop::from_state(space, &state)
                .map_err(|e| fail(PursuitError::InitialCondition(e), None))?;
        }
    }
    let mut metrics =
        loop_metrics(space, &lp).map_err(|e| fail(PursuitError::InitialCondition(e), None))?;
    let collapse_time = state.is_collapsed().then(T::zero);
    let mut rec = TrajectoryRecord {
        samples: vec![sample(&state, &lp, &metrics, None)],
        events,
        steps: 0,
        rejected_steps: 0,
        initial_length: l0,
        capture_eps: eps,
        collapse_time,
        max_rate_residual: T::zero(),
        final_state: state.clone(),
    };

    let mono_tol = T::lit(1e-7) * l0;
    let mut pending: Option<T> = None;
    while !state.is_collapsed() && state.t() < cfg.t_max {
        let outcome = advance(
            space,
            &state,
            &lp,
            cfg.dt_max.min(cfg.t_max - state.t()),
            cfg.step_safety,
            eps,
        );
        let step_result = outcome.and_then(|out| {
            let new_lp = PursuitLoop::from_state(space, &out.state)
                .map_err(|e| geometry(out.state.t(), e))?;
            let new_metrics =
                loop_metrics(space, &new_lp).map_err(|e| geometry(out.state.t(), e))?;
            Ok((out, new_lp, new_metrics))
        });
        let (mut out, new_lp, new_metrics) = match step_result {
            Ok(v) => v,
            Err(error) => {
                rec.events.push(Event {
                    t: state.t(),
                    kind: EventKind::SolverFailure {
                        message: error.to_string(),
                    },
                });
                rec.final_state = state;
                return Err(fail(error, Some(rec)));
            }
        };
        if (cfg.t_max - out.state.t()).abs() <= T::lit(1e-12) * cfg.t_max {
            out.state.t = cfg.t_max;
        }

        let before = per_bug_gaps(state.n(), &lp);
        let after = per_bug_gaps(state.n(), &new_lp);
        // A merge snaps the merged group onto its prey, moving the chaser's
        // target by less than the capture threshold per merged bug (chains
        // of merges in one step accumulate).
        let merged: usize = out
            .events
            .iter()
            .map(|e| match &e.kind {
                EventKind::Merge { bugs } => bugs.len(),
                _ => 0,
            })
            .sum();
        let tol = mono_tol + eps * T::of_usize(merged);
        for (bug, (&b, &a)) in before.iter().zip(&after).enumerate() {
            if a > b + tol {
                let error = PursuitError::Monotonicity {
                    t: out.state.t().as_f64(),
                    bug,
                    increase: (a - b).as_f64(),
                };
                rec.events.push(Event {
                    t: out.state.t(),
                    kind: EventKind::SolverFailure {
                        message: error.to_string(),
                    },
                });
                rec.final_state = state;
                return Err(fail(error, Some(rec)));
            }
        }

        if out.events.is_empty() && out.h > T::zero() {
            let mid_rate = PursuitLoop::through(space, &out.midpoint)
                .and_then(|m| loop_metrics(space, &m))
                .map(|m| m.length_rate);
            let mid_rate = match mid_rate {
                Ok(r) => r,
                Err(e) => {
                    let error = geometry(out.state.t(), e);
                    rec.final_state = state;
                    return Err(fail(error, Some(rec)));
                }
            };
            let fd = (new_metrics.length - metrics.length) / out.h;
            let simpson = (metrics.length_rate + T::lit(4.0) * mid_rate + new_metrics.length_rate)
                / T::lit(6.0);
            let residual = (fd - simpson).abs();
            pending = Some(pending.map_or(residual, |p| p.max(residual)));
            rec.max_rate_residual = rec.max_rate_residual.max(residual);
        }
        rec.steps += 1;
        rec.rejected_steps += out.halvings;
        for ev in &out.events {
            if ev.kind == EventKind::Collapse {
                rec.collapse_time = Some(ev.t);
            }
        }
        rec.events.append(&mut out.events);
        state = out.state;
        lp = new_lp;
        metrics = new_metrics;
        if rec.steps % cfg.record_every == 0 || state.is_collapsed() || state.t() >= cfg.t_max {
            rec.samples
                .push(sample(&state, &lp, &metrics, pending.take()));
        }
    }
    rec.final_state = state;
    Ok(rec)
}
