use crate::diagnostics::homotopy::lift_loop;
use crate::engine::{PursuitLoop, TrajectoryRecord};
use crate::error::Result;
use crate::manifold::{Coords, Manifold, ManifoldPoint};
use crate::scalar::{cross, dot, norm, wrap_angle, Real};
use crate::spaces::{golden_min, plane_frame, ClosedGeodesicOracle, OracleCurve, OracleSelector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Collapsed,
    Converged,
    Undecided,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Collapsed => "collapsed",
            Verdict::Converged => "converged",
            Verdict::Undecided => "undecided",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceOptions<T> {
    /// Minimum number of loop samples; at least 64 per segment are used.
    pub grid: usize,
    /// Coarse offsets tried before golden-section refinement.
    pub offsets: usize,
    pub c_tolerance: T,
    /// `conv_dist < conv_rel * L` is required for convergence.
    pub conv_rel: T,
    /// `|l - L| < length_rel * L` is required for convergence.
    pub length_rel: T,
}

impl<T: Real> Default for ConvergenceOptions<T> {
    fn default() -> Self {
        ConvergenceOptions {
            grid: 512,
            offsets: 256,
            c_tolerance: T::lit(1e-12),
            conv_rel: T::lit(5e-3),
            length_rel: T::lit(1e-3),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport<T> {
    pub oracle: ClosedGeodesicOracle<T>,
    pub sup_dist_to_image: T,
    pub conv_dist: T,
    pub best_c: T,
    /// `l - L`.
    pub length_gap: T,
    pub samples: usize,
    pub offsets: usize,
    pub c_tolerance: T,
    pub verdict: Verdict,
}

/// Sample parameters: a uniform grid merged with the vertex parameters.
fn sample_params<T: Real>(lp: &PursuitLoop<T>, grid: usize) -> Vec<T> {
    let m = grid.max(64 * lp.segments().len()).max(1);
    let mut s: Vec<T> = (0..m).map(|k| T::of_usize(k) / T::of_usize(m)).collect();
    s.extend(lp.vertex_params());
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s.dedup_by(|a, b| (*a - *b).abs() < T::lit(1e-15));
    s
}

/// `sup_s f(s)` from grid values, refined by golden-section search around
/// the three largest local maxima.
fn refined_sup<T: Real>(
    params: &[T],
    values: &[T],
    mut f: impl FnMut(T) -> Result<T>,
) -> Result<T> {
    let m = params.len();
    let mut best = values.iter().copied().fold(T::zero(), T::max);
    if m < 3 {
        return Ok(best);
    }
    let mut peaks: Vec<usize> = (0..m)
        .filter(|&j| values[j] >= values[(j + m - 1) % m] && values[j] >= values[(j + 1) % m])
        .collect();
    peaks.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
    for &j in peaks.iter().take(3) {
        let lo = if j == 0 {
            params[m - 1] - T::one()
        } else {
            params[j - 1]
        };
        let hi = if j + 1 == m {
            params[0] + T::one()
        } else {
            params[j + 1]
        };
        let (_, neg) = golden_min(|s| f(s).map(|v| -v), lo, hi, T::lit(1e-12))?;
        best = best.max(-neg);
    }
    Ok(best)
}

/// `sup_s d(loop(s), image of the oracle)`.
pub fn sup_dist_to_image<T: Real, M: Manifold<T> + ?Sized>(
    space: &M,
    lp: &PursuitLoop<T>,
    oracle: &ClosedGeodesicOracle<T>,
    grid: usize,
) -> Result<T> {
    let params = sample_params(lp, grid);
    let values = params
        .iter()
        .map(|&s| oracle.image_distance(space, &lp.eval(space, s)?))
        .collect::<Result<Vec<_>>>()?;
    refined_sup(&params, &values, |s| {
        oracle.image_distance(space, &lp.eval(space, s)?)
    })
}

fn sup_at_offset<T: Real, M: Manifold<T> + ?Sized>(
    space: &M,
    lp: &PursuitLoop<T>,
    oracle: &ClosedGeodesicOracle<T>,
    params: &[T],
    points: &[ManifoldPoint<T>],
    c: T,
    exact: bool,
) -> Result<T> {
    let d = |p: &ManifoldPoint<T>, q: &ManifoldPoint<T>| {
        if exact {
            space.dist(p, q)
        } else {
            space.approx_dist(p, q)
        }
    };
    let values = params
        .iter()
        .zip(points)
        .map(|(&s, p)| d(p, &oracle.eval(space, s + c)?))
        .collect::<Result<Vec<_>>>()?;
    refined_sup(params, &values, |s| {
        d(&lp.eval(space, s)?, &oracle.eval(space, s + c)?)
    })
}

/// `inf_c sup_s d(loop(s), oracle(s + c))`, with the sup over a fine grid
/// and the inf over a coarse offset grid refined by golden section. The
/// search uses the space's cheap distance; the reported value is exact.
pub fn conv_distance<T: Real, M: Manifold<T> + ?Sized>(
    space: &M,
    lp: &PursuitLoop<T>,
    oracle: &ClosedGeodesicOracle<T>,
    opts: &ConvergenceOptions<T>,
) -> Result<ConvergenceReport<T>> {
    let params = sample_params(lp, opts.grid);
    let points = params
        .iter()
        .map(|&s| lp.eval(space, s))
        .collect::<Result<Vec<_>>>()?;
    let objective = |c: T| sup_at_offset(space, lp, oracle, &params, &points, c, false);
    let k = opts.offsets.max(1);
    let step = T::one() / T::of_usize(k);
    let mut coarse = (T::zero(), T::infinity());
    for j in 0..k {
        let c = T::of_usize(j) * step;
        let v = objective(c)?;
        if v < coarse.1 {
            coarse = (c, v);
        }
    }
    let (c, v) = golden_min(
        objective,
        coarse.0 - step,
        coarse.0 + step,
        opts.c_tolerance,
    )?;
    let best_c = if v < coarse.1 { c } else { coarse.0 };
    let best_c = best_c - best_c.floor();
    let conv_dist = sup_at_offset(space, lp, oracle, &params, &points, best_c, true)?;
    let sup_img = sup_dist_to_image(space, lp, oracle, opts.grid)?;
    let length = oracle.length();
    let length_gap = lp.length() - length;
    let verdict =
        if conv_dist < opts.conv_rel * length && length_gap.abs() < opts.length_rel * length {
            Verdict::Converged
        } else {
            Verdict::Undecided
        };
    Ok(ConvergenceReport {
        oracle: oracle.clone(),
        sup_dist_to_image: sup_img,
        conv_dist,
        best_c,
        length_gap,
        samples: params.len(),
        offsets: k,
        c_tolerance: opts.c_tolerance,
        verdict,
    })
}

/// Picks the member of the oracle family nearest to `lp`, oriented like it:
/// the torus line through the loop's centroid, the great circle of the
/// loop's mean plane, and the traversal direction in every case.
pub fn fit_oracle<T: Real, M: Manifold<T> + ?Sized>(
    space: &M,
    lp: &PursuitLoop<T>,
    selector: &OracleSelector<T>,
) -> Result<ClosedGeodesicOracle<T>> {
    let base = space.closed_geodesic(selector)?;
    if lp.is_point() {
        return Ok(base);
    }
    let curve = match base.curve() {
        OracleCurve::FlatLine { origin, velocity } => {
            let lift = lift_loop(space, lp)?;
            let dim = origin.len();
            let total: Coords<T> = (0..dim)
                .map(|j| lift[lift.len() - 1][j] - lift[0][j])
                .collect();
            let sign = if dot(&total, velocity) < T::zero() {
                -T::one()
            } else {
                T::one()
            };
            let velocity: Coords<T> = velocity.iter().map(|&v| v * sign).collect();
            let origin = if matches!(selector, OracleSelector::TorusClass(_)) {
                let mut acc: Coords<T> = (0..dim).map(|_| T::zero()).collect();
                for (w, seg) in lift.windows(2).zip(lp.segments()) {
                    for j in 0..dim {
                        acc[j] += seg.length() * T::half() * (w[0][j] + w[1][j]);
                    }
                }
                acc.iter().map(|&a| a / lp.length()).collect()
            } else {
                origin.clone()
            };
            OracleCurve::FlatLine { origin, velocity }
        }
        OracleCurve::GreatCircle { e1, e2, turns } => {
            let lift = lift_loop(space, lp)?;
            let mut n = [T::zero(); 3];
            for w in lift.windows(2) {
                let c = cross(&w[0], &w[1]);
                for j in 0..3 {
                    n[j] += c[j];
                }
            }
            if norm(&n) > T::lit(1e-12) {
                let (e1, e2) = plane_frame(&n)?;
                OracleCurve::GreatCircle {
                    e1,
                    e2,
                    turns: *turns,
                }
            } else {
                OracleCurve::GreatCircle {
                    e1: *e1,
                    e2: *e2,
                    turns: *turns,
                }
            }
        }
        OracleCurve::Parallel { z, phase, .. } => {
            let v = lp.vertices();
            let k = v.len();
            let winding = (0..k)
                .map(|i| wrap_angle(v[(i + 1) % k].coords()[1] - v[i].coords()[1]))
                .fold(T::zero(), |a, b| a + b);
            let direction = if winding < T::zero() {
                -T::one()
            } else {
                T::one()
            };
            OracleCurve::Parallel {
                z: *z,
                phase: *phase,
                direction,
            }
        }
        other => other.clone(),
    };
    Ok(base.with_curve(curve))
}

/// Verdict for a finished run, with the convergence report when an oracle
/// family is given.
#[derive(Clone, Debug, PartialEq)]
pub struct Assessment<T> {
    pub verdict: Verdict,
    pub report: Option<ConvergenceReport<T>>,
}

pub fn assess<T: Real, M: Manifold<T> + ?Sized>(
    space: &M,
    record: &TrajectoryRecord<T>,
    selector: Option<&OracleSelector<T>>,
    opts: &ConvergenceOptions<T>,
) -> Result<Assessment<T>> {
    if record.collapsed() {
        return Ok(Assessment {
            verdict: Verdict::Collapsed,
            report: None,
        });
    }
    let Some(selector) = selector else {
        return Ok(Assessment {
            verdict: Verdict::Undecided,
            report: None,
        });
    };
    let lp = PursuitLoop::from_state(space, &record.final_state)?;
    let oracle = fit_oracle(space, &lp, selector)?;
    let report = conv_distance(space, &lp, &oracle, opts)?;
    Ok(Assessment {
        verdict: report.verdict,
        report: Some(report),
    })
}
