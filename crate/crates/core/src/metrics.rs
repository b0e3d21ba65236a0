//! Synchronization metrics computed from trajectories.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::integrate::{simulate, Settings, Topology, Trajectory};
use crate::network::{random_unit_directions, CouplingConfig, NetworkState};
use crate::scalar::Real;
use crate::systems::SystemSpec;
use crate::topology::{DirectedGraph, LEADER};

/// Fraction of the horizon averaged for the steady-state error.
pub const STEADY_FRACTION: f64 = 0.1;
/// Sub-threshold time required before convergence is declared.
pub const CONVERGENCE_HOLD: f64 = 1.0;
/// Minimum number of samples in the steady-state window of a trajectory.
pub const MIN_STEADY_SAMPLES: usize = 100;

/// Mean follower–leader distance of one stacked state.
pub fn sync_error<T: Real>(state: &[T], num_agents: usize, dim: usize) -> T {
    let leader = &state[LEADER * dim..(LEADER + 1) * dim];
    let mut total = T::zero();
    for i in 1..num_agents {
        let xi = &state[i * dim..(i + 1) * dim];
        let sq: T = xi.iter().zip(leader).map(|(&a, &b)| (a - b) * (a - b)).sum();
        total += sq.sqrt();
    }
    total / T::from_usize_lossy(num_agents - 1)
}

/// `E(t_k)` for every sample.
pub fn sync_error_series<T: Real>(traj: &Trajectory<T>) -> Result<Vec<T>> {
    if traj.num_agents() < 2 {
        return invalid("synchronization error needs at least two agents");
    }
    Ok((0..traj.len())
        .map(|k| sync_error(traj.state(k), traj.num_agents(), traj.dim()))
        .collect())
}

/// Mean of the last `fraction` of a series (at least one sample).
pub fn tail_mean<T: Real>(series: &[T], fraction: f64) -> Result<T> {
    let w = tail_len(series.len(), fraction)?;
    let tail = &series[series.len() - w..];
    Ok(tail.iter().copied().sum::<T>() / T::from_usize_lossy(w))
}

fn tail_len(len: usize, fraction: f64) -> Result<usize> {
    if len == 0 {
        return invalid("empty series");
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return invalid(format!("window fraction must lie in (0, 1], got {fraction}"));
    }
    Ok(((len as f64 * fraction).round() as usize).clamp(1, len))
}

/// Mean `E` over the final 10% of the trajectory.
pub fn steady_state_error<T: Real>(traj: &Trajectory<T>) -> Result<T> {
    steady_state_error_with(traj, STEADY_FRACTION)
}

pub fn steady_state_error_with<T: Real>(traj: &Trajectory<T>, fraction: f64) -> Result<T> {
    let series = sync_error_series(traj)?;
    let w = tail_len(series.len(), fraction)?;
    if w < MIN_STEADY_SAMPLES {
        return invalid(format!(
            "steady-state window holds {w} samples, need at least {MIN_STEADY_SAMPLES}"
        ));
    }
    tail_mean(&series, fraction)
}

/// First sample time from which `series` stays below `threshold` for `hold`
/// seconds. `None` if that never happens within the record.
pub fn convergence_time_series<T: Real>(times: &[T], series: &[T], threshold: T, hold: T) -> Option<T> {
    let mut start: Option<T> = None;
    for (&t, &e) in times.iter().zip(series) {
        if e < threshold {
            let s = *start.get_or_insert(t);
            if t - s >= hold {
                return Some(s);
            }
        } else {
            start = None;
        }
    }
    None
}

/// Convergence time with the default 1 s hold.
pub fn convergence_time<T: Real>(traj: &Trajectory<T>, threshold: T) -> Result<Option<T>> {
    let series = sync_error_series(traj)?;
    Ok(convergence_time_series(
        traj.times(),
        &series,
        threshold,
        T::lit(CONVERGENCE_HOLD),
    ))
}

/// Time-averaged follower–leader offsets over a final window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseOffsets<T> {
    /// One vector per follower, `c_i = mean(x_i − x_leader)`.
    pub offsets: Vec<Vec<T>>,
    /// Root-mean-square of `‖e_i(t) − c_i‖` over the window.
    pub fluctuation_std: Vec<T>,
    pub window: T,
    pub samples: usize,
}

impl<T: Real> PhaseOffsets<T> {
    pub fn offset_norms(&self) -> Vec<T> {
        self.offsets
            .iter()
            .map(|c| c.iter().map(|&v| v * v).sum::<T>().sqrt())
            .collect()
    }
}

pub fn phase_offsets<T: Real>(traj: &Trajectory<T>, window: T) -> Result<PhaseOffsets<T>> {
    if traj.num_agents() < 2 {
        return invalid("phase offsets need at least two agents");
    }
    if traj.is_empty() {
        return invalid("empty trajectory");
    }
    let horizon = traj.final_time() - traj.time(0);
    if !(window > T::zero()) || window > horizon * T::lit(0.5) {
        return invalid(format!(
            "offset window {window} must be positive and at most half of {horizon}"
        ));
    }
    let start_t = traj.final_time() - window;
    let first = traj.times().partition_point(|&t| t < start_t);
    let ks: Vec<usize> = (first..traj.len()).collect();
    let n = traj.dim();
    let followers = traj.num_agents() - 1;
    let count = T::from_usize_lossy(ks.len());
    let mut offsets = vec![vec![T::zero(); n]; followers];
    for &k in &ks {
        let leader = traj.agent(k, LEADER);
        for (f, c) in offsets.iter_mut().enumerate() {
            for ((cv, &x), &l) in c.iter_mut().zip(traj.agent(k, f + 1)).zip(leader) {
                *cv += x - l;
            }
        }
    }
    for c in &mut offsets {
        for v in c.iter_mut() {
            *v /= count;
        }
    }
    let mut fluct = vec![T::zero(); followers];
    for &k in &ks {
        let leader = traj.agent(k, LEADER);
        for (f, acc) in fluct.iter_mut().enumerate() {
            let sq: T = traj
                .agent(k, f + 1)
                .iter()
                .zip(leader)
                .zip(&offsets[f])
                .map(|((&x, &l), &c)| {
                    let d = x - l - c;
                    d * d
                })
                .sum();
            *acc += sq;
        }
    }
    for v in &mut fluct {
        *v = (*v / count).sqrt();
    }
    Ok(PhaseOffsets {
        offsets,
        fluctuation_std: fluct,
        window,
        samples: ks.len(),
    })
}

/// Everything the summary reports about synchronization quality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncMetrics {
    #[serde(skip)]
    pub error_series: Vec<f64>,
    pub steady_state_error: f64,
    pub convergence_time: Option<f64>,
    pub convergence_threshold: f64,
    pub offsets: Vec<Vec<f64>>,
    pub offset_fluctuation_std: Vec<f64>,
    pub final_error: f64,
    pub max_error: f64,
    pub diverged: bool,
    pub divergence_time: Option<f64>,
}

/// Options for [`sync_metrics`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsOptions {
    pub threshold: f64,
    pub steady_fraction: f64,
    /// Offset window as a fraction of the recorded horizon.
    pub offset_fraction: f64,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        Self {
            threshold: 1e-2,
            steady_fraction: STEADY_FRACTION,
            offset_fraction: STEADY_FRACTION,
        }
    }
}

/// Computes every metric over the recorded (possibly partial) trajectory.
pub fn sync_metrics<T: Real>(traj: &Trajectory<T>, opts: &MetricsOptions) -> Result<SyncMetrics> {
    let series = sync_error_series(traj)?;
    let steady = tail_mean(&series, opts.steady_fraction)?;
    let conv = convergence_time_series(traj.times(), &series, T::lit(opts.threshold), T::lit(CONVERGENCE_HOLD));
    let horizon = traj.final_time() - traj.time(0);
    let window = horizon * T::lit(opts.offset_fraction.min(0.5));
    let (offsets, fluct) = if window > T::zero() && traj.len() >= 2 {
        let p = phase_offsets(traj, window)?;
        (
            p.offsets
                .iter()
                .map(|c| c.iter().map(|v| v.as_f64()).collect())
                .collect(),
            p.fluctuation_std.iter().map(|v| v.as_f64()).collect(),
        )
    } else {
        (Vec::new(), Vec::new())
    };
    let error_series: Vec<f64> = series.iter().map(|v| v.as_f64()).collect();
    Ok(SyncMetrics {
        steady_state_error: steady.as_f64(),
        convergence_time: conv.map(|t| t.as_f64()),
        convergence_threshold: opts.threshold,
        offsets,
        offset_fluctuation_std: fluct,
        final_error: error_series.last().copied().unwrap_or(0.0),
        max_error: error_series.iter().copied().fold(0.0, f64::max),
        diverged: traj.diverged(),
        divergence_time: traj.divergence.as_ref().map(|d| d.time),
        error_series,
    })
}

/// Least-squares slope and intercept of `ln y` against `ln x`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return invalid("log-log fit needs at least two paired points");
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return invalid("log-log fit needs positive finite values");
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("log-log fit needs distinct x values");
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeterogeneityPoint {
    pub epsilon: f64,
    pub steady_state_error: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeterogeneityScaling {
    pub points: Vec<HeterogeneityPoint>,
    /// Log–log slope over non-diverged points; `None` if fewer than two.
    pub slope: Option<f64>,
    pub any_diverged: bool,
}

/// Runs the ε-perturbed network for each ε and fits how the steady error
/// scales. Directions are drawn once from `seed` and shared by every run.
pub fn heterogeneity_scaling<T: Real>(
    spec: &SystemSpec<T>,
    graph: &DirectedGraph<T>,
    base: &CouplingConfig<T>,
    x0: &NetworkState<T>,
    settings: &Settings<T>,
    epsilons: &[T],
    seed: u64,
) -> Result<HeterogeneityScaling> {
    if epsilons.is_empty() {
        return invalid("need at least one heterogeneity level");
    }
    if epsilons.iter().any(|&e| !(e > T::zero())) || epsilons.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("heterogeneity levels must be positive and increasing");
    }
    let dirs = random_unit_directions::<T>(graph.num_agents(), spec.dim(), seed);
    let mut points = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let cfg = base.clone().with_heterogeneity(eps, dirs.clone())?;
        let traj = simulate(spec, Topology::Fixed(graph), &cfg, x0, settings, seed)?;
        let series = sync_error_series(&traj)?;
        let steady = tail_mean(&series, STEADY_FRACTION)?.as_f64();
        points.push(HeterogeneityPoint {
            epsilon: eps.as_f64(),
            steady_state_error: steady,
            diverged: traj.diverged() || !steady.is_finite(),
        });
    }
    let ok: Vec<&HeterogeneityPoint> = points
        .iter()
        .filter(|p| !p.diverged && p.steady_state_error > 0.0)
        .collect();
    let slope = if ok.len() >= 2 {
        let xs: Vec<f64> = ok.iter().map(|p| p.epsilon).collect();
        let ys: Vec<f64> = ok.iter().map(|p| p.steady_state_error).collect();
        Some(fit_loglog_slope(&xs, &ys)?.0)
    } else {
        None
    };
    Ok(HeterogeneityScaling {
        any_diverged: points.iter().any(|p| p.diverged),
        points,
        slope,
    })
}
