//! Chaotic masking over a synchronized leader–follower pair.
//!
//! The transmitter sends `s = m + h(x_leader)`; the receiver recovers
//! `m̂ = s − h(x_follower)`. Recovery quality follows synchronization quality.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::integrate::{simulate, Settings, Topology};
use crate::metrics::{convergence_time_series, sync_error_series, CONVERGENCE_HOLD};
use crate::network::{CouplingConfig, NetworkState};
use crate::scalar::Real;
use crate::systems::SystemSpec;
use crate::topology::{DirectedGraph, LEADER};

/// Largest SNR improvement reported; stands in for an exact recovery.
pub const SNR_CAP_DB: f64 = 200.0;

/// The carrier function `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Masking {
    /// `h(x) = x₁`.
    #[default]
    FirstComponent,
    /// `h ≡ 0`; the channel carries the bare message.
    Zero,
}

impl Masking {
    pub fn apply<T: Real>(self, x: &[T]) -> T {
        match self {
            Masking::FirstComponent => x[0],
            Masking::Zero => T::zero(),
        }
    }
}

/// `m(t) = amplitude·sin(2π·frequency·t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SineMessage {
    pub amplitude: f64,
    pub frequency: f64,
}

impl Default for SineMessage {
    fn default() -> Self {
        Self {
            amplitude: 0.8,
            frequency: 2.0,
        }
    }
}

impl SineMessage {
    pub fn at<T: Real>(&self, t: T) -> T {
        T::lit(self.amplitude * (2.0 * PI * self.frequency * t.as_f64()).sin())
    }

    pub fn describe(&self) -> String {
        format!("{}*sin(2*pi*{}*t)", self.amplitude, self.frequency)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaskedSignal<T> {
    pub times: Vec<T>,
    pub samples: Vec<T>,
    pub message: String,
    pub masking: Masking,
}

/// `s_k = m_k + h(x_leader(t_k))`.
pub fn mask<T: Real, S: AsRef<[T]>>(
    times: &[T],
    message: &[T],
    leader_states: &[S],
    masking: Masking,
    description: impl Into<String>,
) -> Result<MaskedSignal<T>> {
    if message.len() != leader_states.len() || times.len() != message.len() {
        return invalid(format!(
            "mask: {} times, {} message samples, {} leader states",
            times.len(),
            message.len(),
            leader_states.len()
        ));
    }
    let samples = message
        .iter()
        .zip(leader_states)
        .map(|(&m, x)| m + masking.apply(x.as_ref()))
        .collect();
    Ok(MaskedSignal {
        times: times.to_vec(),
        samples,
        message: description.into(),
        masking,
    })
}

/// `m̂_k = s_k − h(x_follower(t_k))`.
pub fn demask<T: Real, S: AsRef<[T]>>(signal: &MaskedSignal<T>, follower_states: &[S]) -> Result<Vec<T>> {
    if signal.samples.len() != follower_states.len() {
        return invalid(format!(
            "demask: {} masked samples, {} follower states",
            signal.samples.len(),
            follower_states.len()
        ));
    }
    Ok(signal
        .samples
        .iter()
        .zip(follower_states)
        .map(|(&s, x)| s - signal.masking.apply(x.as_ref()))
        .collect())
}

fn mean_square_diff<T: Real>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y).as_f64().powi(2)).sum::<f64>() / a.len() as f64
}

/// `SNR_out − SNR_in` in dB, clamped to `±SNR_CAP_DB`.
pub fn snr_improvement_db<T: Real>(message: &[T], masked: &[T], recovered: &[T]) -> Result<f64> {
    if message.len() != masked.len() || message.len() != recovered.len() {
        return invalid("SNR: series lengths differ");
    }
    if message.is_empty() {
        return invalid("SNR: empty series");
    }
    let pm = message.iter().map(|v| v.as_f64().powi(2)).sum::<f64>() / message.len() as f64;
    if !(pm > 0.0) {
        return invalid("SNR: message has zero power");
    }
    let p_in = mean_square_diff(masked, message);
    let p_out = mean_square_diff(recovered, message);
    let improvement = match (p_in == 0.0, p_out == 0.0) {
        (true, true) => 0.0,
        (_, true) => SNR_CAP_DB,
        (true, false) => -SNR_CAP_DB,
        // 10·log10(pm/p_out) − 10·log10(pm/p_in)
        (false, false) => 10.0 * (p_in / p_out).log10(),
    };
    Ok(improvement.clamp(-SNR_CAP_DB, SNR_CAP_DB))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DemoOptions {
    pub message: SineMessage,
    pub masking: Masking,
    /// Threshold on `E` used to detect synchronization.
    pub sync_threshold: f64,
    /// Delay after convergence before the message starts.
    pub settle: f64,
    /// Length of the evaluated message.
    pub duration: f64,
}

impl Default for DemoOptions {
    fn default() -> Self {
        Self {
            message: SineMessage::default(),
            masking: Masking::FirstComponent,
            sync_threshold: 1e-2,
            settle: 2.0,
            duration: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoResult {
    #[serde(skip)]
    pub times: Vec<f64>,
    #[serde(skip)]
    pub message: Vec<f64>,
    #[serde(skip)]
    pub masked: Vec<f64>,
    #[serde(skip)]
    pub recovered: Vec<f64>,
    pub message_description: String,
    pub masking: Masking,
    pub snr_improvement_db: f64,
    pub convergence_time: Option<f64>,
    pub window_start: f64,
    pub window_end: f64,
    pub max_recovery_error: f64,
    /// Largest `|h(x_follower) − h(x_leader)|` in the window.
    pub max_carrier_gap: f64,
    pub recovery_bound_holds: bool,
    /// Synchronization was not reached, or the run diverged.
    pub degraded: bool,
    pub diverged: bool,
}

/// Simulates a leader–follower pair and sends the demo message through the
/// masked channel once the pair has synchronized.
pub fn run_demo<T: Real>(
    spec: &SystemSpec<T>,
    cfg: &CouplingConfig<T>,
    x0: &NetworkState<T>,
    settings: &Settings<T>,
    seed: u64,
    opts: &DemoOptions,
) -> Result<DemoResult> {
    if x0.num_agents() != 2 {
        return invalid(format!(
            "secure communication needs exactly two agents, got {}",
            x0.num_agents()
        ));
    }
    if !(opts.duration > 0.0) || !(opts.settle >= 0.0) {
        return invalid("message duration must be positive and settle time nonnegative");
    }
    let graph = DirectedGraph::chain(2)?;
    let traj = simulate(spec, Topology::Fixed(&graph), cfg, x0, settings, seed)?;
    if traj.len() < 2 {
        return invalid("horizon too short for a message window");
    }
    let series = sync_error_series(&traj)?;
    let conv = convergence_time_series(
        traj.times(),
        &series,
        T::lit(opts.sync_threshold),
        T::lit(CONVERGENCE_HOLD),
    )
    .map(|t| t.as_f64());
    let end = traj.final_time().as_f64();
    let mut degraded = traj.diverged();
    let mut start = match conv {
        Some(c) => c + opts.settle,
        None => {
            degraded = true;
            end - opts.duration
        }
    };
    if start + opts.duration > end + 1e-9 {
        degraded = true;
        start = (end - opts.duration).max(traj.time(0).as_f64());
    }
    let stop = start + opts.duration;
    let ks: Vec<usize> = (0..traj.len())
        .filter(|&k| {
            let t = traj.time(k).as_f64();
            t >= start - 1e-12 && t <= stop + 1e-12
        })
        .collect();
    if ks.is_empty() {
        return invalid("message window holds no samples");
    }
    let times: Vec<T> = ks.iter().map(|&k| traj.time(k)).collect();
    let message: Vec<T> = times.iter().map(|&t| opts.message.at(t)).collect();
    let leader: Vec<&[T]> = ks.iter().map(|&k| traj.agent(k, LEADER)).collect();
    let follower: Vec<&[T]> = ks.iter().map(|&k| traj.agent(k, 1)).collect();
    let signal = mask(&times, &message, &leader, opts.masking, opts.message.describe())?;
    let recovered = demask(&signal, &follower)?;
    let snr = snr_improvement_db(&message, &signal.samples, &recovered)?;

    let max_err = recovered
        .iter()
        .zip(&message)
        .map(|(&a, &b)| (a - b).abs().as_f64())
        .fold(0.0, f64::max);
    let max_gap = leader
        .iter()
        .zip(&follower)
        .map(|(l, f)| (opts.masking.apply(f) - opts.masking.apply(l)).abs().as_f64())
        .fold(0.0, f64::max);
    let scale = signal.samples.iter().map(|v| v.abs().as_f64()).fold(1.0, f64::max);
    let tol = 16.0 * T::epsilon().as_f64() * scale;

    Ok(DemoResult {
        times: times.iter().map(|t| t.as_f64()).collect(),
        message: message.iter().map(|v| v.as_f64()).collect(),
        masked: signal.samples.iter().map(|v| v.as_f64()).collect(),
        recovered: recovered.iter().map(|v| v.as_f64()).collect(),
        message_description: signal.message.clone(),
        masking: opts.masking,
        snr_improvement_db: snr,
        convergence_time: conv,
        window_start: start,
        window_end: stop,
        max_recovery_error: max_err,
        max_carrier_gap: max_gap,
        recovery_bound_holds: max_err <= max_gap + tol,
        degraded,
        diverged: traj.diverged(),
    })
}
