//! Fixed-step integration of the coupled network.
//!
//! * ODE: classical RK4.
//! * DDE: RK4 by the method of steps; delayed states come from a
//!   [`HistoryBuffer`] with linear interpolation and a constant pre-history.
//! * SDE: Euler–Maruyama (explicit Euler drift plus a Brownian increment).
//!
//! All paths are bitwise deterministic for fixed inputs and seed. A run stops
//! early when a state component becomes non-finite or exceeds
//! [`DIVERGENCE_THRESHOLD`]; the partial trajectory is kept and flagged.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::network::{fill_noise_increment, CoupledField, CouplingConfig, DelayPlacement, NetworkState, StateHistory};
use crate::scalar::Real;
use crate::systems::SystemSpec;
use crate::topology::{DirectedGraph, SwitchingSchedule};

pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

/// Default step for ODE and DDE runs.
pub const DEFAULT_DT: f64 = 1e-3;
/// Default step for SDE runs.
pub const DEFAULT_SDE_DT: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    pub time: f64,
    pub reason: String,
}

impl From<Divergence> for Error {
    fn from(d: Divergence) -> Self {
        Error::Divergence {
            time: d.time,
            reason: d.reason,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulationMode {
    Ode,
    Dde,
    Sde,
}

/// Step size, horizon and recording stride.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings<T> {
    pub dt: T,
    pub horizon: T,
    /// Keep every `record_every`-th step (the final step is always kept).
    pub record_every: usize,
}

impl<T: Real> Settings<T> {
    pub fn new(dt: T, horizon: T) -> Result<Self> {
        let s = Self {
            dt,
            horizon,
            record_every: 1,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn record_every(mut self, stride: usize) -> Self {
        self.record_every = stride.max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return invalid(format!("step must be positive, got {}", self.dt));
        }
        if !(self.horizon >= T::zero()) || !self.horizon.is_finite() {
            return invalid(format!("horizon must be nonnegative, got {}", self.horizon));
        }
        if self.record_every == 0 {
            return invalid("record stride must be >= 1");
        }
        Ok(())
    }

    pub fn num_steps(&self) -> usize {
        (self.horizon / self.dt).round().to_usize().unwrap_or(0)
    }
}

/// Snapshot of the run configuration stored alongside the samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryMeta {
    pub mode: SimulationMode,
    pub dt: f64,
    pub record_every: usize,
    pub seed: Option<u64>,
    pub alpha: f64,
    pub delay: f64,
    pub delay_placement: DelayPlacement,
    pub noise_variance: f64,
    pub heterogeneity: f64,
    pub switching: bool,
}

/// Sampled network states on a uniform time grid.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    times: Vec<T>,
    data: Vec<T>,
    num_agents: usize,
    dim: usize,
    pub meta: TrajectoryMeta,
    pub divergence: Option<Divergence>,
}

impl<T: Real> Trajectory<T> {
    /// Builds a trajectory from recorded samples; used by tests and tools
    /// that post-process externally generated states.
    pub fn from_samples(
        times: Vec<T>,
        states: Vec<Vec<T>>,
        num_agents: usize,
        dim: usize,
        meta: TrajectoryMeta,
    ) -> Result<Self> {
        if times.len() != states.len() {
            return invalid(format!("{} times but {} states", times.len(), states.len()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("sample times must be strictly increasing");
        }
        let mut data = Vec::with_capacity(states.len() * num_agents * dim);
        for (k, s) in states.iter().enumerate() {
            if s.len() != num_agents * dim {
                return invalid(format!(
                    "sample {k} has {} values, expected {}",
                    s.len(),
                    num_agents * dim
                ));
            }
            data.extend_from_slice(s);
        }
        Ok(Self {
            times,
            data,
            num_agents,
            dim,
            meta,
            divergence: None,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn time(&self, k: usize) -> T {
        self.times[k]
    }

    /// Stacked state of sample `k`.
    pub fn state(&self, k: usize) -> &[T] {
        let w = self.num_agents * self.dim;
        &self.data[k * w..(k + 1) * w]
    }

    pub fn agent(&self, k: usize, i: usize) -> &[T] {
        let s = self.state(k);
        &s[i * self.dim..(i + 1) * self.dim]
    }

    pub fn network_state(&self, k: usize) -> NetworkState<T> {
        NetworkState::new(self.times[k], self.num_agents, self.dim, self.state(k).to_vec())
            .expect("consistent by construction")
    }

    /// Spacing between consecutive samples.
    pub fn sample_interval(&self) -> T {
        T::lit(self.meta.dt) * T::from_usize_lossy(self.meta.record_every)
    }

    pub fn final_time(&self) -> T {
        self.times.last().copied().unwrap_or_else(T::zero)
    }

    pub fn diverged(&self) -> bool {
        self.divergence.is_some()
    }

    /// `Err(Error::Divergence)` if the run was cut short.
    pub fn into_result(self) -> Result<Self> {
        match self.divergence.clone() {
            Some(d) => Err(d.into()),
            None => Ok(self),
        }
    }
}

/// Scratch space for classical RK4 on a flat state vector.
pub struct Rk4<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T: Real> Rk4<T> {
    pub fn new(len: usize) -> Self {
        Self {
            k1: vec![T::zero(); len],
            k2: vec![T::zero(); len],
            k3: vec![T::zero(); len],
            k4: vec![T::zero(); len],
            tmp: vec![T::zero(); len],
        }
    }

    /// Advances `x` from `t` to `t + dt` in place. On divergence `x` is left
    /// unchanged.
    pub fn step<F>(&mut self, mut field: F, t: T, x: &mut [T], dt: T) -> std::result::Result<(), Divergence>
    where
        F: FnMut(T, &[T], &mut [T]),
    {
        let half = T::lit(0.5) * dt;
        let sixth = dt / T::lit(6.0);
        let two = T::lit(2.0);

        field(t, x, &mut self.k1);
        check_finite(&self.k1, t, "derivative")?;
        for ((o, &xi), &k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k1) {
            *o = xi + half * k;
        }
        field(t + half, &self.tmp, &mut self.k2);
        check_finite(&self.k2, t, "derivative")?;
        for ((o, &xi), &k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k2) {
            *o = xi + half * k;
        }
        field(t + half, &self.tmp, &mut self.k3);
        check_finite(&self.k3, t, "derivative")?;
        for ((o, &xi), &k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k3) {
            *o = xi + dt * k;
        }
        field(t + dt, &self.tmp, &mut self.k4);
        check_finite(&self.k4, t, "derivative")?;

        for i in 0..x.len() {
            self.tmp[i] = x[i] + sixth * (self.k1[i] + two * self.k2[i] + two * self.k3[i] + self.k4[i]);
        }
        check_bounded(&self.tmp, t + dt)?;
        x.copy_from_slice(&self.tmp);
        Ok(())
    }
}

fn check_finite<T: Real>(v: &[T], t: T, what: &str) -> std::result::Result<(), Divergence> {
    match v.iter().position(|x| !x.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Divergence {
            time: t.as_f64(),
            reason: format!("non-finite {what} in component {i}"),
        }),
    }
}

fn check_bounded<T: Real>(v: &[T], t: T) -> std::result::Result<(), Divergence> {
    let limit = T::lit(DIVERGENCE_THRESHOLD);
    match v.iter().position(|x| !x.is_finite() || x.abs() > limit) {
        None => Ok(()),
        Some(i) => Err(Divergence {
            time: t.as_f64(),
            reason: format!(
                "state component {i} = {:e} exceeds the divergence threshold {DIVERGENCE_THRESHOLD:e}",
                v[i].as_f64()
            ),
        }),
    }
}

/// One classical RK4 step of an arbitrary autonomous-in-form field
/// `field(t, x, out)`.
pub fn rk4_step<T, F>(field: F, x: &NetworkState<T>, dt: T) -> Result<NetworkState<T>>
where
    T: Real,
    F: FnMut(T, &[T], &mut [T]),
{
    if !(dt > T::zero()) {
        return invalid(format!("step must be positive, got {dt}"));
    }
    let mut rk = Rk4::new(x.as_slice().len());
    let mut next = x.clone();
    rk.step(field, x.time, next.as_mut_slice(), dt)?;
    next.time = x.time + dt;
    Ok(next)
}

/// Past network states on the integration grid `t_k = k·dt`, enough to cover
/// the delay window. Queries before `t = 0` return the initial state.
#[derive(Debug, Clone)]
pub struct HistoryBuffer<T> {
    dt: T,
    initial: Vec<T>,
    samples: VecDeque<Vec<T>>,
    /// Grid index of `samples[0]`.
    first_index: usize,
    capacity: usize,
}

impl<T: Real> HistoryBuffer<T> {
    pub fn new(initial: Vec<T>, dt: T, delay: T) -> Self {
        let span = (delay / dt).ceil().to_usize().unwrap_or(0);
        let capacity = span + 3;
        let mut samples = VecDeque::with_capacity(capacity);
        samples.push_back(initial.clone());
        Self {
            dt,
            initial,
            samples,
            first_index: 0,
            capacity,
        }
    }

    /// Appends the state at the next grid point.
    pub fn push(&mut self, state: &[T]) {
        if self.samples.len() == self.capacity {
            let mut recycled = self.samples.pop_front().expect("nonempty");
            recycled.copy_from_slice(state);
            self.samples.push_back(recycled);
            self.first_index += 1;
        } else {
            self.samples.push_back(state.to_vec());
        }
    }

    pub fn latest_time(&self) -> T {
        T::from_usize_lossy(self.first_index + self.samples.len() - 1) * self.dt
    }

    fn sample(&self, index: usize) -> &[T] {
        &self.samples[index - self.first_index]
    }
}

impl<T: Real> StateHistory<T> for HistoryBuffer<T> {
    fn states_at(&self, s: T, out: &mut [T]) -> Result<()> {
        if s <= T::zero() {
            out.copy_from_slice(&self.initial);
            return Ok(());
        }
        let pos = s / self.dt;
        let k = pos.floor().to_usize().unwrap_or(usize::MAX);
        let latest = self.first_index + self.samples.len() - 1;
        if k < self.first_index {
            return Err(Error::InvalidState(format!(
                "history query at t = {s} precedes the retained window starting at t = {}",
                T::from_usize_lossy(self.first_index) * self.dt
            )));
        }
        if k >= latest {
            // Inside the current step (delay shorter than the step): extend
            // the last segment linearly.
            let last = self.sample(latest);
            if latest == self.first_index {
                out.copy_from_slice(last);
                return Ok(());
            }
            let prev = self.sample(latest - 1);
            let w = pos - T::from_usize_lossy(latest);
            for ((o, &a), &b) in out.iter_mut().zip(prev).zip(last) {
                *o = b + w * (b - a);
            }
            return Ok(());
        }
        let w = pos - T::from_usize_lossy(k);
        let a = self.sample(k);
        let b = self.sample(k + 1);
        for ((o, &a), &b) in out.iter_mut().zip(a).zip(b) {
            *o = a + w * (b - a);
        }
        Ok(())
    }
}

/// Where the DDE integrator takes delayed states from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HistorySource {
    #[default]
    Recorded,
    /// Every delayed query returns the state being evaluated, which turns the
    /// delayed system back into the undelayed one. Test hook.
    CurrentState,
}

/// Fixed topology or a switching schedule.
#[derive(Debug, Clone, Copy)]
pub enum Topology<'a, T: Real> {
    Fixed(&'a DirectedGraph<T>),
    Switching(&'a SwitchingSchedule<T>),
}

impl<'a, T: Real> Topology<'a, T> {
    pub fn num_agents(&self) -> usize {
        match self {
            Topology::Fixed(g) => g.num_agents(),
            Topology::Switching(s) => s.num_agents(),
        }
    }

    fn initial_graph(&self) -> &'a DirectedGraph<T> {
        match *self {
            Topology::Fixed(g) => g,
            Topology::Switching(s) => &s.graphs()[s.segments()[0].1],
        }
    }
}

struct Recorder<T> {
    times: Vec<T>,
    data: Vec<T>,
    stride: usize,
}

impl<T: Real> Recorder<T> {
    fn new(settings: &Settings<T>, width: usize) -> Self {
        let n = settings.num_steps() / settings.record_every + 2;
        Self {
            times: Vec::with_capacity(n),
            data: Vec::with_capacity(n * width),
            stride: settings.record_every,
        }
    }

    fn record(&mut self, step: usize, dt: T, x: &[T], last: bool) {
        if step.is_multiple_of(self.stride) || last {
            self.times.push(T::from_usize_lossy(step) * dt);
            self.data.extend_from_slice(x);
        }
    }
}

fn meta_for<T: Real>(
    mode: SimulationMode,
    cfg: &CouplingConfig<T>,
    settings: &Settings<T>,
    seed: Option<u64>,
    topology: &Topology<'_, T>,
) -> TrajectoryMeta {
    TrajectoryMeta {
        mode,
        dt: settings.dt.as_f64(),
        record_every: settings.record_every,
        seed,
        alpha: cfg.alpha.as_f64(),
        delay: cfg.delay.as_f64(),
        delay_placement: cfg.delay_placement,
        noise_variance: cfg.noise_variance.as_f64(),
        heterogeneity: cfg.heterogeneity.as_f64(),
        switching: matches!(topology, Topology::Switching(_)),
    }
}

fn check_inputs<T: Real>(
    spec: &SystemSpec<T>,
    topology: &Topology<'_, T>,
    x0: &NetworkState<T>,
    settings: &Settings<T>,
) -> Result<()> {
    settings.validate()?;
    if x0.num_agents() != topology.num_agents() {
        return invalid(format!(
            "initial state has {} agents, topology has {}",
            x0.num_agents(),
            topology.num_agents()
        ));
    }
    if x0.dim() != spec.dim() {
        return invalid(format!(
            "initial state dimension {}, system dimension {}",
            x0.dim(),
            spec.dim()
        ));
    }
    if let Err(d) = check_bounded(x0.as_slice(), T::zero()) {
        return invalid(format!("initial state rejected: {}", d.reason));
    }
    Ok(())
}

/// Keeps the field's graph in sync with a switching schedule.
struct GraphTracker<'a, T: Real> {
    topology: Topology<'a, T>,
    current: usize,
}

impl<'a, T: Real> GraphTracker<'a, T> {
    fn new(topology: Topology<'a, T>) -> Self {
        let current = match topology {
            Topology::Fixed(_) => 0,
            Topology::Switching(s) => s.segments()[0].1,
        };
        Self { topology, current }
    }

    fn update(&mut self, field: &mut CoupledField<'_, T>, t: T) -> Result<()> {
        if let Topology::Switching(s) = self.topology {
            let idx = s.graph_index_at(t);
            if idx != self.current {
                field.set_graph(&s.graphs()[idx])?;
                self.current = idx;
            }
        }
        Ok(())
    }
}

fn finish<T: Real>(
    rec: Recorder<T>,
    x0: &NetworkState<T>,
    meta: TrajectoryMeta,
    divergence: Option<Divergence>,
) -> Trajectory<T> {
    Trajectory {
        times: rec.times,
        data: rec.data,
        num_agents: x0.num_agents(),
        dim: x0.dim(),
        meta,
        divergence,
    }
}

fn run_ode<T: Real>(
    spec: &SystemSpec<T>,
    topology: Topology<'_, T>,
    cfg: &CouplingConfig<T>,
    x0: &NetworkState<T>,
    settings: &Settings<T>,
) -> Result<Trajectory<T>> {
    check_inputs(spec, &topology, x0, settings)?;
    let mut field = CoupledField::new(spec, topology.initial_graph(), cfg)?;
    let mut tracker = GraphTracker::new(topology);
    let mut x = x0.as_slice().to_vec();
    let mut rk = Rk4::new(x.len());
    let steps = settings.num_steps();
    let dt = settings.dt;
    let mut rec = Recorder::new(settings, x.len());
    rec.record(0, dt, &x, steps == 0);
    let mut divergence = None;
    for k in 0..steps {
        let t = T::from_usize_lossy(k) * dt;
        tracker.update(&mut field, t)?;
        if let Err(d) = rk.step(|_, y, out| field.eval(y, out), t, &mut x, dt) {
            divergence = Some(d);
            break;
        }
        rec.record(k + 1, dt, &x, k + 1 == steps);
    }
    let meta = meta_for(SimulationMode::Ode, cfg, settings, None, &topology);
    Ok(finish(rec, x0, meta, divergence))
}

fn run_dde<T: Real>(
    spec: &SystemSpec<T>,
    topology: Topology<'_, T>,
    cfg: &CouplingConfig<T>,
    x0: &NetworkState<T>,
    settings: &Settings<T>,
    source: HistorySource,
) -> Result<Trajectory<T>> {
    check_inputs(spec, &topology, x0, settings)?;
    let mut field = CoupledField::new(spec, topology.initial_graph(), cfg)?;
    let mut tracker = GraphTracker::new(topology);
    let mut x = x0.as_slice().to_vec();
    let mut rk = Rk4::new(x.len());
    let mut delayed = vec![T::zero(); x.len()];
    let mut history = HistoryBuffer::new(x.clone(), settings.dt, cfg.delay);
    let steps = settings.num_steps();
    let dt = settings.dt;
    let tau = cfg.delay;
    let mut rec = Recorder::new(settings, x.len());
    rec.record(0, dt, &x, steps == 0);
    let mut divergence = None;
    for k in 0..steps {
        let t = T::from_usize_lossy(k) * dt;
        tracker.update(&mut field, t)?;
        let mut lookup_err = None;
        let res = rk.step(
            |s, y, out| {
                match source {
                    HistorySource::Recorded => {
                        if let Err(e) = history.states_at(s - tau, &mut delayed) {
                            lookup_err.get_or_insert(e);
                        }
                    }
                    HistorySource::CurrentState => delayed.copy_from_slice(y),
                }
                field.eval_delayed(y, &delayed, out);
            },
            t,
            &mut x,
            dt,
        );
        if let Some(e) = lookup_err {
            return Err(e);
        }
        if let Err(d) = res {
            divergence = Some(d);
            break;
        }
        history.push(&x);
        rec.record(k + 1, dt, &x, k + 1 == steps);
    }
    let meta = meta_for(SimulationMode::Dde, cfg, settings, None, &topology);
    Ok(finish(rec, x0, meta, divergence))
}

fn run_sde<T: Real>(
    spec: &SystemSpec<T>,
    topology: Topology<'_, T>,
    cfg: &CouplingConfig<T>,
    x0: &NetworkState<T>,
    settings: &Settings<T>,
    seed: u64,
) -> Result<Trajectory<T>> {
    check_inputs(spec, &topology, x0, settings)?;
    if cfg.is_delayed() {
        return invalid("stochastic integration with a communication delay is not supported");
    }
    let mut field = CoupledField::new(spec, topology.initial_graph(), cfg)?;
    let mut tracker = GraphTracker::new(topology);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = x0.as_slice().to_vec();
    let mut drift = vec![T::zero(); x.len()];
    let mut dw = vec![T::zero(); x.len()];
    let steps = settings.num_steps();
    let dt = settings.dt;
    let mut rec = Recorder::new(settings, x.len());
    rec.record(0, dt, &x, steps == 0);
    let mut divergence = None;
    for k in 0..steps {
        let t = T::from_usize_lossy(k) * dt;
        tracker.update(&mut field, t)?;
        field.eval(&x, &mut drift);
        if let Err(d) = check_finite(&drift, t, "drift") {
            divergence = Some(d);
            break;
        }
        fill_noise_increment(cfg, dt, &mut rng, &mut dw);
        for ((xi, &f), &w) in x.iter_mut().zip(&drift).zip(&dw) {
            *xi += dt * f + w;
        }
        if let Err(d) = check_bounded(&x, t + dt) {
            divergence = Some(d);
            break;
        }
        rec.record(k + 1, dt, &x, k + 1 == steps);
    }
    let meta = meta_for(SimulationMode::Sde, cfg, settings, Some(seed), &topology);
    Ok(finish(rec, x0, meta, divergence))
}

/// RK4 integration of the undelayed, noise-free network.
pub fn integrate_ode<T: Real>(
    spec: &SystemSpec<T>,
    graph: &DirectedGraph<T>,
    cfg: &CouplingConfig<T>,
    x0: &NetworkState<T>,
    settings: &Settings<T>,
) -> Result<Trajectory<T>> {
    if cfg.is_delayed() || cfg.is_noisy() {
        return invalid("integrate_ode needs zero delay and zero noise");
    }
    run_ode(spec, Topology::Fixed(graph), cfg, x0, settings)
}

/// Method-of-steps RK4 for the delayed network, constant pre-history `x0`.
pub fn integrate_dde<T: Real>(
    spec: &SystemSpec<T>,
    graph: &DirectedGraph<T>,
    cfg: &CouplingConfig<T>,
    x0: &NetworkState<T>,
    settings: &Settings<T>,
) -> Result<Trajectory<T>> {
    integrate_dde_with(spec, graph, cfg, x0, settings, HistorySource::Recorded)
}

pub fn integrate_dde_with<T: Real>(
    spec: &SystemSpec<T>,
    graph: &DirectedGraph<T>,
    cfg: &CouplingConfig<T>,
    x0: &NetworkState<T>,
    settings: &Settings<T>,
    source: HistorySource,
) -> Result<Trajectory<T>> {
    if !cfg.is_delayed() {
        return invalid("integrate_dde needs a positive delay");
    }
    if cfg.is_noisy() {
        return invalid("integrate_dde does not support noise");
    }
    run_dde(spec, Topology::Fixed(graph), cfg, x0, settings, source)
}

/// Euler–Maruyama integration with additive noise of variance `σ²` per unit
/// time. `σ² = 0` reduces to explicit Euler.
pub fn integrate_sde<T: Real>(
    spec: &SystemSpec<T>,
    graph: &DirectedGraph<T>,
    cfg: &CouplingConfig<T>,
    x0: &NetworkState<T>,
    settings: &Settings<T>,
    seed: u64,
) -> Result<Trajectory<T>> {
    run_sde(spec, Topology::Fixed(graph), cfg, x0, settings, seed)
}

/// Picks the integrator from the coupling: delay → DDE, noise → SDE,
/// otherwise RK4. Works with fixed and switching topologies.
pub fn simulate<T: Real>(
    spec: &SystemSpec<T>,
    topology: Topology<'_, T>,
    cfg: &CouplingConfig<T>,
    x0: &NetworkState<T>,
    settings: &Settings<T>,
    seed: u64,
) -> Result<Trajectory<T>> {
    match (cfg.is_delayed(), cfg.is_noisy()) {
        (true, true) => invalid("delay and noise together are not supported"),
        (true, false) => run_dde(spec, topology, cfg, x0, settings, HistorySource::Recorded),
        (false, true) => run_sde(spec, topology, cfg, x0, settings, seed),
        (false, false) => run_ode(spec, topology, cfg, x0, settings),
    }
}

/// Integrates a single uncoupled agent with RK4 and returns every
/// `stride`-th state after `transient` seconds.
pub fn integrate_single<T: Real>(
    spec: &SystemSpec<T>,
    x0: &[T],
    dt: T,
    steps: usize,
) -> std::result::Result<Vec<T>, Divergence> {
    let mut x = x0.to_vec();
    let mut rk = Rk4::new(x.len());
    for k in 0..steps {
        let t = T::from_usize_lossy(k) * dt;
        rk.step(|_, y, out| spec.vector_field_into(y, out), t, &mut x, dt)?;
    }
    Ok(x)
}
