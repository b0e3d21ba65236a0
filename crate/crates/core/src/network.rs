//! Coupled leader–follower vector fields.
//!
//! The leader evolves as `ẋ_0 = L x_0 + G(x_0)`. Follower `i` adds the
//! nonlinear coupling `α Σ_j a_ij (G(x_j) − G(x_i))`, optionally with
//! communication delay, additive noise and a constant heterogeneity offset.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::systems::SystemSpec;
use crate::topology::{DirectedGraph, LEADER};

/// Which transmitted quantities are aged by the communication delay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayPlacement {
    /// Both terms of every coupling difference use `t − τ` states:
    /// `G(x_j(t−τ)) − G(x_i(t−τ))`. Identical histories cancel exactly, so
    /// the synchronization manifold stays invariant.
    #[default]
    Uniform,
    /// Neighbour states are delayed, the receiver's own state is current:
    /// `G(x_j(t−τ)) − G(x_i(t))`.
    NeighborsOnly,
    /// Only signals sent by the leader are delayed; follower-to-follower
    /// links are instantaneous.
    LeaderLinkOnly,
}

/// Coupling gain, delay, noise level and heterogeneity of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingConfig<T> {
    pub alpha: T,
    /// Communication delay τ in seconds; 0 disables the delay path.
    pub delay: T,
    pub delay_placement: DelayPlacement,
    /// σ², variance per unit time of the additive noise on every state.
    pub noise_variance: T,
    /// ε, magnitude of the constant per-follower offset `ε u_i`.
    pub heterogeneity: T,
    /// Unit directions `u_i`, one per agent; the leader's entry is ignored.
    pub directions: Vec<Vec<T>>,
}

impl<T: Real> CouplingConfig<T> {
    pub fn new(alpha: T) -> Result<Self> {
        let cfg = Self {
            alpha,
            delay: T::zero(),
            delay_placement: DelayPlacement::Uniform,
            noise_variance: T::zero(),
            heterogeneity: T::zero(),
            directions: Vec::new(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_delay(mut self, delay: T, placement: DelayPlacement) -> Result<Self> {
        self.delay = delay;
        self.delay_placement = placement;
        self.validate()?;
        Ok(self)
    }

    pub fn with_noise(mut self, variance: T) -> Result<Self> {
        self.noise_variance = variance;
        self.validate()?;
        Ok(self)
    }

    pub fn with_heterogeneity(mut self, epsilon: T, directions: Vec<Vec<T>>) -> Result<Self> {
        self.heterogeneity = epsilon;
        self.directions = directions;
        self.validate()?;
        Ok(self)
    }

    pub fn is_delayed(&self) -> bool {
        self.delay > T::zero()
    }

    pub fn is_noisy(&self) -> bool {
        self.noise_variance > T::zero()
    }

    /// Checks `α > 0`, `τ ≥ 0`, `σ² ≥ 0`, `ε ≥ 0` and unit directions.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero()) || !self.alpha.is_finite() {
            return invalid(format!("coupling gain must be positive, got {}", self.alpha));
        }
        self.validate_ranges()
    }

    fn validate_ranges(&self) -> Result<()> {
        if !(self.delay >= T::zero()) || !self.delay.is_finite() {
            return invalid(format!("delay must be >= 0, got {}", self.delay));
        }
        if !(self.noise_variance >= T::zero()) || !self.noise_variance.is_finite() {
            return invalid(format!("noise variance must be >= 0, got {}", self.noise_variance));
        }
        if !(self.heterogeneity >= T::zero()) || !self.heterogeneity.is_finite() {
            return invalid(format!("heterogeneity must be >= 0, got {}", self.heterogeneity));
        }
        if self.heterogeneity > T::zero() {
            for (i, u) in self.directions.iter().enumerate().skip(1) {
                let norm = u.iter().map(|&v| v * v).sum::<T>().sqrt();
                if (norm - T::one()).abs() > T::lit(1e-6) {
                    return invalid(format!("direction u_{i} has norm {norm}, expected 1"));
                }
            }
        }
        Ok(())
    }
}

/// Seeded random unit vectors, one per agent. The leader gets the zero vector.
pub fn random_unit_directions<T: Real>(num_agents: usize, dim: usize, seed: u64) -> Vec<Vec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..num_agents)
        .map(|i| {
            if i == LEADER {
                return vec![T::zero(); dim];
            }
            loop {
                let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-8 {
                    return v.iter().map(|x| T::lit(x / norm)).collect();
                }
            }
        })
        .collect()
}

/// Stacked agent states at one instant; agent `i` occupies `states[i*dim..(i+1)*dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState<T> {
    pub time: T,
    num_agents: usize,
    dim: usize,
    states: Vec<T>,
}

impl<T: Real> NetworkState<T> {
    pub fn new(time: T, num_agents: usize, dim: usize, states: Vec<T>) -> Result<Self> {
        if states.len() != num_agents * dim {
            return invalid(format!(
                "{} values cannot hold {num_agents} agents of dimension {dim}",
                states.len()
            ));
        }
        Ok(Self {
            time,
            num_agents,
            dim,
            states,
        })
    }

    pub fn from_agents<R: AsRef<[T]>>(time: T, agents: &[R]) -> Result<Self> {
        let dim = agents.first().map_or(0, |a| a.as_ref().len());
        let mut states = Vec::with_capacity(agents.len() * dim);
        for (i, a) in agents.iter().enumerate() {
            if a.as_ref().len() != dim {
                return invalid(format!("agent {i} has dimension {}, expected {dim}", a.as_ref().len()));
            }
            states.extend_from_slice(a.as_ref());
        }
        Self::new(time, agents.len(), dim, states)
    }

    /// All agents at the same point.
    pub fn synchronized(time: T, num_agents: usize, x: &[T]) -> Self {
        let mut states = Vec::with_capacity(num_agents * x.len());
        for _ in 0..num_agents {
            states.extend_from_slice(x);
        }
        Self {
            time,
            num_agents,
            dim: x.len(),
            states,
        }
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn agent(&self, i: usize) -> &[T] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.states
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.states
    }

    pub fn into_vec(self) -> Vec<T> {
        self.states
    }
}

/// The stacked coupled vector field for a fixed system, graph and coupling.
///
/// Holds scratch buffers, so evaluation takes `&mut self`.
pub struct CoupledField<'a, T: Real> {
    spec: &'a SystemSpec<T>,
    cfg: &'a CouplingConfig<T>,
    /// Per follower: `(j, a_ij)` pairs.
    neighbors: Vec<Vec<(usize, T)>>,
    num_agents: usize,
    g_now: Vec<T>,
    g_delayed: Vec<T>,
}

impl<'a, T: Real> CoupledField<'a, T> {
    pub fn new(spec: &'a SystemSpec<T>, graph: &DirectedGraph<T>, cfg: &'a CouplingConfig<T>) -> Result<Self> {
        if !(cfg.alpha >= T::zero()) || !cfg.alpha.is_finite() {
            return invalid(format!("coupling gain must be nonnegative, got {}", cfg.alpha));
        }
        cfg.validate_ranges()?;
        let n = graph.num_agents();
        if cfg.heterogeneity > T::zero() {
            if cfg.directions.len() != n {
                return invalid(format!(
                    "{} heterogeneity directions for {n} agents",
                    cfg.directions.len()
                ));
            }
            if cfg.directions.iter().any(|u| u.len() != spec.dim()) {
                return invalid("heterogeneity direction dimension does not match the system");
            }
        }
        let dim = spec.dim();
        let mut field = Self {
            spec,
            cfg,
            neighbors: Vec::new(),
            num_agents: n,
            g_now: vec![T::zero(); n * dim],
            g_delayed: vec![T::zero(); n * dim],
        };
        field.set_graph(graph)?;
        Ok(field)
    }

    /// Swaps the topology (used by switching schedules).
    pub fn set_graph(&mut self, graph: &DirectedGraph<T>) -> Result<()> {
        if graph.num_agents() != self.num_agents {
            return invalid(format!(
                "graph has {} agents, field was built for {}",
                graph.num_agents(),
                self.num_agents
            ));
        }
        self.neighbors = (0..self.num_agents).map(|i| graph.neighbor_iter(i).collect()).collect();
        Ok(())
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn len(&self) -> usize {
        self.num_agents * self.spec.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check_len(&self, x: &[T]) -> Result<()> {
        if x.len() != self.len() {
            return invalid(format!(
                "stacked state has {} values, expected {} agents x {}",
                x.len(),
                self.num_agents,
                self.spec.dim()
            ));
        }
        Ok(())
    }

    /// Undelayed field: `out = f(x)`.
    pub fn eval(&mut self, x: &[T], out: &mut [T]) {
        self.eval_inner(x, None, out);
    }

    /// Delayed field; `delayed` holds every agent's state at `t − τ`.
    pub fn eval_delayed(&mut self, x: &[T], delayed: &[T], out: &mut [T]) {
        self.eval_inner(x, Some(delayed), out);
    }

    fn eval_inner(&mut self, x: &[T], delayed: Option<&[T]>, out: &mut [T]) {
        let dim = self.spec.dim();
        let n = self.num_agents;
        for i in 0..n {
            let r = i * dim..(i + 1) * dim;
            self.spec.nonlinear_into(&x[r.clone()], &mut self.g_now[r]);
        }
        if let Some(xd) = delayed {
            for i in 0..n {
                let r = i * dim..(i + 1) * dim;
                self.spec.nonlinear_into(&xd[r.clone()], &mut self.g_delayed[r]);
            }
        }
        let alpha = self.cfg.alpha;
        let placement = self.cfg.delay_placement;
        let eps = self.cfg.heterogeneity;

        for i in 0..n {
            let r = i * dim..(i + 1) * dim;
            self.spec.vector_field_into(&x[r.clone()], &mut out[r.clone()]);
            if i == LEADER {
                continue;
            }
            for &(j, a) in &self.neighbors[i] {
                let (src, own): (&[T], &[T]) = match (delayed, placement) {
                    (None, _) => (&self.g_now, &self.g_now),
                    (Some(_), DelayPlacement::Uniform) => (&self.g_delayed, &self.g_delayed),
                    (Some(_), DelayPlacement::NeighborsOnly) => (&self.g_delayed, &self.g_now),
                    (Some(_), DelayPlacement::LeaderLinkOnly) => {
                        if j == LEADER {
                            (&self.g_delayed, &self.g_now)
                        } else {
                            (&self.g_now, &self.g_now)
                        }
                    }
                };
                let w = alpha * a;
                for k in 0..dim {
                    out[i * dim + k] += w * (src[j * dim + k] - own[i * dim + k]);
                }
            }
            if eps > T::zero() {
                for (o, &u) in out[r].iter_mut().zip(&self.cfg.directions[i]) {
                    *o += eps * u;
                }
            }
        }
    }
}

fn check_network(spec: &SystemSpec<impl Real>, graph_n: usize, x_n: usize, x_dim: usize) -> Result<()> {
    if x_n != graph_n {
        return invalid(format!("state has {x_n} agents, graph has {graph_n}"));
    }
    if x_dim != spec.dim() {
        return invalid(format!("agent dimension {x_dim}, system dimension {}", spec.dim()));
    }
    Ok(())
}

/// Stacked derivative of the undelayed network.
pub fn coupled_field<T: Real>(
    spec: &SystemSpec<T>,
    graph: &DirectedGraph<T>,
    cfg: &CouplingConfig<T>,
    x: &NetworkState<T>,
) -> Result<Vec<T>> {
    check_network(spec, graph.num_agents(), x.num_agents(), x.dim())?;
    if cfg.is_delayed() {
        return invalid("coupled_field called with a nonzero delay; use delayed_coupled_field");
    }
    let mut field = CoupledField::new(spec, graph, cfg)?;
    let mut out = vec![T::zero(); field.len()];
    field.check_len(x.as_slice())?;
    field.eval(x.as_slice(), &mut out);
    Ok(out)
}

/// Source of past network states for the delayed field.
pub trait StateHistory<T> {
    /// Writes every agent's state at time `s` into `out`.
    fn states_at(&self, s: T, out: &mut [T]) -> Result<()>;
}

/// Stacked derivative with transmitted states taken from `history` at `t − τ`.
pub fn delayed_coupled_field<T: Real>(
    spec: &SystemSpec<T>,
    graph: &DirectedGraph<T>,
    cfg: &CouplingConfig<T>,
    x: &NetworkState<T>,
    history: &dyn StateHistory<T>,
) -> Result<Vec<T>> {
    check_network(spec, graph.num_agents(), x.num_agents(), x.dim())?;
    let mut field = CoupledField::new(spec, graph, cfg)?;
    field.check_len(x.as_slice())?;
    let mut delayed = vec![T::zero(); field.len()];
    history.states_at(x.time - cfg.delay, &mut delayed)?;
    let mut out = vec![T::zero(); field.len()];
    field.eval_delayed(x.as_slice(), &delayed, &mut out);
    Ok(out)
}

/// One Brownian increment for the whole network: i.i.d. `N(0, σ² dt)` per
/// component, leader included.
pub fn noise_increment<T: Real, R: Rng + ?Sized>(cfg: &CouplingConfig<T>, len: usize, dt: T, rng: &mut R) -> Vec<T> {
    let mut out = vec![T::zero(); len];
    fill_noise_increment(cfg, dt, rng, &mut out);
    out
}

pub(crate) fn fill_noise_increment<T: Real, R: Rng + ?Sized>(
    cfg: &CouplingConfig<T>,
    dt: T,
    rng: &mut R,
    out: &mut [T],
) {
    if !(cfg.noise_variance > T::zero()) {
        out.fill(T::zero());
        return;
    }
    let sd = (cfg.noise_variance * dt).sqrt().as_f64();
    for o in out.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *o = T::lit(sd * z);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::BuiltinSystem;

    fn lu() -> SystemSpec<f64> {
        SystemSpec::builtin(BuiltinSystem::Lu)
    }

    struct Constant(Vec<f64>);

    impl StateHistory<f64> for Constant {
        fn states_at(&self, _s: f64, out: &mut [f64]) -> Result<()> {
            out.copy_from_slice(&self.0);
            Ok(())
        }
    }

    #[test]
    fn identical_states_give_uncoupled_field() {
        let spec = lu();
        let g = DirectedGraph::chain(4).unwrap();
        let cfg = CouplingConfig::new(0.7).unwrap();
        let x = NetworkState::synchronized(0.0, 4, &[1.5, -2.0, 7.0]);
        let f = coupled_field(&spec, &g, &cfg, &x).unwrap();
        let single = spec.eval_vector_field(&[1.5, -2.0, 7.0]).unwrap();
        for i in 0..4 {
            assert_eq!(&f[i * 3..i * 3 + 3], single.as_slice());
        }
    }

    #[test]
    fn zero_gain_decouples() {
        let spec = lu();
        let g = DirectedGraph::chain(2).unwrap();
        let mut cfg = CouplingConfig::new(1.0).unwrap();
        cfg.alpha = 0.0;
        let x = NetworkState::from_agents(0.0, &[[1.0, 1.0, 1.0], [0.5, 0.0, 2.0]]).unwrap();
        let f = coupled_field(&spec, &g, &cfg, &x).unwrap();
        assert_eq!(&f[3..], spec.eval_vector_field(&[0.5, 0.0, 2.0]).unwrap().as_slice());
    }

    #[test]
    fn two_agent_hand_example() {
        let spec = lu();
        let g = DirectedGraph::chain(2).unwrap();
        let cfg = CouplingConfig::new(1.0).unwrap();
        let x = NetworkState::from_agents(0.0, &[[1.0, 1.0, 1.0], [0.0, 0.0, 0.0]]).unwrap();
        let f = coupled_field(&spec, &g, &cfg, &x).unwrap();
        assert_eq!(&f[3..], &[0.0, -1.0, 1.0]);
        assert_eq!(&f[..3], &[0.0, 19.0, -2.0]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let spec = lu();
        let g = DirectedGraph::chain(3).unwrap();
        let cfg = CouplingConfig::new(1.0).unwrap();
        let x = NetworkState::synchronized(0.0, 2, &[1.0, 1.0, 1.0]);
        assert!(coupled_field(&spec, &g, &cfg, &x).is_err());
    }

    #[test]
    fn delayed_field_examples() {
        let spec = lu();
        let g = DirectedGraph::chain(2).unwrap();
        let alpha = 0.8;
        let cfg = CouplingConfig::new(alpha)
            .unwrap()
            .with_delay(0.5, DelayPlacement::Uniform)
            .unwrap();
        let leader = [2.0, -1.0, 3.0];
        let x = NetworkState::from_agents(4.0, &[leader, [0.0, 0.0, 0.0]]).unwrap();
        let hist = Constant(vec![2.0, -1.0, 3.0, 0.0, 0.0, 0.0]);
        let f = delayed_coupled_field(&spec, &g, &cfg, &x, &hist).unwrap();
        let gl = spec.eval_nonlinear(&leader).unwrap();
        let f0 = spec.eval_vector_field(&[0.0; 3]).unwrap();
        for k in 0..3 {
            assert!((f[3 + k] - (alpha * gl[k] + f0[k])).abs() < 1e-15);
        }

        // History that returns the current states reproduces the undelayed field.
        let y = NetworkState::from_agents(1.0, &[[1.0, 2.0, 3.0], [-1.0, 0.5, 2.0]]).unwrap();
        let now = Constant(y.as_slice().to_vec());
        let undelayed = coupled_field(&spec, &g, &CouplingConfig::new(alpha).unwrap(), &y).unwrap();
        for placement in [
            DelayPlacement::Uniform,
            DelayPlacement::NeighborsOnly,
            DelayPlacement::LeaderLinkOnly,
        ] {
            let cfg = CouplingConfig::new(alpha).unwrap().with_delay(0.5, placement).unwrap();
            assert_eq!(delayed_coupled_field(&spec, &g, &cfg, &y, &now).unwrap(), undelayed);
        }
    }

    #[test]
    fn leader_link_only_keeps_follower_links_current() {
        let spec = lu();
        let g = DirectedGraph::chain(3).unwrap();
        let cfg = CouplingConfig::new(0.5)
            .unwrap()
            .with_delay(0.2, DelayPlacement::LeaderLinkOnly)
            .unwrap();
        let x = NetworkState::from_agents(1.0, &[[1.0, 1.0, 1.0], [2.0, 0.0, 1.0], [0.0, 3.0, 1.0]]).unwrap();
        // Past leader at the origin, past followers somewhere irrelevant.
        let past = Constant(vec![0.0, 0.0, 0.0, 9.0, 9.0, 9.0, 9.0, 9.0, 9.0]);
        let f = delayed_coupled_field(&spec, &g, &cfg, &x, &past).unwrap();
        let g1 = spec.eval_nonlinear(&[2.0, 0.0, 1.0]).unwrap();
        let g2 = spec.eval_nonlinear(&[0.0, 3.0, 1.0]).unwrap();
        let f2 = spec.eval_vector_field(&[0.0, 3.0, 1.0]).unwrap();
        for k in 0..3 {
            assert!((f[6 + k] - (f2[k] + 0.5 * (g1[k] - g2[k]))).abs() < 1e-14);
        }
    }

    #[test]
    fn heterogeneity_adds_exactly_epsilon() {
        let spec = lu();
        let g = DirectedGraph::chain(3).unwrap();
        let dirs = random_unit_directions::<f64>(3, 3, 9);
        let cfg = CouplingConfig::new(0.9)
            .unwrap()
            .with_heterogeneity(0.25, dirs)
            .unwrap();
        let x = NetworkState::synchronized(0.0, 3, &[1.0, -2.0, 0.5]);
        let f = coupled_field(&spec, &g, &cfg, &x).unwrap();
        let base = spec.eval_vector_field(&[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(&f[..3], base.as_slice(), "leader is never perturbed");
        for i in 1..3 {
            let d: f64 = (0..3).map(|k| (f[i * 3 + k] - base[k]).powi(2)).sum::<f64>().sqrt();
            assert!((d - 0.25).abs() < 1e-12, "agent {i}: {d}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(CouplingConfig::new(0.0).is_err());
        assert!(CouplingConfig::new(-1.0).is_err());
        assert!(CouplingConfig::new(1.0)
            .unwrap()
            .with_delay(-0.1, DelayPlacement::Uniform)
            .is_err());
        assert!(CouplingConfig::new(1.0).unwrap().with_noise(-0.1).is_err());
        assert!(CouplingConfig::new(1.0)
            .unwrap()
            .with_heterogeneity(0.1, vec![vec![0.0; 3], vec![2.0, 0.0, 0.0]])
            .is_err());
    }

    #[test]
    fn noise_increment_zero_and_deterministic() {
        let cfg = CouplingConfig::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(noise_increment(&cfg, 12, 0.01, &mut rng).iter().all(|&v| v == 0.0));

        let cfg = cfg.with_noise(0.05).unwrap();
        let a = noise_increment(&cfg, 12, 0.01, &mut ChaCha8Rng::seed_from_u64(5));
        let b = noise_increment(&cfg, 12, 0.01, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn noise_increment_variance() {
        let cfg = CouplingConfig::new(1.0).unwrap().with_noise(0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = noise_increment(&cfg, 1_000_000, 0.001, &mut rng);
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var / 1e-5 - 1.0).abs() < 0.02, "sample variance {var}");
    }
}
