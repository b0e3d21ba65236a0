//! Scenario files (TOML).
//!
//! ```toml
//! name = "lu"
//! seed = 42
//!
//! [system]
//! name = "lu"
//!
//! [topology]
//! kind = "chain"
//! agents = 5
//!
//! [coupling]
//! alpha = 0.95
//!
//! [integrator]
//! dt = 0.001
//! horizon = 30.0
//! ```

use std::path::{Path, PathBuf};

use chaosync::integrate::{DEFAULT_DT, DEFAULT_SDE_DT};
use chaosync::network::random_unit_directions;
use chaosync::securecomm::{DemoOptions, Masking, SineMessage};
use chaosync::stability::{AttractorSampling, CertificateOptions, LinearizationForm};
use chaosync::{
    BuiltinSystem, CouplingConfigF64, DelayPlacement, DirectedGraphF64, MatrixF64, MeasureNorm, NetworkStateF64,
    SettingsF64, SwitchingScheduleF64, SystemSpecF64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable that overrides every output directory.
pub const OUTPUT_DIR_ENV: &str = "CHAOSYNC_OUTPUT_DIR";

/// Largest trajectory CSV written without `full_resolution`.
pub const MAX_TRAJECTORY_ROWS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub system: SystemSection,
    pub topology: TopologySection,
    pub coupling: CouplingSection,
    #[serde(default)]
    pub initial: InitialSection,
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub name: String,
    /// Overrides for the built-in `a`, `b`, `c`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    /// Each follower listens to its predecessor.
    Chain,
    /// Every follower listens to the leader.
    Star,
    /// Follower `i` listens to `(i − 1) / 2`.
    BinaryTree,
    /// Five agents with a feedback loop among the last three.
    Loop,
    /// Explicit adjacency matrix.
    Custom,
    /// Random switching among `graphs`.
    Switching,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub kind: GraphKind,
    #[serde(default = "default_agents")]
    pub agents: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<Vec<Vec<f64>>>,
    /// Member graphs for `switching`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub graphs: Vec<GraphKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub average_dwell: Option<f64>,
}

fn default_agents() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    pub alpha: f64,
    #[serde(default)]
    pub delay: f64,
    #[serde(default)]
    pub delay_placement: DelayPlacement,
    #[serde(default)]
    pub noise_variance: f64,
    #[serde(default)]
    pub heterogeneity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialRule {
    #[default]
    RandomBall,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub rule: InitialRule,
    #[serde(default = "default_leader")]
    pub leader: Vec<f64>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub states: Vec<Vec<f64>>,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            rule: InitialRule::RandomBall,
            leader: default_leader(),
            radius: default_radius(),
            states: Vec::new(),
        }
    }
}

fn default_leader() -> Vec<f64> {
    vec![1.0, 1.0, 1.0]
}

fn default_radius() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    /// Defaults to 1e-3, or 1e-4 when noise is present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub horizon: f64,
    /// Spacing of recorded samples in seconds.
    #[serde(default = "default_sample_interval")]
    pub sample_interval: f64,
}

fn default_sample_interval() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default = "yes")]
    pub certificates: bool,
    #[serde(default = "yes")]
    pub metrics: bool,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub norm: MeasureNorm,
    #[serde(default)]
    pub linearization: LinearizationForm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub securecomm: Option<SecureCommSection>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            certificates: true,
            metrics: true,
            threshold: default_threshold(),
            norm: MeasureNorm::Two,
            linearization: LinearizationForm::Exact,
            securecomm: None,
        }
    }
}

fn yes() -> bool {
    true
}

fn default_threshold() -> f64 {
    1e-2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskingKind {
    #[default]
    FirstComponent,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecureCommSection {
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_frequency")]
    pub frequency: f64,
    #[serde(default)]
    pub masking: MaskingKind,
    #[serde(default = "default_settle")]
    pub settle: f64,
    #[serde(default = "default_duration")]
    pub duration: f64,
}

impl Default for SecureCommSection {
    fn default() -> Self {
        Self {
            amplitude: default_amplitude(),
            frequency: default_frequency(),
            masking: MaskingKind::FirstComponent,
            settle: default_settle(),
            duration: default_duration(),
        }
    }
}

fn default_amplitude() -> f64 {
    0.8
}
fn default_frequency() -> f64 {
    2.0
}
fn default_settle() -> f64 {
    2.0
}
fn default_duration() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Write every recorded sample to the trajectory CSV.
    #[serde(default)]
    pub full_resolution: bool,
}

/// Runtime topology built from a scenario.
#[derive(Debug, Clone)]
pub enum BuiltTopology {
    Fixed(DirectedGraphF64),
    Switching(SwitchingScheduleF64),
}

impl BuiltTopology {
    pub fn as_topology(&self) -> chaosync::Topology<'_, f64> {
        match self {
            BuiltTopology::Fixed(g) => chaosync::Topology::Fixed(g),
            BuiltTopology::Switching(s) => chaosync::Topology::Switching(s),
        }
    }

    /// Every graph the run may use.
    pub fn graphs(&self) -> Vec<&DirectedGraphF64> {
        match self {
            BuiltTopology::Fixed(g) => vec![g],
            BuiltTopology::Switching(s) => s.graphs().iter().collect(),
        }
    }
}

/// Everything needed to run a scenario.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub spec: SystemSpecF64,
    pub topology: BuiltTopology,
    pub coupling: CouplingConfigF64,
    pub x0: NetworkStateF64,
    pub settings: SettingsF64,
    pub seed: u64,
}

fn cfg_err<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Config(msg.into()))
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let s: Scenario = toml::from_str(text).map_err(|e| CliError::Config(format!("scenario parse error: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn dt(&self) -> f64 {
        self.integrator.dt.unwrap_or(if self.coupling.noise_variance > 0.0 {
            DEFAULT_SDE_DT
        } else {
            DEFAULT_DT
        })
    }

    pub fn system(&self) -> Result<BuiltinSystem, CliError> {
        self.system
            .name
            .parse()
            .map_err(|e: chaosync::Error| CliError::Config(e.to_string()))
    }

    /// Range checks that do not need any numerics.
    pub fn validate(&self) -> Result<(), CliError> {
        self.system()?;
        let c = &self.coupling;
        if !(c.alpha > 0.0) || !c.alpha.is_finite() {
            return cfg_err(format!("coupling.alpha must be positive, got {}", c.alpha));
        }
        if !(c.delay >= 0.0) || !c.delay.is_finite() {
            return cfg_err(format!("coupling.delay must be nonnegative, got {}", c.delay));
        }
        if !(c.noise_variance >= 0.0) || !c.noise_variance.is_finite() {
            return cfg_err(format!(
                "coupling.noise_variance must be nonnegative, got {}",
                c.noise_variance
            ));
        }
        if !(c.heterogeneity >= 0.0) || !c.heterogeneity.is_finite() {
            return cfg_err(format!(
                "coupling.heterogeneity must be nonnegative, got {}",
                c.heterogeneity
            ));
        }
        if c.delay > 0.0 && c.noise_variance > 0.0 {
            return cfg_err("delay and noise cannot be combined");
        }
        let dt = self.dt();
        let h = self.integrator.horizon;
        if !(dt > 0.0) || !dt.is_finite() {
            return cfg_err(format!("integrator.dt must be positive, got {dt}"));
        }
        if !(h > 10.0 * dt) || !h.is_finite() {
            return cfg_err(format!("integrator.horizon must exceed 10*dt = {}, got {h}", 10.0 * dt));
        }
        if !(self.integrator.sample_interval >= dt) {
            return cfg_err(format!(
                "integrator.sample_interval must be at least dt = {dt}, got {}",
                self.integrator.sample_interval
            ));
        }
        if !(self.analysis.threshold > 0.0) {
            return cfg_err("analysis.threshold must be positive");
        }
        if self.topology.agents < 2 {
            return cfg_err("topology.agents must be at least 2");
        }
        if !(self.initial.radius >= 0.0) {
            return cfg_err("initial.radius must be nonnegative");
        }
        if let Some(sc) = &self.analysis.securecomm {
            if !(sc.duration > 0.0) || !(sc.settle >= 0.0) || !(sc.frequency > 0.0) || sc.amplitude == 0.0 {
                return cfg_err(
                    "securecomm needs positive duration and frequency, nonnegative settle and nonzero amplitude",
                );
            }
        }
        Ok(())
    }

    /// Records every `k`-th step so samples are `sample_interval` apart.
    pub fn record_every(&self) -> usize {
        ((self.integrator.sample_interval / self.dt()).round() as usize).max(1)
    }

    pub fn settings(&self) -> Result<SettingsF64, CliError> {
        Ok(SettingsF64::new(self.dt(), self.integrator.horizon)
            .map_err(|e| CliError::Config(e.to_string()))?
            .record_every(self.record_every()))
    }

    pub fn system_spec(&self) -> Result<SystemSpecF64, CliError> {
        let which = self.system()?;
        Ok(match self.system.params {
            Some([a, b, c]) => SystemSpecF64::builtin_with_params(which, a, b, c),
            None => SystemSpecF64::builtin(which),
        })
    }

    pub fn build_topology(&self, horizon: f64, seed: u64) -> Result<BuiltTopology, CliError> {
        let t = &self.topology;
        if t.kind == GraphKind::Switching {
            if t.graphs.is_empty() {
                return cfg_err("switching topology needs a nonempty topology.graphs list");
            }
            let dwell = t
                .average_dwell
                .ok_or_else(|| CliError::Config("switching topology needs topology.average_dwell".into()))?;
            let graphs = t
                .graphs
                .iter()
                .map(|&k| build_graph(k, t.agents, None))
                .collect::<Result<Vec<_>, _>>()?;
            let sched = SwitchingScheduleF64::sample(graphs, dwell, horizon, seed)
                .map_err(|e| CliError::Config(e.to_string()))?;
            return Ok(BuiltTopology::Switching(sched));
        }
        Ok(BuiltTopology::Fixed(build_graph(
            t.kind,
            t.agents,
            t.adjacency.as_deref(),
        )?))
    }

    pub fn coupling_config(&self, num_agents: usize, dim: usize) -> Result<CouplingConfigF64, CliError> {
        let c = &self.coupling;
        let conv = |e: chaosync::Error| CliError::Config(e.to_string());
        let mut cfg = CouplingConfigF64::new(c.alpha).map_err(conv)?;
        if c.delay > 0.0 {
            cfg = cfg.with_delay(c.delay, c.delay_placement).map_err(conv)?;
        }
        if c.noise_variance > 0.0 {
            cfg = cfg.with_noise(c.noise_variance).map_err(conv)?;
        }
        if c.heterogeneity > 0.0 {
            let dirs = random_unit_directions(num_agents, dim, self.seed ^ 0x5eed_d1e5);
            cfg = cfg.with_heterogeneity(c.heterogeneity, dirs).map_err(conv)?;
        }
        Ok(cfg)
    }

    pub fn initial_state(&self, num_agents: usize, dim: usize) -> Result<NetworkStateF64, CliError> {
        let init = &self.initial;
        match init.rule {
            InitialRule::Explicit => {
                if init.states.len() != num_agents || init.states.iter().any(|s| s.len() != dim) {
                    return cfg_err(format!("initial.states must list {num_agents} vectors of length {dim}"));
                }
                NetworkStateF64::from_agents(0.0, &init.states).map_err(|e| CliError::Config(e.to_string()))
            }
            InitialRule::RandomBall => {
                if init.leader.len() != dim {
                    return cfg_err(format!("initial.leader must have length {dim}"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let r = init.radius;
                let mut v = init.leader.clone();
                for _ in 1..num_agents {
                    for &l in &init.leader {
                        let u: f64 = if r > 0.0 { rng.random_range(-r..=r) } else { 0.0 };
                        v.push(l + u);
                    }
                }
                NetworkStateF64::new(0.0, num_agents, dim, v).map_err(|e| CliError::Config(e.to_string()))
            }
        }
    }

    /// Builds all runtime objects; every failure is a configuration error.
    pub fn prepare(&self) -> Result<Prepared, CliError> {
        self.validate()?;
        let spec = self.system_spec()?;
        let settings = self.settings()?;
        let topology = self.build_topology(self.integrator.horizon, self.seed)?;
        let n = self.topology.agents;
        if topology.graphs().iter().any(|g| g.num_agents() != n) {
            return cfg_err(format!("topology.agents = {n} does not match the graph size"));
        }
        for g in topology.graphs() {
            if !g.has_spanning_tree_rooted_at_leader() {
                return cfg_err("every graph must contain a spanning tree rooted at the leader");
            }
        }
        let coupling = self.coupling_config(n, spec.dim())?;
        let x0 = self.initial_state(n, spec.dim())?;
        Ok(Prepared {
            spec,
            topology,
            coupling,
            x0,
            settings,
            seed: self.seed,
        })
    }

    pub fn demo_options(&self) -> DemoOptions {
        let sc = self.analysis.securecomm.clone().unwrap_or_default();
        DemoOptions {
            message: SineMessage {
                amplitude: sc.amplitude,
                frequency: sc.frequency,
            },
            masking: match sc.masking {
                MaskingKind::FirstComponent => Masking::FirstComponent,
                MaskingKind::Zero => Masking::Zero,
            },
            sync_threshold: self.analysis.threshold,
            settle: sc.settle,
            duration: sc.duration,
        }
    }

    pub fn certificate_options(&self) -> CertificateOptions {
        CertificateOptions {
            norm: self.analysis.norm,
            linearization: self.analysis.linearization,
            ..CertificateOptions::default()
        }
    }

    /// Output directory: the environment override, then the scenario, then
    /// `out/<name>`.
    pub fn output_dir(&self) -> PathBuf {
        resolve_output_dir(self.output.dir.clone(), &self.name)
    }
}

pub fn resolve_output_dir(configured: Option<PathBuf>, name: &str) -> PathBuf {
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
        return PathBuf::from(dir).join(name);
    }
    configured.unwrap_or_else(|| PathBuf::from("out").join(name))
}

pub fn attractor_sampling() -> AttractorSampling {
    AttractorSampling::default()
}

/// Builds one member graph.
pub fn build_graph(
    kind: GraphKind,
    agents: usize,
    adjacency: Option<&[Vec<f64>]>,
) -> Result<DirectedGraphF64, CliError> {
    let conv = |e: chaosync::Error| CliError::Config(e.to_string());
    match kind {
        GraphKind::Chain => DirectedGraphF64::chain(agents).map_err(conv),
        GraphKind::Star => DirectedGraphF64::star(agents).map_err(conv),
        GraphKind::BinaryTree => {
            let mut a = MatrixF64::zeros(agents, agents);
            for i in 1..agents {
                a[(i, (i - 1) / 2)] = 1.0;
            }
            DirectedGraphF64::new(a).map_err(conv)
        }
        GraphKind::Loop => {
            if agents != 5 {
                return cfg_err("the loop topology has exactly 5 agents");
            }
            Ok(DirectedGraphF64::rossler_loop())
        }
        GraphKind::Custom => {
            let rows = adjacency.ok_or_else(|| CliError::Config("custom topology needs topology.adjacency".into()))?;
            DirectedGraphF64::from_f64_rows(rows).map_err(conv)
        }
        GraphKind::Switching => cfg_err("switching graphs cannot be nested"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
[system]
name = "lu"
[topology]
kind = "chain"
agents = 3
[coupling]
alpha = 0.95
[integrator]
horizon = 1.0
"#;

    #[test]
    fn minimal_defaults() {
        let s = Scenario::from_toml_str(MINIMAL).unwrap();
        assert_eq!(s.dt(), 1e-3);
        assert_eq!(s.record_every(), 10);
        assert_eq!(s.initial.leader, vec![1.0, 1.0, 1.0]);
        let p = s.prepare().unwrap();
        assert_eq!(p.x0.agent(0), &[1.0, 1.0, 1.0]);
        for i in 1..3 {
            assert!(p.x0.agent(i).iter().all(|v| (v - 1.0).abs() <= 0.5));
        }
        // Same seed, same initial state.
        assert_eq!(s.prepare().unwrap().x0, p.x0);
    }

    #[test]
    fn unknown_fields_and_bad_values_rejected() {
        assert!(Scenario::from_toml_str(&format!("{MINIMAL}\nbogus = 1")).is_err());
        let bad = MINIMAL.replace("alpha = 0.95", "alpha = -1.0");
        assert!(matches!(Scenario::from_toml_str(&bad), Err(CliError::Config(_))));
        let bad = MINIMAL.replace("horizon = 1.0", "horizon = 0.005");
        assert!(Scenario::from_toml_str(&bad).is_err());
        let bad = MINIMAL.replace("name = \"lu\"", "name = \"lorenz\"");
        assert!(Scenario::from_toml_str(&bad).is_err());
    }

    #[test]
    fn noise_defaults_to_small_step() {
        let s =
            Scenario::from_toml_str(&MINIMAL.replace("alpha = 0.95", "alpha = 0.95\nnoise_variance = 0.01")).unwrap();
        assert_eq!(s.dt(), 1e-4);
        assert_eq!(s.record_every(), 100);
    }

    #[test]
    fn round_trips_through_toml() {
        let s = Scenario::from_toml_str(MINIMAL).unwrap();
        assert_eq!(Scenario::from_toml_str(&s.to_toml_string()).unwrap(), s);
    }

    #[test]
    fn binary_tree_has_spanning_tree() {
        let g = build_graph(GraphKind::BinaryTree, 7, None).unwrap();
        assert!(g.has_spanning_tree_rooted_at_leader());
        assert_eq!(g.weight(6, 2), 1.0);
    }
}
