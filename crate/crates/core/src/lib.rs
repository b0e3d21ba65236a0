//! Leader–follower networks of identical chaotic agents.
//!
//! Each agent follows `ẋ = Lx + G(x)`. Followers are coupled through the
//! nonlinear part only: `α Σ_j a_ij (G(x_j) − G(x_i))`. The crate simulates
//! such networks (with delay, noise, switching graphs and heterogeneity),
//! evaluates stability certificates and measures synchronization.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`). The aliases
//! below fix the scalar for the common cases.

pub mod error;
pub mod integrate;
pub mod linalg;
pub mod metrics;
pub mod network;
pub mod scalar;
pub mod securecomm;
pub mod stability;
pub mod systems;
pub mod topology;

pub use error::{Error, Result};
pub use integrate::{simulate, Settings, Topology, Trajectory};
pub use network::{CouplingConfig, DelayPlacement, NetworkState};
pub use scalar::Real;
pub use stability::{CertificateReport, LinearizationForm, MeasureNorm};
pub use systems::{BuiltinSystem, SystemSpec};
pub use topology::{DirectedGraph, SwitchingSchedule};

pub type MatrixF64 = linalg::Matrix<f64>;
pub type SystemSpecF64 = SystemSpec<f64>;
pub type DirectedGraphF64 = DirectedGraph<f64>;
pub type SwitchingScheduleF64 = SwitchingSchedule<f64>;
pub type CouplingConfigF64 = CouplingConfig<f64>;
pub type NetworkStateF64 = NetworkState<f64>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type SettingsF64 = Settings<f64>;

pub type MatrixF32 = linalg::Matrix<f32>;
pub type SystemSpecF32 = SystemSpec<f32>;
pub type DirectedGraphF32 = DirectedGraph<f32>;
pub type SwitchingScheduleF32 = SwitchingSchedule<f32>;
pub type CouplingConfigF32 = CouplingConfig<f32>;
pub type NetworkStateF32 = NetworkState<f32>;
pub type TrajectoryF32 = Trajectory<f32>;
pub type SettingsF32 = Settings<f32>;
