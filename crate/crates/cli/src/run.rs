use std::path::{Path, PathBuf};
use std::time::Instant;

use chaosync::integrate::{Divergence, SimulationMode};
use chaosync::metrics::{sync_metrics, MetricsOptions, SyncMetrics};
use chaosync::securecomm::{run_demo, DemoResult};
use chaosync::stability::{certify, sample_attractor, CertificateReport};
use chaosync::{simulate, SystemSpecF64, TrajectoryF64};
use serde::Serialize;

use crate::config::{attractor_sampling, BuiltTopology, GraphKind, Prepared, Scenario};
use crate::error::CliError;
use crate::output::{
    ensure_dir, write_error_csv, write_json, write_securecomm_csv, write_trajectory_csv, ERROR_CSV, SECURECOMM_CSV,
    SUMMARY_JSON, TRAJECTORY_CSV,
};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Timing {
    pub integration_seconds: f64,
    pub certification_seconds: f64,
    pub total_seconds: f64,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub scenario: Scenario,
    pub mode: Option<SimulationMode>,
    pub delayed: bool,
    pub noisy: bool,
    pub switching: bool,
    pub metrics: Option<SyncMetrics>,
    pub certificate: Option<CertificateReport>,
    pub securecomm: Option<DemoResult>,
    pub divergence: Option<Divergence>,
    pub artifacts: Vec<String>,
    pub timing: Timing,
}

impl Summary {
    fn new(command: &'static str, scenario: &Scenario) -> Self {
        Self {
            tool: "chaosync",
            version: env!("CARGO_PKG_VERSION"),
            command,
            scenario: scenario.clone(),
            mode: None,
            delayed: scenario.coupling.delay > 0.0,
            noisy: scenario.coupling.noise_variance > 0.0,
            switching: scenario.topology.kind == GraphKind::Switching,
            metrics: None,
            certificate: None,
            securecomm: None,
            divergence: None,
            artifacts: Vec::new(),
            timing: Timing::default(),
        }
    }
}

/// Result of one command: the summary plus anything tests may inspect.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub summary: Summary,
    pub output_dir: PathBuf,
    pub trajectory: Option<TrajectoryF64>,
}

impl RunReport {
    /// `Err` with the divergence if the run was cut short.
    pub fn status(&self) -> Result<(), CliError> {
        match &self.summary.divergence {
            Some(d) => Err(CliError::Divergence {
                time: d.time,
                reason: d.reason.clone(),
            }),
            None => Ok(()),
        }
    }
}

/// Certificate over attractor samples; with switching, the member graph with
/// the largest spectral abscissa is reported.
pub fn certificate_for(
    spec: &SystemSpecF64,
    topology: &BuiltTopology,
    alpha: f64,
    delay: f64,
    scenario: &Scenario,
) -> Result<CertificateReport, CliError> {
    let samples = sample_attractor(spec, &attractor_sampling())?;
    let opts = scenario.certificate_options();
    let mut worst: Option<CertificateReport> = None;
    for g in topology.graphs() {
        let rep = certify(spec, g, alpha, delay, &samples, &opts)?;
        if worst
            .as_ref()
            .is_none_or(|w| rep.spectral_abscissa > w.spectral_abscissa)
        {
            worst = Some(rep);
        }
    }
    worst.ok_or_else(|| CliError::Internal("topology has no graphs".into()))
}

fn integrate(p: &Prepared) -> Result<TrajectoryF64, CliError> {
    Ok(simulate(
        &p.spec,
        p.topology.as_topology(),
        &p.coupling,
        &p.x0,
        &p.settings,
        p.seed,
    )?)
}

/// Integrates the scenario, computes metrics and certificates, and writes
/// `trajectory.csv`, `error.csv` and `summary.json`. A diverged run still
/// writes everything recorded before the divergence.
pub fn simulate_scenario(scenario: &Scenario, out: &Path) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let p = scenario.prepare()?;
    ensure_dir(out)?;
    let mut summary = Summary::new("simulate", scenario);

    let t0 = Instant::now();
    let traj = integrate(&p)?;
    summary.timing.integration_seconds = t0.elapsed().as_secs_f64();
    summary.mode = Some(traj.meta.mode);
    summary.divergence = traj.divergence.clone();

    let metrics = sync_metrics(
        &traj,
        &MetricsOptions {
            threshold: scenario.analysis.threshold,
            ..MetricsOptions::default()
        },
    )?;

    if scenario.analysis.certificates {
        let t1 = Instant::now();
        summary.certificate = Some(certificate_for(
            &p.spec,
            &p.topology,
            scenario.coupling.alpha,
            scenario.coupling.delay,
            scenario,
        )?);
        summary.timing.certification_seconds = t1.elapsed().as_secs_f64();
    }

    write_trajectory_csv(&out.join(TRAJECTORY_CSV), &traj, scenario.output.full_resolution)?;
    write_error_csv(&out.join(ERROR_CSV), traj.times(), &metrics.error_series)?;
    summary.artifacts = vec![TRAJECTORY_CSV.into(), ERROR_CSV.into(), SUMMARY_JSON.into()];
    if scenario.analysis.metrics {
        summary.metrics = Some(metrics);
    }
    summary.timing.total_seconds = start.elapsed().as_secs_f64();
    write_json(&out.join(SUMMARY_JSON), &summary)?;
    Ok(RunReport {
        summary,
        output_dir: out.to_path_buf(),
        trajectory: Some(traj),
    })
}

/// Certificates only; no integration.
pub fn certify_scenario(scenario: &Scenario, out: &Path) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let p = scenario.prepare()?;
    ensure_dir(out)?;
    let mut summary = Summary::new("certify", scenario);
    let t1 = Instant::now();
    summary.certificate = Some(certificate_for(
        &p.spec,
        &p.topology,
        scenario.coupling.alpha,
        scenario.coupling.delay,
        scenario,
    )?);
    summary.timing.certification_seconds = t1.elapsed().as_secs_f64();
    summary.artifacts = vec![SUMMARY_JSON.into()];
    summary.timing.total_seconds = start.elapsed().as_secs_f64();
    write_json(&out.join(SUMMARY_JSON), &summary)?;
    Ok(RunReport {
        summary,
        output_dir: out.to_path_buf(),
        trajectory: None,
    })
}

/// Masked-channel demo over a leader–follower pair.
pub fn securecomm_scenario(scenario: &Scenario, out: &Path) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let p = scenario.prepare()?;
    if scenario.topology.agents != 2 || scenario.topology.kind != GraphKind::Chain {
        return Err(CliError::Config(
            "secure communication needs a two-agent chain (leader plus one follower)".into(),
        ));
    }
    ensure_dir(out)?;
    let mut summary = Summary::new("securecomm", scenario);
    let t0 = Instant::now();
    let demo = run_demo(
        &p.spec,
        &p.coupling,
        &p.x0,
        &p.settings,
        p.seed,
        &scenario.demo_options(),
    )?;
    summary.timing.integration_seconds = t0.elapsed().as_secs_f64();
    summary.mode = Some(if p.coupling.is_delayed() {
        SimulationMode::Dde
    } else if p.coupling.is_noisy() {
        SimulationMode::Sde
    } else {
        SimulationMode::Ode
    });
    write_securecomm_csv(
        &out.join(SECURECOMM_CSV),
        &demo.times,
        &demo.message,
        &demo.masked,
        &demo.recovered,
    )?;
    if scenario.analysis.certificates {
        let t1 = Instant::now();
        summary.certificate = Some(certificate_for(
            &p.spec,
            &p.topology,
            scenario.coupling.alpha,
            scenario.coupling.delay,
            scenario,
        )?);
        summary.timing.certification_seconds = t1.elapsed().as_secs_f64();
    }
    summary.securecomm = Some(demo);
    summary.artifacts = vec![SECURECOMM_CSV.into(), SUMMARY_JSON.into()];
    summary.timing.total_seconds = start.elapsed().as_secs_f64();
    write_json(&out.join(SUMMARY_JSON), &summary)?;
    Ok(RunReport {
        summary,
        output_dir: out.to_path_buf(),
        trajectory: None,
    })
}
