use std::path::{Path, PathBuf};
use std::str::FromStr;

use chaosync::metrics::{convergence_time_series, sync_error_series, tail_mean, CONVERGENCE_HOLD, STEADY_FRACTION};
use chaosync::stability::{certify, extended_jacobian, sample_attractor};
use chaosync::{simulate, SystemSpecF64, TrajectoryF64};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{attractor_sampling, GraphKind, Scenario};
use crate::error::CliError;
use crate::output::{ensure_dir, write_eigen_csv, write_json, write_sweep_csv, SweepRow, SWEEP_CSV, SWEEP_JSON};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Alpha,
    Sigma2,
    Epsilon,
    TauA,
}

impl FromStr for SweepParam {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "alpha" => Ok(Self::Alpha),
            "sigma2" => Ok(Self::Sigma2),
            "epsilon" => Ok(Self::Epsilon),
            "tau_a" => Ok(Self::TauA),
            other => Err(CliError::Config(format!(
                "unknown sweep parameter '{other}', expected alpha, sigma2, epsilon or tau_a"
            ))),
        }
    }
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::Alpha => "alpha",
            Self::Sigma2 => "sigma2",
            Self::Epsilon => "epsilon",
            Self::TauA => "tau_a",
        }
    }

    /// Copy of `base` with this parameter set to `value`.
    pub fn apply(self, base: &Scenario, value: f64) -> Result<Scenario, CliError> {
        let mut s = base.clone();
        match self {
            Self::Alpha => s.coupling.alpha = value,
            Self::Sigma2 => s.coupling.noise_variance = value,
            Self::Epsilon => s.coupling.heterogeneity = value,
            Self::TauA => {
                if s.topology.kind != GraphKind::Switching {
                    return Err(CliError::Config("tau_a sweeps need a switching topology".into()));
                }
                s.topology.average_dwell = Some(value);
            }
        }
        s.validate()?;
        Ok(s)
    }
}

/// Per-member seed: a SplitMix64 step from the base seed.
pub fn member_seed(base: u64, index: usize) -> u64 {
    let mut z = base.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Alpha values at which eigenvalue scatter files are always written.
pub const SCATTER_ALPHAS: [f64; 3] = [0.5, 0.8, 0.95];

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub parameter: SweepParam,
    pub rows: Vec<SweepRow>,
    pub scatter_files: Vec<String>,
    #[serde(skip)]
    pub output_dir: PathBuf,
    /// Along-trajectory spectral abscissa per α run, `(t, abscissa)`.
    #[serde(skip)]
    pub abscissa_tracks: Vec<Vec<(f64, f64)>>,
    #[serde(skip)]
    pub trajectories: Vec<Option<TrajectoryF64>>,
}

struct Member {
    row: SweepRow,
    scatter: Vec<(f64, f64, f64)>,
    track: Vec<(f64, f64)>,
    trajectory: Option<TrajectoryF64>,
}

/// Number of trajectory points at which the extended Jacobian spectrum is
/// recorded for α sweeps.
const SCATTER_POINTS: usize = 60;

fn run_member(
    base: &Scenario,
    param: SweepParam,
    value: f64,
    index: usize,
    samples: &[Vec<f64>],
    keep_trajectory: bool,
) -> Member {
    let seed = member_seed(base.seed, index);
    let mut row = SweepRow {
        value,
        e_inf: None,
        convergence_time: None,
        spectral_abscissa: None,
        theorem2_margin: None,
        status: "ok".into(),
        diverged: false,
        seed,
    };
    let mut scatter = Vec::new();
    let mut track = Vec::new();
    let mut trajectory = None;
    let result = (|| -> Result<(), CliError> {
        let mut sc = param.apply(base, value)?;
        sc.seed = seed;
        let p = sc.prepare()?;
        let traj = simulate(&p.spec, p.topology.as_topology(), &p.coupling, &p.x0, &p.settings, seed)?;
        let series = sync_error_series(&traj)?;
        row.e_inf = Some(tail_mean(&series, STEADY_FRACTION)?);
        row.convergence_time = convergence_time_series(traj.times(), &series, sc.analysis.threshold, CONVERGENCE_HOLD);
        row.diverged = traj.diverged();
        let mut worst: Option<(f64, f64)> = None;
        for g in p.topology.graphs() {
            let rep = certify(
                &p.spec,
                g,
                sc.coupling.alpha,
                sc.coupling.delay,
                samples,
                &sc.certificate_options(),
            )?;
            if worst.is_none_or(|(sa, _)| rep.spectral_abscissa > sa) {
                worst = Some((rep.spectral_abscissa, rep.theorem2_margin));
            }
        }
        if let Some((sa, t2)) = worst {
            row.spectral_abscissa = Some(sa);
            row.theorem2_margin = Some(t2);
        }
        if param == SweepParam::Alpha {
            let g = p.topology.graphs()[0];
            let stride = traj.len().div_ceil(SCATTER_POINTS).max(1);
            for k in (0..traj.len()).step_by(stride) {
                let j = extended_jacobian(
                    &p.spec,
                    g,
                    sc.coupling.alpha,
                    &traj.network_state(k),
                    sc.analysis.linearization,
                )?;
                let eig = chaosync::linalg::eigenvalues(&j)?;
                let t = traj.time(k);
                track.push((t, eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)));
                scatter.extend(eig.iter().map(|z| (t, z.re, z.im)));
            }
        }
        if row.diverged {
            row.status = "diverged".into();
        }
        if keep_trajectory {
            trajectory = Some(traj);
        }
        Ok(())
    })();
    if let Err(e) = result {
        row.status = format!("failed: {e}");
    }
    Member {
        row,
        scatter,
        track,
        trajectory,
    }
}

fn value_label(v: f64) -> String {
    format!("{v}")
}

/// One run per value, `workers` at a time; rows come back in input order.
pub fn run_sweep(
    base: &Scenario,
    param: SweepParam,
    values: &[f64],
    workers: usize,
    out: &Path,
    keep_trajectories: bool,
) -> Result<SweepReport, CliError> {
    base.validate()?;
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    for &v in values {
        param.apply(base, v)?;
    }
    let spec: SystemSpecF64 = base.system_spec()?;
    let samples = sample_attractor(&spec, &attractor_sampling())?;
    ensure_dir(out)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    let members: Vec<Member> = pool.install(|| {
        values
            .par_iter()
            .enumerate()
            .map(|(i, &v)| run_member(base, param, v, i, &samples, keep_trajectories))
            .collect()
    });

    let mut scatter_files = Vec::new();
    if param == SweepParam::Alpha {
        for m in &members {
            let name = format!("eigenvalues_alpha_{}.csv", value_label(m.row.value));
            write_eigen_csv(&out.join(&name), &m.scatter)?;
            scatter_files.push(name);
        }
        // Reference α values are always covered.
        for &a in &SCATTER_ALPHAS {
            if values.contains(&a) {
                continue;
            }
            let extra = run_member(base, param, a, values.len() + scatter_files.len(), &samples, false);
            let name = format!("eigenvalues_alpha_{}.csv", value_label(a));
            write_eigen_csv(&out.join(&name), &extra.scatter)?;
            scatter_files.push(name);
        }
    }

    let mut rows = Vec::with_capacity(members.len());
    let mut tracks = Vec::with_capacity(members.len());
    let mut trajectories = Vec::with_capacity(members.len());
    for m in members {
        rows.push(m.row);
        tracks.push(m.track);
        trajectories.push(m.trajectory);
    }
    write_sweep_csv(&out.join(SWEEP_CSV), &rows)?;
    let report = SweepReport {
        parameter: param,
        rows,
        scatter_files,
        output_dir: out.to_path_buf(),
        abscissa_tracks: tracks,
        trajectories,
    };
    write_json(&out.join(SWEEP_JSON), &report)?;
    Ok(report)
}
