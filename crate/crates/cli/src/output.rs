//! CSV and JSON artifacts. Numbers use Rust's shortest round-trip formatting,
//! so identical runs produce identical bytes.

use std::fs;
use std::path::Path;

use chaosync::TrajectoryF64;
use serde::Serialize;

use crate::config::MAX_TRAJECTORY_ROWS;
use crate::error::CliError;

pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const ERROR_CSV: &str = "error.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SECURECOMM_CSV: &str = "securecomm.csv";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_JSON: &str = "sweep.json";
pub const BENCH_CSV: &str = "bench.csv";
pub const BENCH_JSON: &str = "bench.json";

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Sample stride that keeps `samples × agents` rows within the cap.
pub fn trajectory_stride(samples: usize, agents: usize, full_resolution: bool) -> usize {
    if full_resolution {
        return 1;
    }
    (samples * agents).div_ceil(MAX_TRAJECTORY_ROWS).max(1)
}

/// `t,agent,x1..xn`, one row per agent per kept sample, agents numbered from 1.
pub fn write_trajectory_csv(path: &Path, traj: &TrajectoryF64, full_resolution: bool) -> Result<usize, CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string(), "agent".to_string()];
    header.extend((1..=traj.dim()).map(|c| format!("x{c}")));
    w.write_record(&header)?;
    let stride = trajectory_stride(traj.len(), traj.num_agents(), full_resolution);
    let mut rows = 0;
    for k in (0..traj.len()).step_by(stride) {
        let t = num(traj.time(k));
        for i in 0..traj.num_agents() {
            let mut rec = vec![t.clone(), (i + 1).to_string()];
            rec.extend(traj.agent(k, i).iter().map(|&v| num(v)));
            w.write_record(&rec)?;
            rows += 1;
        }
    }
    w.flush()?;
    Ok(rows)
}

pub fn write_error_csv(path: &Path, times: &[f64], series: &[f64]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "E"])?;
    for (&t, &e) in times.iter().zip(series) {
        w.write_record([num(t), num(e)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_securecomm_csv(
    path: &Path,
    times: &[f64],
    message: &[f64],
    masked: &[f64],
    recovered: &[f64],
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time", "m", "s", "m_hat", "error"])?;
    for k in 0..times.len() {
        w.write_record([
            num(times[k]),
            num(message[k]),
            num(masked[k]),
            num(recovered[k]),
            num(recovered[k] - message[k]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of the sweep table. Failed runs keep their row with empty cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub e_inf: Option<f64>,
    pub convergence_time: Option<f64>,
    pub spectral_abscissa: Option<f64>,
    pub theorem2_margin: Option<f64>,
    pub status: String,
    pub diverged: bool,
    pub seed: u64,
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "value",
        "E_inf",
        "convergence_time",
        "spectral_abscissa",
        "theorem2_margin",
    ])?;
    for r in rows {
        w.write_record([
            num(r.value),
            opt(r.e_inf),
            opt(r.convergence_time),
            opt(r.spectral_abscissa),
            opt(r.theorem2_margin),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `t,re,im` eigenvalue scatter.
pub fn write_eigen_csv(path: &Path, points: &[(f64, f64, f64)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "re", "im"])?;
    for &(t, re, im) in points {
        w.write_record([num(t), num(re), num(im)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bench_csv(path: &Path, rows: &[(usize, f64)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["N", "seconds"])?;
    for &(n, s) in rows {
        w.write_record([n.to_string(), num(s)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
