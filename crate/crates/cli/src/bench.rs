use std::path::{Path, PathBuf};
use std::time::Instant;

use chaosync::integrate::{integrate_ode, Settings};
use chaosync::stability::{sample_attractor, synchronized_spectral_abscissa, theorem2_check, AttractorSampling};
use chaosync::{
    BuiltinSystem, CouplingConfigF64, DirectedGraphF64, LinearizationForm, MeasureNorm, NetworkStateF64, SystemSpecF64,
};
use serde::Serialize;

use crate::error::CliError;
use crate::output::{ensure_dir, write_bench_csv, write_json, BENCH_CSV, BENCH_JSON};

/// States at which the extended Jacobian spectrum is evaluated.
pub const BENCH_SPECTRAL_STATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    pub agents: usize,
    /// Median wall time of the certification pipeline.
    pub seconds: f64,
    /// Wall time per simulated second of plain RK4 integration.
    pub integration_seconds_per_simulated_second: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub system: String,
    pub alpha: f64,
    pub repeats: usize,
    pub rows: Vec<BenchRow>,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Attractor sampling, the matrix-measure check and the extended-Jacobian
/// spectrum on a chain of `n` agents.
fn certification_pipeline(spec: &SystemSpecF64, alpha: f64, n: usize) -> Result<f64, CliError> {
    let graph = DirectedGraphF64::chain(n)?;
    let samples = sample_attractor(spec, &AttractorSampling::default())?;
    let t2 = theorem2_check(spec, alpha, MeasureNorm::Two, &samples)?;
    let (sa, _) = synchronized_spectral_abscissa(
        spec,
        &graph,
        alpha,
        &samples,
        BENCH_SPECTRAL_STATES,
        LinearizationForm::Exact,
    )?;
    Ok(t2.margin + sa)
}

pub fn run_bench(
    system: BuiltinSystem,
    alpha: f64,
    sizes: &[usize],
    repeats: usize,
    out: &Path,
) -> Result<BenchReport, CliError> {
    if sizes.is_empty() || sizes.iter().any(|&n| n < 2) {
        return Err(CliError::Config("bench sizes must all be at least 2".into()));
    }
    if !(alpha > 0.0) {
        return Err(CliError::Config("alpha must be positive".into()));
    }
    let repeats = repeats.max(1);
    let spec = SystemSpecF64::builtin(system);
    ensure_dir(out)?;
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let mut times = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            let t0 = Instant::now();
            std::hint::black_box(certification_pipeline(&spec, alpha, n)?);
            times.push(t0.elapsed().as_secs_f64());
        }

        let graph = DirectedGraphF64::chain(n)?;
        let cfg = CouplingConfigF64::new(alpha)?;
        let x0 = NetworkStateF64::synchronized(0.0, n, &[1.0, 1.0, 1.0]);
        let simulated = 1.0;
        let settings = Settings::new(1e-3, simulated)?.record_every(1000);
        let t0 = Instant::now();
        std::hint::black_box(integrate_ode(&spec, &graph, &cfg, &x0, &settings)?);
        let per_second = t0.elapsed().as_secs_f64() / simulated;

        rows.push(BenchRow {
            agents: n,
            seconds: median(times),
            integration_seconds_per_simulated_second: per_second,
        });
    }
    let csv_rows: Vec<(usize, f64)> = rows.iter().map(|r| (r.agents, r.seconds)).collect();
    write_bench_csv(&out.join(BENCH_CSV), &csv_rows)?;
    let report = BenchReport {
        system: system.name().into(),
        alpha,
        repeats,
        rows,
        output_dir: out.to_path_buf(),
    };
    write_json(&out.join(BENCH_JSON), &report)?;
    Ok(report)
}
