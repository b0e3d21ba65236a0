use std::sync::Arc;

use chaosync::integrate::integrate_ode;
use chaosync::linalg::Matrix;
use chaosync::metrics::{
    convergence_time_series, fit_loglog_slope, heterogeneity_scaling, phase_offsets, sync_error_series, sync_metrics,
    MetricsOptions,
};
use chaosync::{
    BuiltinSystem, CouplingConfigF64, DirectedGraphF64, NetworkStateF64, SettingsF64, SystemSpecF64, TrajectoryF64,
};
use proptest::prelude::*;

fn lu_run(agents: usize, horizon: f64) -> TrajectoryF64 {
    let spec = SystemSpecF64::builtin(BuiltinSystem::Lu);
    let g = DirectedGraphF64::star(agents).unwrap();
    let x0 = NetworkStateF64::new(
        0.0,
        agents,
        3,
        (0..agents * 3).map(|k| 1.0 + 0.1 * (k as f64).sin()).collect(),
    )
    .unwrap();
    let settings = SettingsF64::new(1e-3, horizon).unwrap().record_every(10);
    integrate_ode(&spec, &g, &CouplingConfigF64::new(0.5).unwrap(), &x0, &settings).unwrap()
}

fn rebuild(traj: &TrajectoryF64, f: impl Fn(usize, &[f64]) -> Vec<f64>) -> TrajectoryF64 {
    let states = (0..traj.len()).map(|k| f(k, traj.state(k))).collect();
    TrajectoryF64::from_samples(
        traj.times().to_vec(),
        states,
        traj.num_agents(),
        traj.dim(),
        traj.meta.clone(),
    )
    .unwrap()
}

fn brute_force_error(state: &[f64], agents: usize) -> f64 {
    let mut acc = 0.0;
    for i in 1..agents {
        let mut sq = 0.0;
        for c in 0..3 {
            let d = state[3 * i + c] - state[c];
            sq += d * d;
        }
        acc += sq.sqrt();
    }
    acc / (agents - 1) as f64
}

#[test]
fn error_matches_brute_force() {
    let traj = lu_run(5, 2.0);
    let e = sync_error_series(&traj).unwrap();
    for k in 0..traj.len() {
        let b = brute_force_error(traj.state(k), 5);
        assert!((e[k] - b).abs() <= 1e-12 * b.max(1.0), "sample {k}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn error_is_invariant_under_follower_relabeling(perm in Just(vec![1usize, 2, 3, 4]).prop_shuffle()) {
        let traj = lu_run(5, 0.5);
        let relabeled = rebuild(&traj, |_, s| {
            let mut out = s[..3].to_vec();
            for &i in &perm {
                out.extend_from_slice(&s[3 * i..3 * i + 3]);
            }
            out
        });
        let a = sync_error_series(&traj).unwrap();
        let b = sync_error_series(&relabeled).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0));
        }
    }

    #[test]
    fn offsets_shift_exactly(shift in prop::collection::vec(-4.0f64..4.0, 6)) {
        let traj = lu_run(3, 2.0);
        let shifted = rebuild(&traj, |_, s| {
            let mut out = s.to_vec();
            for (o, d) in out[3..].iter_mut().zip(&shift) {
                *o += d;
            }
            out
        });
        let a = phase_offsets(&traj, 0.5).unwrap();
        let b = phase_offsets(&shifted, 0.5).unwrap();
        for f in 0..2 {
            for c in 0..3 {
                let want = a.offsets[f][c] + shift[3 * f + c];
                prop_assert!((b.offsets[f][c] - want).abs() <= 1e-9 * (1.0 + want.abs()));
            }
            prop_assert!((a.fluctuation_std[f] - b.fluctuation_std[f]).abs() <= 1e-9 * (1.0 + a.fluctuation_std[f]));
        }
    }
}

#[test]
fn constant_offsets_are_recovered() {
    let traj = lu_run(3, 2.0);
    let c = [[0.15, -0.11, 0.08], [-0.3, 0.2, 0.1]];
    let locked = rebuild(&traj, |_, s| {
        let mut out = s[..3].to_vec();
        for off in &c {
            out.extend(s[..3].iter().zip(off).map(|(l, o)| l + o));
        }
        out
    });
    let p = phase_offsets(&locked, 0.5).unwrap();
    for f in 0..2 {
        for k in 0..3 {
            assert!((p.offsets[f][k] - c[f][k]).abs() < 1e-12);
        }
        assert!(p.fluctuation_std[f] < 1e-12);
    }
    assert!(phase_offsets(&locked, 1.5).is_err());
}

#[test]
fn convergence_needs_a_sustained_hold() {
    let times: Vec<f64> = (0..500).map(|k| k as f64 * 0.01).collect();
    let mut series: Vec<f64> = times.iter().map(|&t| (-2.0 * t).exp()).collect();
    // A brief dip below threshold early on does not count.
    series[50] = 1e-4;
    let t = convergence_time_series(&times, &series, 1e-2, 1.0).unwrap();
    assert!((t - 2.31).abs() < 0.02, "{t}");
    assert!(convergence_time_series(&times, &series, 1e-9, 1.0).is_none());
}

#[test]
fn summary_metrics_are_consistent() {
    let traj = lu_run(4, 3.0);
    let m = sync_metrics(&traj, &MetricsOptions::default()).unwrap();
    let e = sync_error_series(&traj).unwrap();
    assert_eq!(m.error_series, e);
    assert_eq!(m.final_error, *e.last().unwrap());
    assert!(m.max_error >= m.final_error);
    assert_eq!(m.offsets.len(), 3);
    assert_eq!(m.diverged, traj.diverged());
}

#[test]
fn loglog_slope_recovers_power_law() {
    let xs = [1e-3, 1e-2, 1e-1];
    let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.3)).collect();
    let (slope, intercept) = fit_loglog_slope(&xs, &ys).unwrap();
    assert!((slope - 1.3).abs() < 1e-12);
    assert!((intercept - 3.0f64.ln()).abs() < 1e-9);
}

fn stable_spec() -> SystemSpecF64 {
    let l = Matrix::from_f64_rows(&[[-2.0, 1.0, 0.0], [0.0, -3.0, 0.0], [0.0, 0.0, -1.0]]).unwrap();
    SystemSpecF64::custom(
        "stable",
        l,
        Arc::new(|x: &[f64], out: &mut [f64]| {
            out[0] = 0.0;
            out[1] = -x[0] * x[2];
            out[2] = x[0] * x[1];
        }),
        Arc::new(|x: &[f64], j: &mut Matrix<f64>| {
            *j = Matrix::from_f64_rows(&[[0.0, 0.0, 0.0], [-x[2], 0.0, -x[0]], [x[1], x[0], 0.0]]).unwrap();
        }),
    )
    .unwrap()
}

#[test]
fn heterogeneity_error_scales_linearly_when_stable() {
    let spec = stable_spec();
    let g = DirectedGraphF64::chain(4).unwrap();
    let x0 = NetworkStateF64::synchronized(0.0, 4, &[0.5, 0.5, 0.5]);
    let settings = SettingsF64::new(1e-3, 20.0).unwrap().record_every(10);
    let r = heterogeneity_scaling(
        &spec,
        &g,
        &CouplingConfigF64::new(0.9).unwrap(),
        &x0,
        &settings,
        &[1e-3, 1e-2, 1e-1],
        4,
    )
    .unwrap();
    assert!(!r.any_diverged);
    let slope = r.slope.unwrap();
    assert!((0.5..=1.5).contains(&slope), "slope {slope}");
}
