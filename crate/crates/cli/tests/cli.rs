mod common;

use std::fs;

use common::{chaosync, first_line, read_json, scenario_path, schema, validate};
use serde_json::json;

const SHORT_LU: &str = r#"
name = "short"
seed = 7

[system]
name = "lu"

[topology]
kind = "chain"
agents = 4

[coupling]
alpha = 0.95

[integrator]
dt = 0.001
horizon = 3.0
"#;

fn write_scenario(dir: &std::path::Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn simulate_writes_artifacts_with_exact_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_scenario(tmp.path(), "s.toml", SHORT_LU);
    let out = tmp.path().join("out");
    let o = chaosync(&out, &["simulate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = out.join("short");
    assert_eq!(first_line(&dir.join("trajectory.csv")), "t,agent,x1,x2,x3");
    assert_eq!(first_line(&dir.join("error.csv")), "t,E");
    let rows = fs::read_to_string(dir.join("trajectory.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows, 301 * 4);
    let summary = read_json(&dir.join("summary.json"));
    assert!(summary["metrics"]["steady_state_error"].is_number());
    assert_eq!(summary["mode"], json!("ode"));
    assert_eq!(validate(&schema(), &summary), Vec::<String>::new());
}

#[test]
fn runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SHORT_LU
        .replace("alpha = 0.95", "alpha = 0.95\nnoise_variance = 0.01")
        .replace("dt = 0.001", "dt = 0.0001");
    let cfg = write_scenario(tmp.path(), "s.toml", &text);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(
        chaosync(&a, &["simulate", cfg.to_str().unwrap()]).status.code(),
        Some(0)
    );
    assert_eq!(
        chaosync(&b, &["simulate", cfg.to_str().unwrap()]).status.code(),
        Some(0)
    );
    for f in ["trajectory.csv", "error.csv"] {
        assert_eq!(
            fs::read(a.join("short").join(f)).unwrap(),
            fs::read(b.join("short").join(f)).unwrap(),
            "{f}"
        );
    }
    let mut ja = read_json(&a.join("short/summary.json"));
    let mut jb = read_json(&b.join("short/summary.json"));
    ja.as_object_mut().unwrap().remove("timing");
    jb.as_object_mut().unwrap().remove("timing");
    assert_eq!(ja, jb);
}

#[test]
fn malformed_config_exits_2_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    for (i, text) in [
        "name = \"bad\"\n[system\nname = 1",
        &SHORT_LU.replace("alpha = 0.95", "alpha = -1.0"),
        &SHORT_LU.replace("name = \"lu\"", "name = \"lorenz96\""),
        &SHORT_LU.replace("agents = 4", "agents = 4\ncolour = \"red\""),
        &SHORT_LU.replace("horizon = 3.0", "horizon = 0.005"),
    ]
    .iter()
    .enumerate()
    {
        let cfg = write_scenario(tmp.path(), &format!("bad{i}.toml"), text);
        for cmd in ["simulate", "certify", "securecomm"] {
            let o = chaosync(&out, &[cmd, cfg.to_str().unwrap()]);
            assert_eq!(o.status.code(), Some(2), "case {i} {cmd}");
            let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
            assert_eq!(err["error"], json!("config"));
            assert_eq!(err["exit_code"], json!(2));
        }
    }
    assert!(!out.exists(), "artifacts written for a bad config");
    let o = chaosync(&out, &["simulate", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = chaosync(&out, &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn divergence_exits_3_with_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_scenario(tmp.path(), "d.toml", &SHORT_LU.replace("alpha = 0.95", "alpha = 1.0"));
    let out = tmp.path().join("out");
    let o = chaosync(&out, &["simulate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], json!("divergence"));
    let t = err["time"].as_f64().unwrap();
    assert!(t > 0.0 && t < 3.0);
    let summary = read_json(&out.join("short/summary.json"));
    assert_eq!(summary["divergence"]["time"].as_f64(), Some(t));
    assert!(summary["metrics"]["diverged"].as_bool().unwrap());
    assert_eq!(validate(&schema(), &summary), Vec::<String>::new());
    let last = fs::read_to_string(out.join("short/error.csv")).unwrap();
    let last_t: f64 = last.lines().last().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!(last_t <= t);
}

#[test]
fn unwritable_output_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_scenario(tmp.path(), "s.toml", SHORT_LU);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = chaosync(&blocker, &["certify", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], json!("internal"));
}

#[test]
fn env_var_overrides_configured_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let configured = tmp.path().join("configured");
    let text = format!("{SHORT_LU}\n[output]\ndir = \"{}\"\n", configured.display());
    let cfg = write_scenario(tmp.path(), "s.toml", &text);
    let out = tmp.path().join("env");
    assert_eq!(
        chaosync(&out, &["certify", cfg.to_str().unwrap()]).status.code(),
        Some(0)
    );
    assert!(out.join("short/summary.json").exists());
    assert!(!configured.exists());

    let o = std::process::Command::new(env!("CARGO_BIN_EXE_chaosync"))
        .args(["certify", cfg.to_str().unwrap()])
        .env_remove("CHAOSYNC_OUTPUT_DIR")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(configured.join("summary.json").exists());
}

#[test]
fn certify_skips_integration() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = chaosync(
        &out,
        &["certify", scenario_path("rossler_delay.toml").to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0));
    let dir = out.join("rossler_delay");
    assert!(!dir.join("trajectory.csv").exists());
    let s = read_json(&dir.join("summary.json"));
    assert!(s["metrics"].is_null());
    assert!(s["delayed"].as_bool().unwrap());
    assert_eq!(s["certificate"]["delay"], json!(0.5));
    assert_eq!(validate(&schema(), &s), Vec::<String>::new());
}

#[test]
fn bundled_scenarios_parse_and_validate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    for entry in fs::read_dir(common::workspace_root().join("scenarios")).unwrap() {
        let p = entry.unwrap().path();
        let o = chaosync(&out, &["certify", p.to_str().unwrap()]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}: {}",
            p.display(),
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn securecomm_writes_series() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SHORT_LU
        .replace("agents = 4", "agents = 2")
        .replace("horizon = 3.0", "horizon = 8.0")
        + "\n[analysis.securecomm]\n";
    let cfg = write_scenario(tmp.path(), "s.toml", &text);
    let out = tmp.path().join("out");
    let o = chaosync(&out, &["securecomm", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(first_line(&out.join("short/securecomm.csv")), "time,m,s,m_hat,error");
    let s = read_json(&out.join("short/summary.json"));
    assert!(s["securecomm"]["snr_improvement_db"].is_number());
    assert!(s["securecomm"]["recovery_bound_holds"].as_bool().unwrap());
    assert_eq!(validate(&schema(), &s), Vec::<String>::new());

    let o = chaosync(&out, &["securecomm", scenario_path("lu.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_table_and_scatter_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_scenario(
        tmp.path(),
        "s.toml",
        &SHORT_LU.replace("horizon = 3.0", "horizon = 1.5"),
    );
    let out = tmp.path().join("out");
    let o = chaosync(
        &out,
        &[
            "sweep",
            cfg.to_str().unwrap(),
            "--param",
            "alpha",
            "--values",
            "0.95,0.5,1.0",
            "--workers",
            "2",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = out.join("short_sweep_alpha");
    let table = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(
        lines[0],
        "value,E_inf,convergence_time,spectral_abscissa,theorem2_margin"
    );
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0.95,") && lines[2].starts_with("0.5,") && lines[3].starts_with("1,"));
    for a in ["0.5", "0.8", "0.95", "1"] {
        assert_eq!(first_line(&dir.join(format!("eigenvalues_alpha_{a}.csv"))), "t,re,im");
    }

    let o = chaosync(
        &out,
        &["sweep", cfg.to_str().unwrap(), "--param", "beta", "--values", "1"],
    );
    assert_eq!(o.status.code(), Some(2));
    let o = chaosync(
        &out,
        &["sweep", cfg.to_str().unwrap(), "--param", "tau_a", "--values", "0.5"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_is_deterministic_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SHORT_LU
        .replace("alpha = 0.95", "alpha = 0.95\nnoise_variance = 0.01")
        .replace("dt = 0.001", "dt = 0.0001")
        .replace("horizon = 3.0", "horizon = 1.2");
    let cfg = write_scenario(tmp.path(), "s.toml", &text);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let args = |w: &'static str| {
        vec![
            "sweep",
            cfg.to_str().unwrap(),
            "--param",
            "sigma2",
            "--values",
            "0.01,0.05,0.1",
            "--workers",
            w,
        ]
    };
    assert_eq!(chaosync(&a, &args("1")).status.code(), Some(0));
    assert_eq!(chaosync(&b, &args("3")).status.code(), Some(0));
    let f = "short_sweep_sigma2/sweep.csv";
    assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
}

#[test]
fn bench_emits_timing_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bench");
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_chaosync"))
        .args([
            "bench",
            "--sizes",
            "3,4",
            "--repeats",
            "1",
            "--out",
            out.to_str().unwrap(),
        ])
        .env_remove("CHAOSYNC_OUTPUT_DIR")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("bench.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,seconds");
    assert_eq!(lines.len(), 3);
    let o = chaosync(&out, &["bench", "--sizes", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn schema_rejects_broken_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_scenario(tmp.path(), "s.toml", SHORT_LU);
    let out = tmp.path().join("out");
    assert_eq!(
        chaosync(&out, &["certify", cfg.to_str().unwrap()]).status.code(),
        Some(0)
    );
    let good = read_json(&out.join("short/summary.json"));
    let mut missing = good.clone();
    missing.as_object_mut().unwrap().remove("certificate");
    assert!(!validate(&schema(), &missing).is_empty());
    let mut extra = good.clone();
    extra["surprise"] = json!(1);
    assert!(!validate(&schema(), &extra).is_empty());
    let mut wrong = good.clone();
    wrong["certificate"]["norm"] = json!("3");
    assert!(!validate(&schema(), &wrong).is_empty());
    let mut negative = good;
    negative["timing"]["total_seconds"] = json!(-1.0);
    assert!(!validate(&schema(), &negative).is_empty());
}
