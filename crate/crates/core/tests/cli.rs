use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"K = 4
T = 5000
M = 2
regret_kind = ["binary_weak", "weak"]
instances = 20
groups = 5
seed = 11

[[algorithms]]
name = "btwr"

[[algorithms]]
name = "detect:ws"
"#;

fn duelbench(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_duelbench"));
    cmd.args(args).env_remove("DUELBENCH_SEED");
    if let Some(s) = seed_env {
        cmd.env("DUELBENCH_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("exp.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn run_writes_csvs_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), CONFIG);
    let out = tmp.path().join("out");
    let o = duelbench(
        &["--config", &cfg, "--out", out.to_str().unwrap(), "run"],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert_eq!(
        stderr.lines().filter(|l| l.starts_with("group ")).count(),
        5
    );
    for name in [
        "btwr_binary_weak.csv",
        "btwr_weak.csv",
        "detect-ws_binary_weak.csv",
        "detect-ws_weak.csv",
    ] {
        let text = read(&out, name);
        assert_eq!(text.lines().count(), 201);
        assert!(text.starts_with(
            "t,mean,std,algorithm,regret_kind,K,T,M,delta_cap,delta_change,instances,groups,seed\n"
        ));
    }
    let summary: serde_json::Value = serde_json::from_str(&read(&out, "summary.json")).unwrap();
    assert_eq!(summary["series"].as_array().unwrap().len(), 4);
    assert_eq!(summary["verified_runs"], 80);
    assert!(!read(&out, "summary.json").contains("elapsed"));
}

#[test]
fn quiet_hides_progress() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), CONFIG);
    let out = tmp.path().join("out");
    let o = duelbench(
        &[
            "--quiet",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "run",
        ],
        None,
    );
    assert!(o.status.success());
    assert!(
        o.stderr.is_empty(),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn seed_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), CONFIG);
    let run = |name: &str, extra: &[&str], env: Option<&str>| {
        let out = tmp.path().join(name);
        let mut args = vec!["--quiet", "--config", &cfg, "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        args.push("run");
        assert!(duelbench(&args, env).status.success());
        read(&out, "btwr_binary_weak.csv")
    };
    let plain = run("plain", &[], None);
    let again = run("again", &[], None);
    assert_eq!(plain, again);
    let env_seed = run("env", &[], Some("12"));
    assert_ne!(plain, env_seed);
    assert!(env_seed.lines().nth(1).unwrap().ends_with(",12"));
    let flag = run("flag", &["--seed", "12"], Some("99"));
    assert_eq!(flag, env_seed);
    let bad = duelbench(&["--config", &cfg, "validate"], Some("not-a-number"));
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn validate_reports_generator_feasibility() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &CONFIG.replace("seed = 11", "seed = 11\ndelta_change = 0.5"),
    );
    let o = duelbench(&["--config", &cfg, "validate"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("generator feasibility"));

    let ok = write_config(tmp.path(), CONFIG);
    let o = duelbench(&["--config", &ok, "validate"], None);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(duelbench(&["run"], None).status.code(), Some(2));
    assert_eq!(duelbench(&["launch"], None).status.code(), Some(2));
    assert_eq!(
        duelbench(&["params", "--K", "5"], None).status.code(),
        Some(2)
    );
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), CONFIG);
    assert_eq!(
        duelbench(&["--config", &cfg, "sweep", "--vary", "T"], None)
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn params_prints_derived_constants() {
    let o = duelbench(
        &[
            "params", "--K", "5", "--T", "1000000", "--M", "10", "--delta", "0.6",
        ],
        None,
    );
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("w=424"));
    let gamma: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("gamma="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((gamma - 0.0921).abs() < 5e-5, "{gamma}");
    assert!(text.contains("[detect]"));
}

#[test]
fn bounds_prints_reports() {
    let o = duelbench(
        &[
            "bounds", "--K", "5", "--T", "1000000", "--M", "10", "--gap", "0.2",
        ],
        None,
    );
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text
        .lines()
        .any(|l| l.starts_with("btwr_stationary") && l.contains("4023.59")));
    assert!(text.contains("131.76"));
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), CONFIG);
    let out = tmp.path().join("sweep");
    let o = duelbench(
        &[
            "--quiet",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "sweep",
            "--vary",
            "T=2e3,4e3",
        ],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for (dir, t) in [("T_2e3", "2000"), ("T_4e3", "4000")] {
        let text = read(&out.join(dir), "btwr_weak.csv");
        let last = text.lines().last().unwrap();
        assert!(last.starts_with(&format!("{t},")), "{last}");
    }
}
