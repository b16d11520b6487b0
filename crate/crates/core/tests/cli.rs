//! The `d3pinn` binary end to end on a tiny configuration.

use std::path::Path;
use std::process::{Command, Output};

use d3pinn::config::{RunConfig, Scale};
use d3pinn::problems::ProblemName;

const TINY: &str = r#"
preset = "example1"
scale = "desk"

[[networks]]
depth = 2
width = 4

[[networks]]
depth = 2
width = 4

[train]
iterations = 30
checkpoint_every = 10
log_every = 10

[points]
residual_per_subdomain = 20
interface = 10
boundary = 10
initial = 10

[evolution]
nx = 21
output_dt = 0.1
step = 0.01
"#;

fn d3pinn(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_d3pinn"))
        .args(args)
        .env("D3PINN_OUTPUT_ROOT", root)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn tiny_config(dir: &Path, threshold: f64) -> String {
    let path = dir.join(format!("tiny-{threshold}.toml"));
    std::fs::write(&path, format!("{TINY}\n[acceptance]\nmax_rel_l2 = {threshold:e}\n")).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn show_config_prints_a_loadable_preset() {
    let tmp = tempfile::tempdir().unwrap();
    let out = d3pinn(
        &["show-config", "--preset", "example2", "--scale", "desk", "--seed", "9"],
        tmp.path(),
    );
    assert!(out.status.success());
    let cfg = RunConfig::from_toml_str(&stdout(&out)).unwrap();
    let mut want = RunConfig::preset(ProblemName::Example2, Scale::Desk);
    want.seed = 9;
    assert_eq!(cfg, want);
}

#[test]
fn missing_source_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = d3pinn(&["show-config"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--preset"));
}

#[test]
fn bad_config_reports_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    std::fs::write(&path, "preset = \"example1\"\n[train]\nlearning_rat = 0.1\n").unwrap();
    let out = d3pinn(&["show-config", "--config", path.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("train.learning_rat"));
}

#[test]
fn staged_commands_share_a_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tiny_config(tmp.path(), 1e9);
    let out = d3pinn(&["train", "--config", &config], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = tmp.path().join("example1-d3pinn-seed1");
    assert!(run.join("model.json").exists());
    let run_arg = run.to_str().unwrap();

    let out = d3pinn(&["evolve", "--run", run_arg], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(run.join("solution.grid").exists());

    let out = d3pinn(&["evaluate", "--run", run_arg], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("PASS"));
    assert!(run.join("report.json").exists());
}

#[test]
fn missed_threshold_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tiny_config(tmp.path(), 1e-12);
    let run = tmp.path().join("strict");
    let run_arg = run.to_str().unwrap();
    assert!(d3pinn(&["train", "--config", &config, "--out", run_arg], tmp.path())
        .status
        .success());
    assert!(d3pinn(&["evolve", "--run", run_arg], tmp.path()).status.success());
    let out = d3pinn(&["evaluate", "--run", run_arg], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn manifest_rerun_is_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tiny_config(tmp.path(), 1e9);
    let sweep = tmp.path().join("sweep");
    let out = d3pinn(
        &[
            "compare",
            "--config",
            &config,
            "--variants",
            "xpinn,d3pinn",
            "--seeds",
            "1",
            "--out",
            sweep.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert!(
        out.status.code().is_some_and(|c| c <= 1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(sweep.join("compare.csv").exists());
    let manifest = sweep.join("d3pinn-seed1").join("manifest.json");

    let rerun = tmp.path().join("rerun");
    let out = d3pinn(
        &[
            "reproduce",
            manifest.to_str().unwrap(),
            "--out",
            rerun.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("bit-identical"));

    let out = d3pinn(&["reproduce", manifest.to_str().unwrap(), "--seed", "2"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}
