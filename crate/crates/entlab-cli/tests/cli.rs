//! Black-box tests for the compiled binary: exit codes, output layout,
//! CSV header contracts, environment overrides, and determinism across
//! separate process invocations.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const FINITE_HEADER: &str =
    "t,purity,schmidt1,schmidt2,coupling_C,fichtre_residual,fidelity_meanfield";
const CONTINUUM_HEADER: &str = "t,norm,energy,entropy,mean_xA,mean_xB,classical_xA,classical_xB";

const FINITE_CONFIG: &str = r#"
mode = "finite"
seed = 42

[output]
stem = "demo"

[finite]
dims = [2, 2]
hamiltonian = "random-hermitian"
dt = 1e-3
t_final = 0.1
checks = ["purity-bounds"]
"#;

const CONTINUUM_CONFIG: &str = r#"
mode = "continuum"
seed = 7

[continuum]
mass_a = 1.0
mass_b = 1.0
dt = 1e-3
t_final = 0.05
sample_every = 10
checks = ["norm-conservation"]

[continuum.grid]
n = 64
center = 0.0
extent = 32.0

[continuum.packet_a]
x0 = -4.0
p0 = 1.0
width = 1.0

[continuum.packet_b]
x0 = 4.0
p0 = -1.0
width = 1.0

[continuum.potential.interaction]
kind = "gaussian-bump"
strength = 0.5
range = 1.0
"#;

fn entlab(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entlab"))
        .args(args)
        .env("ENTLAB_OUTPUT_DIR", out_dir)
        .output()
        .expect("spawn entlab")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process terminated by signal")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).expect("write config");
    path
}

/// Sorted file names in a directory, so tests can pin the exact output set
/// and catch stray temp files.
fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .expect("read output dir")
        .map(|e| {
            e.expect("dir entry")
                .file_name()
                .to_string_lossy()
                .into_owned()
        })
        .collect();
    names.sort();
    names
}

fn report_json(path: &Path) -> serde_json::Value {
    let text = fs::read_to_string(path).expect("read report");
    serde_json::from_str(&text).expect("parse report json")
}

fn check_value(report: &serde_json::Value, name: &str) -> f64 {
    report["checks"]
        .as_array()
        .expect("checks array")
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("check {name} missing from report"))["measured"]
        .as_f64()
        .expect("measured is a number")
}

#[test]
fn finite_run_emits_contract_csv_and_report() {
    let cfg_dir = TempDir::new().unwrap();
    let out_dir = TempDir::new().unwrap();
    let cfg = write_config(cfg_dir.path(), "demo_run.toml", FINITE_CONFIG);

    let out = entlab(out_dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("all checks passed"));

    // exactly the two declared outputs, no temp files left behind
    assert_eq!(
        listing(out_dir.path()),
        vec!["demo.csv", "demo.report.json"]
    );

    let csv = fs::read_to_string(out_dir.path().join("demo.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), FINITE_HEADER);
    assert_eq!(
        csv.lines().count(),
        102,
        "header plus one row per sampled step"
    );

    let report = report_json(&out_dir.path().join("demo.report.json"));
    assert_eq!(
        report["scenario"], "demo_run",
        "scenario id is the config file stem"
    );
    assert_eq!(report["passed"], true);
    for output in report["outputs"].as_array().unwrap() {
        assert!(Path::new(output.as_str().unwrap()).is_file());
    }
}

#[test]
fn continuum_run_emits_contract_csv() {
    let cfg_dir = TempDir::new().unwrap();
    let out_dir = TempDir::new().unwrap();
    let cfg = write_config(cfg_dir.path(), "pair.toml", CONTINUUM_CONFIG);

    let out = entlab(out_dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));

    // no stem configured, so the mode name is the default
    assert_eq!(
        listing(out_dir.path()),
        vec!["continuum.csv", "continuum.report.json"]
    );
    let csv = fs::read_to_string(out_dir.path().join("continuum.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CONTINUUM_HEADER);
}

#[test]
fn failing_check_exits_one_but_still_writes_outputs() {
    let cfg_dir = TempDir::new().unwrap();
    let out_dir = TempDir::new().unwrap();
    // a generic random Hermitian coupling entangles the product state far
    // beyond the invariance tolerance, so this check must fail
    let cfg = write_config(
        cfg_dir.path(),
        "drift.toml",
        &FINITE_CONFIG.replace("\"purity-bounds\"", "\"purity-invariance\""),
    );

    let out = entlab(out_dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 1);
    assert!(stdout_of(&out).contains("CHECKS FAILED"));

    let report = report_json(&out_dir.path().join("demo.report.json"));
    assert_eq!(report["passed"], false);
    assert!(check_value(&report, "purity-invariance") > 1e-9);
    assert_eq!(
        listing(out_dir.path()),
        vec!["demo.csv", "demo.report.json"]
    );
}

#[test]
fn malformed_config_exits_two_without_output() {
    let cfg_dir = TempDir::new().unwrap();
    let out_dir = TempDir::new().unwrap();
    let broken = FINITE_CONFIG.replace("dt = 1e-3\n", "");
    let cfg = write_config(cfg_dir.path(), "broken.toml", &broken);

    let out = entlab(out_dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    assert!(
        stderr_of(&out).contains("dt"),
        "stderr names the missing field"
    );
    assert!(
        listing(out_dir.path()).is_empty(),
        "no files written on config error"
    );
}

#[test]
fn unknown_config_key_exits_two() {
    let cfg_dir = TempDir::new().unwrap();
    let out_dir = TempDir::new().unwrap();
    let cfg = write_config(
        cfg_dir.path(),
        "extra.toml",
        &format!("frobnicate = true\n{FINITE_CONFIG}"),
    );

    let out = entlab(out_dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    assert!(listing(out_dir.path()).is_empty());
}

#[test]
fn missing_target_exits_two() {
    let out_dir = TempDir::new().unwrap();
    let out = entlab(out_dir.path(), &["run", "no_such_config.toml"]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_of(&out).contains("matches no preset"));
}

#[test]
fn env_var_overrides_configured_output_dir() {
    let cfg_dir = TempDir::new().unwrap();
    let env_dir = TempDir::new().unwrap();
    let ignored = cfg_dir.path().join("configured");
    let cfg = write_config(
        cfg_dir.path(),
        "routed.toml",
        &FINITE_CONFIG.replace(
            "[output]\n",
            &format!("[output]\ndir = \"{}\"\n", ignored.display()),
        ),
    );

    let out = entlab(env_dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    assert_eq!(
        listing(env_dir.path()),
        vec!["demo.csv", "demo.report.json"]
    );
    assert!(
        !ignored.exists(),
        "configured dir is not touched when the env var is set"
    );
}

#[test]
fn configured_output_dir_used_without_env() {
    let cfg_dir = TempDir::new().unwrap();
    let dest = cfg_dir.path().join("results");
    let cfg = write_config(
        cfg_dir.path(),
        "routed.toml",
        &FINITE_CONFIG.replace(
            "[output]\n",
            &format!("[output]\ndir = \"{}\"\n", dest.display()),
        ),
    );

    let out = Command::new(env!("CARGO_BIN_EXE_entlab"))
        .args(["run", cfg.to_str().unwrap()])
        .env_remove("ENTLAB_OUTPUT_DIR")
        .output()
        .expect("spawn entlab");
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    assert_eq!(listing(&dest), vec!["demo.csv", "demo.report.json"]);
}

#[test]
fn identical_config_and_seed_reproduce_csv_bytes() {
    let cfg_dir = TempDir::new().unwrap();
    let cfg = write_config(cfg_dir.path(), "twice.toml", CONTINUUM_CONFIG);

    let first = TempDir::new().unwrap();
    let second = TempDir::new().unwrap();
    assert_eq!(
        exit_code(&entlab(first.path(), &["run", cfg.to_str().unwrap()])),
        0
    );
    assert_eq!(
        exit_code(&entlab(second.path(), &["run", cfg.to_str().unwrap()])),
        0
    );

    let a = fs::read(first.path().join("continuum.csv")).unwrap();
    let b = fs::read(second.path().join("continuum.csv")).unwrap();
    assert_eq!(
        a, b,
        "rerun with the same config and seed must be byte-identical"
    );
}

#[test]
fn presets_run_by_name_and_list_and_show() {
    let out_dir = TempDir::new().unwrap();

    let list = entlab(out_dir.path(), &["presets", "list"]);
    assert_eq!(exit_code(&list), 0);
    let names = stdout_of(&list);
    for name in [
        "factorisable_invariance",
        "sigma_zz_rate",
        "equal_mass_scattering",
        "barrier_reflection",
        "test_particle",
    ] {
        assert!(names.contains(name), "presets list is missing {name}");
    }

    let show = entlab(out_dir.path(), &["presets", "show", "sigma_zz_rate"]);
    assert_eq!(exit_code(&show), 0);
    assert!(stdout_of(&show).contains("mode = \"finite\""));

    let unknown = entlab(out_dir.path(), &["presets", "show", "nope"]);
    assert_eq!(exit_code(&unknown), 2);
}

#[test]
fn sigma_zz_preset_reports_closed_form_curvature() {
    let out_dir = TempDir::new().unwrap();
    let out = entlab(out_dir.path(), &["run", "sigma_zz_rate"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));

    let report = report_json(&out_dir.path().join("sigma_zz_rate.report.json"));
    assert_eq!(report["scenario"], "sigma_zz_rate");
    let curvature = check_value(&report, "curvature-closed-form");
    assert!(
        (curvature + 4.0).abs() <= 1e-3,
        "extrapolated purity curvature {curvature} should sit at -4"
    );
}

#[test]
fn factorisable_preset_passes_invariance_check() {
    let out_dir = TempDir::new().unwrap();
    let out = entlab(out_dir.path(), &["run", "factorisable_invariance"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));

    let report = report_json(&out_dir.path().join("factorisable_invariance.report.json"));
    assert_eq!(report["passed"], true);
    assert!(check_value(&report, "purity-invariance") <= 1e-9);
}

#[test]
fn verify_filter_without_match_warns_and_exits_zero() {
    let out_dir = TempDir::new().unwrap();
    let out = entlab(out_dir.path(), &["verify", "--filter", "zzz-no-such-suite"]);
    assert_eq!(exit_code(&out), 0);
    assert!(stderr_of(&out).contains("matches no suite"));

    let report = report_json(&out_dir.path().join("verify.report.json"));
    assert_eq!(report["passed"], true);
    assert!(report["checks"].as_array().unwrap().is_empty());
}

#[test]
fn verify_mode_config_runs_filtered_suites() {
    let cfg_dir = TempDir::new().unwrap();
    let out_dir = TempDir::new().unwrap();
    let cfg = write_config(
        cfg_dir.path(),
        "gate.toml",
        "mode = \"verify\"\nseed = 7\n\n[verify]\nfilter = \"gate-classifier\"\n",
    );

    let out = entlab(out_dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
    let report = report_json(&out_dir.path().join("verify.report.json"));
    assert_eq!(check_value(&report, "classifier-misses"), 0.0);
}

#[test]
fn hamiltonian_matrix_file_round_trips() {
    let cfg_dir = TempDir::new().unwrap();
    let out_dir = TempDir::new().unwrap();
    let matrix = cfg_dir.path().join("diag.mat");
    fs::write(
        &matrix,
        "# diagonal test Hamiltonian\n2 2\n1 0 0 0 0 0 0 0\n0 0 2 0 0 0 0 0\n0 0 0 0 3 0 0 0\n0 0 0 0 0 0 5 0\n",
    )
    .unwrap();
    let cfg = write_config(
        cfg_dir.path(),
        "from_file.toml",
        &FINITE_CONFIG.replace(
            "hamiltonian = \"random-hermitian\"",
            &format!("hamiltonian = {{ file = \"{}\" }}", matrix.display()),
        ),
    );

    let out = entlab(out_dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_of(&out));
}

#[test]
fn non_hermitian_matrix_file_exits_three() {
    let cfg_dir = TempDir::new().unwrap();
    let out_dir = TempDir::new().unwrap();
    let matrix = cfg_dir.path().join("skew.mat");
    fs::write(
        &matrix,
        "2 2\n1 0 1 0 0 0 0 0\n0 0 2 0 0 0 0 0\n0 0 0 0 3 0 0 0\n0 0 0 0 0 0 5 0\n",
    )
    .unwrap();
    let cfg = write_config(
        cfg_dir.path(),
        "skew.toml",
        &FINITE_CONFIG.replace(
            "hamiltonian = \"random-hermitian\"",
            &format!("hamiltonian = {{ file = \"{}\" }}", matrix.display()),
        ),
    );

    let out = entlab(out_dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 3, "stderr: {}", stderr_of(&out));
}

#[test]
fn short_matrix_row_exits_two() {
    let cfg_dir = TempDir::new().unwrap();
    let out_dir = TempDir::new().unwrap();
    let matrix = cfg_dir.path().join("short.mat");
    fs::write(
        &matrix,
        "2 2\n1 0 0 0 0 0 0\n0 0 2 0 0 0 0 0\n0 0 0 0 3 0 0 0\n0 0 0 0 0 0 5 0\n",
    )
    .unwrap();
    let cfg = write_config(
        cfg_dir.path(),
        "short.toml",
        &FINITE_CONFIG.replace(
            "hamiltonian = \"random-hermitian\"",
            &format!("hamiltonian = {{ file = \"{}\" }}", matrix.display()),
        ),
    );

    let out = entlab(out_dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn unreadable_matrix_file_exits_four() {
    let cfg_dir = TempDir::new().unwrap();
    let out_dir = TempDir::new().unwrap();
    let cfg = write_config(
        cfg_dir.path(),
        "gone.toml",
        &FINITE_CONFIG.replace(
            "hamiltonian = \"random-hermitian\"",
            "hamiltonian = { file = \"/nonexistent/h.mat\" }",
        ),
    );

    let out = entlab(out_dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 4);
}
