//! Black-box tests of the `membrane` binary: exit codes and their stderr
//! classes, run-directory layout, bit-identical reproduction, environment
//! overrides, and per-subcommand plumbing.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use membrane_cli::output;

fn membrane() -> Command {
    Command::new(env!("CARGO_BIN_EXE_membrane"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary spawns")
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_file(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

/// A fast, smooth benchmark: small perturbed circle at low resolution
/// over a short horizon. `top` holds extra top-level lines, `tables`
/// extra trailing sections.
fn torus_config(output_dir: Option<&str>, top: &str, tables: &str) -> String {
    let dir_line = output_dir
        .map(|d| format!("output_dir = \"{d}\"\n"))
        .unwrap_or_default();
    format!(
        "n = 32\n\
         {dir_line}\
         {top}\
         [family]\n\
         name = \"torus_of_revolution\"\n\
         R0 = 1.0\n\
         b = 0.25\n\
         [solver]\n\
         t_end = 0.05\n\
         record_every = 2\n\
         {tables}"
    )
}

/// Homogeneous rest data run to collapse: exercises breakdown
/// classification quickly at n = 32.
fn collapse_config(output_dir: &str) -> String {
    format!(
        "n = 32\n\
         output_dir = \"{output_dir}\"\n\
         directions = [\"forward\"]\n\
         [family]\n\
         name = \"clifford\"\n\
         rho0 = 1.0\n\
         a0 = 1.0\n\
         [solver]\n\
         t_end = 12.0\n\
         indicator_floor = 1e-6\n\
         radius_floor = 1e-4\n\
         record_every = 1\n"
    )
}

#[test]
fn evolve_writes_a_complete_reproducible_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    let config_text = torus_config(Some(out_dir.to_str().unwrap()), "", "");
    let config_path = tmp.path().join("run.toml");
    write_file(&config_path, &config_text);

    let stdout = stdout_of(&run(membrane().arg("evolve").arg(&config_path)));
    assert!(stdout.contains("forward: HorizonReached"), "{stdout}");
    assert!(stdout.contains("backward: HorizonReached"), "{stdout}");

    // Layout: shared manifest + per-direction data.
    for file in ["manifest.toml", "config.toml", "plot.gp"] {
        assert!(out_dir.join(file).is_file(), "missing {file}");
    }
    for dir in ["forward", "backward"] {
        for file in ["diagnostics.csv", "result.toml", "breakdown.txt"] {
            assert!(out_dir.join(dir).join(file).is_file(), "missing {dir}/{file}");
        }
        // Default snapshot policy persists the endpoint.
        assert!(out_dir.join(dir).join("snapshots/final.csv").is_file());
    }

    // The manifest pins the exact input: a byte copy plus its digest.
    let copied = std::fs::read_to_string(out_dir.join("config.toml")).unwrap();
    assert_eq!(copied, config_text);
    let manifest = std::fs::read_to_string(out_dir.join("manifest.toml")).unwrap();
    assert!(
        manifest.contains(&output::sha256_hex(config_text.as_bytes())),
        "manifest digest does not match the config:\n{manifest}"
    );

    // A second invocation reproduces the diagnostics bit for bit.
    let out_dir2 = tmp.path().join("run2");
    let config_path2 = tmp.path().join("run2.toml");
    write_file(
        &config_path2,
        &torus_config(Some(out_dir2.to_str().unwrap()), "", ""),
    );
    stdout_of(&run(membrane().arg("evolve").arg(&config_path2)));
    for dir in ["forward", "backward"] {
        let a = std::fs::read(out_dir.join(dir).join("diagnostics.csv")).unwrap();
        let b = std::fs::read(out_dir2.join(dir).join("diagnostics.csv")).unwrap();
        assert_eq!(a, b, "{dir}/diagnostics.csv differs between identical runs");
    }
}

#[test]
fn invalid_config_exits_2_with_machine_readable_class() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("bad.toml");
    write_file(
        &config_path,
        "n = 32\n[family]\nname = \"clifford\"\nrho0 = 1.0\na0 = -1.0\n",
    );
    let out = run(membrane().arg("evolve").arg(&config_path));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("error[config]:"), "stderr: {stderr}");

    // Usage errors share the configuration exit code.
    let out = run(membrane().arg("no-such-subcommand"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn snapshot_policy_all_persists_one_file_per_record() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    let config_path = tmp.path().join("run.toml");
    write_file(
        &config_path,
        &torus_config(
            Some(out_dir.to_str().unwrap()),
            "directions = [\"forward\"]\n",
            "[output]\nsnapshots = \"all\"\n",
        ),
    );
    stdout_of(&run(membrane().arg("evolve").arg(&config_path)));

    let diagnostics =
        std::fs::read_to_string(out_dir.join("forward/diagnostics.csv")).unwrap();
    let records = diagnostics.lines().count() - 1;
    assert!(records >= 3, "expected several records, got {records}");
    for i in 0..records {
        let name = format!("forward/snapshots/record_{i:06}.csv");
        assert!(out_dir.join(&name).is_file(), "missing {name}");
    }
    assert!(out_dir.join("forward/snapshots/final.csv").is_file());

    // The first snapshot is the prepared initial state at t = 0 on the
    // full grid.
    let first =
        std::fs::read_to_string(out_dir.join("forward/snapshots/record_000000.csv")).unwrap();
    assert_eq!(first.lines().next().unwrap(), "y,z_1,r_1,vz_1,vr_1");
    assert_eq!(first.lines().count() - 1, 32);
}

#[test]
fn output_root_env_var_anchors_relative_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("run.toml");
    write_file(
        &config_path,
        &torus_config(Some("nested/run"), "directions = [\"forward\"]\n", ""),
    );
    stdout_of(&run(membrane()
        .arg("evolve")
        .arg(&config_path)
        .env("MEMBRANE_OUTPUT_ROOT", tmp.path())));
    assert!(tmp
        .path()
        .join("nested/run/forward/diagnostics.csv")
        .is_file());
}

#[test]
fn sweep_isolates_broken_rows_and_writes_a_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let template_path = tmp.path().join("template.toml");
    write_file(
        &template_path,
        &torus_config(None, "directions = [\"forward\"]\n", ""),
    );
    let grid_path = tmp.path().join("grid.toml");
    // b = 1.5 exceeds R0 = 1.0, so that row must fail fast while the
    // other completes.
    write_file(&grid_path, "[grid]\n\"family.b\" = [0.25, 1.5]\n");

    let out_dir = tmp.path().join("sweep");
    let stdout = stdout_of(&run(membrane()
        .arg("sweep")
        .arg(&template_path)
        .arg(&grid_path)
        .arg("--output-dir")
        .arg(&out_dir)));
    assert!(stdout.contains("config-error"), "{stdout}");
    assert!(stdout.contains("HorizonReached"), "{stdout}");

    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 3, "{summary}");
    assert!(lines[0].starts_with("row,family.b,status,"), "{summary}");
    assert!(lines[1].starts_with("0,0.25,ok,HorizonReached"), "{summary}");
    assert!(lines[2].starts_with("1,1.5,config-error,"), "{summary}");

    // The good row left a run directory; the broken one did not.
    assert!(out_dir.join("row_000/forward/diagnostics.csv").is_file());
    assert!(!out_dir.join("row_001").exists());
}

#[test]
fn empty_sweep_grid_prints_the_header_and_exits_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let template_path = tmp.path().join("template.toml");
    write_file(&template_path, &torus_config(None, "", ""));
    let grid_path = tmp.path().join("grid.toml");
    write_file(&grid_path, "[grid]\n");

    let stdout = stdout_of(&run(membrane()
        .arg("sweep")
        .arg(&template_path)
        .arg(&grid_path)));
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 1, "{stdout}");
    assert!(lines[0].starts_with("row  status"), "{stdout}");
}

#[test]
fn convergence_rejects_resolution_chains_that_do_not_double() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("run.toml");
    write_file(&config_path, &torus_config(None, "", ""));

    for bad in ["64,100,200", "64,128"] {
        let out = run(membrane()
            .arg("convergence")
            .arg(&config_path)
            .arg("--resolutions")
            .arg(bad));
        assert_eq!(out.status.code(), Some(2), "chain {bad}");
        let stderr = String::from_utf8(out.stderr).unwrap();
        assert!(stderr.starts_with("error[config]:"), "chain {bad}: {stderr}");
    }
}

#[test]
fn convergence_reports_window_too_long_past_collapse() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("run.toml");
    // Homogeneous rest data collapse before t = 3, so this window cannot
    // be completed at any resolution.
    write_file(
        &config_path,
        "n = 32\n\
         [family]\n\
         name = \"clifford\"\n\
         rho0 = 1.0\n\
         a0 = 1.0\n\
         [solver]\n\
         t_end = 3.0\n",
    );
    let out = run(membrane()
        .arg("convergence")
        .arg(&config_path)
        .arg("--resolutions")
        .arg("32,64,128"));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("WindowTooLong"), "{stderr}");
}

#[test]
fn diagnose_reclassifies_a_finished_run_from_disk() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    let config_path = tmp.path().join("run.toml");
    write_file(&config_path, &collapse_config(out_dir.to_str().unwrap()));
    let evolve_stdout = stdout_of(&run(membrane().arg("evolve").arg(&config_path)));
    assert!(evolve_stdout.contains("IndicatorFloor"), "{evolve_stdout}");

    let stdout = stdout_of(&run(membrane().arg("diagnose").arg(&out_dir)));
    assert!(stdout.contains("direction = forward"), "{stdout}");
    assert!(stdout.contains("termination = IndicatorFloor"), "{stdout}");
    assert!(stdout.contains("mechanism = ImmersivityLoss"), "{stdout}");
    assert!(stdout.contains("convexity = ok"), "{stdout}");
    assert!(!stdout.contains("t_star = n/a"), "{stdout}");

    // Same estimate as the in-process classification printed by evolve.
    let t_star_line = |text: &str| {
        text.lines()
            .find_map(|l| l.split("t_star = ").nth(1))
            .map(|rest| rest.split(';').next().unwrap().trim().to_string())
            .expect("t_star line present")
    };
    let from_evolve: f64 = t_star_line(&evolve_stdout).parse().unwrap();
    let from_diagnose: f64 = t_star_line(&stdout).parse().unwrap();
    let rel = ((from_diagnose - from_evolve) / from_evolve).abs();
    assert!(
        rel < 1e-9,
        "diagnose re-estimate {from_diagnose} drifted from evolve's {from_evolve}"
    );

    // Pointing at a directory without run data is a configuration error.
    let out = run(membrane().arg("diagnose").arg(tmp.path().join("nowhere")));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_subcommand_reports_the_collapse_time_and_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let csv_path: PathBuf = tmp.path().join("traj.csv");
    let stdout = stdout_of(&run(membrane()
        .args(["oracle", "clifford", "rho0=1", "a0=1", "--csv"])
        .arg(&csv_path)));
    assert!(stdout.contains("family = clifford"), "{stdout}");

    let collapse: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("collapse_t = "))
        .expect("collapse line")
        .parse()
        .expect("collapse time parses");
    assert!(
        (1.8..1.9).contains(&collapse),
        "square-torus rest data collapse near t = 1.84, got {collapse}"
    );

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,rho,rho_dot,a_1,a_dot_1,speed_squared"
    );
    assert!(lines.count() > 10, "trajectory too short");

    // Unknown families and inadmissible parameters are config errors.
    let out = run(membrane().args(["oracle", "sphere", "rho0=1", "a0=1"]));
    assert_eq!(out.status.code(), Some(2));
    let out = run(membrane().args(["oracle", "clifford", "rho0=1"]));
    assert_eq!(out.status.code(), Some(2));
}
