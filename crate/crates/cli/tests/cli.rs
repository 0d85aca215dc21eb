use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = "R_harvest = 15\nR_interf = 15\n";

fn bwpc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bwpc"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn workspace(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), config).unwrap();
    dir
}

fn header(path: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .next()
        .unwrap()
        .split(',')
        .map(String::from)
        .collect()
}

fn sidecar(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn analytic_writes_csv_and_sidecar() {
    let dir = workspace("");
    let out = bwpc(
        dir.path(),
        &[
            "analytic",
            "--sweep",
            "gamma_R_dB",
            "--from",
            "0",
            "--to",
            "10",
            "--points",
            "6",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = dir.path().join("out/analytic.csv");
    let cols = header(&csv);
    for c in [
        "E_C_uJ",
        "gamma_R_dB",
        "P_eo_analytic",
        "P_io_analytic",
        "R_analytic",
    ] {
        assert!(cols.iter().any(|x| x == c), "missing {c}");
    }
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 7);

    let meta = sidecar(&dir.path().join("out/analytic.json"));
    assert_eq!(meta["csv"], "analytic.csv");
    assert_eq!(meta["columns"].as_array().unwrap().len(), cols.len());
    assert_eq!(meta["invocation"]["task"]["command"], "analytic");
    assert_eq!(
        meta["invocation"]["task"]["sweep"]["variable"],
        "gamma_R_dB"
    );
    assert_eq!(meta["invocation"]["seed"], 1);
    assert_eq!(meta["invocation"]["config"]["params"]["antennas"], 3);
}

#[test]
fn simulation_replays_bit_for_bit() {
    let dir = workspace(SMALL);
    let out = bwpc(
        dir.path(),
        &[
            "simulate", "--config", "run.toml", "--trials", "1000", "--seed", "42", "--mode",
            "thinned", "joint", "--points", "3",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let meta = sidecar(&dir.path().join("out/simulate.json"));
    assert_eq!(meta["invocation"]["trials"], 1000);
    assert_eq!(meta["invocation"]["seed"], 42);
    assert_eq!(meta["invocation"]["config"]["r_harvest"], 15.0);

    let replay = bwpc(
        dir.path(),
        &["replay", "out/simulate.json", "--workers", "2"],
    );
    assert!(replay.status.success());
    assert!(String::from_utf8_lossy(&replay.stdout).starts_with("identical"));

    let csv = dir.path().join("out/simulate.csv");
    let tampered = std::fs::read_to_string(&csv)
        .unwrap()
        .replacen("thinned", "joint", 1);
    std::fs::write(&csv, tampered).unwrap();
    let replay = bwpc(dir.path(), &["replay", "out/simulate.json"]);
    assert_eq!(replay.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&replay.stdout).starts_with("differs"));
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = workspace(SMALL);
    let mut csvs = Vec::new();
    for workers in ["1", "3"] {
        let out_dir = format!("w{workers}");
        let out = bwpc(
            dir.path(),
            &[
                "simulate",
                "--config",
                "run.toml",
                "--trials",
                "1000",
                "--points",
                "2",
                "--workers",
                workers,
                "--out",
                &out_dir,
            ],
        );
        assert!(out.status.success());
        csvs.push(std::fs::read(dir.path().join(out_dir).join("simulate.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn energy_figure_has_expected_columns() {
    let dir = workspace(SMALL);
    let out = bwpc(
        dir.path(),
        &[
            "reproduce",
            "fig3",
            "--config",
            "run.toml",
            "--trials",
            "1000",
            "--grid",
            "4",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = dir.path().join("out/fig3.csv");
    assert_eq!(
        header(&csv),
        [
            "T1_ms",
            "T2_ms",
            "E_C_uJ",
            "P_eo_sim",
            "P_eo_ci99",
            "P_eo_analytic",
            "P_eo_cantelli_upper",
            "P_eo_cantelli_lower"
        ]
    );
    assert_eq!(
        std::fs::read_to_string(&csv).unwrap().lines().count(),
        1 + 3 * 4
    );
    assert_eq!(
        sidecar(&dir.path().join("out/fig3.json"))["invocation"]["task"]["figure"],
        "fig3"
    );
}

#[test]
fn analytic_figures_need_no_trials() {
    let dir = workspace("");
    for fig in ["fig7", "fig8"] {
        let out = bwpc(dir.path(), &["reproduce", fig, "--grid", "16"]);
        assert!(
            out.status.success(),
            "{fig}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(dir.path().join(format!("out/{fig}.csv")).exists());
    }
    let best: usize = std::fs::read_to_string(dir.path().join("out/fig8.csv"))
        .unwrap()
        .lines()
        .filter(|l| l.ends_with(",true,true") || l.ends_with(",true,false"))
        .count();
    assert!(best >= 4);
}

#[test]
fn invalid_parameter_exits_with_code_2_and_names_it() {
    let dir = workspace("alpha = 2\n");
    let out = bwpc(dir.path(), &["analytic", "--config", "run.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_keys_and_short_runs_exit_with_code_2() {
    let dir = workspace("lamda = 0.1\n");
    let out = bwpc(dir.path(), &["analytic", "--config", "run.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = workspace("");
    let out = bwpc(dir.path(), &["simulate", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infeasible_targets_exit_with_code_3() {
    let dir = workspace("eps_e = 1e-9\neps_i = 1e-9\n");
    let out = bwpc(dir.path(), &["optimize", "--config", "run.toml"]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = bwpc(
        dir.path(),
        &["density", "--config", "run.toml", "--grid", "20"],
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn unreachable_threshold_exits_with_code_4() {
    let dir = workspace(&format!("{SMALL}lambda = 0.001\n"));
    let out = bwpc(
        dir.path(),
        &[
            "simulate", "--config", "run.toml", "--trials", "1000", "--points", "1", "--from",
            "1e6",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
