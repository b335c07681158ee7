use std::process::{Command, Output};

use fincov::coverage::{self, CoverageQuery};
use fincov::{DiskGeometry, EvalPoint, NetworkModel};

fn fincov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fincov"))
        .args(args)
        .env_remove("FINCOV_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

/// Data rows of a CSV report, header row first.
fn table(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn header_value(csv: &str, key: &str) -> Option<String> {
    let prefix = format!("# {key}=");
    csv.lines()
        .find_map(|l| l.strip_prefix(&prefix).map(str::to_owned))
}

#[test]
fn coverage_row_matches_library() {
    let out = fincov(&[
        "coverage",
        "--radius-km",
        "1",
        "--density",
        "1",
        "--alpha",
        "3.87",
        "--shadow-db",
        "6",
        "--d-km",
        "0",
        "--threshold-db",
        "0",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = stdout(&out);
    let t = table(&csv);
    assert_eq!(t[0], ["d_km", "threshold_db", "coverage"]);
    assert_eq!(t.len(), 2, "exactly one data row");

    let n = coverage::density_to_n_aps(1.0, 1.0).unwrap();
    let model =
        NetworkModel::interference_limited(DiskGeometry::new(1.0).unwrap(), n, 3.87, 6.0).unwrap();
    let expected = coverage::coverage_probability(
        CoverageQuery::sinr_db(0.0).unwrap(),
        EvalPoint::CENTER,
        &model,
    )
    .unwrap();
    let got: f64 = t[1][2].parse().unwrap();
    assert!(
        (got - expected).abs() <= 1e-9 * expected,
        "{got} vs {expected}"
    );
}

#[test]
fn default_threshold_grid_has_31_rows() {
    let out = fincov(&["coverage", "--n-aps", "4"]);
    assert!(out.status.success());
    let t = table(&stdout(&out));
    assert_eq!(t.len(), 32);
    assert_eq!(t[1][1], "-10.0000000");
    assert_eq!(t[31][1], "20.0000000");
    let cov: Vec<f64> = t[1..].iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(cov.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn simulate_is_byte_identical_across_runs_and_threads() {
    let args = [
        "simulate",
        "--seed",
        "42",
        "--trials",
        "4000",
        "--n-aps",
        "6",
        "--shadow-db",
        "4",
        "--d-km",
        "0,0.6",
    ];
    let a = fincov(&args);
    let b = fincov(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = Command::new(env!("CARGO_BIN_EXE_fincov"))
        .args(args)
        .env("FINCOV_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.stdout, c.stdout);
    let csv = stdout(&a);
    assert_eq!(header_value(&csv, "seed").as_deref(), Some("42"));
    assert_eq!(header_value(&csv, "meta.seed").as_deref(), Some("42"));
}

#[test]
fn validation_errors_exit_2_and_name_the_field() {
    let out = fincov(&["coverage", "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));

    let out = fincov(&["coverage", "--n-aps", "3", "--density", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_aps"));

    let out = fincov(&["coverage", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));

    let out = fincov(&["design", "--min-prob", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("c0"));

    let out = fincov(&["ergodic", "--d-km", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_thread_override_is_a_validation_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_fincov"))
        .args(["worstcap4", "--n-aps", "5"])
        .env("FINCOV_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infeasible_design_exits_4() {
    let out = fincov(&[
        "design",
        "--c0",
        "40",
        "--min-prob",
        "0.99",
        "--n-max",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("20"));
}

#[test]
fn rank_deficient_fit_exits_3() {
    let out = fincov(&[
        "perturb-fit",
        "--n-aps",
        "10",
        "--d-grid",
        "0,0.1",
        "--degree",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(
        &path,
        "alpha = 4.0\nshadow_db = 3.0\nn_aps = 7\nthreshold_db = 2.0\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();

    let csv = stdout(&fincov(&["coverage", "--config", p, "--shadow-db", "5"]));
    assert_eq!(header_value(&csv, "alpha").as_deref(), Some("4.0"));
    assert_eq!(header_value(&csv, "shadow_db").as_deref(), Some("5.0"));
    assert_eq!(header_value(&csv, "n_aps").as_deref(), Some("7"));
    assert_eq!(header_value(&csv, "radius_km").as_deref(), Some("1.0"));
    let t = table(&csv);
    assert_eq!(t.len(), 2);
    assert_eq!(t[1][1], "2.00000000");

    // A density flag replaces the config's AP count.
    let csv = stdout(&fincov(&["coverage", "--config", p, "--density", "10"]));
    assert_eq!(header_value(&csv, "n_aps").as_deref(), Some("31"));

    std::fs::write(&path, "alpha = 4.0\nbogus = 1\n").unwrap();
    let out = fincov(&["coverage", "--config", p]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_has_config_rows_and_meta() {
    let out = fincov(&[
        "simulate", "--format", "json", "--trials", "500", "--seed", "7", "--n-aps", "4",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let obj = v.as_object().unwrap();
    assert_eq!(obj.len(), 3);
    assert_eq!(v["config"]["n_aps"], 4);
    assert_eq!(v["meta"]["seed"], 7);
    assert_eq!(v["meta"]["tool"], "fincov");
    assert!(v["meta"]["version"].is_string());
    assert!(v["meta"]["outer_rel_tol"].is_number());
    let row = &v["rows"][0];
    for key in ["d_km", "mc_coverage", "std_error", "analytic_coverage"] {
        assert!(row[key].is_number(), "{key}");
    }
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = fincov(&[
        "worstcap4",
        "--n-aps",
        "5",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let t = table(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(
        t[0],
        ["n_aps", "shadow_db", "worst_ergodic_bps_hz", "within_guard"]
    );
    assert_eq!(t[1][2], "7.55385708");
}

#[test]
fn sweeps_follow_their_grids() {
    let t = table(&stdout(&fincov(&["sweep-density"])));
    let n: Vec<&str> = t[1..].iter().map(|r| r[1].as_str()).collect();
    assert_eq!(n, ["3", "6", "16", "31", "94"]);

    let t = table(&stdout(&fincov(&["sweep-snr", "--n-aps", "5"])));
    assert_eq!(t.len(), 12);
    let cov: Vec<f64> = t[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(cov.windows(2).all(|w| w[1] >= w[0] - 1e-12));

    let t = table(&stdout(&fincov(&["profile", "--n-aps", "5"])));
    assert_eq!(t.len(), 22);
}

#[test]
fn perturb_fit_reports_four_coefficients() {
    let t = table(&stdout(&fincov(&["perturb-fit", "--n-aps", "31"])));
    let names: Vec<&str> = t[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(
        names,
        [
            "a0",
            "a1",
            "a2",
            "a3",
            "residual_rms_db",
            "max_abs_delta_db"
        ]
    );
}

#[test]
fn design_example_needs_five_aps() {
    let out = fincov(&[
        "design",
        "--c0",
        "5",
        "--min-prob",
        "0.6",
        "--alpha",
        "3.87",
        "--shadow-db",
        "6",
        "--radius-km",
        "1",
    ]);
    assert!(out.status.success());
    let csv = stdout(&out);
    assert!(csv.lines().any(|l| l == "n_aps,5"), "{csv}");
}
