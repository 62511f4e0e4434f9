//! End-to-end tests driving the `toa` binary.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn toa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str, content: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("toa-cli-{}-{name}", std::process::id()));
    fs::write(&path, content).unwrap();
    path
}

fn quartic_file() -> PathBuf {
    fixture(
        "quartic.json",
        r#"{"coeffs":[0.0,0.0,0.0,1.0],"mass":1.0,"hbar":1.0}"#,
    )
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn kernel_lattice_row_count_and_boundary() {
    let pot = quartic_file();
    let out = toa(&[
        "kernel",
        "--potential",
        pot.to_str().unwrap(),
        "--nmax",
        "1",
        "--u",
        "0:1:0.1",
        "--v",
        "0:1:0.1",
        "--grid",
        "11",
        "--tol",
        "1e-9",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout_str(&out);
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(lines[0], "u,v,t0,t1,sum");
    assert_eq!(lines.len(), 1 + 121, "11x11 lattice data rows");

    // v = 0 rows carry t0 = u/4 and vanishing corrections
    for line in &lines[1..] {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let (u, v, t0, t1) = (f[0], f[1], f[2], f[3]);
        if v == 0.0 {
            assert!((t0 - u / 4.0).abs() < 1e-13, "t0 at v=0: {line}");
            assert_eq!(t1, 0.0, "correction at v=0: {line}");
        }
        if u == 0.0 {
            assert_eq!(t0, 0.0);
        }
    }
}

#[test]
fn kernel_linear_potential_has_zero_corrections() {
    let pot = fixture("linear.json", r#"{"coeffs":[1.0,1.0]}"#);
    let out = toa(&[
        "kernel",
        "--potential",
        pot.to_str().unwrap(),
        "--nmax",
        "3",
        "--u",
        "0:1:0.25",
        "--v",
        "0:1:0.25",
        "--grid",
        "9",
    ]);
    assert!(out.status.success());
    for line in stdout_str(&out).trim_end().lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        for n in 1..=3 {
            assert!(f[2 + n].abs() <= 1e-12, "t{n} nonzero: {line}");
        }
        // sum equals t0
        assert!((f[6] - f[2]).abs() <= 1e-12);
    }
}

#[test]
fn kernel_output_is_deterministic() {
    let pot = quartic_file();
    let args = [
        "kernel",
        "--potential",
        pot.to_str().unwrap(),
        "--nmax",
        "2",
        "--u",
        "0:0.8:0.2",
        "--v",
        "0:0.8:0.2",
        "--grid",
        "9",
    ];
    let a = toa(&args);
    let b = toa(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "reruns must be byte-identical");
}

#[test]
fn kernel_json_format() {
    let pot = quartic_file();
    let out = toa(&[
        "kernel",
        "--potential",
        pot.to_str().unwrap(),
        "--nmax",
        "0",
        "--u",
        "0.5",
        "--v",
        "0.5",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 1);
    let row = &rows[0];
    assert_eq!(row["u"], 0.5);
    assert!(row["t0"].as_f64().unwrap() > 0.12);
}

#[test]
fn wigner_free_particle_columns() {
    let pot = fixture("free.json", r#"{"coeffs":[]}"#);
    let out = toa(&[
        "wigner",
        "--potential",
        pot.to_str().unwrap(),
        "--q",
        "-2:-1:0.5",
        "--p",
        "1:2:0.5",
        "--nmax",
        "1",
        "--kmax",
        "4",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout_str(&out);
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(lines[0], "q,p,tau_classical,tau_ltoa_k4,tau1,scaling1");
    for line in &lines[1..] {
        let f: Vec<&str> = line.split(',').collect();
        let (q, p): (f64, f64) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        let tau: f64 = f[2].parse().unwrap();
        let ltoa: f64 = f[3].parse().unwrap();
        assert!((tau - (-q / p)).abs() < 1e-12, "free arrival: {line}");
        assert!((ltoa - tau).abs() < 1e-12);
        // no corrections for the free particle
        assert_eq!(f[4].parse::<f64>().unwrap(), 0.0);
        assert_eq!(f[5], "NaN");
    }
}

#[test]
fn wigner_quartic_matches_closed_form_value() {
    let pot = quartic_file();
    let out = toa(&[
        "wigner",
        "--potential",
        pot.to_str().unwrap(),
        "--q",
        "-1",
        "--p",
        "1",
        "--nmax",
        "0",
        "--kmax",
        "0",
    ]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let row = text.trim_end().lines().nth(1).unwrap();
    let tau: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    // τ = -(μq/p) 2F1(1/2,1;5/4;-2) — 50-digit reference
    assert!((tau - 0.634384748086137).abs() < 1e-9, "{row}");
}

#[test]
fn operator_matrix_and_expectation_record() {
    let pot = fixture("op-free.json", r#"{"coeffs":[]}"#);
    // broad low-momentum-spread packet moving right from q0 = -3
    let mut psi_csv = String::from("q,re,im\n");
    for i in 0..=400 {
        let q = -20.0 + 40.0 * i as f64 / 400.0;
        let env = (-(q + 3.0) * (q + 3.0) / 4.0).exp();
        let (re, im) = ((2.0 * q).cos() * env, (2.0 * q).sin() * env);
        psi_csv.push_str(&format!("{q},{re},{im}\n"));
    }
    let psi = fixture("psi.csv", &psi_csv);
    let matrix_out = std::env::temp_dir().join(format!("toa-matrix-{}.csv", std::process::id()));

    let out = toa(&[
        "operator",
        "--potential",
        pot.to_str().unwrap(),
        "--length",
        "20",
        "--points",
        "201",
        "--psi",
        psi.to_str().unwrap(),
        "--out",
        matrix_out.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let record: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(record["hermiticity_defect"], 0.0);
    let value = record["value"].as_f64().unwrap();
    assert!(
        (value - 1.5).abs() < 0.25,
        "free-flight arrival ~1.5, got {value}"
    );
    assert!(record["imag_residue"].as_f64().unwrap().abs() < 1e-12);

    let matrix = fs::read_to_string(&matrix_out).unwrap();
    let mut lines = matrix.lines();
    assert_eq!(lines.next().unwrap(), "i,j,re,im");
    assert_eq!(matrix.trim_end().lines().count(), 1 + 201 * 201);
    fs::remove_file(matrix_out).ok();
}

#[test]
fn verify_single_check_report() {
    let out = toa(&["verify", "--only", "correction-ordering"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(report["passed"], true);
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 1);
    assert_eq!(checks[0]["name"], "correction-ordering");
    assert!(checks[0]["measured"].as_f64().unwrap() < 1.0);
    assert!(checks[0]["tolerance"].is_number());
}

#[test]
fn verify_unknown_filter_is_config_error() {
    let out = toa(&["verify", "--only", "bogus-check"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["error"]["kind"], "config");
}

#[test]
fn config_errors_exit_2() {
    let pot = quartic_file();
    // malformed range
    let out = toa(&[
        "kernel",
        "--potential",
        pot.to_str().unwrap(),
        "--u",
        "0:1:0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["error"]["kind"], "config");

    // missing potential file
    let out = toa(&["kernel", "--potential", "/nonexistent/pot.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_3() {
    let pot = quartic_file();
    // tolerance below the attainable floor forces a quadrature failure
    let out = toa(&[
        "kernel",
        "--potential",
        pot.to_str().unwrap(),
        "--nmax",
        "0",
        "--u",
        "1",
        "--v",
        "1",
        "--tol",
        "1e-30",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(err["error"]["kind"], "numerical");
}
