//! Exit codes, report layout and flag validation of the binary.

use std::process::{Command, Output};

use serde_json::Value;

fn sfoliate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfoliate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    sfoliate(args).status.code().expect("exit code")
}

fn report(args: &[&str]) -> Value {
    serde_json::from_slice(&sfoliate(args).stdout).expect("JSON on stdout")
}

#[test]
fn verify_standard_structure_passes_at_documented_tolerance() {
    let args = [
        "verify",
        "--structure",
        "standard-s",
        "--n",
        "2",
        "--p",
        "2",
    ];
    assert_eq!(
        code(
            &[
                &args[..],
                &["--samples", "200", "--seed", "42", "--tol", "1e-7"]
            ]
            .concat()
        ),
        0
    );
}

#[test]
fn exit_codes() {
    assert_eq!(
        code(&[
            "verify",
            "--n",
            "2",
            "--p",
            "2",
            "--samples",
            "5",
            "--tol",
            "1e-15"
        ]),
        1
    );
    assert_eq!(code(&["verify", "--structure", "bogus"]), 2);
    assert_eq!(
        code(&[
            "verify",
            "--structure",
            "flat-torus",
            "--p",
            "2",
            "--samples",
            "10"
        ]),
        0
    );
    assert_eq!(code(&["verify", "--structure", "sphere"]), 2);
    assert_eq!(code(&["verify", "--samples", "0"]), 2);
    assert_eq!(code(&["verify", "--tol", "-1"]), 2);
    assert_eq!(code(&["curvature", "--order", "4"]), 2);
    assert_eq!(code(&["curvature", "--structure", "sphere", "--n", "2"]), 2);
    assert_eq!(code(&["witness", "--samples", "3"]), 2);
    assert_eq!(code(&["soliton-fit", "--structure", "flat"]), 2);
    assert_eq!(code(&["chain", "--potential-fn", "sin(q)"]), 2);
    assert_eq!(code(&["warp", "--samples", "5", "--warp-fn", "sin(z1)"]), 1);
    assert_eq!(code(&["catalog"]), 0);
    assert_eq!(code(&["--version"]), 0);
}

#[test]
fn report_layout() {
    let r = report(&[
        "curvature",
        "--structure",
        "sphere",
        "--samples",
        "10",
        "--order",
        "3",
    ]);
    let keys: Vec<&String> = r.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["meta", "config", "results", "verdict"]);
    assert_eq!(r["meta"]["seed"], 42);
    assert_eq!(r["meta"]["descriptor"], "sphere (m=2, r=1)");
    for key in [
        "curvature_sign",
        "d_eta_factor",
        "divergence",
        "laplacian_sign",
    ] {
        assert!(r["meta"]["conventions"][key].is_string(), "{key}");
    }
    assert_eq!(r["verdict"], "pass");
    let rows = r["results"].as_array().unwrap();
    let names: Vec<&str> = rows.iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"constant_curvature_oracle") && names.contains(&"contracted_bianchi"));
    for row in rows {
        for key in ["name", "max_abs", "mean_abs", "tol", "pass"] {
            assert!(row.get(key).is_some(), "{key} missing");
        }
    }
}

#[test]
fn out_flag_writes_the_same_report() {
    let path = std::env::temp_dir().join(format!("sfoliate-report-{}.json", std::process::id()));
    let args = ["witness", "--n", "1", "--p", "2", "--samples", "10"];
    let out = sfoliate(&[&args[..], &["--out", path.to_str().unwrap()]].concat());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verdict: pass"));
    let written = std::fs::read(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(written, sfoliate(&args).stdout);
}

#[test]
fn soliton_fit_reports_lambda_and_grid() {
    let r = report(&[
        "soliton-fit",
        "--structure",
        "sphere",
        "--family",
        "zero",
        "--samples",
        "20",
        "--grid",
        "5",
    ]);
    let rows = r["results"].as_array().unwrap();
    let lambda = rows.iter().find(|e| e["name"] == "lambda").unwrap()["value"]
        .as_f64()
        .unwrap();
    assert!((lambda + 1.0).abs() < 1e-6);
    assert!(rows.iter().any(|e| e["name"] == "grid_best_rms"));
    assert_eq!(r["verdict"], "pass");
}

#[test]
fn chain_checks_only_trace_consistency() {
    let r = report(&[
        "chain",
        "--samples",
        "5",
        "--potential-fn",
        "x1*y1 + cos(z1)",
        "--lambda",
        "-0.3",
    ]);
    for row in r["results"].as_array().unwrap() {
        assert_eq!(
            row["pass"].is_null(),
            row["name"] != "trace_consistency",
            "{row}"
        );
    }
    assert_eq!(r["verdict"], "pass");
}
