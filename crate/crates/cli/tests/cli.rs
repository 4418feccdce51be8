//! End-to-end checks of the `mms` binary: generation, solving, pencil
//! round trips, exit codes, and report determinism.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mms"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mms-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn gen_modulus_pencil_round_trip() {
    let space = scratch("grid4.json");
    let out = bin()
        .args(["gen", "--name", "grid", "--n", "4", "--out", space.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = bin()
        .args([
            "modulus",
            "--space",
            space.to_str().unwrap(),
            "--x",
            "v0_0",
            "--y",
            "v4_4",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["value"].as_f64().unwrap() > 0.0);
    assert!(v["gap"].as_f64().unwrap() <= 1e-8);

    let pencil = scratch("pencil.json");
    let out = bin()
        .args([
            "pencil",
            "build",
            "--space",
            space.to_str().unwrap(),
            "--x",
            "v0_0",
            "--y",
            "v4_4",
            "--C",
            "1",
            "--out",
            pencil.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = bin()
        .args([
            "pencil",
            "verify",
            "--space",
            space.to_str().unwrap(),
            "--pencil",
            pencil.to_str().unwrap(),
            "--sets",
            "random:200",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "verify should exit 0 on a valid pencil");
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passes"], true);
}

#[test]
fn input_errors_exit_3() {
    let out = bin().args(["gen", "--name", "moebius", "--n", "4"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = bin().args(["modulus", "--space", "/nonexistent.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn ex31_small_report() {
    let out = bin()
        .args(["am", "ex31", "--n", "16", "--deltas", "1/2,1/4", "--horizon", "8"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["am_upper"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
    assert!((v["fubini_lower"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
}

#[test]
fn suite_reports_are_byte_identical() {
    let spec = scratch("spec.json");
    std::fs::write(
        &spec,
        r#"{"space":"path","levels":[4,8],"seed":11,"pairs_per_level":2,"functions":3,"horizon":6}"#,
    )
    .unwrap();
    let base1 = scratch("report1");
    let base2 = scratch("report2");
    for base in [&base1, &base2] {
        let out = bin()
            .args([
                "suite",
                "equivalence",
                "--spec",
                spec.to_str().unwrap(),
                "--out",
                base.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(format!("{}.json", base1.display())).unwrap();
    let b = std::fs::read(format!("{}.json", base2.display())).unwrap();
    assert_eq!(a, b, "suite reports must be byte-identical for equal spec+seed");
    let csv = std::fs::read_to_string(format!("{}.csv", base1.display())).unwrap();
    assert!(csv.lines().count() >= 3);
}

#[test]
fn bv_commands() {
    let space = scratch("path3.json");
    bin()
        .args(["gen", "--name", "path", "--n", "3", "--out", space.to_str().unwrap()])
        .output()
        .unwrap();
    let field = scratch("u.json");
    std::fs::write(&field, r#"{"v0": 0.0, "v1": 0.0, "v2": 1.0}"#).unwrap();
    let out = bin()
        .args(["bv", "tv", "--space", space.to_str().unwrap(), "--u", field.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["value"], 1.0);

    let out = bin()
        .args([
            "bv",
            "audit",
            "--space",
            space.to_str().unwrap(),
            "--u",
            field.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["valid"], true);

    // a zero sequence cannot bound a nonconstant function: exit 2
    let out = bin()
        .args([
            "bv",
            "audit",
            "--space",
            space.to_str().unwrap(),
            "--u",
            field.to_str().unwrap(),
            "--sequence",
            "zero",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn modulus_family_file_and_p_inf() {
    let space = scratch("theta.json");
    bin()
        .args(["gen", "--name", "theta", "--n", "3", "--out", space.to_str().unwrap()])
        .output()
        .unwrap();
    let family = scratch("family.json");
    std::fs::write(&family, r#"{"x":"x","y":"y","C":3.0}"#).unwrap();
    let out = bin()
        .args([
            "modulus",
            "--space",
            space.to_str().unwrap(),
            "--family",
            family.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["value"].as_f64().unwrap() > 0.0);

    // explicit list form and the ∞-modulus
    let listfam = scratch("list.json");
    std::fs::write(&listfam, r#"[["x","y"],["x","a1_1","y"]]"#).unwrap();
    let out = bin()
        .args([
            "modulus",
            "--space",
            space.to_str().unwrap(),
            "--family",
            listfam.to_str().unwrap(),
            "--p",
            "inf",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["p"], "inf");
    assert_eq!(v["value"].as_f64().unwrap(), 1.0);
}
