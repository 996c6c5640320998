use std::path::PathBuf;
use std::process::Command;

use diffusym_cli::{run, EXIT_INPUT, EXIT_NEGATIVE, EXIT_OK};
use serde_json::Value;

fn example(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../examples")
        .join(format!("{name}.pde"))
        .to_string_lossy()
        .into_owned()
}

fn all_examples() -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../examples");
    let mut out: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension().is_some_and(|x| x == "pde")).then(|| p.to_string_lossy().into_owned())
        })
        .collect();
    out.sort();
    out
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv: Vec<&str> = std::iter::once("diffusym")
        .chain(args.iter().copied())
        .collect();
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn json(args: &[&str]) -> (i32, Value) {
    let (code, out, err) = cli(args);
    let v = serde_json::from_str(&out).unwrap_or_else(|e| panic!("{args:?}: {e}; stderr: {err}"));
    (code, v)
}

#[test]
fn brownian_is_six_dimensional_with_c0_one() {
    let (code, v) = json(&[
        "--no-timing",
        "classify",
        &example("brownian"),
        "--expect",
        "six",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["variant"], "six");
    assert!((v["constants"]["c0"].as_f64().unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn cir_with_m_one_is_four_dimensional() {
    let (code, v) = json(&["--no-timing", "classify", &example("cir_m1")]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(v["variant"], "four");
    let c = &v["constants"];
    for (k, want) in [("mu", 0.25), ("c2", -0.25), ("c0", -1.0)] {
        assert!(
            (c[k].as_f64().unwrap() - want).abs() < 1e-5,
            "{k}: {}",
            c[k]
        );
    }
}

#[test]
fn expect_mismatch_exits_one() {
    let (code, _) = json(&[
        "--no-timing",
        "classify",
        &example("heat"),
        "--expect",
        "four",
    ]);
    assert_eq!(code, EXIT_NEGATIVE);
}

#[test]
fn missing_file_is_an_input_error() {
    let (code, out, err) = cli(&["classify", "no/such/file.pde"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(out.is_empty());
    assert!(err.contains("error"), "{err}");
}

#[test]
fn bad_arguments_are_input_errors() {
    assert_eq!(cli(&["classify"]).0, EXIT_INPUT);
    assert_eq!(
        cli(&["transform", &example("heat"), "--mobius", "1,2,3"]).0,
        EXIT_INPUT
    );
    assert_eq!(
        cli(&["verify", &example("heat"), "--entry", "no_such_entry"]).0,
        EXIT_INPUT
    );
    assert_eq!(cli(&["--help"]).0, EXIT_OK);
}

#[test]
fn no_extra_symmetries_give_a_negative_transform() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plain.pde");
    std::fs::write(
        &path,
        "[pde]\na = 1\nb = 0\nc = x^3\n[domain]\nx = -1, 1\nt = 0.1, 1\n",
    )
    .unwrap();
    let p = path.to_string_lossy().into_owned();
    let (code, v) = json(&["--no-timing", "classify", &p]);
    assert_eq!((code, v["variant"].as_str()), (EXIT_OK, Some("none")));
    let (code, v) = json(&["--no-timing", "transform", &p]);
    assert_eq!(code, EXIT_NEGATIVE);
    assert!(v["map"].is_null());
}

#[test]
fn reports_are_deterministic_without_timing() {
    for cmd in ["classify", "transform", "generators", "verify"] {
        let a = cli(&["--no-timing", cmd, &example("ou")]);
        let b = cli(&["--no-timing", cmd, &example("ou")]);
        assert_eq!(a.0, EXIT_OK, "{cmd}: {}", a.2);
        assert_eq!(a.1, b.1, "{cmd}");
    }
    let (_, v) = json(&["classify", &example("ou")]);
    assert!(v["timing_ms"].is_number());
}

#[test]
fn out_flag_writes_the_report_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let p = path.to_string_lossy().into_owned();
    let (code, out, _) = cli(&["--no-timing", "--out", &p, "verify", &example("heat")]);
    assert_eq!(code, EXIT_OK);
    assert!(out.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["residual"]["passed"], true);
}

#[test]
fn verify_flags_override_the_spec() {
    let (code, v) = json(&[
        "--no-timing",
        "verify",
        &example("heat"),
        "--solution",
        "x^2 + 2*t",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(v["residual"]["relative"].as_f64().unwrap() < 1e-10);
    let (code, _) = json(&[
        "--no-timing",
        "verify",
        &example("heat"),
        "--solution",
        "x^2 + t",
    ]);
    assert_eq!(code, EXIT_NEGATIVE);
}

#[test]
fn catalogue_lists_and_shows_every_entry() {
    let (code, v) = json(&["--no-timing", "catalogue", "list"]);
    assert_eq!(code, EXIT_OK);
    let names: Vec<String> = v["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(names.len(), 16);
    for name in &names {
        let (code, v) = json(&["--no-timing", "catalogue", "show", name]);
        assert_eq!(code, EXIT_OK, "{name}");
        assert_eq!(v["residual"]["passed"], true, "{name}");
    }
    assert_eq!(cli(&["catalogue", "show", "nope"]).0, EXIT_INPUT);
}

#[test]
fn every_example_runs_every_subcommand() {
    let examples = all_examples();
    assert!(examples.len() >= 9);
    for ex in &examples {
        for cmd in ["classify", "transform", "generators", "verify"] {
            let (code, out, err) = cli(&["--no-timing", cmd, ex]);
            assert_eq!(code, EXIT_OK, "{cmd} {ex}: {err}");
            let v: Value = serde_json::from_str(&out).unwrap();
            assert_eq!(v["command"], cmd);
        }
    }
}

#[test]
fn binary_runs_end_to_end() {
    let out = Command::new(env!("CARGO_BIN_EXE_diffusym"))
        .args(["--no-timing", "classify", &example("heat")])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["variant"], "six");
    let bad = Command::new(env!("CARGO_BIN_EXE_diffusym"))
        .args(["classify", "missing.pde"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_INPUT));
}
