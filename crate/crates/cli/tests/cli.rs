use std::fs;
use std::path::Path;

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> i32 {
    let mut all = vec!["homoclinic".to_string()];
    all.extend(args.iter().map(|s| s.to_string()));
    all.push("--out".into());
    all.push(dir.to_string_lossy().into_owned());
    homoclinic::main_with_args(all)
}

fn payload(dir: &Path, command: &str) -> Value {
    let text = fs::read_to_string(dir.join(format!("{command}.json"))).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["command"], command);
    assert_eq!(v["schema_version"], 1);
    v["payload"].clone()
}

fn files_with(dir: &Path, ext: &str) -> Vec<String> {
    let mut names: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(ext))
        .collect();
    names.sort();
    names
}

#[test]
fn every_subcommand_writes_json_csv_and_svg() {
    for cmd in ["henon", "family-check", "cross-form", "classify", "cascade", "atlas2d", "resonance", "rescale-verify"] {
        let dir = tempfile::tempdir().unwrap();
        let mut args = vec![cmd];
        if cmd == "atlas2d" {
            args.extend(["--set", "k_max=10", "--set", "n_alpha=11"]);
        }
        assert_eq!(run(dir.path(), &args), 0, "{cmd}");
        payload(dir.path(), cmd);
        assert!(!files_with(dir.path(), ".csv").is_empty(), "{cmd}");
        assert!(!files_with(dir.path(), ".svg").is_empty(), "{cmd}");
        for svg in files_with(dir.path(), ".svg") {
            let text = fs::read_to_string(dir.path().join(svg)).unwrap();
            assert!(text.starts_with("<svg") || text.starts_with("<?xml"));
        }
    }
}

#[test]
fn henon_twistless_point() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["henon", "--set", "M=0.625"]), 0);
    let p = payload(dir.path(), "henon");
    assert!(p["point"]["b1"].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(p["point"]["two_orbit"]["class"]["tag"], "twistless");
}

#[test]
fn family_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["family-check"]), 0);
    let p = payload(dir.path(), "family-check");
    assert_eq!(p["bc_pass"], true);
    assert_eq!(p["det_identity_pass"], true);
}

#[test]
fn resonance_is_certified() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["resonance", "--set", "s0=-0.4", "--set", "k_max=14"]), 0);
    let p = payload(dir.path(), "resonance");
    assert_eq!(p["certificate"]["verdict"], "certified");
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["resonance", "--set", "s0=0.5"]), 1);
    let err: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("error.json")).unwrap()).unwrap();
    assert_eq!(err["error"]["kind"], "validation");
    assert_eq!(run(dir.path(), &["henon", "--set", "no_such_key=1"]), 1);
    assert_eq!(run(dir.path(), &["cascade", "--set", "k_min=3"]), 1);
    assert_eq!(run(dir.path(), &["family-check", "--set", "lambda=1.5"]), 1);
}

#[test]
fn numerical_failure_exits_with_two() {
    // alpha = 0 exactly: the fold is tangent and counting cannot decide
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["classify", "--set", "x_plus=1"]), 2);
    let err: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("error.json")).unwrap()).unwrap();
    assert_eq!(err["error"]["kind"], "numerical");
    assert_eq!(err["error"]["exit_code"], 2);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[family]\nlambda = -0.5\n\n[experiment]\nk_max = 12\n").unwrap();
    let out = dir.path().join("out");
    let code = run(&out, &["family-check", "--config", cfg.to_str().unwrap(), "--set", "family.b=2"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&fs::read_to_string(out.join("family-check.json")).unwrap()).unwrap();
    assert_eq!(v["config"]["family"]["lambda"], -0.5);
    assert_eq!(v["config"]["family"]["b"], 2.0);
}

#[test]
fn csv_output_is_reproducible_across_thread_counts() {
    for cmd in ["cascade", "classify", "rescale-verify"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        assert_eq!(run(a.path(), &[cmd, "--threads", "1"]), 0);
        assert_eq!(run(b.path(), &[cmd, "--threads", "4"]), 0);
        let names = files_with(a.path(), ".csv");
        assert_eq!(names, files_with(b.path(), ".csv"));
        for n in names {
            let x = fs::read(a.path().join(&n)).unwrap();
            let y = fs::read(b.path().join(&n)).unwrap();
            assert_eq!(x, y, "{cmd}: {n}");
        }
    }
}
