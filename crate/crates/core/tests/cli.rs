use std::path::PathBuf;

use dipolejet::cli::{bundled_config_dir, main_with_args, EXIT_OK, EXIT_VALIDATION};

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("dipolejet-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn run(cmd: &str, config: &std::path::Path, out: &std::path::Path) -> i32 {
    main_with_args([
        "dipolejet",
        cmd,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn verify_su_bundled() {
    let out = scratch("su");
    assert_eq!(
        run(
            "verify-su",
            &bundled_config_dir().join("disk_linear.json"),
            &out
        ),
        EXIT_OK
    );
    let csv = std::fs::read_to_string(out.join("su_residual.csv")).unwrap();
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[7], "ok");
        assert!(f[6].parse::<f64>().unwrap() < 1e-6);
        rows += 1;
    }
    assert_eq!(rows, 96);
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn recover_gradient_bundled() {
    let out = scratch("grad");
    assert_eq!(
        run(
            "recover-gradient",
            &bundled_config_dir().join("disk_linear.json"),
            &out
        ),
        EXIT_OK
    );
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("gradient.json")).unwrap()).unwrap();
    for p in v["points"].as_array().unwrap() {
        let g = &p["estimate"]["gradient"];
        assert!((g[0].as_f64().unwrap() - 0.1).abs() < 1e-6);
        assert!((g[1].as_f64().unwrap() - 0.2).abs() < 1e-6);
        assert!(p["estimate"]["uncertainty"].as_f64().unwrap() >= 0.0);
    }
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn every_bundled_config_runs() {
    for entry in std::fs::read_dir(bundled_config_dir()).unwrap() {
        let path = entry.unwrap().path();
        let out = scratch(path.file_stem().unwrap().to_str().unwrap());
        for cmd in [
            "measure",
            "sample-r",
            "recover-jet",
            "reconstruct",
            "verify-lemmas",
        ] {
            assert_eq!(run(cmd, &path, &out), EXIT_OK, "{cmd} {}", path.display());
        }
        std::fs::remove_dir_all(out).unwrap();
    }
}

#[test]
fn malformed_configs_fail_validation() {
    let dir = scratch("bad");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("missing.json");
    std::fs::write(&cfg, r#"{"potential": {"kind": "zero"}}"#).unwrap();
    assert_eq!(run("verify-su", &cfg, &dir.join("out")), EXIT_VALIDATION);
    let cfg = dir.join("nolaunch.json");
    std::fs::write(&cfg, r#"{"domain": {"kind": "circle", "center": [0, 1], "radius": 1}, "potential": {"kind": "zero"}}"#).unwrap();
    assert_eq!(run("simulate", &cfg, &dir.join("out")), EXIT_VALIDATION);
    assert_eq!(
        main_with_args(["dipolejet", "reconstruct"]),
        EXIT_VALIDATION
    );
    assert_eq!(
        main_with_args(["dipolejet", "no-such-command"]),
        EXIT_VALIDATION
    );
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn simulate_writes_trajectory() {
    let out = scratch("sim");
    assert_eq!(
        run(
            "simulate",
            &bundled_config_dir().join("disk_linear.json"),
            &out
        ),
        EXIT_OK
    );
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 201);
    assert!(csv.starts_with("s,a_plus_1"));
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn recover_jet_report_shape() {
    let out = scratch("jet");
    assert_eq!(
        run(
            "recover-jet",
            &bundled_config_dir().join("disk_quadratic.json"),
            &out
        ),
        EXIT_OK
    );
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("jet.json")).unwrap()).unwrap();
    let p = &v["points"][0];
    assert_eq!(p["order"], 2);
    assert!((p["values"]["0,2"].as_f64().unwrap() - 0.1).abs() < 5e-3);
    assert!(p["uncertainties"]["0,2"].as_f64().unwrap() >= 0.0);
    let d = &p["diagnostics"];
    assert!(d["ell_prime"].as_f64().unwrap() > 0.0);
    assert!(d["convexity"].as_f64().unwrap() < 0.0);
    assert!(d["residuals"]["1,0"].as_f64().unwrap().abs() < 1e-6);
    std::fs::remove_dir_all(out).unwrap();
}
