use std::path::Path;
use std::process::Command;

fn lab(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_burgers-lab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

#[test]
fn csv_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["decay", "--tmin", "1e3", "--tmax", "1e5", "--tcount", "7"];
    let one = lab(&[&args[..], &["--threads", "1"]].concat(), &a);
    let many = lab(&args, &b);
    assert!(one.status.success() && many.status.success());
    let ca = std::fs::read(a.join("decay.csv")).unwrap();
    let cb = std::fs::read(b.join("decay.csv")).unwrap();
    assert_eq!(ca, cb);
    let text = String::from_utf8(ca).unwrap();
    assert!(text.starts_with("t,sup_norm,argmax_x\n"));
    assert_eq!(text.lines().count(), 8);
}

#[test]
fn sidecar_echoes_config_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(
        &[
            "decay",
            "--equation",
            "heat",
            "--tmin",
            "1e3",
            "--tmax",
            "1e5",
            "--tcount",
            "5",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("decay.json")).unwrap()).unwrap();
    assert_eq!(v["config"]["equation"], "Heat");
    assert_eq!(v["config"]["t_grid"]["count"], 5);
    assert!(v["results"]["fit"]["exponent"].as_f64().unwrap() > 0.0);
    assert!(v["wall_time_s"].as_f64().is_some());
    assert!(v["versions"]["burgers-core"].is_string());
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"experiment":"Field","family":{"family":"Constant","kappa":1.0,"alpha":0.5,"extra":{"level":0.4}},
            "t_grid":{"t_min":1.0,"t_max":100.0,"count":3},"x_grid":{"min":-5.0,"max":5.0,"count":11}}"#,
    )
    .unwrap();
    let out = lab(
        &["field", "--config", cfg.to_str().unwrap(), "--tcount", "2"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("field.csv")).unwrap();
    let rows: Vec<(f64, f64, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 22);
    assert!(rows.iter().all(|r| (r.2 - 0.4).abs() < 1e-12));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = lab(&["decay", "--tcount", "3"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
    let bad_family = lab(&["decay", "--family", "Cubic"], dir.path());
    assert_eq!(bad_family.status.code(), Some(2));
    let missing = lab(&["decay", "--config", "/nonexistent/cfg.json"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
    // A decay exponent tolerance of zero cannot be met.
    let cfg = dir.path().join("strict.json");
    std::fs::write(
        &cfg,
        r#"{"experiment":"Decay","family":{"family":"PowerC0","kappa":1.0,"alpha":0.5},
            "t_grid":{"t_min":1e3,"t_max":1e4,"count":4},"tolerances":{"decay_exponent":0.0}}"#,
    )
    .unwrap();
    let strict = lab(&["decay", "--config", cfg.to_str().unwrap(), "--check"], dir.path());
    assert_eq!(strict.status.code(), Some(4));
    let lenient = lab(&["decay", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(lenient.status.code(), Some(0));
}
