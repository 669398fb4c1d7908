//! End-to-end tests of the `l2geom` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_l2geom"));
    c.env_remove("L2GEOM_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SPHERE_FIELD: &str = r#"{
  "domain": {"weights": [0.25, 0.75]},
  "manifold": "sphere",
  "values": [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]],
  "vecs": [[0.5, 0.0, 0.0], [0.0, 0.4, 0.3]]
}"#;

const ZERO_FIELD: &str = r#"{
  "domain": {"weights": [0.5, 0.5]},
  "manifold": "poincare",
  "values": [[0.0, 1.0], [0.5, 2.0]],
  "vecs": [[0.0, 0.0], [0.0, 0.0]]
}"#;

#[test]
fn empty_argv_prints_usage_and_exits_2() {
    let o = run(&[]);
    assert_eq!(code(&o), 2);
    assert!(format!("{}{}", stdout(&o), stderr(&o)).contains("Usage"));
}

#[test]
fn help_documents_grammar() {
    let o = run(&["--help"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    for needle in [
        "MANIFOLD STRINGS",
        "FILE FORMATS",
        "EXIT CODES",
        "L2GEOM_THREADS",
        "verify",
    ] {
        assert!(out.contains(needle), "missing {needle}");
    }
}

#[test]
fn unknown_flags_and_bad_manifolds_exit_2() {
    let o = run(&["verify", "--manifold", "sphere", "--bogus"]);
    assert_eq!(code(&o), 2);
    let o = run(&["verify", "--manifold", "sphere:r=-1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("invalid parameter"), "{}", stderr(&o));
    let o = run(&["verify", "--manifold", "torus"]);
    assert_eq!(code(&o), 2);
    let o = run(&["verify", "--manifold", "sphere", "--instances", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_sphere_seed_7_passes() {
    let dir = TempDir::new().unwrap();
    let json = dir.path().join("reports.json");
    let o = run(&[
        "verify",
        "--manifold",
        "sphere:r=1",
        "--seed",
        "7",
        "--instances",
        "100",
        "-o",
        s(&json),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("all checks passed"));
    let reports: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let list = reports.as_array().unwrap();
    assert_eq!(list.len(), 4);
    assert!(list
        .iter()
        .all(|r| r["passed"] == true && r["instance_count"] == 100));
}

#[test]
fn verify_every_registry_manifold() {
    for m in [
        "flat:n=2",
        "flat:n=3:rep=embedded",
        "sphere:rep=chart",
        "sphere:r=2",
        "poincare",
        "paraboloid:a=0.5",
    ] {
        let o = run(&[
            "verify",
            "--manifold",
            m,
            "--seed",
            "3",
            "--instances",
            "30",
        ]);
        assert_eq!(code(&o), 0, "{m}: {}", stdout(&o));
    }
}

#[test]
fn config_file_defaults_and_flag_precedence() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "cfg.toml",
        "manifold = \"poincare\"\ninstances = 3\nseed = 1\n",
    );
    let o = run(&["--config", s(&cfg), "verify"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("manifold: poincare:rep=chart  seed: 1  instances: 3"));
    let o = run(&[
        "verify",
        "--config",
        s(&cfg),
        "--instances",
        "5",
        "--manifold",
        "flat",
    ]);
    assert_eq!(code(&o), 0);
    assert!(
        stdout(&o).contains("manifold: flat:n=2:rep=chart  seed: 1  instances: 5"),
        "{}",
        stdout(&o)
    );

    let bad = write(&dir, "bad.toml", "instancez = 3\n");
    let o = run(&["--config", s(&bad), "verify", "--manifold", "flat"]);
    assert_eq!(code(&o), 2);
    let missing = dir.path().join("missing.toml");
    assert_eq!(code(&run(&["--config", s(&missing), "list-manifolds"])), 2);
}

#[test]
fn exp_of_zero_field_is_identity_and_distance_zero() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "zero.json", ZERO_FIELD);
    let out = dir.path().join("q1.json");
    let o = run(&["exp", "--field", s(&f), "-o", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (q1, _) = l2geom::io::read_field(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let (q0, _) = l2geom::io::read_field(ZERO_FIELD).unwrap();
    assert_eq!(q1, q0);

    let o = run(&["distance", "--from", s(&f), "--to", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "0");
}

#[test]
fn exp_log_distance_round_trip() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "h.json", SPHERE_FIELD);
    let q1 = dir.path().join("q1.json");
    assert_eq!(
        code(&run(&["exp", "--field", s(&f), "--output", s(&q1)])),
        0
    );
    let o = run(&["log", "--from", s(&f), "--to", s(&q1)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let h = l2geom::io::read_tangent(&stdout(&o)).unwrap();
    let h0 = l2geom::io::read_tangent(SPHERE_FIELD).unwrap();
    for (a, b) in h.vecs().iter().zip(h0.vecs()) {
        assert!((a - b).amax() < 1e-7);
    }
    let o = run(&["distance", "--from", s(&f), "--to", s(&q1)]);
    let d: f64 = stdout(&o).trim().parse().unwrap();
    // 0.25·0.5² + 0.75·0.5² = 0.25
    assert!((d - 0.5).abs() < 1e-8, "{d}");
}

#[test]
fn log_of_antipodal_samples_fails_with_exit_1() {
    let dir = TempDir::new().unwrap();
    let a = write(
        &dir,
        "a.json",
        r#"{"domain": {"weights": [0.5, 0.5]}, "manifold": "sphere", "values": [[0,0,1],[0,0,1]]}"#,
    );
    let b = write(
        &dir,
        "b.json",
        r#"{"domain": {"weights": [0.5, 0.5]}, "manifold": "sphere", "values": [[1,0,0],[0,0,-1]]}"#,
    );
    let o = run(&[
        "log",
        "--from",
        s(&a),
        "--to",
        s(&b),
        "--max-iterations",
        "5",
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("sample 1"), "{}", stderr(&o));
}

#[test]
fn malformed_files_exit_2_with_location() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "bad.json",
        "{\n  \"domain\": {\"weights\": [1.0]},\n  \"manifold\": 5\n}",
    );
    let o = run(&["exp", "--field", s(&f)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    let off = write(
        &dir,
        "off.json",
        r#"{"domain": {"weights": [1.0]}, "manifold": "sphere", "values": [[0,0,2]], "vecs": [[0,0,0]]}"#,
    );
    let o = run(&["exp", "--field", s(&off)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("values"), "{}", stderr(&o));
    let o = run(&["exp", "--field", s(&dir.path().join("nope.json"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn geodesic_outputs_are_deterministic_and_reparse() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "h.json", SPHERE_FIELD);
    let mut outputs = Vec::new();
    for tag in ["a", "b"] {
        let path = dir.path().join(format!("path_{tag}.json"));
        let report = dir.path().join(format!("report_{tag}.json"));
        let csv = dir.path().join(format!("report_{tag}.csv"));
        let o = run(&[
            "geodesic",
            "--field",
            s(&f),
            "--snapshots",
            "6",
            "--steps-per-snapshot",
            "20",
            "-o",
            s(&path),
            "--report",
            s(&report),
            "--csv",
            s(&csv),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        outputs.push([path, report, csv].map(|p| std::fs::read(p).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let path = l2geom::io::read_path(std::str::from_utf8(&outputs[0][0]).unwrap()).unwrap();
    assert_eq!(path.len(), 6);
    assert_eq!(path.velocities().unwrap().len(), 6);
    assert_eq!(
        l2geom::io::read_path(&l2geom::io::path_to_json(&path)).unwrap(),
        path
    );
    let csv = String::from_utf8(outputs[0][2].clone()).unwrap();
    assert_eq!(csv.lines().next(), Some("time,energy,residual,drift"));
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn threads_flag_and_env() {
    let o = run(&[
        "--threads",
        "2",
        "verify",
        "--manifold",
        "poincare",
        "--instances",
        "5",
    ]);
    assert_eq!(code(&o), 0);
    let o = bin()
        .env("L2GEOM_THREADS", "zero")
        .args(["verify", "--manifold", "flat"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    let o = bin()
        .env("L2GEOM_THREADS", "1")
        .args(["verify", "--manifold", "flat", "--instances", "2"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
}

#[test]
fn curvature_of_unit_sphere() {
    let o = run(&[
        "curvature",
        "--manifold",
        "sphere:rep=chart",
        "--point",
        "1.0,0.5",
        "--h",
        "1,0",
        "--k",
        "-0.2,1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["sectional"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    let o = run(&[
        "curvature",
        "--manifold",
        "poincare",
        "--point",
        "0,1",
        "--h",
        "1,0",
        "--k",
        "1,0",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["sectional"].is_null());
    let o = run(&[
        "curvature",
        "--manifold",
        "sphere",
        "--point",
        "0,0,1",
        "--h",
        "0,0,1",
        "--k",
        "1,0,0",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn reparam_reports_dichotomy() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "h.json",
        r#"{"domain": {"weights": [0.25, 0.75]}, "manifold": "flat:n=1", "values": [[0.0],[0.0]], "vecs": [[1.0],[0.0]]}"#,
    );
    let swap = write(&dir, "swap.json", "[1, 0]");
    let o = run(&["reparam", "--field", s(&f), "--perm", s(&swap)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["lhs"], 0.75);
    assert_eq!(v["rhs"], 0.25);
    assert_eq!(v["measure_preserving"], false);
    assert!(v["invariance_holds"].is_null());
    assert_eq!(v["equivariance"].as_array().unwrap().len(), 4);

    let g = write(
        &dir,
        "g.json",
        SPHERE_FIELD.replace("0.25, 0.75", "0.5, 0.5").as_str(),
    );
    let o = run(&[
        "reparam",
        "--field",
        s(&g),
        "--perm",
        s(&swap),
        "--steps",
        "50",
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["invariance_holds"], true);

    let bad = write(&dir, "bad.json", "[0, 0]");
    assert_eq!(
        code(&run(&["reparam", "--field", s(&f), "--perm", s(&bad)])),
        2
    );
}

#[test]
fn transport_modes() {
    let dir = TempDir::new().unwrap();
    let mu = write(
        &dir,
        "mu.json",
        r#"{"atoms": [[0.0], [1.0]], "masses": [0.5, 0.5]}"#,
    );
    let nu = write(
        &dir,
        "nu.json",
        r#"{"atoms": [[1.0], [0.0]], "masses": [0.5, 0.5]}"#,
    );
    let o = run(&["transport", "--source", s(&mu), "--target", s(&nu)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["assignment"]["cost"], 0.0);
    assert_eq!(v["assignment"]["perm"], serde_json::json!([1, 0]));
    assert_eq!(v["solvers_agree"], true);

    let field = |name: &str, xs: &str| {
        write(
            &dir,
            name,
            &format!(
                r#"{{"domain": {{"weights": [0.5, 0.5]}}, "manifold": "flat:n=1", "values": {xs}}}"#
            ),
        )
    };
    let base = field("base.json", "[[0.0],[1.0]]");
    let phi = field("phi.json", "[[1.0],[0.0]]");
    let o = run(&["transport", "--base", s(&base), "--rearranged", s(&phi)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["l2_cost"], 1.0);
    assert_eq!(v["w2_cost"], 0.0);
    assert_eq!(v["equality"], false);

    assert_eq!(code(&run(&["transport", "--source", s(&mu)])), 2);
    assert_eq!(code(&run(&["transport"])), 2);
    let uneven = write(
        &dir,
        "un.json",
        r#"{"atoms": [[0.0], [1.0]], "masses": [0.25, 0.75]}"#,
    );
    assert_eq!(
        code(&run(&[
            "transport",
            "--source",
            s(&uneven),
            "--target",
            s(&nu)
        ])),
        2
    );
}
