//! End-to-end runs of every subcommand against the de Sitter oracles.

use std::path::Path;
use std::process::{Command, Output};

use miniweyl_core::sphere::SpherePoint;
use miniweyl_core::weld::HolomorphicDisk;
use miniweyl_core::Complex64 as C;
use serde_json::Value;

const CENTER: &str = r#"{"type":"center_point","z":[0,0],"w":[0,0],"radius":1.0}"#;

fn miniweyl(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_miniweyl"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("MINIWEYL_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> Value {
    let o = miniweyl(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    let manifest = String::from_utf8(o.stdout).unwrap();
    serde_json::from_str(&std::fs::read_to_string(manifest.trim()).unwrap()).unwrap()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn without_timestamp(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("created_unix");
    v
}

fn solve_center(dir: &Path) -> std::path::PathBuf {
    ok(dir, &["weld", "--psi", "antipodal", "--constraints", CENTER]);
    dir.join("weld.json")
}

#[test]
fn desitter_command_reproduces_the_boundary_and_area_oracles() {
    let dir = tempfile::tempdir().unwrap();
    let m = ok(dir.path(), &["desitter", "--samples", "20", "--seed", "3"]);
    assert!(num(&m["summary"]["max_boundary_residual"]) < 1e-12);
    assert!(num(&m["summary"]["max_area_error"]) < 1e-7);
    assert_eq!(m["config"]["samples"], 20);
    let first = read(dir.path().join("desitter.json"));
    let again = ok(dir.path(), &["desitter", "--samples", "20", "--seed", "3"]);
    assert_eq!(first, read(dir.path().join("desitter.json")));
    assert_eq!(without_timestamp(m), without_timestamp(again));
}

#[test]
fn check_ew_passes_on_desitter() {
    let dir = tempfile::tempdir().unwrap();
    let m = ok(dir.path(), &["check-ew", "--structure", "desitter", "--points", "20"]);
    assert!(num(&m["summary"]["max_ew_residual"]) < 1e-6);
    assert_eq!(m["summary"]["compact"], true);
    assert_eq!(m["config"]["structure"]["type"], "desitter");
}

#[test]
fn scatter_csv_matches_the_antipodal_map() {
    let dir = tempfile::tempdir().unwrap();
    let m = ok(dir.path(), &["scatter", "--structure", "desitter", "--grid", "4", "--dirs", "8", "--jacobian"]);
    assert_eq!(m["summary"]["failed"], 0);
    let csv = read(dir.path().join("scatter.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "p_theta,p_phi,q_theta,q_phi,dispersion,jac_det");
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let (p, q) = (SpherePoint::from_spherical(v[0], v[1]), SpherePoint::from_spherical(v[2], v[3]));
        assert!(q.distance(&p.antipodal()) < 1e-6, "{line}");
        assert!((v[5] + 1.0).abs() < 1e-3, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 16);
    assert!(read(dir.path().join("scatter.svg")).starts_with("<svg"));
}

#[test]
fn weld_recovers_the_diagonal_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = solve_center(dir.path());
    let disk: HolomorphicDisk = serde_json::from_str(&read(&path)).unwrap();
    for k in 0..16 {
        let zeta = C::from_polar(0.9, k as f64 * 0.4);
        assert!(disk.point1(zeta).distance(&SpherePoint::from_affine(zeta)) < 1e-10);
        assert!(disk.point2(zeta).distance(&SpherePoint::from_affine(-zeta)) < 1e-10);
    }
    let m: Value = serde_json::from_str(&read(dir.path().join("weld.manifest.json"))).unwrap();
    assert_eq!(m["config"]["psi"]["type"], "antipodal");
    assert!((num(&m["summary"]["omega"]) - 2.0 * std::f64::consts::PI).abs() < 1e-8);
}

#[test]
fn moduli_and_lift_at_the_identity_disk() {
    let dir = tempfile::tempdir().unwrap();
    let disk = solve_center(dir.path());
    let disk = disk.to_str().unwrap();
    let m = ok(dir.path(), &["moduli", "--disk", disk]);
    assert_eq!(m["summary"]["nullity"], 3);
    assert!(num(&m["summary"]["gap"]) >= 1e6);
    let eig: Vec<f64> = m["summary"]["form_eigenvalues"].as_array().unwrap().iter().map(num).collect();
    assert!(eig[0] < 0.0 && eig[1] > 0.0 && eig[2] > 0.0, "{eig:?}");
    for sign in ["plus", "minus"] {
        let m = ok(dir.path(), &["lift", "--disk", disk, "--sign", sign]);
        assert!(num(&m["summary"]["legendrian_residual"]) < 1e-10);
        assert!(num(&m["summary"]["utp_max"]) < 1e-8);
        let lift: Value = serde_json::from_str(&read(dir.path().join("lift.json"))).unwrap();
        assert_eq!(lift["sign"], if sign == "plus" { 1 } else { -1 });
        assert!(lift["mu"].is_array() && lift["F1"].is_array());
    }
}

#[test]
fn timelike_family_plots_concentric_circles_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["geodesic", "--constraints", CENTER, "--targets=-1,-0.5,0.5,1"];
    let m = ok(dir.path(), &args);
    assert_eq!(m["summary"]["kind"], "timelike");
    assert_eq!(m["summary"]["omega_monotone"], true);
    for panel in m["summary"]["curves"].as_array().unwrap() {
        assert!(num(&panel["circle_fit_residual"]) < 1e-10);
        assert_eq!(panel["crossings"], 0);
    }
    let jsonl = read(dir.path().join("geodesic.jsonl"));
    let hits = jsonl.lines().map(|l| serde_json::from_str::<Value>(l).unwrap()).filter(|v| v["hit"] == true).count();
    assert_eq!(hits, 4);
    let svg = read(dir.path().join("geodesic.svg"));
    ok(dir.path(), &args);
    assert_eq!(svg, read(dir.path().join("geodesic.svg")));
}

#[test]
fn null_family_curves_touch_without_crossing() {
    let dir = tempfile::tempdir().unwrap();
    let sel = r#"{"type":"boundary_contact","x":[1,0],"direction":0.4}"#;
    let m = ok(dir.path(), &["geodesic", "--constraints", sel, "--targets", "2,6,10"]);
    assert_eq!(m["summary"]["kind"], "null");
    assert_eq!(m["summary"]["omega_monotone"], true);
    for panel in m["summary"]["curves"].as_array().unwrap() {
        assert_eq!(panel["crossings"], 0);
    }
}

#[test]
fn roundtrip_recovers_the_antipodal_map() {
    let dir = tempfile::tempdir().unwrap();
    let m = ok(dir.path(), &["roundtrip", "--psi", "antipodal", "--samples", "3"]);
    assert!(num(&m["summary"]["max_error"]) < 5e-3);
    assert!(num(&m["summary"]["gauge_distance"]) < 1e-2);
    assert_eq!(m["config"]["contacts"].as_array().unwrap().len(), 3);
}

#[test]
fn exit_codes_classify_failures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let code = |o: Output| o.status.code().unwrap();
    assert_eq!(code(miniweyl(d, &["weld", "--psi", "antipodal", "--constraints", "{\"type\":\"nope\"}"])), 2);
    let negative = r#"{"type":"center_point","z":[0,0],"w":[0,0],"radius":-1}"#;
    assert_eq!(code(miniweyl(d, &["weld", "--psi", "antipodal", "--constraints", negative])), 2);
    assert_eq!(code(miniweyl(d, &["weld", "--psi", "missing/psi.json", "--constraints", CENTER])), 4);
    assert_eq!(code(miniweyl(d, &["geodesic", "--constraints", CENTER, "--targets", ""])), 2);
    assert_eq!(code(miniweyl(d, &["desitter", "--bogus"])), 2);

    // a disk whose first factor is branched at the centre cannot be lifted
    let disk = solve_center(d);
    let mut v: Value = serde_json::from_str(&read(&disk)).unwrap();
    let f1 = v["F1"].as_array_mut().unwrap();
    f1[1] = serde_json::json!([0.0, 0.0]);
    f1[2] = serde_json::json!([1.0, 0.0]);
    let branched = d.join("branched.json");
    std::fs::write(&branched, v.to_string()).unwrap();
    let o = miniweyl(d, &["lift", "--disk", branched.to_str().unwrap()]);
    assert_eq!(code(o.clone()), 3);
    let report: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(report["error"], "numeric");
    assert_eq!(report["variant"], "DerivativeZero");

    // an unwritable output directory is an i/o failure
    let blocker = d.join("file");
    std::fs::write(&blocker, "").unwrap();
    assert_eq!(code(miniweyl(&blocker.join("sub"), &["desitter", "--samples", "1"])), 4);
}

#[test]
fn thread_cap_is_validated_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_miniweyl"))
            .arg("--out")
            .arg(dir.path())
            .args(["desitter", "--samples", "2"])
            .env("MINIWEYL_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(run("0").status.code(), Some(2));
    assert_eq!(run("many").status.code(), Some(2));
    assert!(run("1").status.success());
    let m: Value = serde_json::from_str(&read(dir.path().join("desitter.manifest.json"))).unwrap();
    assert_eq!(m["threads"], 1);
}

#[test]
fn perturbed_family_nests_non_circular_curves() {
    let dir = tempfile::tempdir().unwrap();
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let psi = configs.join("flow005.json");
    let sel = configs.join("center.json");
    let args = ["geodesic", "--psi", psi.to_str().unwrap(), "--constraints", sel.to_str().unwrap(), "--targets=-1,1"];
    let m = ok(dir.path(), &args);
    assert_eq!(m["summary"]["omega_monotone"], true);
    for panel in m["summary"]["curves"].as_array().unwrap() {
        assert!(num(&panel["circle_fit_residual"]) > 1e-3);
        assert_eq!(panel["crossings"], 0);
    }
    assert_eq!(m["config"]["psi"]["type"], "flow");
}
