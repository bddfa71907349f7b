use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qjacobi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qjacobi")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_W3: &str = r#"
seed = 5
Q = 2
h = 0.05

[scene]
name = "flat_disk"
params = { m = 2, k = 2 }

[boundary]
kind = "modes"
pieces = [{ k = 2, a0 = [0.0, 0.0], a = [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]], b = [[0.0, 0.0], [0.0, 0.0], [0.0, 1.0]] }]

[solver]
restarts = 2
anneal = { proposals = 2 }
"#;

#[test]
fn scene_list_names_builtins() {
    let out = qjacobi(&["scene", "list"]);
    assert!(out.status.success());
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains("flat_disk") && s.contains("equatorial_sphere"));
}

#[test]
fn extend_reports_two_pi_for_square_root() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "ext.toml",
        r#"
task = "extend"
seed = 0
output_dir = "ext"

[boundary]
kind = "modes"
pieces = [{ k = 2, a0 = [0.0, 0.0], a = [[1.0, 0.0]], b = [[0.0, 1.0]] }]
"#,
    );
    let out = qjacobi(&["run", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&dir.path().join("ext/extend.json"));
    let dd = rep["disk_dirichlet"].as_f64().unwrap();
    assert!((dd - 2.0 * PI).abs() < 1e-8, "{dd}");
    assert_eq!(rep["windings"], serde_json::json!([2]));
    let m = json(&dir.path().join("ext/manifest.json"));
    for key in ["config_sha256", "crate_version", "wall_time_s", "warnings", "artifacts"] {
        assert!(m.get(key).is_some(), "{key}");
    }
}

#[test]
fn missing_seed_exits_nonzero_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "task = \"verify\"\noutput_dir = \"v\"\n");
    let out = qjacobi(&["run", &cfg]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("seed") && err.contains("line"), "{err}");
    assert!(!dir.path().join("v").exists());
}

#[test]
fn unknown_task_points_at_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "seed = 1\noutput_dir = \"v\"\ntask = \"dance\"\n");
    let out = qjacobi(&["run", &cfg]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn identical_configs_give_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut digests = Vec::new();
    for run in ["a", "b"] {
        let cfg = write(dir.path(), &format!("{run}.toml"), &format!("task = \"frequency\"\noutput_dir = \"{run}\"\n{SMALL_W3}"));
        let out = qjacobi(&["run", &cfg]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let mut files = Vec::new();
        for f in ["field.qf", "profile.csv", "fit.json"] {
            files.push(fs::read(dir.path().join(run).join(f)).unwrap());
        }
        digests.push(files);
    }
    assert_eq!(digests[0], digests[1]);
    let csv = String::from_utf8(digests[0][1].clone()).unwrap();
    assert!(csv.starts_with("r,D,H,E,G,F,I,valid\n"));
    let fit: serde_json::Value = serde_json::from_slice(&digests[0][2]).unwrap();
    for key in ["I0", "H0", "D0", "beta", "lambda", "C0"] {
        assert!(fit.get(key).is_some(), "{key}");
    }
}

#[test]
fn minimize_then_analyse_stored_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "min.toml", &format!("task = \"minimize\"\noutput_dir = \"min\"\n{SMALL_W3}"));
    let out = qjacobi(&["run", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&dir.path().join("min/minimize.json"));
    let e = rep["energy"].as_f64().unwrap();
    assert!((e - 6.0 * PI).abs() < 0.05 * 6.0 * PI, "{e}");
    let cfg = write(
        dir.path(),
        "blow.toml",
        "task = \"blowup\"\nseed = 5\noutput_dir = \"blow\"\n\n[analysis]\nfield = \"min/field.qf\"\ncollapse_tol = 0.1\nblowup_h = 0.1\n",
    );
    let out = qjacobi(&["run", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let b = json(&dir.path().join("blow/blowup.json"));
    assert!(b["mu"].as_f64().unwrap() > 1.0);
    assert!(dir.path().join("blow/tangent.qf").exists());
}

#[test]
fn vanishing_field_is_a_warning_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "zero.toml",
        r#"
task = "blowup"
seed = 2
output_dir = "zero"
Q = 2
h = 0.1

[scene]
name = "flat_disk"
params = { m = 2, k = 1 }

[boundary]
kind = "constant"
value = [[0.0], [0.0]]
"#,
    );
    let out = qjacobi(&["run", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = json(&dir.path().join("zero/manifest.json"));
    let w = m["warnings"].as_array().unwrap();
    assert!(w.iter().any(|x| x.as_str().unwrap().contains("vanishes")), "{w:?}");
}

#[test]
fn verify_subset_prints_one_line_each() {
    let out = qjacobi(&["verify", "--only", "1,2"]);
    assert!(out.status.success());
    let s = String::from_utf8(out.stdout).unwrap();
    assert_eq!(s.lines().count(), 2);
    assert!(s.lines().all(|l| l.starts_with("[PASS]")));
}
