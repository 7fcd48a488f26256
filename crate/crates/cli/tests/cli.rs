use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_packing-forge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn tetrahedron(geometry: &str, radii: Option<Vec<f64>>, target: Option<Value>) -> Value {
    let faces = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    let edges: Vec<Value> = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]]
        .iter()
        .map(|e| json!({ "edge": e, "value": 1.0 }))
        .collect();
    let mut doc = json!({
        "schema_version": "1",
        "geometry": geometry,
        "vertices": 4,
        "faces": faces,
        "inversive_distances": edges,
    });
    if let Some(r) = radii {
        doc["radii"] = json!(r);
    }
    if let Some(t) = target {
        doc["target"] = t;
    }
    doc
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_reports_topology() {
    let dir = TempDir::new().unwrap();
    let p = write(
        dir.path(),
        "tet.json",
        &tetrahedron("euclidean", Some(vec![1.0; 4]), None),
    );
    let o = run(&["validate", s(&p)]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("chi=2"), "{text}");
    assert!(text.contains("all gamma >= 0"), "{text}");

    let o = run(&["--json", "validate", s(&p)]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["euler_characteristic"], 2);
    assert_eq!(v["weight_condition"]["passes"], true);
}

#[test]
fn validate_rejects_weight_condition_failure() {
    let dir = TempDir::new().unwrap();
    let mut doc = tetrahedron("euclidean", None, None);
    // gamma = -0.9 + 1 * (-0.9) < 0 on the faces around edge 0-1 and 0-2
    doc["inversive_distances"][0]["value"] = json!(-0.9);
    doc["inversive_distances"][1]["value"] = json!(-0.9);
    let p = write(dir.path(), "bad.json", &doc);
    let o = run(&["validate", s(&p)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("violates"));
}

#[test]
fn curvature_of_unit_tetrahedron_is_pi() {
    let dir = TempDir::new().unwrap();
    let p = write(
        dir.path(),
        "tet.json",
        &tetrahedron("euclidean", Some(vec![1.0; 4]), None),
    );
    let o = run(&["curvature", s(&p)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("Gauss-Bonnet residual < 1e-10"));

    let o = run(&["--json", "curvature", s(&p), "--alpha", "2"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    for k in v["curvatures"].as_array().unwrap() {
        assert!((k.as_f64().unwrap() - PI).abs() < 1e-12);
    }
    // r = 1 so R = K / r^alpha = K
    for k in v["alpha"]["values"].as_array().unwrap() {
        assert!((k.as_f64().unwrap() - PI).abs() < 1e-12);
    }
}

#[test]
fn angles_and_jacobian_need_radii() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "tet.json", &tetrahedron("hyperbolic", None, None));
    assert_eq!(run(&["angles", s(&p)]).status.code(), Some(1));
    assert_eq!(run(&["jacobian", s(&p)]).status.code(), Some(1));

    let p = write(
        dir.path(),
        "tet_r.json",
        &tetrahedron("hyperbolic", Some(vec![0.7; 4]), None),
    );
    let o = run(&["--json", "jacobian", s(&p), "--spectrum"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["spectrum"]
        .as_array()
        .unwrap()
        .iter()
        .all(|x| x.as_f64().unwrap() > 0.0));
}

fn solve_reproduces_target(geometry: &str, target: Value, extra: &[&str]) {
    let dir = TempDir::new().unwrap();
    let input = write(
        dir.path(),
        "in.json",
        &tetrahedron(geometry, None, Some(target.clone())),
    );
    let out = dir.path().join("out.json");
    let mut args = vec!["solve", s(&input), "-o", s(&out), "--seed", "11"];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let result: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(result["seed"], 11);
    assert_eq!(result["solver"]["status"], "converged");

    // the result document loads as a packing document in its own right
    let alpha = target.get("alpha").and_then(Value::as_f64);
    let a = alpha.map(|a| format!("--alpha={a}"));
    let mut args = vec!["--json", "curvature", s(&out)];
    if let Some(a) = &a {
        args.push(a.as_str());
    }
    let o = run(&args);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let got = match alpha {
        Some(_) => v["alpha"]["values"].as_array().unwrap(),
        None => v["curvatures"].as_array().unwrap(),
    };
    let want = target["values"].as_array().unwrap();
    for i in 0..4 {
        let (g, t) = (got[i].as_f64().unwrap(), want[i].as_f64().unwrap());
        assert!((g - t).abs() < 1e-8 * (1.0 + t.abs()), "vertex {i}: {g} vs {t}");
    }
}

#[test]
fn solve_then_curvature_euclidean() {
    let t = [2.0, 3.0, 3.5, 4.0 * PI - 8.5];
    solve_reproduces_target("euclidean", json!({ "kind": "curvature", "values": t }), &[]);
}

#[test]
fn solve_then_curvature_hyperbolic_alpha() {
    // alpha-curvatures of a known metric
    let dir = TempDir::new().unwrap();
    let p = write(
        dir.path(),
        "known.json",
        &tetrahedron("hyperbolic", Some(vec![0.4, 0.7, 1.0, 1.3]), None),
    );
    let o = run(&["--json", "curvature", s(&p), "--alpha=-1"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let values = v["alpha"]["values"].clone();
    solve_reproduces_target(
        "hyperbolic",
        json!({ "kind": "alpha", "alpha": -1.0, "values": values }),
        &["--method", "newton"],
    );
}

#[test]
fn solve_without_solution_reports_degenerate() {
    let dir = TempDir::new().unwrap();
    // alpha * R > 0 on a hyperbolic tetrahedron: the radii collapse
    let target = json!({ "kind": "alpha", "alpha": 1.0, "values": [1.5, 2.0, 2.5, 3.0] });
    let input = write(
        dir.path(),
        "in.json",
        &tetrahedron("hyperbolic", Some(vec![0.5; 4]), Some(target)),
    );
    let out = dir.path().join("out.json");
    let o = run(&["solve", s(&input), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let result: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(result["solver"]["status"], "degenerate");
}

#[test]
fn refused_target_exits_with_solver_code() {
    let dir = TempDir::new().unwrap();
    let target = json!({ "kind": "curvature", "values": [1.0, 1.0, 1.0, 1.0] });
    let input = write(
        dir.path(),
        "in.json",
        &tetrahedron("euclidean", Some(vec![1.0; 4]), Some(target)),
    );
    let out = dir.path().join("out.json");
    let o = run(&["solve", s(&input), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let result: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(result["solver"]["status"], "refused");
}

#[test]
fn flow_converges_on_tetrahedron() {
    let dir = TempDir::new().unwrap();
    let target = json!({ "kind": "curvature", "values": vec![PI; 4] });
    let input = write(
        dir.path(),
        "in.json",
        &tetrahedron("euclidean", Some(vec![0.4, 1.0, 2.0, 3.0]), Some(target)),
    );
    let out = dir.path().join("out.json");
    let o = run(&["flow", s(&input), "-o", s(&out), "--step", "0.05", "--tol", "1e-8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn audit_on_fixture_passes() {
    let o = run(&[
        "--json",
        "audit",
        "tetrahedron",
        "--samples",
        "50",
        "--seed",
        "5",
        "--restarts",
        "2",
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["seed"], 5);
    assert!(v["checks"].as_array().unwrap().len() > 20);
}

#[test]
fn malformed_documents_exit_with_input_code() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("syntax.json", "{\"schema_version\": \"1\",".to_string()),
        ("unknown.json", {
            let mut d = tetrahedron("euclidean", None, None);
            d["colour"] = json!("red");
            d.to_string()
        }),
        ("version.json", {
            let mut d = tetrahedron("euclidean", None, None);
            d["schema_version"] = json!("2");
            d.to_string()
        }),
        ("missing_edge.json", {
            let mut d = tetrahedron("euclidean", None, None);
            d["inversive_distances"].as_array_mut().unwrap().pop();
            d.to_string()
        }),
        (
            "radii.json",
            tetrahedron("euclidean", Some(vec![1.0, -1.0, 1.0, 1.0]), None).to_string(),
        ),
    ];
    for (name, text) in cases {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        let o = run(&["validate", s(&p)]);
        assert_eq!(o.status.code(), Some(1), "{name}");
        assert!(!o.stderr.is_empty(), "{name}");
    }
    assert_eq!(run(&["validate", "/nonexistent/doc.json"]).status.code(), Some(1));
}

#[test]
fn mutated_documents_do_not_crash_validate() {
    use rand::{RngExt, SeedableRng};
    let dir = TempDir::new().unwrap();
    let base = serde_json::to_string(&tetrahedron("euclidean", Some(vec![1.0; 4]), None)).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let alphabet = b"{}[],:\"-0123456789.eE ";
    for k in 0..200 {
        let mut bytes = base.as_bytes().to_vec();
        for _ in 0..rng.random_range(1..4) {
            let i = rng.random_range(0..bytes.len());
            match rng.random_range(0..3u8) {
                0 => bytes[i] = alphabet[rng.random_range(0..alphabet.len())],
                1 => {
                    bytes.remove(i);
                }
                _ => bytes.insert(i, alphabet[rng.random_range(0..alphabet.len())]),
            }
        }
        let p = dir.path().join(format!("m{k}.json"));
        std::fs::write(&p, &bytes).unwrap();
        let code = run(&["validate", s(&p)]).status.code();
        assert!(matches!(code, Some(0) | Some(1)), "case {k} exited with {code:?}");
    }
}

#[test]
fn import_obj_roundtrip() {
    let dir = TempDir::new().unwrap();
    let obj = dir.path().join("tet.obj");
    std::fs::write(
        &obj,
        "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 3 2\nf 1 2 4\nf 1 4 3\nf 2 3 4\n",
    )
    .unwrap();
    let doc = dir.path().join("tet.json");
    let o = run(&["import-obj", s(&obj), "--default-I", "0.5", "-o", s(&doc)]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&doc).unwrap()).unwrap();
    assert_eq!(v["inversive_distances"].as_array().unwrap().len(), 6);
    assert!(run(&["validate", s(&doc)]).status.success());
}
