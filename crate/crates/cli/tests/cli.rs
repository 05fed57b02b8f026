use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cortex_atlas::scene::SCENE_SCHEMA;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cortex-atlas"));
    c.env("RUST_LOG", "error");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    let out = bin().current_dir(dir).args(args).output().unwrap();
    out
}

fn ok(dir: &Path, args: &[&str]) -> serde_json::Value {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn read_json(path: PathBuf) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn param_single_triangle_puts_all_three_vertices_on_the_boundary() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tri.off"), "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
    let report = ok(dir.path(), &["param", "--mesh", "tri.off", "--out", "tri.map.json"]);
    assert_eq!(report["ok"], true);
    let map = read_json(dir.path().join("tri.map.json"));
    let mut boundary: Vec<u64> = map["boundary"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    boundary.sort();
    assert_eq!(boundary, [0, 1, 2]);
    for p in map["uv"].as_array().unwrap() {
        let (u, v) = (p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
        assert!(((u * u + v * v).sqrt() - 1.0).abs() < 1e-12);
    }
    // the artifact doubles as a standalone disk map document
    cortex_atlas::param::DiskMap::from_json(&map.to_string(), "tri").unwrap();
    let report = read_json(dir.path().join("tri.map.json.report.json"));
    assert_eq!(report["ok"], true);
    assert!(report["timings"]["total"].as_f64().unwrap() >= 0.0);
    assert!(report["warnings"].is_array());
}

#[test]
fn cluster_theta_zero_separates_distinct_streamlines() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("s.txt"),
        "0 0 0\n1 0 0\n2 0 0\n\n0 1 0\n1 1 0\n2 1 0\n\n0 0 1\n1 0 1\n2 0 1\n",
    )
    .unwrap();
    let report = ok(dir.path(), &["cluster", "--streamlines", "s.txt", "--theta", "0", "--out", "c.json"]);
    assert_eq!(report["stats"]["clusters"], 3);
    let c = read_json(dir.path().join("c.json"));
    assert_eq!(c["clusters"].as_array().unwrap().len(), 3);
}

#[test]
fn parameter_domain_errors_exit_nonzero_with_structured_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.txt"), "0 0 0\n1 0 0\n").unwrap();
    let cases: [&[&str]; 6] = [
        &["cluster", "--streamlines", "s.txt", "--theta", "-1", "--out", "c.json"],
        &["cluster", "--streamlines", "s.txt", "--k", "1", "--out", "c.json"],
        &["cluster", "--streamlines", "missing.txt", "--out", "c.json"],
        &["sphere", "--mesh", "a.json", "--map", "a.map.json", "--scale", "0.5", "--out", "s.json"],
        &["cluster", "--streamlines", "s.txt", "--theta=-0.5", "--out", "d.json"],
        &["cluster", "--out", "c.json"],
    ];
    for args in cases {
        let out = run(dir.path(), args);
        assert!(!out.status.success(), "{args:?} should fail");
        let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap_or_else(|_| {
            panic!("stderr is not JSON: {}", String::from_utf8_lossy(&out.stderr))
        });
        assert!(err["error"].is_string());
    }
    let report = read_json(dir.path().join("c.json.report.json"));
    assert_eq!(report["ok"], false);
    assert!(report["error"].is_string());
}

fn pipeline(dir: &Path) -> Vec<u8> {
    ok(dir, &["synth", "--out", "in", "--rings", "10", "--streamlines", "400", "--samples", "30"]);
    for (h, wall) in [("lh", "1000"), ("rh", "2000")] {
        ok(dir, &[
            "param", "--mesh", &format!("in/{h}.json"), "--remove-label", wall,
            "--out", &format!("{h}.map.json"), "--mesh-out", &format!("{h}.json"),
        ]);
    }
    let meshes = ["--mesh", "lh.json", "--mesh", "rh.json", "--map", "lh.map.json", "--map", "rh.map.json"];
    let with = |rest: &[&'static str]| -> Vec<&'static str> { meshes.iter().chain(rest).copied().collect() };
    ok(dir, &[&["sphere"][..], &with(&["--scale", "1", "--scale", "1.5", "--out", "sphere.json"])].concat());
    ok(dir, &["cluster", "--streamlines", "in/streamlines.trks", "--out", "clusters.json"]);
    ok(dir, &[
        &["connect", "--clusters", "clusters.json", "--streamlines", "in/streamlines.trks"][..],
        &with(&["--sphere", "sphere.json", "--out", "bundles.json", "--graph-csv", "graph.csv"]),
    ]
    .concat());
    ok(dir, &[
        &["overlay"][..],
        &with(&["--channel", "myelin", "--tsf", "in/series.tsf", "--seed-vertex", "0", "--regress-mean-gray", "--out", "ov.json"]),
    ]
    .concat());
    ok(dir, &[
        &["export"][..],
        &with(&["--sphere", "sphere.json", "--bundles", "bundles.json", "--overlays", "ov.json", "--out", "scene.json"]),
    ]
    .concat());
    std::fs::read(dir.join("scene.json")).unwrap()
}

#[test]
fn full_pipeline_validates_and_reruns_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = pipeline(a.path());
    let doc: serde_json::Value = serde_json::from_slice(&first).unwrap();
    let schema: serde_json::Value = serde_json::from_str(SCENE_SCHEMA).unwrap();
    let v = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = v.iter_errors(&doc).map(|e| format!("{e} at {}", e.instance_path())).take(5).collect();
    assert!(errors.is_empty(), "{errors:#?}");

    assert_eq!(doc["meshes"].as_array().unwrap().len(), 2);
    assert_eq!(doc["disk_maps"].as_array().unwrap().len(), 4);
    assert_eq!(doc["sphere"]["exploded"].as_array().unwrap().len(), 2);
    assert_eq!(doc["overlays"].as_array().unwrap().len(), 2);
    assert!(!doc["bundles"].as_array().unwrap().is_empty());
    let p = &doc["provenance"];
    for key in ["cluster.theta", "cluster.k", "connect.d_max", "sphere.scales", "param.lh.area_correct", "overlay.seed"] {
        assert!(p["parameters"].get(key).is_some(), "provenance lacks {key}");
    }
    for key in ["streamlines", "overlay.tsf", "param.lh.mesh", "mesh.rh"] {
        assert!(p["inputs"].get(key).is_some(), "provenance lacks input {key}");
    }

    let second = pipeline(b.path());
    assert!(first == second, "re-run produced a different scene");
    assert_eq!(
        std::fs::read(a.path().join("graph.csv")).unwrap(),
        std::fs::read(b.path().join("graph.csv")).unwrap()
    );
}

#[test]
fn connect_rejects_a_different_streamline_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.txt"), "0 0 0\n1 0 0\n").unwrap();
    std::fs::write(dir.path().join("b.txt"), "0 0 0\n2 0 0\n").unwrap();
    ok(dir.path(), &["synth", "--out", "in", "--rings", "4", "--streamlines", "5", "--samples", "5"]);
    ok(dir.path(), &["cluster", "--streamlines", "a.txt", "--out", "c.json"]);
    let out = run(dir.path(), &["connect", "--clusters", "c.json", "--streamlines", "b.txt", "--mesh", "in/lh.json", "--out", "b.json"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not the streamline file"));
}
