use cortex_atlas::connect::Seed;
use cortex_atlas::pipeline::{run, synthetic_inputs, PipelineConfig};
use cortex_atlas::scene::{Scene, SCENE_SCHEMA};

fn validator() -> jsonschema::Validator {
    let schema: serde_json::Value = serde_json::from_str(SCENE_SCHEMA).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn small_scene() -> Scene {
    let cfg = PipelineConfig {
        channels: vec!["myelin".into()],
        seed: Some(Seed::Vertex(0)),
        scales: vec![1.0, 2.0],
        ..PipelineConfig::default()
    };
    run(synthetic_inputs(10, 400, 30, 4), &cfg).unwrap().scene
}

#[test]
fn pipeline_scene_validates_against_schema() {
    let bytes = small_scene().to_json_bytes().unwrap();
    let doc: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    let v = validator();
    let errors: Vec<String> = v.iter_errors(&doc).map(|e| format!("{e} at {}", e.instance_path())).take(5).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

#[test]
fn schema_rejects_broken_documents() {
    let v = validator();
    let mut doc: serde_json::Value = serde_json::from_slice(&small_scene().to_json_bytes().unwrap()).unwrap();
    doc["version"] = 2.into();
    assert!(!v.is_valid(&doc));
    doc["version"] = 1.into();
    doc["bundles"][0]["width"] = 0.into();
    assert!(!v.is_valid(&doc));
}

#[test]
fn scene_file_round_trip_is_byte_identical() {
    let scene = small_scene();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scene.json");
    scene.write(&path).unwrap();
    let back = Scene::load(&path).unwrap();
    back.validate().unwrap();
    assert_eq!(back.to_json_bytes().unwrap(), std::fs::read(&path).unwrap());
}
