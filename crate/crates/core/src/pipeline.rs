//! The full mapping pipeline, from loaded inputs to a [`Scene`]. The CLI
//! subcommands call the individual stages; [`run`] chains all of them.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connect::{attach_channel, attach_field, build_graph, regress_mean_gray, seed_correlation, GraphReport, Seed, TimeSeriesField};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::{remove_region, Hemisphere, RegionId, TriMesh};
use crate::param::{area_correct_traced, distortion_report, harmonic_disk_map, AreaCorrectConfig, DiskMap};
use crate::scene::{DistortionSummary, MapStage, Provenance, Scene, SceneDiskMap, SceneMesh, SceneSphere};
use crate::sphere::{align_hemispheres, exploded_view, inverse_stereographic, ExplodedScene, SphereMap, SphereSide, DEFAULT_SEAM_SAMPLES};
use crate::tract::{assign_endpoints, coalesce, quickbundles, Bundle, BundleDomains, StreamlineSet, DEFAULT_DMAX_MM, DEFAULT_K, DEFAULT_THETA_MM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub area_correct: AreaCorrectConfig,
    pub seam_samples: usize,
    /// Exploded-view scale factors; each produces one exploded variant.
    pub scales: Vec<f64>,
    pub theta: f64,
    pub k: usize,
    pub d_max: f64,
    /// Vertex channels exported as overlays.
    pub channels: Vec<String>,
    pub seed: Option<Seed>,
    pub regress_mean_gray: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            area_correct: AreaCorrectConfig::default(),
            seam_samples: DEFAULT_SEAM_SAMPLES,
            scales: vec![1.0],
            theta: DEFAULT_THETA_MM,
            k: DEFAULT_K,
            d_max: DEFAULT_DMAX_MM,
            channels: Vec::new(),
            seed: None,
            regress_mean_gray: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.theta >= 0.0) {
            return bad(format!("theta must be >= 0, got {}", self.theta));
        }
        if self.k < 2 {
            return bad(format!("k must be >= 2, got {}", self.k));
        }
        if !(self.d_max >= 0.0) {
            return bad(format!("d_max must be >= 0, got {}", self.d_max));
        }
        if let Some(s) = self.scales.iter().find(|s| !(**s >= 1.0) || !s.is_finite()) {
            return bad(format!("explode scale must be >= 1, got {s}"));
        }
        if self.seam_samples == 0 {
            return bad("seam samples must be positive".into());
        }
        Ok(())
    }

    /// Mirrors every field into the provenance parameters.
    pub fn record(&self, provenance: &mut Provenance) {
        let v = serde_json::to_value(self).expect("config serializes");
        if let serde_json::Value::Object(map) = v {
            for (k, v) in map {
                provenance.parameters.insert(k, v);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunReport {
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        *self.timings.entry(stage.to_string()).or_default() += t.elapsed().as_secs_f64();
        out
    }
}

#[derive(Debug, Clone)]
pub struct HemisphereInput {
    pub id: String,
    pub mesh: TriMesh,
    /// Region deleted before mapping, usually the medial wall.
    pub remove_label: Option<RegionId>,
}

#[derive(Debug, Clone)]
pub struct ParamResult {
    pub mesh: TriMesh,
    /// Old-to-new vertex map when a region was removed.
    pub vertex_map: Option<Vec<Option<usize>>>,
    pub harmonic: DiskMap,
    pub corrected: DiskMap,
    pub harmonic_distortion: DistortionSummary,
    pub corrected_distortion: DistortionSummary,
    pub area_iterations: usize,
}

/// Region removal, harmonic disk map and area correction for one hemisphere.
pub fn parameterize(input: &HemisphereInput, cfg: &AreaCorrectConfig) -> Result<ParamResult> {
    let (mesh, vertex_map) = match input.remove_label {
        Some(l) => {
            let r = remove_region(&input.mesh, l)?;
            (r.mesh, Some(r.vertex_map))
        }
        None => (input.mesh.clone(), None),
    };
    let mut harmonic = harmonic_disk_map(&mesh)?;
    harmonic.source_mesh_id = input.id.clone();
    let trace = area_correct_traced(&harmonic, &mesh, cfg)?;
    let mut corrected = trace.map;
    corrected.source_mesh_id = input.id.clone();
    let summary = |m: &DiskMap| -> Result<DistortionSummary> {
        Ok(DistortionSummary::new(&distortion_report(&mesh, m)?, m.flipped_faces(&mesh).len()))
    };
    Ok(ParamResult {
        harmonic_distortion: summary(&harmonic)?,
        corrected_distortion: summary(&corrected)?,
        mesh,
        vertex_map,
        harmonic,
        corrected,
        area_iterations: trace.iterations,
    })
}

/// One disk gives a single lower hemisphere; two (left then right) are lifted
/// to opposite hemispheres and aligned along the equator.
pub fn build_sphere(maps: &[&DiskMap], seam_samples: usize) -> Result<SphereMap> {
    match maps {
        [one] => Ok(inverse_stereographic(one, SphereSide::Lower)),
        [left, right] => align_hemispheres(
            &inverse_stereographic(left, SphereSide::Lower),
            &inverse_stereographic(right, SphereSide::Upper),
            seam_samples,
        ),
        _ => Err(Error::InvalidParameter(format!("sphere needs one or two disk maps, got {}", maps.len()))),
    }
}

/// Exploded variants for every scale, carrying bundle endpoints along.
pub fn explode(
    sphere: &SphereMap,
    meshes: &[&TriMesh],
    bundles: &[Bundle],
    scales: &[f64],
) -> Result<Vec<ExplodedScene>> {
    let mut labels = Vec::with_capacity(sphere.xyz.len());
    for m in meshes {
        labels.extend_from_slice(m.labels().ok_or_else(|| Error::Label("exploded view needs labeled meshes".into()))?);
    }
    let regions: Vec<RegionId> = meshes.iter().flat_map(|m| m.regions().ids().collect::<Vec<_>>()).collect();
    let attachments: Vec<(RegionId, Vec3)> = bundles
        .iter()
        .flat_map(|b| b.endpoints.iter())
        .filter_map(|e| e.sphere.map(|p| (labels[e.vertex], p)))
        .collect();
    scales.iter().map(|&s| exploded_view(sphere, &labels, regions.iter().copied(), s, &attachments)).collect()
}

#[derive(Debug, Clone)]
pub struct TractResult {
    pub bundles: Vec<Bundle>,
    pub skipped: Vec<usize>,
    pub cluster_count: usize,
}

pub fn tract_bundles(
    set: &StreamlineSet,
    meshes: &[&TriMesh],
    disks: Option<&[&DiskMap]>,
    sphere: Option<&SphereMap>,
    cfg: &PipelineConfig,
) -> Result<TractResult> {
    let qb = quickbundles(set, cfg.theta, cfg.k)?;
    let assignments = assign_endpoints(set, meshes, cfg.d_max)?;
    let domains = BundleDomains { meshes, disks, sphere };
    let bundles = coalesce(&qb.clusters, set, &assignments, &domains)?;
    Ok(TractResult { bundles, skipped: qb.skipped, cluster_count: qb.clusters.len() })
}

#[derive(Debug, Clone, Default)]
pub struct PipelineInputs {
    pub hemispheres: Vec<HemisphereInput>,
    pub streamlines: Option<StreamlineSet>,
    /// Rows over the loaded meshes (before region removal) or over the scene meshes.
    pub time_series: Option<TimeSeriesField>,
    /// Input digests; parameters are added by [`run`].
    pub provenance: Provenance,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub scene: Scene,
    pub report: RunReport,
    pub graph_report: Option<GraphReport>,
    pub skipped_streamlines: Vec<usize>,
}

pub fn run(inputs: PipelineInputs, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let mut report = RunReport::default();
    let mut hemis = inputs.hemispheres;
    if hemis.is_empty() || hemis.len() > 2 {
        return Err(Error::InvalidParameter(format!("expected one or two hemispheres, got {}", hemis.len())));
    }
    hemis.sort_by_key(|h| h.mesh.hemisphere());
    if hemis.len() == 2 && (hemis[0].mesh.hemisphere() != Hemisphere::Left || hemis[1].mesh.hemisphere() != Hemisphere::Right) {
        return Err(Error::InvalidParameter("two hemispheres must be one left and one right".into()));
    }

    let params = report.time("param", || hemis.par_iter().map(|h| parameterize(h, &cfg.area_correct)).collect::<Result<Vec<_>>>())?;
    let meshes: Vec<&TriMesh> = params.iter().map(|p| &p.mesh).collect();
    let disks: Vec<&DiskMap> = params.iter().map(|p| &p.corrected).collect();
    for (h, p) in hemis.iter().zip(&params) {
        if p.corrected_distortion.flipped_faces > 0 {
            report.warnings.push(format!("{}: {} flipped faces after area correction", h.id, p.corrected_distortion.flipped_faces));
        }
    }

    let sphere = report.time("sphere", || build_sphere(&disks, cfg.seam_samples))?;

    let tract = match &inputs.streamlines {
        Some(set) => Some(report.time("cluster_connect", || tract_bundles(set, &meshes, Some(&disks), Some(&sphere), cfg))?),
        None => None,
    };
    if let Some(t) = &tract {
        if !t.skipped.is_empty() {
            report.warnings.push(format!("{} zero-length streamlines skipped", t.skipped.len()));
        }
    }
    let bundles = tract.as_ref().map(|t| t.bundles.clone()).unwrap_or_default();
    let (graph, graph_report) = match &tract {
        Some(t) => {
            let (g, r) = build_graph(&t.bundles, &meshes)?;
            (Some(g), Some(r))
        }
        None => (None, None),
    };

    let exploded = report.time("explode", || explode(&sphere, &meshes, &bundles, &cfg.scales))?;
    for e in &exploded {
        report.warnings.extend(e.warnings.iter().map(|w| format!("explode s={}: {w}", e.scale)));
    }

    let scene_meshes: Vec<SceneMesh> = hemis
        .iter()
        .zip(&params)
        .map(|(h, p)| {
            let m = SceneMesh::from_mesh(h.id.clone(), &p.mesh);
            match &p.vertex_map {
                Some(map) => m.with_vertex_map(map),
                None => m,
            }
        })
        .collect();
    let ids: Vec<(&str, &TriMesh)> = hemis.iter().map(|h| h.id.as_str()).zip(meshes.iter().copied()).collect();

    let mut provenance = inputs.provenance;
    cfg.record(&mut provenance);
    let mut scene = Scene::new(scene_meshes, provenance);

    let overlays = report.time("overlay", || -> Result<_> {
        let mut out = Vec::new();
        for c in &cfg.channels {
            out.push(attach_channel(&ids, c, None)?);
        }
        let mut warnings = Vec::new();
        if let (Some(ts), Some(seed)) = (&inputs.time_series, cfg.seed) {
            let mut ts = scene.restrict_time_series(ts)?;
            if cfg.regress_mean_gray {
                let r = regress_mean_gray(&ts)?;
                warnings.extend(r.warnings);
                ts = r.field;
            }
            let labels = scene.concatenated_labels().ok();
            let o = seed_correlation(&ts, seed, labels.as_deref())?;
            if !o.degenerate.is_empty() {
                warnings.push(format!("{}: {} zero-variance vertices set to 0", o.name, o.degenerate.len()));
            }
            out.push(attach_field(&ids, o)?);
        }
        Ok((out, warnings))
    })?;
    scene.overlays = overlays.0;
    report.warnings.extend(overlays.1);

    for (h, p) in hemis.iter().zip(&params) {
        for (stage, map, d) in [
            (MapStage::Harmonic, &p.harmonic, p.harmonic_distortion),
            (MapStage::AreaCorrected, &p.corrected, p.corrected_distortion),
        ] {
            scene.disk_maps.push(SceneDiskMap {
                mesh: h.id.clone(),
                stage,
                uv: map.uv.clone(),
                boundary: map.boundary.clone(),
                distortion: d,
            });
        }
    }
    scene.sphere = Some(SceneSphere {
        meshes: hemis.iter().map(|h| h.id.clone()).collect(),
        xyz: sphere.xyz,
        side: sphere.side,
        radius: sphere.radius,
        alignment: sphere.alignment,
        seam: sphere.seam,
        exploded,
    });
    scene.bundles = bundles;
    scene.graph = graph;
    scene.validate()?;
    Ok(PipelineOutput {
        scene,
        report,
        graph_report,
        skipped_streamlines: tract.map(|t| t.skipped).unwrap_or_default(),
    })
}

/// The two-hemisphere synthetic dataset used by the tests and the demo command.
pub fn synthetic_inputs(rings: usize, streamlines: usize, samples: usize, seed: u64) -> PipelineInputs {
    use crate::fixtures::{medial_wall_label, synthetic_hemisphere, synthetic_streamlines, synthetic_time_series};
    let lh = synthetic_hemisphere(rings, Hemisphere::Left);
    let rh = synthetic_hemisphere(rings, Hemisphere::Right);
    let set = synthetic_streamlines(&[&lh, &rh], streamlines, 40, seed);
    let ts = synthetic_time_series(&[&lh, &rh], samples, seed);
    let mut provenance = Provenance::new();
    provenance.set("synthetic", serde_json::json!({ "rings": rings, "streamlines": streamlines, "samples": samples, "seed": seed }));
    PipelineInputs {
        hemispheres: vec![
            HemisphereInput { id: "lh".into(), remove_label: Some(medial_wall_label(Hemisphere::Left)), mesh: lh },
            HemisphereInput { id: "rh".into(), remove_label: Some(medial_wall_label(Hemisphere::Right)), mesh: rh },
        ],
        streamlines: Some(set),
        time_series: Some(ts),
        provenance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_synthetic_run_is_valid_and_deterministic() {
        let cfg = PipelineConfig {
            channels: vec!["myelin".into()],
            seed: Some(Seed::Region(1001)),
            regress_mean_gray: true,
            scales: vec![1.0, 1.5],
            ..PipelineConfig::default()
        };
        let a = run(synthetic_inputs(8, 300, 40, 1), &cfg).unwrap();
        let b = run(synthetic_inputs(8, 300, 40, 1), &cfg).unwrap();
        assert_eq!(a.scene.to_json_bytes().unwrap(), b.scene.to_json_bytes().unwrap());
        let s = &a.scene;
        assert_eq!(s.meshes.len(), 2);
        assert_eq!(s.disk_maps.len(), 4);
        assert_eq!(s.overlays.len(), 2);
        assert!(!s.bundles.is_empty());
        let sphere = s.sphere.as_ref().unwrap();
        assert_eq!(sphere.exploded.len(), 2);
        // s = 1 leaves the sphere untouched
        assert_eq!(sphere.exploded[0].positions, sphere.xyz);
        let members: usize = s.bundles.iter().map(|b| b.member_count()).sum();
        assert_eq!(members + a.skipped_streamlines.len(), 300);
        assert_eq!(s.provenance.parameters["theta"], serde_json::json!(10.0));
    }

    #[test]
    fn bad_parameters_rejected() {
        for cfg in [
            PipelineConfig { theta: -1.0, ..Default::default() },
            PipelineConfig { k: 1, ..Default::default() },
            PipelineConfig { scales: vec![0.5], ..Default::default() },
        ] {
            assert!(matches!(run(synthetic_inputs(4, 10, 5, 0), &cfg), Err(Error::InvalidParameter(_))));
        }
    }
}
