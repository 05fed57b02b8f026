use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use cortex_atlas::connect::{attach_channel, attach_field, build_graph, read_tsf, regress_mean_gray, seed_correlation, write_tsf, Seed};
use cortex_atlas::mesh::{attach_labels, load_mesh, save_mesh, Hemisphere, MeshFormat, TriMesh};
use cortex_atlas::param::{AreaCorrectConfig, DiskMap};
use cortex_atlas::pipeline::{build_sphere, explode, parameterize, synthetic_inputs, HemisphereInput, PipelineConfig};
use cortex_atlas::scene::{MapStage, Provenance, Scene, SceneDiskMap, SceneMesh, SceneSphere};
use cortex_atlas::sphere::ExplodedScene;
use cortex_atlas::tract::{assign_endpoints, coalesce, load_streamlines, quickbundles, save_streamlines, BundleDomains, StreamlineFormat, StreamlineSet};

use crate::artifact::{self, BundleArtifact, ClusterArtifact, DiskMapArtifact, OverlayArtifact, SphereArtifact, ARTIFACT_VERSION};
use crate::{ClusterArgs, ConnectArgs, ExportArgs, OverlayArgs, ParamArgs, RunReport, SphereArgs, SynthArgs};

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "mesh".into())
}

fn mesh_format(path: &Path) -> Result<MeshFormat> {
    MeshFormat::from_path(path).with_context(|| format!("{}: cannot tell mesh format from extension (.off, .vtk, .json)", path.display()))
}

fn streamline_format(path: &Path, flag: Option<&str>) -> Result<StreamlineFormat> {
    if let Some(f) = flag {
        return Ok(f.parse()?);
    }
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    Ok(match ext.as_str() {
        "trks" | "bin" => StreamlineFormat::Binary,
        _ => StreamlineFormat::Text,
    })
}

fn load_set(path: &Path, flag: Option<&str>) -> Result<StreamlineSet> {
    let format = streamline_format(path, flag)?;
    load_streamlines(path, format).with_context(|| format!("loading streamlines {}", path.display()))
}

/// Processed meshes with their optional disk map artifacts, left hemisphere first.
struct Workspace {
    ids: Vec<String>,
    meshes: Vec<TriMesh>,
    maps: Vec<DiskMapArtifact>,
    provenance: Provenance,
}

impl Workspace {
    fn load(mesh_paths: &[PathBuf], map_paths: &[PathBuf]) -> Result<Self> {
        ensure!(
            map_paths.is_empty() || map_paths.len() == mesh_paths.len(),
            "got {} disk maps for {} meshes",
            map_paths.len(),
            mesh_paths.len()
        );
        ensure!(mesh_paths.len() <= 2, "expected one or two meshes, got {}", mesh_paths.len());
        let mut provenance = Provenance::new();
        let mut entries = Vec::new();
        for (i, path) in mesh_paths.iter().enumerate() {
            let mesh = load_mesh(path, mesh_format(path)?).with_context(|| format!("loading mesh {}", path.display()))?;
            let map = match map_paths.get(i) {
                Some(p) => {
                    let a: DiskMapArtifact = artifact::read(p, "disk_map")?;
                    a.disk_map()?.validate(&mesh).with_context(|| format!("{} does not fit {}", p.display(), path.display()))?;
                    artifact::merge(&mut provenance, &a.provenance)?;
                    Some(a)
                }
                None => None,
            };
            let id = map.as_ref().map_or_else(|| stem(path), |m| m.mesh.clone());
            provenance.add_input_file(format!("mesh.{id}"), path)?;
            entries.push((id, mesh, map));
        }
        entries.sort_by_key(|(_, m, _)| m.hemisphere());
        if entries.len() == 2 {
            ensure!(entries[0].0 != entries[1].0, "both meshes have id '{}'", entries[0].0);
            ensure!(
                entries[0].1.hemisphere() == Hemisphere::Left && entries[1].1.hemisphere() == Hemisphere::Right,
                "two meshes must be one left and one right hemisphere"
            );
        }
        let mut ws = Workspace { ids: Vec::new(), meshes: Vec::new(), maps: Vec::new(), provenance };
        for (id, mesh, map) in entries {
            ws.ids.push(id);
            ws.meshes.push(mesh);
            ws.maps.extend(map);
        }
        Ok(ws)
    }

    fn mesh_refs(&self) -> Vec<&TriMesh> {
        self.meshes.iter().collect()
    }

    fn named(&self) -> Vec<(&str, &TriMesh)> {
        self.ids.iter().map(String::as_str).zip(&self.meshes).collect()
    }

    fn disk_maps(&self) -> Result<Vec<DiskMap>> {
        self.maps.iter().map(|m| m.disk_map()).collect()
    }

    fn scene_meshes(&self) -> Vec<SceneMesh> {
        self.ids
            .iter()
            .zip(&self.meshes)
            .enumerate()
            .map(|(i, (id, mesh))| {
                let mut m = SceneMesh::from_mesh(id.clone(), mesh);
                if let Some(a) = self.maps.get(i) {
                    m.source_vertex_count = a.source_vertex_count;
                    m.source_index = a.source_index.clone();
                }
                m
            })
            .collect()
    }

    fn labeled(&self) -> bool {
        self.meshes.iter().all(|m| m.labels().is_some())
    }

    fn check_ids(&self, what: &str, ids: &[String]) -> Result<()> {
        ensure!(ids == self.ids.as_slice(), "{what} was built for meshes {ids:?}, got {:?}", self.ids);
        Ok(())
    }
}

pub fn param(a: &ParamArgs, report: &mut RunReport) -> Result<()> {
    let cfg = AreaCorrectConfig { max_iters: a.max_iters, step: a.step, tol: a.tol, preconditioner: a.preconditioner };
    ensure!(a.step > 0.0 && a.step.is_finite(), "step must be positive, got {}", a.step);
    ensure!(a.tol >= 0.0, "tol must be >= 0, got {}", a.tol);
    let id = a.id.clone().unwrap_or_else(|| stem(&a.mesh));
    let mut mesh = report.time("load", || load_mesh(&a.mesh, mesh_format(&a.mesh)?).with_context(|| format!("loading mesh {}", a.mesh.display())))?;
    if let Some(l) = &a.labels {
        mesh = attach_labels(mesh, l).with_context(|| format!("reading labels {}", l.display()))?;
    }
    if let Some(h) = a.hemisphere {
        mesh.set_hemisphere(h);
    }
    if a.remove_label.is_some() && mesh.labels().is_none() {
        bail!("--remove-label needs a labeled mesh");
    }
    let input = HemisphereInput { id: id.clone(), mesh, remove_label: a.remove_label };
    let r = report.time("param", || parameterize(&input, &cfg))?;

    let mut provenance = Provenance::new();
    provenance.add_input_file(format!("param.{id}.mesh"), &a.mesh)?;
    if let Some(l) = &a.labels {
        provenance.add_input_file(format!("param.{id}.labels"), l)?;
    }
    provenance.set(format!("param.{id}.area_correct"), cfg);
    provenance.set(format!("param.{id}.remove_label"), a.remove_label);
    provenance.set(format!("param.{id}.hemisphere"), r.mesh.hemisphere());

    let source = SceneMesh::from_mesh(&id, &r.mesh);
    let source = match &r.vertex_map {
        Some(map) => source.with_vertex_map(map),
        None => source,
    };
    let out = DiskMapArtifact {
        version: ARTIFACT_VERSION,
        kind: "disk_map".into(),
        mesh: id.clone(),
        uv: r.corrected.uv.clone(),
        boundary: r.corrected.boundary.clone(),
        distortion: r.corrected_distortion,
        harmonic_uv: r.harmonic.uv.clone(),
        harmonic_distortion: r.harmonic_distortion,
        source_vertex_count: source.source_vertex_count,
        source_index: source.source_index,
        provenance,
    };
    artifact::write(&a.out, &out)?;
    report.outputs.push(a.out.clone());
    if let Some(p) = &a.mesh_out {
        save_mesh(&r.mesh, p, MeshFormat::Json).with_context(|| format!("writing {}", p.display()))?;
        report.outputs.push(p.clone());
    } else if a.remove_label.is_some() {
        report.warnings.push("region removed but no --mesh-out given; later stages need the processed mesh".into());
    }
    if r.corrected_distortion.flipped_faces > 0 {
        report.warnings.push(format!("{} flipped faces after area correction", r.corrected_distortion.flipped_faces));
    }
    report.stat("vertices", r.mesh.vertex_count());
    report.stat("faces", r.mesh.face_count());
    report.stat("boundary_vertices", r.corrected.boundary.len());
    report.stat("area_iterations", r.area_iterations);
    report.stat("harmonic", r.harmonic_distortion);
    report.stat("area_corrected", r.corrected_distortion);
    Ok(())
}

pub fn sphere(a: &SphereArgs, report: &mut RunReport) -> Result<()> {
    let cfg = PipelineConfig { seam_samples: a.seam_samples, scales: a.scales.clone(), ..PipelineConfig::default() };
    cfg.validate()?;
    let ws = report.time("load", || Workspace::load(&a.meshes, &a.maps))?;
    ensure!(ws.maps.len() == ws.meshes.len(), "every mesh needs a --map");
    let disks = ws.disk_maps()?;
    let refs: Vec<&DiskMap> = disks.iter().collect();
    let sphere = report.time("sphere", || build_sphere(&refs, a.seam_samples))?;
    let exploded = if ws.labeled() {
        report.time("explode", || explode(&sphere, &ws.mesh_refs(), &[], &a.scales))?
    } else {
        report.warnings.push("meshes are unlabeled; no exploded views".into());
        Vec::new()
    };
    for e in &exploded {
        report.warnings.extend(e.warnings.iter().map(|w| format!("explode s={}: {w}", e.scale)));
    }
    let mut provenance = ws.provenance.clone();
    provenance.set("sphere.seam_samples", a.seam_samples);
    provenance.set("sphere.scales", &a.scales);
    if let Some(al) = &sphere.alignment {
        report.stat("seam_rotation", al.rotation);
        report.stat("seam_reflected", al.reflected);
        report.stat("seam_rms_mismatch", al.rms_mismatch);
    }
    report.stat("vertices", sphere.xyz.len());
    let out = SphereArtifact { version: ARTIFACT_VERSION, kind: "sphere".into(), meshes: ws.ids.clone(), sphere, exploded, provenance };
    artifact::write(&a.out, &out)?;
    report.outputs.push(a.out.clone());
    Ok(())
}

pub fn cluster(a: &ClusterArgs, report: &mut RunReport) -> Result<()> {
    let cfg = PipelineConfig { theta: a.theta, k: a.k, ..PipelineConfig::default() };
    cfg.validate()?;
    let set = report.time("load", || load_set(&a.streamlines, a.format.as_deref()))?;
    let qb = report.time("cluster", || quickbundles(&set, a.theta, a.k))?;
    if !qb.skipped.is_empty() {
        report.warnings.push(format!("{} zero-length streamlines skipped", qb.skipped.len()));
    }
    let digest = artifact::digest_file(&a.streamlines)?;
    let mut provenance = Provenance::new();
    provenance.inputs.insert("streamlines".into(), digest.clone());
    provenance.set("cluster.theta", a.theta);
    provenance.set("cluster.k", a.k);
    report.stat("streamlines", set.len());
    report.stat("clusters", qb.clusters.len());
    report.stat("skipped", qb.skipped.len());
    let out = ClusterArtifact {
        version: ARTIFACT_VERSION,
        kind: "clusters".into(),
        theta: qb.theta,
        k: qb.k,
        streamline_count: set.len(),
        streamlines_sha256: digest,
        clusters: qb.clusters,
        skipped: qb.skipped,
        provenance,
    };
    artifact::write(&a.out, &out)?;
    report.outputs.push(a.out.clone());
    Ok(())
}

pub fn connect(a: &ConnectArgs, report: &mut RunReport) -> Result<()> {
    let cfg = PipelineConfig { d_max: a.d_max, ..PipelineConfig::default() };
    cfg.validate()?;
    let clusters: ClusterArtifact = artifact::read(&a.clusters, "clusters")?;
    ensure!(
        artifact::digest_file(&a.streamlines)? == clusters.streamlines_sha256,
        "{} is not the streamline file {} was built from",
        a.streamlines.display(),
        a.clusters.display()
    );
    let set = report.time("load", || load_set(&a.streamlines, a.format.as_deref()))?;
    let ws = report.time("load", || Workspace::load(&a.meshes, &a.maps))?;
    let sphere: Option<SphereArtifact> = a.sphere.as_deref().map(|p| artifact::read(p, "sphere")).transpose()?;
    if let Some(s) = &sphere {
        ws.check_ids("sphere", &s.meshes)?;
    }
    let disks = ws.disk_maps()?;
    let disk_refs: Vec<&DiskMap> = disks.iter().collect();
    let meshes = ws.mesh_refs();
    let domains = BundleDomains {
        meshes: &meshes,
        disks: (!disk_refs.is_empty()).then_some(disk_refs.as_slice()),
        sphere: sphere.as_ref().map(|s| &s.sphere),
    };
    let assignments = report.time("assign", || assign_endpoints(&set, &meshes, a.d_max))?;
    let bundles = report.time("coalesce", || coalesce(&clusters.clusters, &set, &assignments, &domains))?;
    let (graph, graph_report) = report.time("graph", || build_graph(&bundles, &meshes))?;

    let mut provenance = ws.provenance.clone();
    artifact::merge(&mut provenance, &clusters.provenance)?;
    if let Some(s) = &sphere {
        artifact::merge(&mut provenance, &s.provenance)?;
    }
    provenance.set("connect.d_max", a.d_max);
    if graph_report.unassigned_bundles > 0 {
        report.warnings.push(format!(
            "{} bundles ({} streamlines) have no region pair",
            graph_report.unassigned_bundles, graph_report.unassigned_streamlines
        ));
    }
    report.stat("bundles", bundles.len());
    report.stat("edges", graph.edges.len());
    report.stat("graph", &graph_report);
    if let Some(p) = &a.graph_csv {
        std::fs::write(p, graph.to_csv()?).with_context(|| format!("writing {}", p.display()))?;
        report.outputs.push(p.clone());
    }
    let out = BundleArtifact {
        version: ARTIFACT_VERSION,
        kind: "bundles".into(),
        meshes: ws.ids.clone(),
        bundles,
        graph,
        graph_report,
        skipped: clusters.skipped,
        provenance,
    };
    artifact::write(&a.out, &out)?;
    report.outputs.push(a.out.clone());
    Ok(())
}

pub fn overlay(a: &OverlayArgs, report: &mut RunReport) -> Result<()> {
    let seed = match (a.seed_vertex, a.seed_region) {
        (Some(v), _) => Some(Seed::Vertex(v)),
        (None, Some(r)) => Some(Seed::Region(r)),
        (None, None) => None,
    };
    ensure!(seed.is_none() || a.tsf.is_some(), "a correlation seed needs --tsf");
    ensure!(a.tsf.is_none() || seed.is_some(), "--tsf needs --seed-vertex or --seed-region");
    ensure!(!a.regress_mean_gray || a.tsf.is_some(), "--regress-mean-gray needs --tsf");
    ensure!(!a.channels.is_empty() || a.tsf.is_some(), "nothing to do: give --channel or --tsf");
    let ws = report.time("load", || Workspace::load(&a.meshes, &a.maps))?;
    let named = ws.named();
    let mut overlays = Vec::new();
    for c in &a.channels {
        overlays.push(attach_channel(&named, c, None)?);
    }
    let mut provenance = ws.provenance.clone();
    provenance.set("overlay.channels", &a.channels);
    if let (Some(path), Some(seed)) = (&a.tsf, seed) {
        let ts = report.time("load", || read_tsf(path))?;
        provenance.add_input_file("overlay.tsf", path)?;
        provenance.set("overlay.seed", seed);
        provenance.set("overlay.regress_mean_gray", a.regress_mean_gray);
        let scene = Scene::new(ws.scene_meshes(), Provenance::new());
        let (field, warnings) = report.time("correlation", || -> Result<_> {
            let mut ts = scene.restrict_time_series(&ts)?;
            let mut warnings = Vec::new();
            if a.regress_mean_gray {
                let r = regress_mean_gray(&ts)?;
                warnings = r.warnings;
                ts = r.field;
            }
            let labels = scene.concatenated_labels().ok();
            Ok((seed_correlation(&ts, seed, labels.as_deref())?, warnings))
        })?;
        report.warnings.extend(warnings);
        if !field.degenerate.is_empty() {
            report.warnings.push(format!("{}: {} zero-variance vertices set to 0", field.name, field.degenerate.len()));
        }
        overlays.push(attach_field(&named, field)?);
    }
    report.stat("overlays", overlays.iter().map(|o| o.name.clone()).collect::<Vec<_>>());
    let out = OverlayArtifact { version: ARTIFACT_VERSION, kind: "overlays".into(), overlays, provenance };
    artifact::write(&a.out, &out)?;
    report.outputs.push(a.out.clone());
    Ok(())
}

pub fn export(a: &ExportArgs, report: &mut RunReport) -> Result<()> {
    let ws = report.time("load", || Workspace::load(&a.meshes, &a.maps))?;
    let mut provenance = ws.provenance.clone();
    let mut scene_disks = Vec::new();
    for m in &ws.maps {
        scene_disks.push(SceneDiskMap {
            mesh: m.mesh.clone(),
            stage: MapStage::Harmonic,
            uv: m.harmonic_uv.clone(),
            boundary: m.boundary.clone(),
            distortion: m.harmonic_distortion,
        });
        scene_disks.push(SceneDiskMap {
            mesh: m.mesh.clone(),
            stage: MapStage::AreaCorrected,
            uv: m.uv.clone(),
            boundary: m.boundary.clone(),
            distortion: m.distortion,
        });
    }

    let bundles: Option<BundleArtifact> = a.bundles.as_deref().map(|p| artifact::read(p, "bundles")).transpose()?;
    if let Some(b) = &bundles {
        ws.check_ids("bundle artifact", &b.meshes)?;
        artifact::merge(&mut provenance, &b.provenance)?;
    }

    let sphere = match a.sphere.as_deref() {
        Some(p) => {
            let s: SphereArtifact = artifact::read(p, "sphere")?;
            ws.check_ids("sphere", &s.meshes)?;
            artifact::merge(&mut provenance, &s.provenance)?;
            // re-run so the exploded variants carry the bundle endpoints
            let exploded: Vec<ExplodedScene> = match &bundles {
                Some(b) if !b.bundles.is_empty() && !s.exploded.is_empty() => {
                    let scales: Vec<f64> = s.exploded.iter().map(|e| e.scale).collect();
                    report.time("explode", || explode(&s.sphere, &ws.mesh_refs(), &b.bundles, &scales))?
                }
                _ => s.exploded.clone(),
            };
            Some(SceneSphere {
                meshes: s.meshes,
                xyz: s.sphere.xyz,
                side: s.sphere.side,
                radius: s.sphere.radius,
                alignment: s.sphere.alignment,
                seam: s.sphere.seam,
                exploded,
            })
        }
        None => None,
    };

    let mut overlays = Vec::new();
    for p in &a.overlays {
        let o: OverlayArtifact = artifact::read(p, "overlays")?;
        artifact::merge(&mut provenance, &o.provenance)?;
        overlays.extend(o.overlays);
    }

    let mut scene = Scene::new(ws.scene_meshes(), provenance);
    scene.disk_maps = scene_disks;
    scene.sphere = sphere;
    scene.overlays = overlays;
    if let Some(b) = bundles {
        scene.bundles = b.bundles;
        scene.graph = Some(b.graph);
    }
    scene.validate()?;
    report.time("write", || scene.write(&a.out))?;
    report.outputs.push(a.out.clone());
    report.stat("meshes", scene.meshes.len());
    report.stat("vertices", scene.total_vertices());
    report.stat("bundles", scene.bundles.len());
    report.stat("overlays", scene.overlays.len());
    Ok(())
}

/// Writes `<id>.json` meshes, `streamlines.trks` and `series.tsf`.
pub fn synth(a: &SynthArgs, report: &mut RunReport) -> Result<()> {
    ensure!(a.rings >= 2, "rings must be >= 2");
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let inputs = synthetic_inputs(a.rings, a.streamlines, a.samples, a.seed);
    let mut remove = serde_json::Map::new();
    for h in &inputs.hemispheres {
        let p = a.out.join(format!("{}.json", h.id));
        save_mesh(&h.mesh, &p, MeshFormat::Json)?;
        report.outputs.push(p);
        remove.insert(h.id.clone(), serde_json::json!(h.remove_label));
    }
    report.stat("remove_label", remove);
    if let Some(set) = &inputs.streamlines {
        let p = a.out.join("streamlines.trks");
        save_streamlines(set, &p, StreamlineFormat::Binary)?;
        report.outputs.push(p);
    }
    if let Some(ts) = &inputs.time_series {
        let p = a.out.join("series.tsf");
        write_tsf(&p, ts)?;
        report.outputs.push(p);
    }
    Ok(())
}
