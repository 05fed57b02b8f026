//! The exported scene document and its deterministic JSON encoding.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::connect::{ConnectivityGraph, OverlayField, TimeSeriesField};
use crate::error::{Error, Result};
use crate::geom::{Vec2, Vec3};
use crate::mesh::{Hemisphere, RegionId, RegionTable, TriMesh};
use crate::param::DistortionReport;
use crate::sphere::{ExplodedScene, SeamAlignment, SeamPair, SphereSide};
use crate::tract::Bundle;

pub const SCENE_VERSION: u32 = 1;
pub const SIGNIFICANT_DIGITS: usize = 9;

/// The JSON Schema shipped with the crate, matching [`SCENE_VERSION`].
pub const SCENE_SCHEMA: &str = include_str!("../../../schema/scene.v1.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMesh {
    pub id: String,
    pub hemisphere: Hemisphere,
    /// Short content hash of the geometry, see [`TriMesh::fingerprint`].
    pub fingerprint: String,
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub labels: Option<Vec<RegionId>>,
    pub regions: RegionTable,
    /// Vertex count of the mesh as loaded, before any region removal.
    pub source_vertex_count: usize,
    /// Index into the loaded mesh for every vertex; `None` when unchanged.
    pub source_index: Option<Vec<usize>>,
}

impl SceneMesh {
    pub fn from_mesh(id: impl Into<String>, mesh: &TriMesh) -> Self {
        SceneMesh {
            id: id.into(),
            hemisphere: mesh.hemisphere(),
            fingerprint: mesh.fingerprint(),
            vertices: mesh.vertices().to_vec(),
            faces: mesh.faces().to_vec(),
            labels: mesh.labels().map(|l| l.to_vec()),
            regions: mesh.regions().clone(),
            source_vertex_count: mesh.vertex_count(),
            source_index: None,
        }
    }

    /// Records the old-to-new vertex map of a region removal.
    pub fn with_vertex_map(mut self, vertex_map: &[Option<usize>]) -> Self {
        let mut index = vec![0; self.vertices.len()];
        for (old, new) in vertex_map.iter().enumerate() {
            if let Some(n) = new {
                index[*n] = old;
            }
        }
        self.source_vertex_count = vertex_map.len();
        self.source_index = Some(index);
        self
    }

    fn source_of(&self, v: usize) -> usize {
        self.source_index.as_ref().map_or(v, |s| s[v])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapStage {
    Harmonic,
    AreaCorrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionSummary {
    pub rms_log_rho: f64,
    pub max_k: f64,
    pub mean_k: f64,
    pub flipped_faces: usize,
}

impl DistortionSummary {
    pub fn new(report: &DistortionReport, flipped_faces: usize) -> Self {
        DistortionSummary { rms_log_rho: report.rms_log_rho, max_k: report.max_k, mean_k: report.mean_k, flipped_faces }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDiskMap {
    pub mesh: String,
    pub stage: MapStage,
    pub uv: Vec<Vec2>,
    pub boundary: Vec<usize>,
    pub distortion: DistortionSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSphere {
    /// Meshes whose vertices `xyz` lists, concatenated in order.
    pub meshes: Vec<String>,
    pub xyz: Vec<Vec3>,
    pub side: Vec<SphereSide>,
    pub radius: f64,
    pub alignment: Option<SeamAlignment>,
    pub seam: Vec<SeamPair>,
    pub exploded: Vec<ExplodedScene>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub tool_version: String,
    /// Input name to hex SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    /// Every parameter that affects the output, keyed by flag name.
    pub parameters: BTreeMap<String, serde_json::Value>,
}

impl Provenance {
    pub fn new() -> Self {
        Provenance {
            tool: "cortex-atlas".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            inputs: BTreeMap::new(),
            parameters: BTreeMap::new(),
        }
    }

    pub fn add_input_bytes(&mut self, name: impl Into<String>, bytes: &[u8]) {
        self.inputs.insert(name.into(), sha256_hex(bytes));
    }

    pub fn add_input_file(&mut self, name: impl Into<String>, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        self.add_input_bytes(name, &bytes);
        Ok(())
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("parameters serialize to JSON");
        self.parameters.insert(key.into(), v);
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub version: u32,
    pub meshes: Vec<SceneMesh>,
    pub disk_maps: Vec<SceneDiskMap>,
    pub sphere: Option<SceneSphere>,
    pub overlays: Vec<OverlayField>,
    pub bundles: Vec<Bundle>,
    pub graph: Option<ConnectivityGraph>,
    pub provenance: Provenance,
}

impl Scene {
    pub fn new(meshes: Vec<SceneMesh>, provenance: Provenance) -> Self {
        Scene {
            version: SCENE_VERSION,
            meshes,
            disk_maps: Vec::new(),
            sphere: None,
            overlays: Vec::new(),
            bundles: Vec::new(),
            graph: None,
            provenance,
        }
    }

    pub fn mesh(&self, id: &str) -> Option<&SceneMesh> {
        self.meshes.iter().find(|m| m.id == id)
    }

    pub fn total_vertices(&self) -> usize {
        self.meshes.iter().map(|m| m.vertices.len()).sum()
    }

    /// Region ids across all meshes with their colors and names.
    pub fn regions(&self) -> BTreeMap<RegionId, &crate::mesh::RegionInfo> {
        self.meshes.iter().flat_map(|m| m.regions.iter()).collect()
    }

    /// Labels of all meshes concatenated; unlabeled meshes are an error.
    pub fn concatenated_labels(&self) -> Result<Vec<RegionId>> {
        let mut out = Vec::with_capacity(self.total_vertices());
        for m in &self.meshes {
            let l = m.labels.as_ref().ok_or_else(|| Error::Scene(format!("mesh '{}' has no labels", m.id)))?;
            out.extend_from_slice(l);
        }
        Ok(out)
    }

    /// Rows of `ts` for the scene vertices. `ts` may cover either the meshes
    /// as loaded (rows are picked through `source_index`) or the scene meshes.
    pub fn restrict_time_series(&self, ts: &TimeSeriesField) -> Result<TimeSeriesField> {
        let loaded: usize = self.meshes.iter().map(|m| m.source_vertex_count).sum();
        let total = self.total_vertices();
        if ts.vertex_count() == loaded && loaded != total {
            let mut rows = Vec::with_capacity(total * ts.sample_count());
            let mut base = 0;
            for m in &self.meshes {
                for v in 0..m.vertices.len() {
                    rows.extend_from_slice(ts.series(base + m.source_of(v)));
                }
                base += m.source_vertex_count;
            }
            TimeSeriesField::from_flat(total, ts.sample_count(), rows)
        } else if ts.vertex_count() == total {
            Ok(ts.clone())
        } else {
            Err(Error::TimeSeries(format!(
                "time series has {} vertices; the scene meshes have {total} ({loaded} as loaded)",
                ts.vertex_count()
            )))
        }
    }

    /// Bundles whose region pair is {a, b}, in scene order.
    pub fn bundles_between(&self, a: RegionId, b: RegionId) -> Vec<&Bundle> {
        let key = (a.min(b), a.max(b));
        self.bundles.iter().filter(|x| x.regions == Some(key)).collect()
    }

    /// Checks every internal cross-reference.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Scene(msg));
        if self.version != SCENE_VERSION {
            return bad(format!("unsupported scene version {}", self.version));
        }
        let mut ids = BTreeSet::new();
        let mut regions = BTreeSet::new();
        for m in &self.meshes {
            if !ids.insert(m.id.as_str()) {
                return bad(format!("duplicate mesh id '{}'", m.id));
            }
            let n = m.vertices.len();
            if let Some(src) = &m.source_index {
                if src.len() != n || src.iter().any(|&i| i >= m.source_vertex_count) {
                    return bad(format!("mesh '{}' has an inconsistent source index", m.id));
                }
            }
            if let Some(f) = m.faces.iter().position(|f| f.iter().any(|&v| v >= n)) {
                return bad(format!("mesh '{}' face {f} references a missing vertex", m.id));
            }
            if let Some(l) = &m.labels {
                if l.len() != n {
                    return bad(format!("mesh '{}' has {} labels for {n} vertices", m.id, l.len()));
                }
                if let Some(x) = l.iter().find(|x| !m.regions.contains(**x)) {
                    return bad(format!("mesh '{}' label {x} is not in its region table", m.id));
                }
            }
            for id in m.regions.ids() {
                if !regions.insert(id) {
                    return bad(format!("region {id} appears in more than one mesh"));
                }
            }
        }
        for d in &self.disk_maps {
            let Some(m) = self.mesh(&d.mesh) else {
                return bad(format!("disk map references unknown mesh '{}'", d.mesh));
            };
            if d.uv.len() != m.vertices.len() {
                return bad(format!("disk map for '{}' has {} points for {} vertices", d.mesh, d.uv.len(), m.vertices.len()));
            }
            if d.boundary.iter().any(|&v| v >= m.vertices.len()) {
                return bad(format!("disk map for '{}' has an out-of-range boundary vertex", d.mesh));
            }
        }
        let span = |names: &[String], what: &str| -> Result<usize> {
            let mut total = 0;
            for n in names {
                total += self
                    .mesh(n)
                    .ok_or_else(|| Error::Scene(format!("{what} references unknown mesh '{n}'")))?
                    .vertices
                    .len();
            }
            Ok(total)
        };
        if let Some(s) = &self.sphere {
            let n = span(&s.meshes, "sphere")?;
            if s.xyz.len() != n || s.side.len() != n {
                return bad(format!("sphere has {} points for {n} vertices", s.xyz.len()));
            }
            for e in &s.exploded {
                if e.positions.len() != n {
                    return bad(format!("exploded view s={} has {} positions for {n} vertices", e.scale, e.positions.len()));
                }
                if let Some(r) = e.offsets.keys().find(|r| !regions.contains(r)) {
                    return bad(format!("exploded view s={} offsets unknown region {r}", e.scale));
                }
            }
        }
        for o in &self.overlays {
            let n = span(&o.meshes, &format!("overlay '{}'", o.name))?;
            if o.values.len() != n {
                return bad(format!("overlay '{}' has {} values for {n} vertices", o.name, o.values.len()));
            }
        }
        let total = self.total_vertices();
        for (i, b) in self.bundles.iter().enumerate() {
            if let Some((x, y)) = b.regions {
                if let Some(r) = [x, y].into_iter().find(|r| !regions.contains(r)) {
                    return bad(format!("bundle {i} references unknown region {r}"));
                }
            }
            if b.endpoints.iter().any(|e| e.vertex >= total || e.mesh >= self.meshes.len()) {
                return bad(format!("bundle {i} endpoint references a missing vertex"));
            }
            if !(b.width > 0.0) {
                return bad(format!("bundle {i} has non-positive width"));
            }
        }
        if let Some(g) = &self.graph {
            if let Some(r) = g.nodes.keys().find(|r| !regions.contains(r)) {
                return bad(format!("graph node {r} is not a scene region"));
            }
            for e in &g.edges {
                if !g.nodes.contains_key(&e.region_a) || !g.nodes.contains_key(&e.region_b) {
                    return bad(format!("graph edge ({}, {}) references a missing node", e.region_a, e.region_b));
                }
            }
        }
        Ok(())
    }

    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        to_json_bytes(self)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let bytes = self.to_json_bytes()?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Self> {
        let scene: Scene = serde_json::from_slice(bytes)?;
        if scene.version != SCENE_VERSION {
            return Err(Error::Scene(format!("unsupported scene version {}", scene.version)));
        }
        Ok(scene)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_slice(&bytes)
    }
}

/// Compact JSON with floats rounded to [`SIGNIFICANT_DIGITS`] significant digits.
#[derive(Debug, Clone, Copy, Default)]
pub struct RoundingFormatter;

pub fn round_significant(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

impl serde_json::ser::Formatter for RoundingFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        let mut buf = ryu::Buffer::new();
        writer.write_all(buf.format_finite(round_significant(value)).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// The one serializer used for every exported or served JSON document.
pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, RoundingFormatter);
    value.serialize(&mut ser)?;
    Ok(out)
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(String::from_utf8(to_json_bytes(value)?).expect("serde_json emits utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn rounding_keeps_nine_digits() {
        assert_eq!(to_json_string(&[1.0f64 / 3.0]).unwrap(), "[0.333333333]");
        assert_eq!(to_json_string(&[123456789012.0f64]).unwrap(), "[123456789000.0]");
        assert_eq!(to_json_string(&[-0.0f64, 1e-300, 2.5]).unwrap(), "[0.0,1e-300,2.5]");
        assert_eq!(to_json_string(&[f64::NAN]).unwrap(), "[null]");
        assert_eq!(round_significant(0.1 + 0.2), 0.3);
    }

    #[test]
    fn rounding_is_idempotent() {
        for x in [std::f64::consts::PI, -1.0e-7 / 3.0, 6.02214076e23, 0.999999999949] {
            let once = round_significant(x);
            assert_eq!(round_significant(once), once);
        }
    }

    #[test]
    fn mesh_only_scene_round_trips_bytes() {
        let m = fixtures::synthetic_hemisphere(5, Hemisphere::Left);
        let mut p = Provenance::new();
        p.add_input_bytes("lh.mesh", b"abc");
        p.set("theta", 10.0);
        let s = Scene::new(vec![SceneMesh::from_mesh("lh", &m)], p);
        s.validate().unwrap();
        let a = s.to_json_bytes().unwrap();
        let back = Scene::from_json_slice(&a).unwrap();
        assert_eq!(back.to_json_bytes().unwrap(), a);
        assert_eq!(
            back.provenance.inputs["lh.mesh"],
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn validate_catches_dangling_references() {
        let m = fixtures::synthetic_hemisphere(4, Hemisphere::Left);
        let mut s = Scene::new(vec![SceneMesh::from_mesh("lh", &m)], Provenance::new());
        let mut o = OverlayField::new("x", vec![0.0; 3], None, crate::connect::Colormap::Grayscale).unwrap();
        o.meshes = vec!["rh".into()];
        s.overlays.push(o.clone());
        assert!(s.validate().is_err());
        o.meshes = vec!["lh".into()];
        s.overlays = vec![o];
        assert!(s.validate().unwrap_err().to_string().contains("3 values"));
        s.overlays.clear();
        s.version = 2;
        assert!(s.validate().is_err());
    }
}
