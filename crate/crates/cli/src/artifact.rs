//! Intermediate files passed between subcommands. Each carries the
//! provenance accumulated so far so that `export` can merge it.

use std::path::Path;

use anyhow::{bail, Context};
use cortex_atlas::connect::{ConnectivityGraph, GraphReport, OverlayField};
use cortex_atlas::geom::Vec2;
use cortex_atlas::param::DiskMap;
use cortex_atlas::scene::{sha256_hex, DistortionSummary, Provenance};
use cortex_atlas::sphere::{ExplodedScene, SphereMap};
use cortex_atlas::tract::{Bundle, Cluster};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const ARTIFACT_VERSION: u32 = 1;

/// Readable as a plain disk map document (`version`, `uv`, `boundary`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiskMapArtifact {
    pub version: u32,
    pub kind: String,
    pub mesh: String,
    pub uv: Vec<Vec2>,
    pub boundary: Vec<usize>,
    pub distortion: DistortionSummary,
    pub harmonic_uv: Vec<Vec2>,
    pub harmonic_distortion: DistortionSummary,
    pub source_vertex_count: usize,
    pub source_index: Option<Vec<usize>>,
    pub provenance: Provenance,
}

impl DiskMapArtifact {
    pub fn disk_map(&self) -> anyhow::Result<DiskMap> {
        let doc = serde_json::json!({ "version": self.version, "uv": self.uv, "boundary": self.boundary });
        Ok(DiskMap::from_json(&doc.to_string(), self.mesh.clone())?)
    }

    pub fn harmonic_map(&self) -> DiskMap {
        DiskMap { uv: self.harmonic_uv.clone(), ..self.disk_map().expect("validated on load") }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphereArtifact {
    pub version: u32,
    pub kind: String,
    pub meshes: Vec<String>,
    pub sphere: SphereMap,
    pub exploded: Vec<ExplodedScene>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterArtifact {
    pub version: u32,
    pub kind: String,
    pub theta: f64,
    pub k: usize,
    pub streamline_count: usize,
    pub streamlines_sha256: String,
    pub clusters: Vec<Cluster>,
    pub skipped: Vec<usize>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleArtifact {
    pub version: u32,
    pub kind: String,
    pub meshes: Vec<String>,
    pub bundles: Vec<Bundle>,
    pub graph: ConnectivityGraph,
    pub graph_report: GraphReport,
    pub skipped: Vec<usize>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlayArtifact {
    pub version: u32,
    pub kind: String,
    pub overlays: Vec<OverlayField>,
    pub provenance: Provenance,
}

#[derive(Deserialize)]
struct Header {
    version: u32,
    kind: Option<String>,
}

pub fn read<T: DeserializeOwned>(path: &Path, kind: &str) -> anyhow::Result<T> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let h: Header = serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))?;
    if h.kind.as_deref() != Some(kind) {
        bail!("{} is not a {kind} artifact (kind {:?})", path.display(), h.kind);
    }
    if h.version != ARTIFACT_VERSION {
        bail!("{}: unsupported artifact version {}", path.display(), h.version);
    }
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

/// Artifacts keep full float precision; only the scene is rounded.
pub fn write<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let bytes = serde_json::to_vec(value)?;
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn digest_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

/// Union of inputs and parameters; a key recorded twice must agree.
pub fn merge(into: &mut Provenance, from: &Provenance) -> anyhow::Result<()> {
    for (k, v) in &from.inputs {
        if let Some(old) = into.inputs.insert(k.clone(), v.clone()) {
            if &old != v {
                bail!("input '{k}' recorded with two different digests");
            }
        }
    }
    for (k, v) in &from.parameters {
        if let Some(old) = into.parameters.insert(k.clone(), v.clone()) {
            if &old != v {
                bail!("parameter '{k}' recorded with two different values");
            }
        }
    }
    Ok(())
}
