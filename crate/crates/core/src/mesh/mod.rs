//! Triangle meshes of cortical hemispheres: loading, validation, labels and
//! the per-vertex / per-edge geometric quantities used by the mapping code.

mod geometry;
mod io;
mod labels;
mod topology;

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{triangle_area, Vec3};

pub use geometry::{cotangent_weights, vertex_areas, EdgeWeights, COT_CLAMP};
pub use io::{load_mesh, save_mesh, MeshFormat};
pub use labels::{attach_labels, attach_labels_from_reader, label_color, remove_region, RemovedRegion};
pub use topology::{boundary_loops, connected_components, edge_count, euler_characteristic, validate_disk_topology};

/// Identifier of a labelled surface region.
pub type RegionId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Hemisphere {
    Left,
    Right,
    #[default]
    Other,
}

impl Hemisphere {
    pub fn as_str(self) -> &'static str {
        match self {
            Hemisphere::Left => "left",
            Hemisphere::Right => "right",
            Hemisphere::Other => "other",
        }
    }
}

impl std::str::FromStr for Hemisphere {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "left" | "lh" | "l" => Ok(Hemisphere::Left),
            "right" | "rh" | "r" => Ok(Hemisphere::Right),
            "other" => Ok(Hemisphere::Other),
            _ => Err(Error::InvalidParameter(format!("unknown hemisphere '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionInfo {
    pub name: String,
    pub color: [f64; 3],
    /// Vertex-area weighted surface area of the region, derived from the mesh.
    #[serde(default)]
    pub area_mm2: f64,
}

/// Region id to display metadata. Ids are kept sorted so iteration order is stable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionTable {
    entries: BTreeMap<RegionId, RegionInfo>,
}

impl RegionTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: RegionId, info: RegionInfo) {
        self.entries.insert(id, info);
    }

    pub fn get(&self, id: RegionId) -> Option<&RegionInfo> {
        self.entries.get(&id)
    }

    pub fn contains(&self, id: RegionId) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (RegionId, &RegionInfo)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }

    pub fn ids(&self) -> impl Iterator<Item = RegionId> + '_ {
        self.entries.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub(crate) fn retain(&mut self, f: impl FnMut(&RegionId, &mut RegionInfo) -> bool) {
        self.entries.retain(f);
    }
}

/// A validated, consistently oriented triangle mesh with optional per-vertex
/// labels and named scalar channels.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    labels: Option<Vec<RegionId>>,
    regions: RegionTable,
    channels: BTreeMap<String, Vec<f64>>,
    hemisphere: Hemisphere,
}

impl TriMesh {
    /// Validates the face list and repairs winding so that neighbouring faces
    /// agree with face 0 of their connected component.
    pub fn new(vertices: Vec<Vec3>, mut faces: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.is_empty() || faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        if let Some(i) = vertices.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::Parse(format!("vertex {i} has a non-finite coordinate")));
        }
        let nv = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&v| v >= nv) {
                return Err(Error::Topology(format!(
                    "face {fi} references vertex {bad} but the mesh has {nv} vertices"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Topology(format!("face {fi} is degenerate: {f:?}")));
            }
            let area = triangle_area(vertices[f[0]], vertices[f[1]], vertices[f[2]]);
            if !(area > 0.0) {
                return Err(Error::Topology(format!("face {fi} has zero area")));
            }
        }
        orient_faces(&mut faces)?;
        Ok(Self {
            vertices,
            faces,
            labels: None,
            regions: RegionTable::new(),
            channels: BTreeMap::new(),
            hemisphere: Hemisphere::Other,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn labels(&self) -> Option<&[RegionId]> {
        self.labels.as_deref()
    }

    pub fn regions(&self) -> &RegionTable {
        &self.regions
    }

    pub fn channels(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.channels
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.get(name).map(Vec::as_slice)
    }

    pub fn hemisphere(&self) -> Hemisphere {
        self.hemisphere
    }

    pub fn with_hemisphere(mut self, hemisphere: Hemisphere) -> Self {
        self.hemisphere = hemisphere;
        self
    }

    pub fn set_hemisphere(&mut self, hemisphere: Hemisphere) {
        self.hemisphere = hemisphere;
    }

    /// Adds or replaces a named per-vertex scalar channel.
    pub fn with_channel(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.len() != self.vertices.len() {
            return Err(Error::Overlay(format!(
                "channel '{name}' has {} values for {} vertices",
                values.len(),
                self.vertices.len()
            )));
        }
        self.channels.insert(name, values);
        Ok(self)
    }

    /// Installs per-vertex labels. Every used id must be present in `regions`.
    /// Region areas are recomputed from the mesh.
    pub fn with_labels(mut self, labels: Vec<RegionId>, regions: RegionTable) -> Result<Self> {
        if labels.len() != self.vertices.len() {
            return Err(Error::Label(format!(
                "{} labels for {} vertices",
                labels.len(),
                self.vertices.len()
            )));
        }
        if let Some(missing) = labels.iter().find(|id| !regions.contains(**id)) {
            return Err(Error::Label(format!("label {missing} is not in the region table")));
        }
        self.labels = Some(labels);
        self.regions = regions;
        self.refresh_region_areas();
        Ok(self)
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        triangle_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn face_areas(&self) -> Vec<f64> {
        (0..self.faces.len()).map(|f| self.face_area(f)).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.face_areas().iter().sum()
    }

    /// Region of a face: majority label of its corners, ties to the smallest id.
    pub fn face_region(&self, f: usize) -> Option<RegionId> {
        let labels = self.labels.as_ref()?;
        let mut l = self.faces[f].map(|v| labels[v]);
        l.sort_unstable();
        if l[1] == l[2] {
            Some(l[1])
        } else {
            // either l[0]==l[1] (majority) or all distinct (smallest)
            Some(l[0])
        }
    }

    /// Vertex-area weighted area of every region that owns at least one vertex.
    pub fn region_areas(&self) -> BTreeMap<RegionId, f64> {
        let mut out = BTreeMap::new();
        if let Some(labels) = &self.labels {
            let areas = vertex_areas(self);
            for (l, a) in labels.iter().zip(areas) {
                *out.entry(*l).or_insert(0.0) += a;
            }
        }
        out
    }

    fn refresh_region_areas(&mut self) {
        let areas = self.region_areas();
        for (id, info) in self.regions.entries.iter_mut() {
            info.area_mm2 = areas.get(id).copied().unwrap_or(0.0);
        }
    }

    /// Index of the vertex nearest to `p`; ties resolve to the smallest index.
    pub fn nearest_vertex(&self, p: Vec3) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, v) in self.vertices.iter().enumerate() {
            let d = crate::geom::dist_sq(*v, p);
            if d < best.1 {
                best = (i, d);
            }
        }
        (best.0, best.1.sqrt())
    }

    /// Vertex neighbours of every vertex (sorted, deduplicated).
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nbrs = vec![Vec::new(); self.vertices.len()];
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                nbrs[a].push(b);
                nbrs[b].push(a);
            }
        }
        for n in &mut nbrs {
            n.sort_unstable();
            n.dedup();
        }
        nbrs
    }

    /// Short hex digest of the geometry and connectivity.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for p in &self.vertices {
            for c in p {
                h.update(c.to_le_bytes());
            }
        }
        for f in &self.faces {
            for &i in f {
                h.update((i as u64).to_le_bytes());
            }
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Vertices not referenced by any face.
    pub fn isolated_vertices(&self) -> Vec<usize> {
        let mut used = vec![false; self.vertices.len()];
        for f in &self.faces {
            for &v in f {
                used[v] = true;
            }
        }
        used.iter().enumerate().filter(|(_, u)| !**u).map(|(i, _)| i).collect()
    }

    pub(crate) fn from_parts(
        vertices: Vec<Vec3>,
        faces: Vec<[usize; 3]>,
        labels: Option<Vec<RegionId>>,
        regions: RegionTable,
        channels: BTreeMap<String, Vec<f64>>,
        hemisphere: Hemisphere,
    ) -> Result<Self> {
        let mut mesh = TriMesh::new(vertices, faces)?;
        mesh.channels = channels;
        mesh.hemisphere = hemisphere;
        match labels {
            Some(labels) => mesh.with_labels(labels, regions),
            None => {
                mesh.regions = regions;
                Ok(mesh)
            }
        }
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Breadth-first winding repair: each component takes the winding of its
/// lowest-index face.
fn orient_faces(faces: &mut [[usize; 3]]) -> Result<()> {
    let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::with_capacity(faces.len() * 2);
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            edge_faces.entry(edge_key(f[k], f[(k + 1) % 3])).or_default().push(fi);
        }
    }
    if let Some(((a, b), fs)) = edge_faces
        .iter()
        .filter(|(_, fs)| fs.len() > 2)
        .min_by_key(|(k, _)| **k)
    {
        return Err(Error::NonManifoldEdge(*a, *b, fs.len()));
    }

    let has_directed = |f: &[usize; 3], a: usize, b: usize| (0..3).any(|k| f[k] == a && f[(k + 1) % 3] == b);

    let mut visited = vec![false; faces.len()];
    let mut queue = VecDeque::new();
    for seed in 0..faces.len() {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        queue.push_back(seed);
        while let Some(fi) = queue.pop_front() {
            let f = faces[fi];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                for &g in &edge_faces[&edge_key(a, b)] {
                    if g == fi {
                        continue;
                    }
                    // a consistent neighbour traverses the shared edge as b -> a
                    let consistent = !has_directed(&faces[g], a, b);
                    if visited[g] {
                        if !consistent {
                            return Err(Error::Topology(format!(
                                "mesh is not orientable (faces {fi} and {g} disagree on edge ({a}, {b}))"
                            )));
                        }
                    } else {
                        if !consistent {
                            faces[g].swap(1, 2);
                        }
                        visited[g] = true;
                        queue.push_back(g);
                    }
                }
            }
        }
    }
    Ok(())
}
