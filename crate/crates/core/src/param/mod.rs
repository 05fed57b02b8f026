//! Disk parameterization of disk-topology meshes: a cotangent harmonic map
//! for the angle stage, an area-correcting relaxation on top of it, distortion
//! metrics, and point sampling back onto the 3D surface.

mod area;
mod distortion;
mod sample;
pub mod solver;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{dist, signed_area_2d, Vec2};
use crate::mesh::{boundary_loops, cotangent_weights, validate_disk_topology, TriMesh};

pub use area::{area_correct, area_correct_traced, area_energy, AreaCorrectConfig, AreaCorrectTrace, Preconditioner};
pub use distortion::{distortion_report, face_dilatation, DistortionReport};
pub use sample::{sample_back, DiskLocator, SamplePoint};
use solver::{pcg, InteriorSystem};

/// Relative residual targeted by the interior solve; tighter than the 1e-10 contract.
pub const SOLVE_TOLERANCE: f64 = 1e-12;
pub const DISK_MAP_JSON_VERSION: u32 = 1;

/// Per-vertex coordinates in the closed unit disk.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskMap {
    pub uv: Vec<Vec2>,
    /// Boundary loop in traversal order (surface to the left).
    pub boundary: Vec<usize>,
    /// Angle in [0, 2π) of each entry of `boundary`.
    pub boundary_param: Vec<f64>,
    pub source_mesh_id: String,
}

#[derive(Serialize, Deserialize)]
struct DiskMapDocument {
    version: u32,
    uv: Vec<Vec2>,
    boundary: Vec<usize>,
}

impl DiskMap {
    pub fn vertex_count(&self) -> usize {
        self.uv.len()
    }

    pub fn signed_areas(&self, mesh: &TriMesh) -> Vec<f64> {
        mesh.faces()
            .iter()
            .map(|f| signed_area_2d(self.uv[f[0]], self.uv[f[1]], self.uv[f[2]]))
            .collect()
    }

    pub fn flipped_faces(&self, mesh: &TriMesh) -> Vec<usize> {
        self.signed_areas(mesh)
            .iter()
            .enumerate()
            .filter(|(_, a)| !(**a > 0.0))
            .map(|(i, _)| i)
            .collect()
    }

    /// Checks the disk invariants: boundary on the unit circle, interior
    /// strictly inside, no flipped faces.
    pub fn validate(&self, mesh: &TriMesh) -> Result<()> {
        if self.uv.len() != mesh.vertex_count() {
            return Err(Error::InvalidParameter(format!(
                "disk map has {} coordinates for {} vertices",
                self.uv.len(),
                mesh.vertex_count()
            )));
        }
        let mut on_boundary = vec![false; self.uv.len()];
        for &b in &self.boundary {
            on_boundary[b] = true;
            let r = self.uv[b][0].hypot(self.uv[b][1]);
            if (r - 1.0).abs() > 1e-9 {
                return Err(Error::Topology(format!("boundary vertex {b} at radius {r}")));
            }
        }
        for (v, uv) in self.uv.iter().enumerate() {
            if !on_boundary[v] && uv[0].hypot(uv[1]) >= 1.0 {
                return Err(Error::Topology(format!("interior vertex {v} is not inside the unit disk")));
            }
        }
        if let Some(&f) = self.flipped_faces(mesh).first() {
            return Err(Error::FlippedFace { face: f });
        }
        Ok(())
    }

    /// Standalone `{version, uv, boundary}` document.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&DiskMapDocument {
            version: DISK_MAP_JSON_VERSION,
            uv: self.uv.clone(),
            boundary: self.boundary.clone(),
        })?)
    }

    pub fn from_json(text: &str, source_mesh_id: impl Into<String>) -> Result<Self> {
        let doc: DiskMapDocument = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if doc.version != DISK_MAP_JSON_VERSION {
            return Err(Error::Parse(format!("unsupported disk map version {}", doc.version)));
        }
        if let Some(&b) = doc.boundary.iter().find(|&&b| b >= doc.uv.len()) {
            return Err(Error::Parse(format!("boundary vertex {b} out of range")));
        }
        let boundary_param = doc
            .boundary
            .iter()
            .map(|&b| doc.uv[b][1].atan2(doc.uv[b][0]).rem_euclid(2.0 * PI))
            .collect();
        Ok(Self { uv: doc.uv, boundary: doc.boundary, boundary_param, source_mesh_id: source_mesh_id.into() })
    }
}

/// Boundary angles proportional to cumulative 3D arc length, first vertex at 0.
fn arc_length_angles(mesh: &TriMesh, lp: &[usize]) -> Vec<f64> {
    let v = mesh.vertices();
    let n = lp.len();
    let seg: Vec<f64> = (0..n).map(|i| dist(v[lp[i]], v[lp[(i + 1) % n]])).collect();
    let total: f64 = seg.iter().sum();
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(n);
    for s in &seg {
        out.push(2.0 * PI * acc / total);
        acc += s;
    }
    out
}

/// Harmonic (cotangent-weighted) map onto the unit disk with the boundary
/// pinned to the circle by arc length.
pub fn harmonic_disk_map(mesh: &TriMesh) -> Result<DiskMap> {
    if let Some(&v) = mesh.isolated_vertices().first() {
        return Err(Error::SingularSystem { vertex: v });
    }
    validate_disk_topology(mesh)?;
    let lp = boundary_loops(mesh).swap_remove(0);
    let angles = arc_length_angles(mesh, &lp);

    let n = mesh.vertex_count();
    let mut uv = vec![[0.0, 0.0]; n];
    let mut fixed = vec![false; n];
    for (&b, &t) in lp.iter().zip(&angles) {
        uv[b] = [t.cos(), t.sin()];
        fixed[b] = true;
    }

    let weights = cotangent_weights(mesh);
    let system = InteriorSystem::new(n, &weights, &fixed)?;
    if !system.is_empty() {
        let m = system.len();
        let max_iter = 20 * m + 100;
        for axis in 0..2 {
            let rhs: Vec<f64> = system
                .fixed_couplings
                .iter()
                .map(|c| c.iter().map(|&(j, w)| w * uv[j][axis]).sum())
                .collect();
            let mut x = vec![0.0; m];
            let stats = pcg(&system.matrix, &rhs, &mut x, SOLVE_TOLERANCE, max_iter)?;
            log::debug!("harmonic solve axis {axis}: {} iterations, residual {:e}", stats.iterations, stats.relative_residual);
            if stats.relative_residual > 1e-10 {
                return Err(Error::NoConvergence { residual: stats.relative_residual, iterations: stats.iterations });
            }
            for (r, &v) in system.vertex_of.iter().enumerate() {
                uv[v][axis] = x[r];
            }
        }
    }
    Ok(DiskMap { uv, boundary: lp, boundary_param: angles, source_mesh_id: mesh.fingerprint() })
}

/// Largest per-vertex mean-value residual ‖Σ w_ij (uv_j − uv_i)‖ / Σ w_ij over interior vertices.
pub fn mean_value_residual(mesh: &TriMesh, map: &DiskMap) -> f64 {
    let weights = cotangent_weights(mesh);
    let n = mesh.vertex_count();
    let mut acc = vec![[0.0f64; 2]; n];
    let mut wsum = vec![0.0f64; n];
    for ((i, j), w) in weights.iter() {
        for (a, b) in [(i, j), (j, i)] {
            acc[a][0] += w * (map.uv[b][0] - map.uv[a][0]);
            acc[a][1] += w * (map.uv[b][1] - map.uv[a][1]);
            wsum[a] += w;
        }
    }
    let mut on_boundary = vec![false; n];
    for &b in &map.boundary {
        on_boundary[b] = true;
    }
    (0..n)
        .filter(|&v| !on_boundary[v])
        .map(|v| acc[v][0].hypot(acc[v][1]) / wsum[v].abs())
        .fold(0.0, f64::max)
}
