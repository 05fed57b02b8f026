use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::DiskMap;
use crate::error::{Error, Result};
use crate::geom::{cross, dot, normalize, signed_area_2d, sub, Vec3};
use crate::mesh::TriMesh;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    /// ρ_f: 2D area over the 3D area rescaled to a total of π.
    pub area_ratio: Vec<f64>,
    /// K_f = σ1/σ2 of the per-face linear map.
    pub dilatation: Vec<f64>,
    pub rms_log_rho: f64,
    pub max_k: f64,
    pub mean_k: f64,
}

/// Triangle corners expressed in an orthonormal frame of the triangle's plane.
fn planar_frame(t: [Vec3; 3]) -> Option<[[f64; 2]; 2]> {
    let e1 = sub(t[1], t[0]);
    let e2 = sub(t[2], t[0]);
    let x = normalize(e1)?;
    let y = normalize(cross(cross(e1, e2), x))?;
    // columns are the two edge vectors
    Some([[dot(e1, x), dot(e2, x)], [dot(e1, y), dot(e2, y)]])
}

/// Singular values (σ1 ≥ σ2) of the affine map taking triangle `src` onto `dst`.
/// Both triangles may live in 3D; 2D triangles are passed with z = 0.
pub fn face_singular_values(src: [Vec3; 3], dst: [Vec3; 3]) -> Option<(f64, f64)> {
    let p = planar_frame(src)?;
    let q = planar_frame(dst)?;
    let det_p = p[0][0] * p[1][1] - p[0][1] * p[1][0];
    if det_p == 0.0 {
        return None;
    }
    let inv = [[p[1][1] / det_p, -p[0][1] / det_p], [-p[1][0] / det_p, p[0][0] / det_p]];
    let j = [
        [q[0][0] * inv[0][0] + q[0][1] * inv[1][0], q[0][0] * inv[0][1] + q[0][1] * inv[1][1]],
        [q[1][0] * inv[0][0] + q[1][1] * inv[1][0], q[1][0] * inv[0][1] + q[1][1] * inv[1][1]],
    ];
    // closed-form 2x2 SVD via conformal / anti-conformal parts
    let e = 0.5 * (j[0][0] + j[1][1]);
    let f = 0.5 * (j[0][0] - j[1][1]);
    let g = 0.5 * (j[1][0] + j[0][1]);
    let h = 0.5 * (j[1][0] - j[0][1]);
    let qn = e.hypot(h);
    let rn = f.hypot(g);
    Some((qn + rn, (qn - rn).abs()))
}

/// Quasi-conformal dilatation σ1/σ2 of the map `src` → `dst`.
pub fn face_dilatation(src: [Vec3; 3], dst: [Vec3; 3]) -> Option<f64> {
    let (s1, s2) = face_singular_values(src, dst)?;
    (s2 > 0.0).then(|| s1 / s2)
}

pub fn distortion_report(mesh: &TriMesh, map: &DiskMap) -> Result<DistortionReport> {
    if map.uv.len() != mesh.vertex_count() {
        return Err(Error::InvalidParameter("disk map does not match mesh".into()));
    }
    let v = mesh.vertices();
    let area3 = mesh.face_areas();
    let total3: f64 = area3.iter().sum();
    let nf = mesh.face_count();
    let mut area_ratio = Vec::with_capacity(nf);
    let mut dilatation = Vec::with_capacity(nf);
    for (fi, f) in mesh.faces().iter().enumerate() {
        let uv = f.map(|i| map.uv[i]);
        let a2 = signed_area_2d(uv[0], uv[1], uv[2]);
        if !(a2 > 0.0) {
            return Err(Error::FlippedFace { face: fi });
        }
        area_ratio.push(a2 / (area3[fi] / total3 * PI));
        let src = f.map(|i| v[i]);
        let dst = uv.map(|p| [p[0], p[1], 0.0]);
        let k = face_dilatation(src, dst).ok_or(Error::FlippedFace { face: fi })?;
        dilatation.push(k);
    }
    let rms_log_rho = (area_ratio.iter().map(|r| r.ln().powi(2)).sum::<f64>() / nf as f64).sqrt();
    let max_k = dilatation.iter().copied().fold(1.0, f64::max);
    let mean_k = dilatation.iter().sum::<f64>() / nf as f64;
    Ok(DistortionReport { area_ratio, dilatation, rms_log_rho, max_k, mean_k })
}
