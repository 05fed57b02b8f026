use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::solver::{pcg_partial, InteriorSystem};
use super::DiskMap;
use crate::error::{Error, Result};
use crate::geom::{signed_area_2d, Vec2};
use crate::mesh::{cotangent_weights, TriMesh};

/// Relative residual of the inner Laplacian solve for the descent direction.
const DIRECTION_TOLERANCE: f64 = 1e-3;
/// Cap on inner iterations; the solve is warm-started from the previous direction.
const DIRECTION_MAX_ITERS: usize = 30;

/// Descent direction used by the area relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    /// Plain Euclidean gradient.
    None,
    /// Gradient smoothed by the interior cotangent Laplacian (H¹ gradient).
    #[default]
    Laplacian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaCorrectConfig {
    pub max_iters: usize,
    /// Initial step, in units of the area-normalised energy.
    pub step: f64,
    /// Stop once an accepted iteration improves E by a relative amount below this.
    pub tol: f64,
    #[serde(default)]
    pub preconditioner: Preconditioner,
}

impl Default for AreaCorrectConfig {
    fn default() -> Self {
        Self { max_iters: 500, step: 0.1, tol: 1e-7, preconditioner: Preconditioner::Laplacian }
    }
}

#[derive(Debug, Clone)]
pub struct AreaCorrectTrace {
    pub map: DiskMap,
    /// E before the first iteration and after every accepted one.
    pub energies: Vec<f64>,
    /// RMS(log ρ) alongside `energies`.
    pub rms_log_rho: Vec<f64>,
    pub iterations: usize,
    pub rejected: usize,
}

struct AreaModel {
    faces: Vec<[usize; 3]>,
    area3: Vec<f64>,
    /// per-face target 2D area, 3D area rescaled to total π
    target: Vec<f64>,
    total3: f64,
}

impl AreaModel {
    fn new(mesh: &TriMesh) -> Self {
        let area3 = mesh.face_areas();
        let total3: f64 = area3.iter().sum();
        let target = area3.iter().map(|a| a / total3 * PI).collect();
        Self { faces: mesh.faces().to_vec(), area3, target, total3 }
    }

    /// (E, RMS(log ρ)) or None when a face is flipped or degenerate.
    fn evaluate(&self, uv: &[Vec2]) -> Option<(f64, f64)> {
        let mut e = 0.0;
        let mut log_sq = 0.0;
        for (f, tri) in self.faces.iter().enumerate() {
            let a2 = signed_area_2d(uv[tri[0]], uv[tri[1]], uv[tri[2]]);
            if !(a2 > 0.0) {
                return None;
            }
            let rho = a2 / self.target[f];
            e += (rho - 1.0) * (rho - 1.0) * self.area3[f];
            log_sq += rho.ln().powi(2);
        }
        Some((e, (log_sq / self.faces.len() as f64).sqrt()))
    }

    /// Gradient of E / Σ area3 with respect to every uv coordinate.
    fn gradient(&self, uv: &[Vec2], out: &mut [Vec2]) {
        out.iter_mut().for_each(|g| *g = [0.0, 0.0]);
        for (f, tri) in self.faces.iter().enumerate() {
            let [a, b, c] = tri.map(|i| uv[i]);
            let rho = signed_area_2d(a, b, c) / self.target[f];
            let coef = 2.0 * (rho - 1.0) * self.area3[f] / (self.target[f] * self.total3);
            for k in 0..3 {
                let p = uv[tri[(k + 1) % 3]];
                let q = uv[tri[(k + 2) % 3]];
                let g = &mut out[tri[k]];
                g[0] += coef * 0.5 * (p[1] - q[1]);
                g[1] += coef * 0.5 * (q[0] - p[0]);
            }
        }
    }
}

/// E = Σ_f (ρ_f − 1)² · area3D_f for a map of `mesh`.
pub fn area_energy(mesh: &TriMesh, map: &DiskMap) -> Result<f64> {
    let model = AreaModel::new(mesh);
    model
        .evaluate(&map.uv)
        .map(|(e, _)| e)
        .ok_or_else(|| Error::FlippedFace { face: map.flipped_faces(mesh)[0] })
}

pub fn area_correct(map: &DiskMap, mesh: &TriMesh, cfg: &AreaCorrectConfig) -> Result<DiskMap> {
    area_correct_traced(map, mesh, cfg).map(|t| t.map)
}

/// Moves interior vertices downhill on the area energy with the boundary
/// pinned. A step is accepted only if every face stays positively oriented and
/// neither E nor RMS(log ρ) increases; otherwise the step is halved.
pub fn area_correct_traced(map: &DiskMap, mesh: &TriMesh, cfg: &AreaCorrectConfig) -> Result<AreaCorrectTrace> {
    if !(cfg.step > 0.0) || !(cfg.tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("area correction step {} / tol {}", cfg.step, cfg.tol)));
    }
    if map.uv.len() != mesh.vertex_count() {
        return Err(Error::InvalidParameter("disk map does not match mesh".into()));
    }
    if let Some(&face) = map.flipped_faces(mesh).first() {
        return Err(Error::FlippedFace { face });
    }
    let model = AreaModel::new(mesh);
    let (mut energy, mut rms) = model.evaluate(&map.uv).expect("fold-free input");
    let mut trace = AreaCorrectTrace {
        map: map.clone(),
        energies: vec![energy],
        rms_log_rho: vec![rms],
        iterations: 0,
        rejected: 0,
    };
    let n = mesh.vertex_count();
    let mut fixed = vec![false; n];
    for &b in &map.boundary {
        fixed[b] = true;
    }
    let system = match cfg.preconditioner {
        Preconditioner::Laplacian => Some(InteriorSystem::new(n, &cotangent_weights(mesh), &fixed)?),
        Preconditioner::None => None,
    };
    let interior: Vec<usize> = (0..n).filter(|&v| !fixed[v]).collect();
    if interior.is_empty() {
        return Ok(trace);
    }

    let mut uv = map.uv.clone();
    let mut trial = uv.clone();
    let mut grad = vec![[0.0; 2]; n];
    let mut dir = vec![[0.0; 2]; n];
    let mut warm = [vec![0.0; interior.len()], vec![0.0; interior.len()]];
    let mut step = cfg.step;
    let mut fresh = true;

    while trace.iterations < cfg.max_iters && energy > 0.0 {
        trace.iterations += 1;
        if fresh {
            model.gradient(&uv, &mut grad);
            match &system {
                Some(sys) => {
                    for axis in 0..2 {
                        let rhs: Vec<f64> = sys.vertex_of.iter().map(|&v| grad[v][axis]).collect();
                        let x = &mut warm[axis];
                        pcg_partial(&sys.matrix, &rhs, x, DIRECTION_TOLERANCE, DIRECTION_MAX_ITERS)?;
                        for (r, &v) in sys.vertex_of.iter().enumerate() {
                            dir[v][axis] = x[r];
                        }
                    }
                }
                None => dir.copy_from_slice(&grad),
            }
            fresh = false;
        }
        for &v in &interior {
            trial[v] = [uv[v][0] - step * dir[v][0], uv[v][1] - step * dir[v][1]];
        }
        match model.evaluate(&trial) {
            Some((e, r)) if e <= energy && r <= rms => {
                let rel = (energy - e) / energy;
                std::mem::swap(&mut uv, &mut trial);
                trial.copy_from_slice(&uv);
                energy = e;
                rms = r;
                trace.energies.push(e);
                trace.rms_log_rho.push(r);
                fresh = true;
                step = (step * 1.5).min(cfg.step);
                if rel < cfg.tol {
                    break;
                }
            }
            _ => {
                trace.rejected += 1;
                step *= 0.5;
                if step < 1e-16 {
                    break;
                }
            }
        }
    }
    trace.map = DiskMap { uv, ..map.clone() };
    Ok(trace)
}
