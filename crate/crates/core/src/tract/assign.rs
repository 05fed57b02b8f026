use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::StreamlineSet;
use crate::error::{Error, Result};
use crate::geom::{dist_sq, Vec3};
use crate::mesh::{RegionId, TriMesh};

pub const DEFAULT_DMAX_MM: f64 = 4.0;

/// Distances closer than this are treated as ties.
const TIE_EPS: f64 = 1e-12;
const MAX_CELLS_PER_AXIS: usize = 256;

/// Uniform grid over a point cloud for exact nearest-point queries.
/// Point indices are positions in the input slice.
#[derive(Debug, Clone)]
pub struct VertexIndex {
    points: Vec<Vec3>,
    origin: Vec3,
    cell: f64,
    dims: [usize; 3],
    starts: Vec<usize>,
    items: Vec<usize>,
}

impl VertexIndex {
    pub fn new(points: Vec<Vec3>) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &points {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        if points.is_empty() {
            lo = [0.0; 3];
            hi = [0.0; 3];
        }
        let ext: Vec<f64> = (0..3).map(|a| hi[a] - lo[a]).collect();
        let longest = ext.iter().cloned().fold(0.0, f64::max).max(1e-9);
        // about two points per cell on a surface-like cloud
        let mut cell = (ext.iter().map(|e| e.max(longest * 1e-3)).product::<f64>() * 2.0 / points.len().max(1) as f64).cbrt();
        cell = cell.max(longest / MAX_CELLS_PER_AXIS as f64);
        let dims = [0, 1, 2].map(|a| ((ext[a] / cell).floor() as usize + 1).min(MAX_CELLS_PER_AXIS));
        let mut index = VertexIndex { points, origin: lo, cell, dims, starts: Vec::new(), items: Vec::new() };
        let ncell = dims[0] * dims[1] * dims[2];
        let mut counts = vec![0usize; ncell + 1];
        let keys: Vec<usize> = index.points.iter().map(|p| index.flat(index.cell_of(*p))).collect();
        for &k in &keys {
            counts[k + 1] += 1;
        }
        for i in 0..ncell {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut items = vec![0usize; keys.len()];
        for (i, &k) in keys.iter().enumerate() {
            items[fill[k]] = i;
            fill[k] += 1;
        }
        index.starts = counts;
        index.items = items;
        index
    }

    /// Concatenates the vertices of several meshes in order.
    pub fn from_meshes(meshes: &[&TriMesh]) -> Self {
        Self::new(meshes.iter().flat_map(|m| m.vertices().iter().copied()).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn cell_of(&self, p: Vec3) -> [usize; 3] {
        [0, 1, 2].map(|a| {
            let c = ((p[a] - self.origin[a]) / self.cell).floor();
            if c <= 0.0 {
                0
            } else {
                (c as usize).min(self.dims[a] - 1)
            }
        })
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    /// Nearest point to `p`, optionally limited to `max_dist`. Points whose
    /// distance is within 1e-12 of the minimum tie, and the smallest index wins.
    pub fn nearest(&self, p: Vec3, max_dist: Option<f64>) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let limit = max_dist.unwrap_or(f64::INFINITY);
        let centre = self.cell_of(p);
        let max_ring = self.dims.iter().max().copied().unwrap_or(1);
        let mut cands: Vec<(usize, f64)> = Vec::new();
        let mut best = f64::INFINITY;
        let outside: f64 = (0..3)
            .map(|a| {
                let lo = self.origin[a];
                let hi = lo + self.cell * self.dims[a] as f64;
                (lo - p[a]).max(p[a] - hi).max(0.0).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        for r in 0..=max_ring {
            // lower bound on the distance from p to any point in shell r
            let inner = (r as f64 - 1.0).max(0.0) * self.cell;
            let shell_min = (outside * outside + inner * inner).sqrt();
            if shell_min > best + TIE_EPS || shell_min > limit + TIE_EPS {
                break;
            }
            self.visit_shell(centre, r, |i| {
                let d = dist_sq(self.points[i], p).sqrt();
                if d <= limit + TIE_EPS {
                    best = best.min(d);
                    cands.push((i, d));
                }
            });
        }
        cands
            .into_iter()
            .filter(|&(_, d)| d <= best + TIE_EPS && d <= limit)
            .min_by(|a, b| a.0.cmp(&b.0))
    }

    fn visit_shell(&self, c: [usize; 3], r: usize, mut f: impl FnMut(usize)) {
        let r = r as isize;
        let range = |a: usize| {
            let lo = (c[a] as isize - r).max(0) as usize;
            let hi = ((c[a] as isize + r) as usize).min(self.dims[a] - 1);
            lo..=hi
        };
        for z in range(2) {
            for y in range(1) {
                for x in range(0) {
                    let ring = [x, y, z]
                        .iter()
                        .zip(c.iter())
                        .map(|(&q, &cc)| (q as isize - cc as isize).abs())
                        .max()
                        .unwrap_or(0);
                    if ring != r {
                        continue;
                    }
                    let k = self.flat([x, y, z]);
                    for &i in &self.items[self.starts[k]..self.starts[k + 1]] {
                        f(i);
                    }
                }
            }
        }
    }
}

/// Per-streamline endpoint labels. Vertex indices are global over the
/// concatenated meshes passed to [`assign_endpoints`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointAssignment {
    pub start: Option<RegionId>,
    pub end: Option<RegionId>,
    pub start_vertex: Option<usize>,
    pub end_vertex: Option<usize>,
}

impl EndpointAssignment {
    /// Sorted region pair when both ends resolved.
    pub fn pair(&self) -> Option<(RegionId, RegionId)> {
        match (self.start, self.end) {
            (Some(a), Some(b)) => Some((a.min(b), a.max(b))),
            _ => None,
        }
    }

    pub fn swapped(self) -> Self {
        EndpointAssignment { start: self.end, end: self.start, start_vertex: self.end_vertex, end_vertex: self.start_vertex }
    }
}

/// Labels each streamline endpoint with the region of the nearest vertex
/// across `meshes` when that vertex lies within `d_max`.
pub fn assign_endpoints(set: &StreamlineSet, meshes: &[&TriMesh], d_max: f64) -> Result<Vec<EndpointAssignment>> {
    if !(d_max >= 0.0) {
        return Err(Error::InvalidParameter(format!("d_max must be >= 0, got {d_max}")));
    }
    let mut labels: Vec<RegionId> = Vec::new();
    for (i, m) in meshes.iter().enumerate() {
        let l = m.labels().ok_or_else(|| Error::Label(format!("mesh {i} has no vertex labels")))?;
        labels.extend_from_slice(l);
    }
    let index = VertexIndex::from_meshes(meshes);
    let out = (0..set.len())
        .into_par_iter()
        .map(|i| {
            let line = set.get(i);
            let s = index.nearest(line[0], Some(d_max)).map(|(v, _)| v);
            let e = index.nearest(line[line.len() - 1], Some(d_max)).map(|(v, _)| v);
            EndpointAssignment {
                start: s.map(|v| labels[v]),
                end: e.map(|v| labels[v]),
                start_vertex: s,
                end_vertex: e,
            }
        })
        .collect();
    Ok(out)
}
