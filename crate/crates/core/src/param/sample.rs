use super::DiskMap;
use crate::error::{Error, Result};
use crate::geom::{Vec2, Vec3};
use crate::mesh::TriMesh;

/// Distance within which points in numerical gaps snap to the nearest face.
pub const SNAP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    pub face: usize,
    pub weights: [f64; 3],
    pub position: Vec3,
}

/// Uniform-grid point location over the disk triangulation.
pub struct DiskLocator<'a> {
    map: &'a DiskMap,
    mesh: &'a TriMesh,
    res: usize,
    cells: Vec<Vec<usize>>,
}

fn cell_of(x: f64, res: usize) -> usize {
    (((x + 1.0) * 0.5 * res as f64).floor().max(0.0) as usize).min(res - 1)
}

fn barycentric(p: Vec2, t: [Vec2; 3]) -> Option<[f64; 3]> {
    let d = (t[1][1] - t[2][1]) * (t[0][0] - t[2][0]) + (t[2][0] - t[1][0]) * (t[0][1] - t[2][1]);
    if d == 0.0 {
        return None;
    }
    let a = ((t[1][1] - t[2][1]) * (p[0] - t[2][0]) + (t[2][0] - t[1][0]) * (p[1] - t[2][1])) / d;
    let b = ((t[2][1] - t[0][1]) * (p[0] - t[2][0]) + (t[0][0] - t[2][0]) * (p[1] - t[2][1])) / d;
    Some([a, b, 1.0 - a - b])
}

fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> (f64, f64) {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 { (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - q[0]).hypot(p[1] - q[1]), t)
}

impl<'a> DiskLocator<'a> {
    pub fn new(map: &'a DiskMap, mesh: &'a TriMesh) -> Self {
        let res = ((mesh.face_count() as f64).sqrt().ceil() as usize).clamp(1, 2048);
        let mut cells = vec![Vec::new(); res * res];
        for (fi, f) in mesh.faces().iter().enumerate() {
            let pts = f.map(|i| map.uv[i]);
            let lo = [pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min), pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min)];
            let hi = [pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max), pts.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max)];
            let (x0, x1) = (cell_of(lo[0] - SNAP_TOLERANCE, res), cell_of(hi[0] + SNAP_TOLERANCE, res));
            let (y0, y1) = (cell_of(lo[1] - SNAP_TOLERANCE, res), cell_of(hi[1] + SNAP_TOLERANCE, res));
            for y in y0..=y1 {
                for x in x0..=x1 {
                    cells[y * res + x].push(fi);
                }
            }
        }
        Self { map, mesh, res, cells }
    }

    fn point(&self, face: usize, mut w: [f64; 3]) -> SamplePoint {
        let f = self.mesh.faces()[face];
        let v = self.mesh.vertices();
        if let Some(k) = w.iter().position(|x| *x >= 1.0 - 1e-12) {
            w = [0.0; 3];
            w[k] = 1.0;
            return SamplePoint { face, weights: w, position: v[f[k]] };
        }
        let mut p = [0.0; 3];
        for k in 0..3 {
            for (c, pc) in p.iter_mut().enumerate() {
                *pc += w[k] * v[f[k]][c];
            }
        }
        SamplePoint { face, weights: w, position: p }
    }

    /// Locates `q` in the 2D triangulation and interpolates the 3D position.
    pub fn locate(&self, q: Vec2) -> Result<SamplePoint> {
        if !(q[0].is_finite() && q[1].is_finite()) || q[0].hypot(q[1]) > 1.0 + 1e-12 {
            return Err(Error::OutOfDomain(q[0], q[1]));
        }
        let cell = cell_of(q[1], self.res) * self.res + cell_of(q[0], self.res);
        let mut nearest: Option<(f64, usize)> = None;
        for &fi in &self.cells[cell] {
            let t = self.mesh.faces()[fi].map(|i| self.map.uv[i]);
            let Some(w) = barycentric(q, t) else { continue };
            if w.iter().all(|x| *x >= -1e-12) {
                let w = w.map(|x| x.max(0.0));
                let s: f64 = w.iter().sum();
                return Ok(self.point(fi, w.map(|x| x / s)));
            }
            let d = (0..3)
                .map(|k| segment_distance(q, t[k], t[(k + 1) % 3]).0)
                .fold(f64::INFINITY, f64::min);
            if nearest.map_or(true, |(bd, _)| d < bd) {
                nearest = Some((d, fi));
            }
        }
        match nearest {
            Some((d, fi)) if d <= SNAP_TOLERANCE => {
                let t = self.mesh.faces()[fi].map(|i| self.map.uv[i]);
                let w = barycentric(q, t).expect("non-degenerate face").map(|x| x.max(0.0));
                let s: f64 = w.iter().sum();
                Ok(self.point(fi, w.map(|x| x / s)))
            }
            _ => Err(Error::Uncovered(q[0], q[1])),
        }
    }
}

/// One-shot point location; build a [`DiskLocator`] for repeated queries.
pub fn sample_back(map: &DiskMap, mesh: &TriMesh, query: Vec2) -> Result<SamplePoint> {
    DiskLocator::new(map, mesh).locate(query)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::param::harmonic_disk_map;

    #[test]
    fn vertex_queries_recover_vertices_exactly() {
        let m = fixtures::hemisphere(10);
        let map = harmonic_disk_map(&m).unwrap();
        let loc = DiskLocator::new(&map, &m);
        for (i, uv) in map.uv.iter().enumerate() {
            let s = loc.locate(*uv).unwrap();
            assert_eq!(s.position, m.vertices()[i], "vertex {i}");
        }
    }

    #[test]
    fn centroid_maps_to_centroid() {
        let m = fixtures::hemisphere(6);
        let map = harmonic_disk_map(&m).unwrap();
        let loc = DiskLocator::new(&map, &m);
        for fi in [0usize, 10, 50] {
            let f = m.faces()[fi];
            let c2 = [0, 1].map(|a| f.iter().map(|&i| map.uv[i][a]).sum::<f64>() / 3.0);
            let s = loc.locate(c2).unwrap();
            assert_eq!(s.face, fi);
            let c3 = [0, 1, 2].map(|a| f.iter().map(|&i| m.vertices()[i][a]).sum::<f64>() / 3.0);
            for a in 0..3 {
                assert!((s.position[a] - c3[a]).abs() < 1e-12);
                assert!((s.weights[a] - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn outside_and_gap_queries_fail() {
        let m = fixtures::flat_disk(4);
        let map = harmonic_disk_map(&m).unwrap();
        assert!(matches!(sample_back(&map, &m, [2.0, 0.0]), Err(Error::OutOfDomain(..))));
        // between the inscribed polygon and the circle
        let t = std::f64::consts::PI / 24.0;
        assert!(matches!(sample_back(&map, &m, [0.9999 * t.cos(), 0.9999 * t.sin()]), Err(Error::Uncovered(..))));
    }
}
