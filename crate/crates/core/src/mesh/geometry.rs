use std::collections::HashMap;

use super::TriMesh;
use crate::geom::{cross, dot, norm, sub, triangle_area};

/// Bound on |cot| for sliver triangles.
pub const COT_CLAMP: f64 = 1e6;

/// Symmetric cotangent weights keyed by the sorted vertex pair.
#[derive(Debug, Clone)]
pub struct EdgeWeights {
    edges: Vec<(usize, usize)>,
    weights: Vec<f64>,
    index: HashMap<(usize, usize), usize>,
}

impl EdgeWeights {
    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        self.index.get(&(a.min(b), a.max(b))).map(|&i| self.weights[i])
    }

    /// Edges in ascending (i, j) order with i < j.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.edges.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

fn cot(u: [f64; 3], v: [f64; 3]) -> f64 {
    let c = dot(u, v) / norm(cross(u, v));
    if c.is_nan() {
        return COT_CLAMP;
    }
    c.clamp(-COT_CLAMP, COT_CLAMP)
}

/// w_ij = (cot a_ij + cot b_ij) / 2 over the one or two faces sharing the edge.
pub fn cotangent_weights(mesh: &TriMesh) -> EdgeWeights {
    let v = mesh.vertices();
    let mut acc: HashMap<(usize, usize), f64> = HashMap::with_capacity(mesh.face_count() * 2);
    for f in mesh.faces() {
        for k in 0..3 {
            let (i, j, o) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            let c = cot(sub(v[i], v[o]), sub(v[j], v[o]));
            *acc.entry((i.min(j), i.max(j))).or_insert(0.0) += 0.5 * c;
        }
    }
    let mut pairs: Vec<_> = acc.into_iter().collect();
    pairs.sort_unstable_by_key(|(e, _)| *e);
    let edges: Vec<_> = pairs.iter().map(|(e, _)| *e).collect();
    let weights = pairs.iter().map(|(_, w)| *w).collect();
    let index = edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();
    EdgeWeights { edges, weights, index }
}

/// Barycentric vertex areas: one third of every incident triangle.
pub fn vertex_areas(mesh: &TriMesh) -> Vec<f64> {
    let v = mesh.vertices();
    let mut out = vec![0.0; v.len()];
    for f in mesh.faces() {
        let a = triangle_area(v[f[0]], v[f[1]], v[f[2]]) / 3.0;
        for &i in f {
            out[i] += a;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn equilateral_weight() {
        let h = 3f64.sqrt() / 2.0;
        let m = TriMesh::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, h, 0.0]], vec![[0, 1, 2]]).unwrap();
        let w = cotangent_weights(&m);
        let expected = 0.5 / 3f64.sqrt();
        for ((_, _), wi) in w.iter() {
            assert_abs_diff_eq!(wi, expected, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(expected, 0.288675, epsilon = 1e-6);
    }

    #[test]
    fn right_isoceles_hypotenuse_weight_is_zero() {
        let m = TriMesh::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![[0, 1, 2]]).unwrap();
        let w = cotangent_weights(&m);
        assert_abs_diff_eq!(w.get(1, 2).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.get(0, 1).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn unit_square_weights() {
        // the diagonal is opposite both right angles; each side sees one 45° corner
        let m = TriMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let w = cotangent_weights(&m);
        assert_abs_diff_eq!(w.get(0, 2).unwrap(), 0.0, epsilon = 1e-12);
        for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            assert_abs_diff_eq!(w.get(a, b).unwrap(), 0.5, epsilon = 1e-12);
        }
        assert_eq!(w.len(), 5);
    }

    #[test]
    fn interior_edge_between_two_45_degree_corners_has_weight_one() {
        let m = TriMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [2.0, 0.0, 0.0]],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap();
        let w = cotangent_weights(&m);
        assert_abs_diff_eq!(w.get(1, 2).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.get(2, 1).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sliver_cotangent_is_clamped() {
        let m = TriMesh::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 1e-9, 0.0]], vec![[0, 1, 2]]).unwrap();
        let w = cotangent_weights(&m);
        for (_, wi) in w.iter() {
            assert!(wi.abs() <= 0.5 * COT_CLAMP);
        }
        assert_abs_diff_eq!(w.get(0, 2).unwrap(), 0.5 * COT_CLAMP, epsilon = 1e-3);
    }

    #[test]
    fn vertex_areas_sum_to_total() {
        let m = crate::fixtures::hemisphere(12);
        let total = m.total_area();
        let sum: f64 = vertex_areas(&m).iter().sum();
        assert!(((sum - total) / total).abs() < 1e-12);
    }
}
