//! Sparse symmetric positive-definite solves for the interior Dirichlet
//! systems of the disk map. Jacobi-preconditioned conjugate gradients with
//! sequential reductions, so results are bit-reproducible on one machine.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mesh::EdgeWeights;

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_rows(rows: Vec<BTreeMap<usize, f64>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in rows {
            for (c, v) in r {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&k| self.cols[k] == i)
                    .map_or(0.0, |k| self.vals[k])
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `a x = b` starting from `x`. Converged when ‖b − a x‖ ≤ tol·‖b‖.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<SolveStats> {
    let stats = pcg_partial(a, b, x, tol, max_iter)?;
    if stats.relative_residual > tol {
        return Err(Error::NoConvergence { residual: stats.relative_residual, iterations: stats.iterations });
    }
    Ok(stats)
}

/// Like [`pcg`] but returns the last iterate when `max_iter` runs out.
pub fn pcg_partial(a: &CsrMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<SolveStats> {
    let n = a.dim();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats { iterations: 0, relative_residual: 0.0 });
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| if *d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = vec![0.0; n];
    a.mul_into(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = dot(&r, &r).sqrt() / bnorm;
    let mut it = 0;
    while res > tol && it < max_iter {
        a.mul_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NoConvergence { residual: res, iterations: it });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
        it += 1;
        if res <= tol {
            break;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    // recompute the true residual; the recurrence can drift
    a.mul_into(x, &mut ap);
    let true_res = b.iter().zip(&ap).map(|(b, y)| (b - y) * (b - y)).sum::<f64>().sqrt() / bnorm;
    Ok(SolveStats { iterations: it, relative_residual: true_res })
}

/// Cotangent Laplacian restricted to the free (interior) vertices, with the
/// couplings to fixed vertices kept aside for building right-hand sides.
#[derive(Debug, Clone)]
pub struct InteriorSystem {
    pub matrix: CsrMatrix,
    /// vertex index -> row, None for fixed vertices
    pub row_of: Vec<Option<usize>>,
    /// row -> vertex index
    pub vertex_of: Vec<usize>,
    /// per row: (fixed vertex, weight)
    pub fixed_couplings: Vec<Vec<(usize, f64)>>,
}

impl InteriorSystem {
    pub fn new(n_vertices: usize, weights: &EdgeWeights, fixed: &[bool]) -> Result<Self> {
        let mut row_of = vec![None; n_vertices];
        let mut vertex_of = Vec::new();
        for v in 0..n_vertices {
            if !fixed[v] {
                row_of[v] = Some(vertex_of.len());
                vertex_of.push(v);
            }
        }
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); vertex_of.len()];
        let mut fixed_couplings = vec![Vec::new(); vertex_of.len()];
        let mut degree = vec![0usize; vertex_of.len()];
        for ((i, j), w) in weights.iter() {
            for (a, b) in [(i, j), (j, i)] {
                if let Some(ra) = row_of[a] {
                    degree[ra] += 1;
                    *rows[ra].entry(ra).or_insert(0.0) += w;
                    match row_of[b] {
                        Some(rb) => *rows[ra].entry(rb).or_insert(0.0) -= w,
                        None => fixed_couplings[ra].push((b, w)),
                    }
                }
            }
        }
        for (r, row) in rows.iter().enumerate() {
            let d = row.get(&r).copied().unwrap_or(0.0);
            if degree[r] == 0 || !(d > 0.0) {
                return Err(Error::SingularSystem { vertex: vertex_of[r] });
            }
        }
        Ok(Self { matrix: CsrMatrix::from_rows(rows), row_of, vertex_of, fixed_couplings })
    }

    pub fn len(&self) -> usize {
        self.vertex_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_of.is_empty()
    }
}
