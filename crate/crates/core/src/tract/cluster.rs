use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Polyline, StreamlineSet};
use crate::error::{Error, Result};
use crate::geom::{add, dist, scale, sub, Vec3};

pub const DEFAULT_K: usize = 12;
pub const DEFAULT_THETA_MM: f64 = 10.0;

/// `k` points at equal arc-length spacing; the endpoints are kept exactly.
pub fn resample(line: &[Vec3], k: usize) -> Result<Polyline> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("resample count must be >= 2, got {k}")));
    }
    if line.len() < 2 {
        return Err(Error::InvalidParameter("polyline needs at least 2 points".into()));
    }
    let seg: Vec<f64> = line.windows(2).map(|w| dist(w[0], w[1])).collect();
    let total: f64 = seg.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("zero-length polyline".into()));
    }
    let mut out = Vec::with_capacity(k);
    out.push(line[0]);
    let (mut i, mut acc) = (0usize, 0.0);
    for j in 1..k - 1 {
        let target = total * j as f64 / (k - 1) as f64;
        while i < seg.len() - 1 && acc + seg[i] < target {
            acc += seg[i];
            i += 1;
        }
        let t = if seg[i] > 0.0 { ((target - acc) / seg[i]).clamp(0.0, 1.0) } else { 0.0 };
        out.push(add(line[i], scale(sub(line[i + 1], line[i]), t)));
    }
    out.push(line[line.len() - 1]);
    Ok(out)
}

fn direct_flip(a: &[Vec3], b: &[Vec3]) -> (f64, f64) {
    let k = a.len();
    let direct: f64 = a.iter().zip(b).map(|(p, q)| dist(*p, *q)).sum::<f64>() / k as f64;
    // pairing i with k-1-i keeps the flip sum bitwise symmetric in (a, b)
    let mut flipped = 0.0;
    for i in 0..k / 2 {
        flipped += dist(a[i], b[k - 1 - i]) + dist(a[k - 1 - i], b[i]);
    }
    if k % 2 == 1 {
        flipped += dist(a[k / 2], b[k / 2]);
    }
    let flipped = flipped / k as f64;
    (direct, flipped)
}

/// Minimum average direct-flip distance between two k-point polylines.
pub fn mdf(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::PointCountMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let (d, f) = direct_flip(a, b);
    Ok(d.min(f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    pub members: Vec<usize>,
    /// Running mean of the flip-aligned resampled members.
    pub centroid: Polyline,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuickBundles {
    pub clusters: Vec<Cluster>,
    /// Streamlines that could not be resampled (zero length), in input order.
    pub skipped: Vec<usize>,
    pub theta: f64,
    pub k: usize,
}

/// Single greedy pass in input order: each streamline joins the cluster with
/// the nearest centroid (ties to the lowest id) if that distance is within
/// `theta`, otherwise it opens a new cluster.
pub fn quickbundles(set: &StreamlineSet, theta: f64, k: usize) -> Result<QuickBundles> {
    if !(theta >= 0.0) {
        return Err(Error::InvalidParameter(format!("theta must be >= 0, got {theta}")));
    }
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k must be >= 2, got {k}")));
    }
    let resampled: Vec<Result<Polyline>> = (0..set.len()).into_par_iter().map(|i| resample(set.get(i), k)).collect();

    let mut clusters: Vec<Cluster> = Vec::new();
    let mut skipped = Vec::new();
    for (i, r) in resampled.into_iter().enumerate() {
        let s = match r {
            Ok(s) => s,
            Err(e) => {
                log::warn!("streamline {i} skipped: {e}");
                skipped.push(i);
                continue;
            }
        };
        let mut best: Option<(usize, f64, bool)> = None;
        for (c, cl) in clusters.iter().enumerate() {
            let (d, f) = direct_flip(&s, &cl.centroid);
            let (m, flip) = if f < d { (f, true) } else { (d, false) };
            if best.map_or(true, |(_, bd, _)| m < bd) {
                best = Some((c, m, flip));
            }
        }
        match best {
            Some((c, m, flip)) if m <= theta => {
                let cl = &mut clusters[c];
                let n = cl.members.len() as f64;
                for (j, cp) in cl.centroid.iter_mut().enumerate() {
                    let p = if flip { s[k - 1 - j] } else { s[j] };
                    for a in 0..3 {
                        cp[a] = (cp[a] * n + p[a]) / (n + 1.0);
                    }
                }
                cl.members.push(i);
            }
            _ => clusters.push(Cluster { id: clusters.len(), members: vec![i], centroid: s, k }),
        }
    }
    Ok(QuickBundles { clusters, skipped, theta, k })
}
