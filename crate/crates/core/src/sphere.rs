//! Lifting disk maps onto the unit sphere, joining two hemispheres along the
//! equator, and exploded (scaled-separation) views of labelled regions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{add, dist, norm, scale, sub, wrap_angle, Vec2, Vec3};
use crate::mesh::RegionId;
use crate::param::DiskMap;

/// Default number of equatorial samples used for seam alignment.
pub const DEFAULT_SEAM_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SphereSide {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeamPair {
    pub left_vertex: usize,
    pub right_position: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeamAlignment {
    /// z-rotation (radians) applied to the upper hemisphere after the optional reflection.
    pub rotation: f64,
    /// Whether the upper hemisphere was mirrored (y → −y) before rotating.
    pub reflected: bool,
    pub offset: usize,
    pub samples: usize,
    /// RMS angular mismatch of the matched equator samples, radians.
    pub rms_mismatch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereMap {
    pub xyz: Vec<Vec3>,
    pub side: Vec<SphereSide>,
    /// Boundary loops in vertex indices of this map (one per hemisphere).
    pub boundaries: Vec<Vec<usize>>,
    pub seam: Vec<SeamPair>,
    pub radius: f64,
    pub alignment: Option<SeamAlignment>,
}

/// (u, v) ↦ (2u, 2v, r² − 1) / (1 + r²); z is negated for the upper side.
pub fn inverse_stereographic_point(uv: Vec2, side: SphereSide) -> Vec3 {
    let r2 = uv[0] * uv[0] + uv[1] * uv[1];
    let d = 1.0 + r2;
    let z = (r2 - 1.0) / d;
    [2.0 * uv[0] / d, 2.0 * uv[1] / d, if side == SphereSide::Upper { -z } else { z }]
}

/// Inverse of [`inverse_stereographic_point`], projecting from the opposite pole.
pub fn stereographic_point(p: Vec3, side: SphereSide) -> Vec2 {
    let z = if side == SphereSide::Upper { -p[2] } else { p[2] };
    [p[0] / (1.0 - z), p[1] / (1.0 - z)]
}

pub fn inverse_stereographic(map: &DiskMap, side: SphereSide) -> SphereMap {
    SphereMap {
        xyz: map.uv.iter().map(|&uv| inverse_stereographic_point(uv, side)).collect(),
        side: vec![side; map.uv.len()],
        boundaries: vec![map.boundary.clone()],
        seam: Vec::new(),
        radius: 1.0,
        alignment: None,
    }
}

/// Angles of `m` points spaced uniformly by arc length along the closed
/// polyline through `loop_pts`, starting at its first point.
fn resample_closed(loop_pts: &[Vec3], m: usize) -> Vec<f64> {
    let n = loop_pts.len();
    let seg: Vec<f64> = (0..n).map(|i| dist(loop_pts[i], loop_pts[(i + 1) % n])).collect();
    let total: f64 = seg.iter().sum();
    let mut out = Vec::with_capacity(m);
    let (mut i, mut acc) = (0usize, 0.0);
    for j in 0..m {
        let target = total * j as f64 / m as f64;
        while i < n - 1 && acc + seg[i] < target {
            acc += seg[i];
            i += 1;
        }
        let t = if seg[i] > 0.0 { ((target - acc) / seg[i]).clamp(0.0, 1.0) } else { 0.0 };
        let p = add(loop_pts[i], scale(sub(loop_pts[(i + 1) % n], loop_pts[i]), t));
        out.push(p[1].atan2(p[0]));
    }
    out
}

fn mismatch(diffs: &[f64], alpha: f64) -> f64 {
    diffs.iter().map(|d| wrap_angle(d - alpha).powi(2)).sum()
}

/// Golden-section minimisation of `f` on [lo, hi].
fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// RMS values closer than this are treated as ties (smallest offset wins).
const TIE_EPS: f64 = 1e-12;

fn best_rotation(left: &[f64], right: &[f64], offset: usize, reflected: bool) -> (f64, f64) {
    let m = left.len();
    let diffs: Vec<f64> = (0..m)
        .map(|j| {
            let r = if reflected { -right[(offset + m - j) % m] } else { right[(offset + j) % m] };
            left[j] - r
        })
        .collect();
    let (s, c) = diffs.iter().fold((0.0, 0.0), |(s, c), d| (s + d.sin(), c + d.cos()));
    let start = s.atan2(c);
    let half = std::f64::consts::PI / m as f64;
    let alpha = golden_section(|a| mismatch(&diffs, a), start - half, start + half, 1e-13);
    let alpha = if mismatch(&diffs, start) <= mismatch(&diffs, alpha) { start } else { alpha };
    (wrap_angle(alpha), (mismatch(&diffs, alpha) / m as f64).sqrt())
}

fn rotate_z(p: Vec3, alpha: f64, reflect: bool) -> Vec3 {
    let y = if reflect { -p[1] } else { p[1] };
    let (s, c) = alpha.sin_cos();
    [c * p[0] - s * y, s * p[0] + c * y, p[2]]
}

fn closest_on_loop(p: Vec3, pts: &[Vec3]) -> Vec3 {
    let n = pts.len();
    let mut best = (f64::INFINITY, pts[0]);
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        let ab = sub(b, a);
        let len2 = crate::geom::dot(ab, ab);
        let t = if len2 > 0.0 { (crate::geom::dot(sub(p, a), ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
        let q = add(a, scale(ab, t));
        let d = dist(p, q);
        if d < best.0 {
            best = (d, q);
        }
    }
    best.1
}

/// Rigidly rotates (and optionally mirrors) the upper hemisphere about z so
/// that its equator samples best match the lower hemisphere's, then joins
/// both into one map: lower vertices first, upper vertices after.
pub fn align_hemispheres(left: &SphereMap, right: &SphereMap, samples: usize) -> Result<SphereMap> {
    if samples == 0 {
        return Err(Error::InvalidParameter("seam sample count must be at least 1".into()));
    }
    let lb = left.boundaries.first().filter(|b| !b.is_empty());
    let rb = right.boundaries.first().filter(|b| !b.is_empty());
    let (Some(lb), Some(rb)) = (lb, rb) else {
        return Err(Error::Topology("hemisphere has an empty boundary".into()));
    };
    if left.side.iter().any(|s| *s != SphereSide::Lower) || right.side.iter().any(|s| *s != SphereSide::Upper) {
        return Err(Error::InvalidParameter("left must lie on the lower and right on the upper hemisphere".into()));
    }
    let lpts: Vec<Vec3> = lb.iter().map(|&i| left.xyz[i]).collect();
    let rpts: Vec<Vec3> = rb.iter().map(|&i| right.xyz[i]).collect();
    let ls = resample_closed(&lpts, samples);
    let rs = resample_closed(&rpts, samples);

    let mut best: Option<SeamAlignment> = None;
    for reflected in [false, true] {
        for offset in 0..samples {
            let (rotation, rms) = best_rotation(&ls, &rs, offset, reflected);
            if best.map_or(true, |b| rms < b.rms_mismatch - TIE_EPS) {
                best = Some(SeamAlignment { rotation, reflected, offset, samples, rms_mismatch: rms });
            }
        }
    }
    let alignment = best.expect("at least one candidate");
    log::debug!("seam alignment: {alignment:?}");

    let nl = left.xyz.len();
    let mut xyz = left.xyz.clone();
    xyz.extend(right.xyz.iter().map(|&p| rotate_z(p, alignment.rotation, alignment.reflected)));
    let mut side = left.side.clone();
    side.extend(right.side.iter().copied());
    let aligned_right: Vec<Vec3> = rb.iter().map(|&i| xyz[nl + i]).collect();
    let seam = lb
        .iter()
        .map(|&v| SeamPair { left_vertex: v, right_position: closest_on_loop(left.xyz[v], &aligned_right) })
        .collect();
    Ok(SphereMap {
        xyz,
        side,
        boundaries: vec![lb.clone(), rb.iter().map(|&i| i + nl).collect()],
        seam,
        radius: left.radius,
        alignment: Some(alignment),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplodedScene {
    pub scale: f64,
    /// Rigid translation of every region, (s − 1)·R·c_r.
    pub offsets: BTreeMap<RegionId, Vec3>,
    pub positions: Vec<Vec3>,
    /// Attachment points (e.g. bundle endpoints) displaced with their region.
    pub attachments: Vec<Vec3>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Moves every region patch rigidly outward along its centroid direction so
/// that gaps between patches grow with `s` while patch shapes are preserved.
pub fn exploded_view(
    sphere: &SphereMap,
    labels: &[RegionId],
    regions: impl IntoIterator<Item = RegionId>,
    s: f64,
    attachments: &[(RegionId, Vec3)],
) -> Result<ExplodedScene> {
    if !(s >= 1.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("explode scale must be >= 1, got {s}")));
    }
    if labels.len() != sphere.xyz.len() {
        return Err(Error::Label(format!("{} labels for {} sphere vertices", labels.len(), sphere.xyz.len())));
    }
    let mut sums: BTreeMap<RegionId, (Vec3, usize)> = BTreeMap::new();
    for (&l, &p) in labels.iter().zip(&sphere.xyz) {
        let e = sums.entry(l).or_insert(([0.0; 3], 0));
        e.0 = add(e.0, scale(p, 1.0 / sphere.radius));
        e.1 += 1;
    }
    let mut warnings = Vec::new();
    for id in regions {
        if !sums.contains_key(&id) {
            log::warn!("region {id} has no vertices on the sphere; skipped");
            warnings.push(format!("region {id} has no vertices; skipped"));
        }
    }
    let mut offsets = BTreeMap::new();
    for (&id, &(sum, count)) in &sums {
        let mean = scale(sum, 1.0 / count as f64);
        let n = norm(mean);
        if n < 1e-12 {
            return Err(Error::Region(id, "centroid direction is undefined (antipodally symmetric region)".into()));
        }
        offsets.insert(id, scale(mean, (s - 1.0) * sphere.radius / n));
    }
    let positions = if s == 1.0 {
        sphere.xyz.clone()
    } else {
        labels.iter().zip(&sphere.xyz).map(|(l, &p)| add(p, offsets[l])).collect()
    };
    let attachments = attachments
        .iter()
        .map(|(r, p)| match offsets.get(r) {
            Some(o) if s != 1.0 => add(*p, *o),
            _ => *p,
        })
        .collect();
    Ok(ExplodedScene { scale: s, offsets, positions, attachments, warnings })
}
