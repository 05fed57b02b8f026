//! Deterministic synthetic inputs: simple meshes for unit tests and a
//! two-hemisphere "brain" with gyral labels, streamlines and time series for
//! end-to-end runs.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::connect::TimeSeriesField;
use crate::geom::{add, normalize, scale, Vec3};
use crate::mesh::{label_color, Hemisphere, RegionId, RegionInfo, RegionTable, TriMesh};
use crate::tract::StreamlineSet;

pub fn single_triangle() -> TriMesh {
    TriMesh::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![[0, 1, 2]]).unwrap()
}

/// Concentric-ring disk topology: a centre vertex and `rings` rings with
/// 6·i vertices on ring i, vertex 0 of every ring at angle 0. Faces are
/// counter-clockwise in (ring radius, angle).
pub fn ring_disk_topology(rings: usize) -> (Vec<(f64, f64)>, Vec<[usize; 3]>) {
    let mut polar = vec![(0.0, 0.0)];
    let mut starts = vec![0];
    for i in 1..=rings {
        starts.push(polar.len());
        let n = 6 * i;
        for j in 0..n {
            polar.push((i as f64 / rings as f64, 2.0 * PI * j as f64 / n as f64));
        }
    }
    let mut faces = Vec::with_capacity(6 * rings * rings);
    for j in 0..6.min(polar.len() - 1) {
        faces.push([0, 1 + j, 1 + (j + 1) % 6]);
    }
    for i in 2..=rings {
        let (m, n) = (6 * (i - 1), 6 * i);
        let (si, so) = (starts[i - 1], starts[i]);
        let (mut a, mut b) = (0usize, 0usize);
        while a < m || b < n {
            let next_inner = (a + 1) as f64 / m as f64;
            let next_outer = (b + 1) as f64 / n as f64;
            if b < n && (a == m || next_outer <= next_inner) {
                faces.push([si + a % m, so + b, so + (b + 1) % n]);
                b += 1;
            } else {
                faces.push([si + a % m, so + b % n, si + (a + 1) % m]);
                a += 1;
            }
        }
    }
    (polar, faces)
}

/// Planar unit disk with `rings` rings; boundary vertices lie exactly on the unit circle.
pub fn flat_disk(rings: usize) -> TriMesh {
    let (polar, faces) = ring_disk_topology(rings);
    let v = polar.iter().map(|&(r, t)| [r * t.cos(), r * t.sin(), 0.0]).collect();
    TriMesh::new(v, faces).unwrap()
}

/// Unit upper hemisphere: pole at +z, boundary on the equator.
pub fn hemisphere(rings: usize) -> TriMesh {
    spherical_cap(rings, PI / 2.0)
}

/// Unit spherical cap around +z spanning polar angles [0, max_polar].
pub fn spherical_cap(rings: usize, max_polar: f64) -> TriMesh {
    let (polar, faces) = ring_disk_topology(rings);
    let v = polar
        .iter()
        .map(|&(r, t)| {
            let phi = r * max_polar;
            [phi.sin() * t.cos(), phi.sin() * t.sin(), phi.cos()]
        })
        .collect();
    TriMesh::new(v, faces).unwrap()
}

/// Flat annulus between radii r0 < r1.
pub fn annulus(n_theta: usize, n_r: usize, r0: f64, r1: f64) -> TriMesh {
    let mut v = Vec::new();
    for i in 0..=n_r {
        let r = r0 + (r1 - r0) * i as f64 / n_r as f64;
        for j in 0..n_theta {
            let t = 2.0 * PI * j as f64 / n_theta as f64;
            v.push([r * t.cos(), r * t.sin(), 0.0]);
        }
    }
    let mut f = Vec::new();
    for i in 0..n_r {
        for j in 0..n_theta {
            let a = i * n_theta + j;
            let b = i * n_theta + (j + 1) % n_theta;
            let c = a + n_theta;
            let d = b + n_theta;
            f.push([a, b, d]);
            f.push([a, d, c]);
        }
    }
    TriMesh::new(v, f).unwrap()
}

/// Unit-spaced planar grid of nx × ny cells.
pub fn strip(nx: usize, ny: usize) -> TriMesh {
    let mut v = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            v.push([i as f64, j as f64, 0.0]);
        }
    }
    let mut f = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let a = j * (nx + 1) + i;
            let (b, c, d) = (a + 1, a + nx + 1, a + nx + 2);
            f.push([a, b, d]);
            f.push([a, d, c]);
        }
    }
    TriMesh::new(v, f).unwrap()
}

/// Unit icosphere with `subdivisions` rounds of 4:1 splitting.
pub fn icosphere(subdivisions: usize) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| normalize(*p).unwrap())
    .collect();
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, v: &mut Vec<Vec3>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                v.push(normalize(scale(add(v[a], v[b]), 0.5)).unwrap());
                v.len() - 1
            })
        };
        let mut nf = Vec::with_capacity(f.len() * 4);
        for [a, b, c] in f {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            nf.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = nf;
    }
    TriMesh::new(v, f).unwrap()
}

/// Region id of the medial wall in the synthetic brain (per hemisphere).
pub fn medial_wall_label(hemisphere: Hemisphere) -> RegionId {
    match hemisphere {
        Hemisphere::Right => 2000,
        _ => 1000,
    }
}

const GYRUS_NAMES: [&str; 8] = [
    "superiorfrontal",
    "precentral",
    "superiorparietal",
    "lateraloccipital",
    "parsopercularis",
    "postcentral",
    "supramarginal",
    "inferiortemporal",
];

/// One synthetic hemisphere: a folded cap of radius ~40 mm extending past the
/// equator, with eight gyral labels and a medial-wall band (polar angle > 90°)
/// that must be removed before mapping. Carries a "myelin" channel.
pub fn synthetic_hemisphere(rings: usize, hemisphere: Hemisphere) -> TriMesh {
    let max_polar = 0.62 * PI;
    let (polar, mut faces) = ring_disk_topology(rings);
    let base = match hemisphere {
        Hemisphere::Right => 2000,
        _ => 1000,
    };
    let mirror = hemisphere == Hemisphere::Right;
    let mut vertices = Vec::with_capacity(polar.len());
    let mut labels = Vec::with_capacity(polar.len());
    let mut myelin = Vec::with_capacity(polar.len());
    for &(r, t) in &polar {
        let phi = r * max_polar;
        // gentle folding so the surface is not a perfect sphere
        let radius = 40.0 * (1.0 + 0.06 * (5.0 * phi).sin() * (3.0 * t).cos());
        let p = [radius * phi.sin() * t.cos(), radius * phi.sin() * t.sin(), radius * phi.cos()];
        // cap axis +z becomes the lateral direction (-x for left, +x for right)
        let lateral = [-p[2], p[1] * 1.2, p[0] * 0.9];
        let mut q = [lateral[0] - 45.0, lateral[1], lateral[2]];
        if mirror {
            q[0] = -q[0];
        }
        vertices.push(q);
        let label = if phi > PI / 2.0 + 1e-9 {
            base
        } else {
            let sector = ((t / (2.0 * PI)) * 4.0).floor().min(3.0) as u32;
            let band = u32::from(phi > PI / 4.0);
            base + 1 + sector + 4 * band
        };
        labels.push(label);
        myelin.push(1.2 + 0.5 * (phi * 2.0).cos() + 0.1 * (4.0 * t).sin());
    }
    if mirror {
        for f in &mut faces {
            f.swap(1, 2);
        }
    }
    let mut table = RegionTable::new();
    let prefix = if mirror { "rh" } else { "lh" };
    table.insert(base, RegionInfo { name: format!("{prefix}.medialwall"), color: [0.3, 0.8, 0.3], area_mm2: 0.0 });
    for (k, name) in GYRUS_NAMES.iter().enumerate() {
        let id = base + 1 + k as u32;
        table.insert(id, RegionInfo { name: format!("{prefix}.{name}"), color: label_color(k as u32 + 1), area_mm2: 0.0 });
    }
    TriMesh::new(vertices, faces)
        .and_then(|m| m.with_labels(labels, table))
        .and_then(|m| m.with_channel("myelin", myelin))
        .map(|m| m.with_hemisphere(hemisphere))
        .expect("synthetic hemisphere is valid")
}

/// Streamlines between surface vertices of the given meshes, drawn from
/// `pathways` families so that clustering has structure. About 3% of the
/// streamlines end well away from the surface.
/// Loops forever if every vertex is medial wall.
pub fn synthetic_streamlines(meshes: &[&TriMesh], count: usize, pathways: usize, seed: u64) -> StreamlineSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // endpoints avoid the medial wall, which the pipeline removes
    let pick = |rng: &mut ChaCha8Rng| loop {
        let m = meshes[rng.gen_range(0..meshes.len())];
        let v = rng.gen_range(0..m.vertex_count());
        if m.labels().map_or(true, |l| l[v] != medial_wall_label(m.hemisphere())) {
            return m.vertices()[v];
        }
    };
    let routes: Vec<(Vec3, Vec3, Vec3)> = (0..pathways.max(1))
        .map(|_| {
            let a = pick(&mut rng);
            let b = pick(&mut rng);
            let mid = scale(add(a, b), 0.5);
            // bow toward the centre of the brain
            let ctrl = [mid[0] * 0.3, mid[1] * 0.3, mid[2] * 0.3 + 5.0];
            (a, ctrl, b)
        })
        .collect();
    let mut lines = Vec::with_capacity(count);
    for _ in 0..count {
        let (a, c, b) = routes[rng.gen_range(0..routes.len())];
        let jitter = |rng: &mut ChaCha8Rng, s: f64| [rng.gen_range(-s..s), rng.gen_range(-s..s), rng.gen_range(-s..s)];
        let mut a = add(a, jitter(&mut rng, 1.5));
        let b = add(b, jitter(&mut rng, 1.5));
        let c = add(c, jitter(&mut rng, 3.0));
        if rng.gen_bool(0.03) {
            a = add(a, [0.0, 0.0, 15.0]);
        }
        let n = rng.gen_range(8..40);
        let mut pts: Vec<Vec3> = (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                let u = 1.0 - t;
                [
                    u * u * a[0] + 2.0 * u * t * c[0] + t * t * b[0],
                    u * u * a[1] + 2.0 * u * t * c[1] + t * t * b[1],
                    u * u * a[2] + 2.0 * u * t * c[2] + t * t * b[2],
                ]
            })
            .collect();
        if rng.gen_bool(0.5) {
            pts.reverse();
        }
        lines.push(pts);
    }
    StreamlineSet::new(lines).expect("synthetic streamlines are valid")
}

/// Per-vertex time series: each region follows a latent sinusoidal source,
/// neighbouring regions share part of it, plus white noise.
pub fn synthetic_time_series(meshes: &[&TriMesh], samples: usize, seed: u64) -> TimeSeriesField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::new();
    let global: Vec<f64> = (0..samples).map(|t| (t as f64 * 0.05).sin()).collect();
    for m in meshes {
        let labels = m.labels();
        for v in 0..m.vertex_count() {
            let r = labels.map_or(0, |l| l[v]) as f64;
            let freq = 0.1 + 0.013 * (r % 17.0);
            let row: Vec<f64> = (0..samples)
                .map(|t| {
                    let t = t as f64;
                    100.0 + 2.0 * (freq * t).sin() + 0.8 * global[t as usize] + rng.gen_range(-0.5..0.5)
                })
                .collect();
            data.push(row);
        }
    }
    TimeSeriesField::new(data).expect("synthetic series are valid")
}
