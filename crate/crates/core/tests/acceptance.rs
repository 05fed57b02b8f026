//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use cortex_atlas::connect::{build_graph, regress_mean_gray, seed_correlation, Seed, TimeSeriesField};
use cortex_atlas::fixtures::{self, medial_wall_label};
use cortex_atlas::geom::{Vec2, Vec3};
use cortex_atlas::mesh::{remove_region, Hemisphere, RegionInfo, RegionTable, TriMesh};
use cortex_atlas::param::{
    area_correct_traced, distortion_report, face_dilatation, harmonic_disk_map, mean_value_residual, AreaCorrectConfig,
    DiskMap,
};
use cortex_atlas::pipeline::{run, synthetic_inputs, PipelineConfig};
use cortex_atlas::sphere::{
    align_hemispheres, inverse_stereographic, inverse_stereographic_point, stereographic_point, SphereSide,
    DEFAULT_SEAM_SAMPLES,
};
use cortex_atlas::tract::{assign_endpoints, coalesce, mdf, quickbundles, resample, BundleDomains, StreamlineSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cortex_mesh() -> TriMesh {
    let m = fixtures::synthetic_hemisphere(99, Hemisphere::Left);
    remove_region(&m, medial_wall_label(Hemisphere::Left)).expect("medial wall removal").mesh
}

fn harmonic_validity() -> Outcome {
    let mesh = cortex_mesh();
    let t = Instant::now();
    let map = harmonic_disk_map(&mesh).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let flipped = map.flipped_faces(&mesh).len();
    let radius_err = map.boundary.iter().map(|&b| (map.uv[b][0].hypot(map.uv[b][1]) - 1.0).abs()).fold(0.0, f64::max);
    let residual = mean_value_residual(&mesh, &map);
    check(
        flipped == 0 && radius_err < 1e-9 && residual < 1e-8 && secs < 10.0,
        format!(
            "V={} flipped={flipped} boundary_radius_err={radius_err:.2e} max_mean_value_residual={residual:.2e} time={secs:.2}s",
            mesh.vertex_count()
        ),
    )
}

fn area_correction() -> Outcome {
    let mesh = cortex_mesh();
    let harmonic = harmonic_disk_map(&mesh).map_err(|e| e.to_string())?;
    let t = Instant::now();
    let trace = area_correct_traced(&harmonic, &mesh, &AreaCorrectConfig::default()).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let before = distortion_report(&mesh, &harmonic).map_err(|e| e.to_string())?.rms_log_rho;
    let after = distortion_report(&mesh, &trace.map).map_err(|e| e.to_string())?.rms_log_rho;
    let flipped = trace.map.flipped_faces(&mesh).len();
    let monotone = trace.energies.windows(2).all(|w| w[1] <= w[0]);
    let ratio = after / before;
    check(
        ratio <= 0.5 && flipped == 0 && monotone && secs < 30.0,
        format!(
            "rms_log_rho {before:.4} -> {after:.4} (ratio {ratio:.4}) flipped={flipped} energy_monotone={monotone} iterations={} time={secs:.2}s",
            trace.iterations
        ),
    )
}

/// Largest K - 1 over equilateral micro-triangles of circumradius `h` centred on a polar grid.
fn micro_triangle_dilatation(h: f64, radial: usize, angular: usize, side: SphereSide) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..radial {
        let r = 0.98 * (i as f64 + 0.5) / radial as f64;
        for j in 0..angular {
            let a = 2.0 * PI * j as f64 / angular as f64;
            let c = [r * a.cos(), r * a.sin()];
            let corners: [Vec2; 3] = [0, 1, 2].map(|k| {
                let t = a + 2.0 * PI * k as f64 / 3.0;
                [c[0] + h * t.cos(), c[1] + h * t.sin()]
            });
            let src: [Vec3; 3] = corners.map(|p| [p[0], p[1], 0.0]);
            let dst: [Vec3; 3] = corners.map(|p| inverse_stereographic_point(p, side));
            let k = face_dilatation(src, dst).expect("non-degenerate micro triangle");
            worst = worst.max(k - 1.0);
        }
    }
    worst
}

fn stereographic() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut max_err: f64 = 0.0;
    for i in 0..10_000 {
        let r = rng.gen_range(0.0f64..1.0).sqrt();
        let t = rng.gen_range(-PI..PI);
        let uv = [r * t.cos(), r * t.sin()];
        let side = if i % 2 == 0 { SphereSide::Lower } else { SphereSide::Upper };
        let back = stereographic_point(inverse_stereographic_point(uv, side), side);
        max_err = max_err.max((back[0] - uv[0]).abs()).max((back[1] - uv[1]).abs());
    }
    let k_err = micro_triangle_dilatation(1e-7, 100, 100, SphereSide::Lower)
        .max(micro_triangle_dilatation(1e-7, 100, 100, SphereSide::Upper));
    // the piecewise-linear dilatation error shrinks linearly with triangle size
    let coarse = micro_triangle_dilatation(1e-3, 20, 20, SphereSide::Lower);
    let fine = micro_triangle_dilatation(1e-4, 20, 20, SphereSide::Lower);
    let order = (coarse / fine).log10();
    check(
        max_err < 1e-12 && k_err < 1e-6 && order > 0.9,
        format!("round_trip_max_err={max_err:.2e} over 10000 points; max|K-1|={k_err:.2e} on 20000 micro-triangles; convergence order {order:.2}"),
    )
}

fn rotate_uv(map: &DiskMap, deg: f64) -> DiskMap {
    let (s, c) = deg.to_radians().sin_cos();
    DiskMap { uv: map.uv.iter().map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]]).collect(), ..map.clone() }
}

fn alignment() -> Outcome {
    let mesh = fixtures::synthetic_hemisphere(40, Hemisphere::Left);
    let mesh = remove_region(&mesh, medial_wall_label(Hemisphere::Left)).map_err(|e| e.to_string())?.mesh;
    let map = harmonic_disk_map(&mesh).map_err(|e| e.to_string())?;
    let left = inverse_stereographic(&map, SphereSide::Lower);
    let right = inverse_stereographic(&rotate_uv(&map, 17.0), SphereSide::Upper);
    let a = align_hemispheres(&left, &right, DEFAULT_SEAM_SAMPLES)
        .map_err(|e| e.to_string())?
        .alignment
        .expect("alignment recorded");
    let err = (a.rotation + 17f64.to_radians()).abs();
    check(
        err < 1e-6 && a.rms_mismatch < 1e-9 && !a.reflected,
        format!("recovered {:.9} deg (error {err:.2e} rad), rms_mismatch={:.2e}", -a.rotation.to_degrees(), a.rms_mismatch),
    )
}

mod oracle {
    use super::*;

    fn length(a: Vec3, b: Vec3) -> f64 {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }

    /// Arc-length resampling through a cumulative-length table.
    pub fn resample(line: &[Vec3], k: usize) -> Option<Vec<Vec3>> {
        let mut cum = vec![0.0];
        for w in line.windows(2) {
            cum.push(cum.last().unwrap() + length(w[0], w[1]));
        }
        let total = *cum.last().unwrap();
        if total == 0.0 {
            return None;
        }
        let mut out = vec![line[0]];
        for j in 1..k - 1 {
            let s = total * j as f64 / (k - 1) as f64;
            let seg = (cum.partition_point(|&c| c < s)).clamp(1, line.len() - 1) - 1;
            let span = cum[seg + 1] - cum[seg];
            let t = if span > 0.0 { ((s - cum[seg]) / span).clamp(0.0, 1.0) } else { 0.0 };
            let (p, q) = (line[seg], line[seg + 1]);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]), p[2] + t * (q[2] - p[2])]);
        }
        out.push(line[line.len() - 1]);
        Some(out)
    }

    fn mean_dist(a: &[Vec3], b: &[Vec3], flip: bool) -> f64 {
        let k = a.len();
        (0..k).map(|i| length(a[i], if flip { b[k - 1 - i] } else { b[i] })).sum::<f64>() / k as f64
    }

    pub struct Result {
        pub members: Vec<Vec<usize>>,
        pub centroids: Vec<Vec<Vec3>>,
    }

    /// Greedy pass that stores every aligned member and recomputes each
    /// centroid from scratch as their plain mean.
    pub fn quickbundles(lines: &[Vec<Vec3>], theta: f64, k: usize) -> Result {
        let mut members: Vec<Vec<usize>> = Vec::new();
        let mut aligned: Vec<Vec<Vec<Vec3>>> = Vec::new();
        let mut centroids: Vec<Vec<Vec3>> = Vec::new();
        for (i, line) in lines.iter().enumerate() {
            let Some(s) = resample(line, k) else { continue };
            let dists: Vec<(f64, bool)> = centroids
                .iter()
                .map(|c| {
                    let (d, f) = (mean_dist(&s, c, false), mean_dist(&s, c, true));
                    if f < d { (f, true) } else { (d, false) }
                })
                .collect();
            let best = dists.iter().enumerate().fold(None, |acc: Option<(usize, f64, bool)>, (c, &(d, f))| match acc {
                Some((_, bd, _)) if bd <= d => acc,
                _ => Some((c, d, f)),
            });
            match best {
                Some((c, d, flip)) if d <= theta => {
                    let s = if flip { s.into_iter().rev().collect() } else { s };
                    members[c].push(i);
                    aligned[c].push(s);
                    let n = aligned[c].len() as f64;
                    centroids[c] = (0..k)
                        .map(|j| {
                            let mut p = [0.0; 3];
                            for m in &aligned[c] {
                                for a in 0..3 {
                                    p[a] += m[j][a];
                                }
                            }
                            p.map(|x| x / n)
                        })
                        .collect();
                }
                _ => {
                    members.push(vec![i]);
                    aligned.push(vec![s.clone()]);
                    centroids.push(s);
                }
            }
        }
        Result { members, centroids }
    }
}

fn random_set(rng: &mut ChaCha8Rng) -> Vec<Vec<Vec3>> {
    let n = rng.gen_range(0..=50);
    let protos: Vec<Vec<Vec3>> = (0..rng.gen_range(1..6))
        .map(|_| (0..rng.gen_range(2..8)).map(|_| [0, 1, 2].map(|_| rng.gen_range(-40.0..40.0))).collect())
        .collect();
    (0..n)
        .map(|_| {
            let p = &protos[rng.gen_range(0..protos.len())];
            let noise = rng.gen_range(0.0..6.0);
            let mut l: Vec<Vec3> = p.iter().map(|q| q.map(|x| x + rng.gen_range(-noise..=noise))).collect();
            if rng.gen_bool(0.5) {
                l.reverse();
            }
            if rng.gen_bool(0.02) {
                l = vec![l[0]; 3];
            }
            l
        })
        .collect()
}

fn quickbundles_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    let mut monotone_failures = 0;
    for _ in 0..200 {
        let lines = random_set(&mut rng);
        let theta = rng.gen_range(1.0..30.0);
        let k = rng.gen_range(2..=20);
        let set = StreamlineSet::new(lines.clone()).map_err(|e| e.to_string())?;
        let got = quickbundles(&set, theta, k).map_err(|e| e.to_string())?;
        let want = oracle::quickbundles(&lines, theta, k);
        let got_members: Vec<Vec<usize>> = got.clusters.iter().map(|c| c.members.clone()).collect();
        if got_members != want.members {
            mismatches += 1;
            continue;
        }
        for (c, w) in got.clusters.iter().zip(&want.centroids) {
            for (p, q) in c.centroid.iter().zip(w) {
                for a in 0..3 {
                    worst = worst.max((p[a] - q[a]).abs());
                }
            }
        }
        let mut last = usize::MAX;
        for t in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, f64::INFINITY] {
            let n = quickbundles(&set, t, k).map_err(|e| e.to_string())?.clusters.len();
            if n > last {
                monotone_failures += 1;
            }
            last = n;
        }
    }
    check(
        mismatches == 0 && worst < 1e-12 && monotone_failures == 0,
        format!("200 sets: assignment mismatches={mismatches} max_centroid_diff={worst:.2e} theta_grid_violations={monotone_failures}"),
    )
}

fn mdf_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_sym: f64 = 0.0;
    let mut worst_rev: f64 = 0.0;
    let mut negative = 0;
    for _ in 0..1000 {
        let k = rng.gen_range(2..=20);
        let a = resample(&(0..rng.gen_range(2..9)).map(|_| [0, 1, 2].map(|_| rng.gen_range(-50.0..50.0))).collect::<Vec<_>>(), k)
            .map_err(|e| e.to_string())?;
        let b = resample(&(0..rng.gen_range(2..9)).map(|_| [0, 1, 2].map(|_| rng.gen_range(-50.0..50.0))).collect::<Vec<_>>(), k)
            .map_err(|e| e.to_string())?;
        let ra: Vec<Vec3> = a.iter().rev().copied().collect();
        let rb: Vec<Vec3> = b.iter().rev().copied().collect();
        let d = mdf(&a, &b).unwrap();
        if d < 0.0 {
            negative += 1;
        }
        worst_sym = worst_sym.max((d - mdf(&b, &a).unwrap()).abs()).max((d - mdf(&ra, &rb).unwrap()).abs());
        worst_rev = worst_rev.max(mdf(&a, &ra).unwrap()).max(mdf(&a, &a).unwrap());
    }
    let p = resample(&[[0.0; 3], [10.0, 0.0, 0.0]], 12).unwrap();
    let q = resample(&[[0.0, 1.0, 0.0], [10.0, 1.0, 0.0]], 12).unwrap();
    let parallel = mdf(&p, &q).unwrap();
    check(
        worst_sym < 1e-12 && worst_rev < 1e-12 && negative == 0 && (parallel - 1.0).abs() < 1e-12,
        format!("1000 pairs: symmetry_err={worst_sym:.2e} self/reversal={worst_rev:.2e} negative={negative}; unit-offset segments={parallel:.15}"),
    )
}

/// Four columns of a 3x1 strip, one region per column.
fn four_region_mesh() -> TriMesh {
    let m = fixtures::strip(3, 1);
    let labels = m.vertices().iter().map(|p| p[0] as u32 + 1).collect();
    let mut t = RegionTable::new();
    for r in 1..=4 {
        t.insert(r, RegionInfo { name: format!("r{r}"), color: [0.2 * r as f64, 0.5, 0.1], area_mm2: 0.0 });
    }
    m.with_labels(labels, t).unwrap().with_hemisphere(Hemisphere::Left)
}

fn connectivity() -> Outcome {
    let mesh = four_region_mesh();
    let at = |r: u32| [(r - 1) as f64, 0.0, 0.0];
    // (from, to, copies, arc height): every arc is its own cluster at theta = 1
    let layout = [(1, 2, 3, 5.0), (1, 4, 2, 10.0), (2, 3, 4, 15.0), (3, 4, 1, 20.0), (2, 3, 1, 40.0)];
    let mut lines = Vec::new();
    for &(a, b, copies, h) in &layout {
        for c in 0..copies {
            let (pa, pb) = (at(a), at(b));
            let mid = [(pa[0] + pb[0]) / 2.0, 0.01 * c as f64, h];
            lines.push(if c % 2 == 0 { vec![pa, mid, pb] } else { vec![pb, mid, pa] });
        }
    }
    lines.push(vec![[0.0, 0.0, 50.0], [3.0, 0.0, 50.0]]);
    lines.push(vec![[1.0, 1.0, 0.0]; 2]);
    let total = lines.len();
    let set = StreamlineSet::new(lines).map_err(|e| e.to_string())?;
    let qb = quickbundles(&set, 1.0, 12).map_err(|e| e.to_string())?;
    let asg = assign_endpoints(&set, &[&mesh], 0.1).map_err(|e| e.to_string())?;
    let meshes = [&mesh];
    let bundles = coalesce(&qb.clusters, &set, &asg, &BundleDomains { meshes: &meshes, disks: None, sphere: None })
        .map_err(|e| e.to_string())?;
    let (g, report) = build_graph(&bundles, &meshes).map_err(|e| e.to_string())?;
    let conserved = report.assigned_streamlines + report.unassigned_streamlines + qb.skipped.len() == total;

    let mut expected = vec![vec![0usize; 4]; 4];
    for &(a, b, copies, _) in &layout {
        let (i, j) = ((a - 1) as usize, (b - 1) as usize);
        expected[i][j] += copies;
        if i != j {
            expected[j][i] += copies;
        }
    }
    let (ids, matrix) = g.adjacency();
    let bundle_23 = g.edge(3, 2).map(|e| e.bundle_count);
    let area_sum: f64 = g.nodes.values().map(|n| n.relative_area).sum();

    // the same bookkeeping on the two-hemisphere synthetic data
    let lh = fixtures::synthetic_hemisphere(20, Hemisphere::Left);
    let rh = fixtures::synthetic_hemisphere(20, Hemisphere::Right);
    let pair = [&lh, &rh];
    let syn = fixtures::synthetic_streamlines(&pair, 2000, 25, 3);
    let sqb = quickbundles(&syn, 10.0, 12).map_err(|e| e.to_string())?;
    let sasg = assign_endpoints(&syn, &pair, 4.0).map_err(|e| e.to_string())?;
    let sb = coalesce(&sqb.clusters, &syn, &sasg, &BundleDomains { meshes: &pair, disks: None, sphere: None })
        .map_err(|e| e.to_string())?;
    let (sg, sr) = build_graph(&sb, &pair).map_err(|e| e.to_string())?;
    let syn_conserved = sr.assigned_streamlines + sr.unassigned_streamlines + sqb.skipped.len() == syn.len();
    let hemi_err = [Hemisphere::Left, Hemisphere::Right]
        .iter()
        .map(|h| (sg.nodes.values().filter(|n| n.hemisphere == *h).map(|n| n.relative_area).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);

    check(
        conserved
            && syn_conserved
            && ids == vec![1, 2, 3, 4]
            && matrix == expected
            && bundle_23 == Some(2)
            && (area_sum - 1.0).abs() < 1e-12
            && hemi_err < 1e-12,
        format!(
            "4-region matrix {}; conservation fixture={conserved} synthetic={syn_conserved} ({} assigned, {} unassigned, {} skipped of {}); relative-area sum error {:.1e}",
            if matrix == expected { "matches" } else { "differs" },
            sr.assigned_streamlines,
            sr.unassigned_streamlines,
            sqb.skipped.len(),
            syn.len(),
            hemi_err.max((area_sum - 1.0).abs())
        ),
    )
}

fn functional() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let seed: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let neg: Vec<f64> = seed.iter().map(|x| -x).collect();
    let mut rows = vec![seed.clone(), seed, neg, vec![3.5; 20]];
    rows.extend((0..10).map(|_| (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>()));
    let ts = TimeSeriesField::new(rows).map_err(|e| e.to_string())?;
    let c = seed_correlation(&ts, Seed::Vertex(0), None).map_err(|e| e.to_string())?;
    let self_err = (c.values[1] - 1.0).abs();
    let neg_err = (c.values[2] + 1.0).abs();
    let flat_ok = c.values[3] == 0.0 && c.degenerate == vec![3];
    let in_range = c.values.iter().all(|v| (-1.0..=1.0).contains(v));

    let field = TimeSeriesField::new((0..10).map(|_| (0..20).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect())
        .map_err(|e| e.to_string())?;
    let g = field.mean_series();
    let once = regress_mean_gray(&field).map_err(|e| e.to_string())?.field;
    let twice = regress_mean_gray(&once).map_err(|e| e.to_string())?.field;
    let ortho = once.rows().map(|r| r.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>().abs()).fold(0.0, f64::max);
    let idem = once.as_flat().iter().zip(twice.as_flat()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    check(
        self_err < 1e-12 && neg_err < 1e-12 && flat_ok && in_range && ortho < 1e-10 && idem < 1e-10,
        format!(
            "self={:.15} negated={:.15} flat={} flagged={:?}; max|<residual,g>|={ortho:.2e} idempotence={idem:.2e}",
            c.values[1], c.values[2], c.values[3], c.degenerate
        ),
    )
}

fn full_config() -> PipelineConfig {
    PipelineConfig {
        channels: vec!["myelin".into()],
        seed: Some(Seed::Region(1001)),
        regress_mean_gray: true,
        scales: vec![1.0, 1.5, 2.0],
        ..PipelineConfig::default()
    }
}

fn end_to_end(bytes_out: &mut Option<Vec<u8>>) -> Outcome {
    let inputs = synthetic_inputs(99, 10_000, 120, 7);
    let vertices: usize = inputs.hemispheres.iter().map(|h| h.mesh.vertex_count()).sum();
    let t = Instant::now();
    let out = run(inputs, &full_config()).map_err(|e| e.to_string())?;
    let bytes = out.scene.to_json_bytes().map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    *bytes_out = Some(bytes.clone());
    check(
        secs < 60.0,
        format!(
            "{vertices} input vertices, 10000 streamlines -> {} bundles, {} overlays, {:.1} MB scene in {secs:.2}s",
            out.scene.bundles.len(),
            out.scene.overlays.len(),
            bytes.len() as f64 / 1e6
        ),
    )
}

fn determinism(first: Option<&Vec<u8>>) -> Outcome {
    let first = first.ok_or("first run did not produce a scene")?;
    let out = run(synthetic_inputs(99, 10_000, 120, 7), &full_config()).map_err(|e| e.to_string())?;
    let second = out.scene.to_json_bytes().map_err(|e| e.to_string())?;
    let same = *first == second;
    check(same, format!("second run {} ({} bytes)", if same { "byte-identical" } else { "differs" }, second.len()))
}

fn main() {
    let mut scene_bytes = None;
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut record = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let status = if r.is_ok() { "PASS" } else { "FAIL" };
        let detail = match &r {
            Ok(d) | Err(d) => d,
        };
        println!("{status}  {name}: {detail} [{:.1}s]", t.elapsed().as_secs_f64());
        results.push((name, r));
    };
    record("harmonic map validity", &mut harmonic_validity);
    record("area correction efficacy", &mut area_correction);
    record("stereographic round-trip and conformality", &mut stereographic);
    record("hemisphere alignment recovery", &mut alignment);
    record("quickbundles oracle equivalence", &mut quickbundles_oracle);
    record("mdf properties", &mut mdf_properties);
    record("connectivity bookkeeping", &mut connectivity);
    record("functional overlays", &mut functional);
    record("end-to-end runtime", &mut || end_to_end(&mut scene_bytes));
    let first = scene_bytes.clone();
    record("determinism", &mut || determinism(first.as_ref()));

    let failed: Vec<&str> = results.iter().filter(|(_, r)| r.is_err()).map(|(n, _)| *n).collect();
    println!("acceptance: {} passed, {} failed", results.len() - failed.len(), failed.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
