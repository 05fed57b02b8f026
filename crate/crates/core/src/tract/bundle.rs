use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{resample, Cluster, EndpointAssignment, Polyline, StreamlineSet, VertexIndex};
use crate::error::{Error, Result};
use crate::geom::{add, dist, scale, Vec2, Vec3};
use crate::mesh::{RegionId, TriMesh};
use crate::param::DiskMap;
use crate::sphere::SphereMap;

const UNASSIGNED_GRAY: [f64; 3] = [0.5, 0.5, 0.5];

/// Surfaces and parameter domains that bundle endpoints are transferred into.
/// `disks[i]` parameterizes `meshes[i]`; the sphere map, when present, lists
/// the vertices of all meshes concatenated in order.
#[derive(Debug, Clone, Copy)]
pub struct BundleDomains<'a> {
    pub meshes: &'a [&'a TriMesh],
    pub disks: Option<&'a [&'a DiskMap]>,
    pub sphere: Option<&'a SphereMap>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleEndpoint {
    pub position: Vec3,
    /// Nearest surface vertex, global over the concatenated meshes.
    pub vertex: usize,
    pub mesh: usize,
    pub disk: Option<Vec2>,
    pub sphere: Option<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub cluster: usize,
    pub members: Vec<usize>,
    /// Sorted region pair, `None` for an unassigned bundle.
    pub regions: Option<(RegionId, RegionId)>,
    pub endpoints: [BundleEndpoint; 2],
    /// Cluster centroid oriented from `endpoints[0]` to `endpoints[1]`.
    pub centroid: Polyline,
    pub width: f64,
    pub color: [f64; 3],
}

impl Bundle {
    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub fn is_assigned(&self) -> bool {
        self.regions.is_some()
    }
}

fn vote(pairs: &[Option<(RegionId, RegionId)>]) -> Option<(RegionId, RegionId)> {
    let mut counts: BTreeMap<Option<(RegionId, RegionId)>, usize> = BTreeMap::new();
    for p in pairs {
        *counts.entry(*p).or_default() += 1;
    }
    // BTreeMap orders None first; iterate assigned pairs before it so that an
    // assigned pair wins a tie, then the lexicographically smallest.
    let mut best: Option<(Option<(RegionId, RegionId)>, usize)> = None;
    for (&p, &c) in counts.iter().filter(|(p, _)| p.is_some()).chain(counts.iter().filter(|(p, _)| p.is_none())) {
        if best.map_or(true, |(_, bc)| c > bc) {
            best = Some((p, c));
        }
    }
    best.and_then(|(p, _)| p)
}

/// Merges each cluster into one bundle at its endpoint centroids.
pub fn coalesce(
    clusters: &[Cluster],
    set: &StreamlineSet,
    assignments: &[EndpointAssignment],
    domains: &BundleDomains,
) -> Result<Vec<Bundle>> {
    if assignments.len() != set.len() {
        return Err(Error::InvalidParameter(format!(
            "{} endpoint assignments for {} streamlines",
            assignments.len(),
            set.len()
        )));
    }
    if clusters.is_empty() {
        return Ok(Vec::new());
    }
    let mut mesh_of = Vec::new();
    let mut colors: BTreeMap<RegionId, [f64; 3]> = BTreeMap::new();
    for (mi, m) in domains.meshes.iter().enumerate() {
        mesh_of.extend((0..m.vertex_count()).map(|v| (mi, v)));
        for (id, info) in m.regions().iter() {
            colors.entry(id).or_insert(info.color);
        }
    }
    if mesh_of.is_empty() {
        return Err(Error::EmptyMesh);
    }
    if let Some(disks) = domains.disks {
        if disks.len() != domains.meshes.len() || disks.iter().zip(domains.meshes).any(|(d, m)| d.uv.len() != m.vertex_count()) {
            return Err(Error::InvalidParameter("disk maps do not match the meshes".into()));
        }
    }
    if let Some(s) = domains.sphere {
        if s.xyz.len() != mesh_of.len() {
            return Err(Error::InvalidParameter(format!(
                "sphere map has {} vertices, meshes have {}",
                s.xyz.len(),
                mesh_of.len()
            )));
        }
    }
    let index = VertexIndex::from_meshes(domains.meshes);
    let transfer = |p: Vec3| -> BundleEndpoint {
        let (g, _) = index.nearest(p, None).expect("index is nonempty");
        let (mi, v) = mesh_of[g];
        BundleEndpoint {
            position: p,
            vertex: g,
            mesh: mi,
            disk: domains.disks.map(|d| d[mi].uv[v]),
            sphere: domains.sphere.map(|s| s.xyz[g]),
        }
    };

    let mut out = Vec::with_capacity(clusters.len());
    for cl in clusters {
        if cl.members.is_empty() {
            return Err(Error::InvalidParameter(format!("cluster {} has no members", cl.id)));
        }
        let k = cl.centroid.len();
        let mut ends = [[0.0; 3]; 2];
        let mut pairs = Vec::with_capacity(cl.members.len());
        for &i in &cl.members {
            if i >= set.len() {
                return Err(Error::InvalidParameter(format!("cluster {} references streamline {i}", cl.id)));
            }
            let s = resample(set.get(i), k)?;
            let direct: f64 = s.iter().zip(&cl.centroid).map(|(a, b)| dist(*a, *b)).sum();
            let flipped: f64 = s.iter().rev().zip(&cl.centroid).map(|(a, b)| dist(*a, *b)).sum();
            let (first, last) = if flipped < direct { (s[k - 1], s[0]) } else { (s[0], s[k - 1]) };
            ends[0] = add(ends[0], first);
            ends[1] = add(ends[1], last);
            pairs.push(assignments[i].pair());
        }
        let n = cl.members.len() as f64;
        let ends = ends.map(|e| scale(e, 1.0 / n));
        let regions = vote(&pairs);
        let color = match regions {
            Some((a, b)) => {
                let ca = colors.get(&a).copied().ok_or_else(|| Error::Region(a, "not in any region table".into()))?;
                let cb = colors.get(&b).copied().ok_or_else(|| Error::Region(b, "not in any region table".into()))?;
                [0, 1, 2].map(|c| (ca[c] + cb[c]) / 2.0)
            }
            None => UNASSIGNED_GRAY,
        };
        out.push(Bundle {
            cluster: cl.id,
            members: cl.members.clone(),
            regions,
            endpoints: [transfer(ends[0]), transfer(ends[1])],
            centroid: cl.centroid.clone(),
            width: n.sqrt(),
            color,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{RegionInfo, RegionTable};
    use crate::tract::{assign_endpoints, quickbundles};

    /// 4x1 strip: columns x <= 1 are region 1, x in 2..=3 region 2, x = 4 region 3.
    fn three_region_mesh() -> TriMesh {
        let m = crate::fixtures::strip(4, 1);
        let labels: Vec<RegionId> = m
            .vertices()
            .iter()
            .map(|p| if p[0] < 1.5 { 1 } else if p[0] < 3.5 { 2 } else { 3 })
            .collect();
        let mut t = RegionTable::new();
        t.insert(1, RegionInfo { name: "a".into(), color: [1.0, 0.0, 0.0], area_mm2: 0.0 });
        t.insert(2, RegionInfo { name: "b".into(), color: [0.0, 0.0, 1.0], area_mm2: 0.0 });
        t.insert(3, RegionInfo { name: "c".into(), color: [0.0, 1.0, 0.0], area_mm2: 0.0 });
        m.with_labels(labels, t).unwrap()
    }

    fn cluster_of(set: &StreamlineSet, members: Vec<usize>) -> Cluster {
        let centroid = resample(set.get(members[0]), 12).unwrap();
        Cluster { id: 0, members, centroid, k: 12 }
    }

    #[test]
    fn identical_pair_coalesces_at_shared_endpoints() {
        let m = three_region_mesh();
        let line = vec![[0.0, 0.0, 0.0], [1.0, 0.5, 2.0], [3.0, 1.0, 0.0]];
        let set = StreamlineSet::new(vec![line.clone(), line.clone()]).unwrap();
        let asg = assign_endpoints(&set, &[&m], 4.0).unwrap();
        let meshes = [&m];
        let d = BundleDomains { meshes: &meshes, disks: None, sphere: None };
        let b = coalesce(&[cluster_of(&set, vec![0, 1])], &set, &asg, &d).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].regions, Some((1, 2)));
        assert_eq!(b[0].width, 2f64.sqrt());
        assert_eq!(b[0].endpoints[0].position, line[0]);
        assert_eq!(b[0].endpoints[1].position, line[2]);
        assert_eq!(b[0].color, [0.5, 0.0, 0.5]);
    }

    #[test]
    fn majority_vote_and_reversed_member() {
        let m = three_region_mesh();
        let ab = vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        let ab_rev = vec![[2.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let ac = vec![[0.0, 0.0, 0.0], [4.0, 0.0, 0.0]];
        let set = StreamlineSet::new(vec![ab.clone(), ab_rev, ac]).unwrap();
        let asg = assign_endpoints(&set, &[&m], 4.0).unwrap();
        let meshes = [&m];
        let d = BundleDomains { meshes: &meshes, disks: None, sphere: None };
        let b = coalesce(&[cluster_of(&set, vec![0, 1, 2])], &set, &asg, &d).unwrap();
        assert_eq!(b[0].regions, Some((1, 2)));
        assert!(dist(b[0].endpoints[0].position, [0.0; 3]) < 1e-15);
        assert!(dist(b[0].endpoints[1].position, [8.0 / 3.0, 0.0, 0.0]) < 1e-12);
    }

    #[test]
    fn vote_ties() {
        assert_eq!(vote(&[Some((2, 3)), Some((1, 4))]), Some((1, 4)));
        assert_eq!(vote(&[None, Some((5, 6))]), Some((5, 6)));
        assert_eq!(vote(&[None, None, Some((5, 6))]), None);
        assert_eq!(vote(&[]), None);
    }

    #[test]
    fn unassigned_majority_gives_gray_bundle() {
        let m = three_region_mesh();
        let off = vec![[0.0, 0.0, 50.0], [2.0, 0.0, 50.0]];
        let set = StreamlineSet::new(vec![off]).unwrap();
        let asg = assign_endpoints(&set, &[&m], 4.0).unwrap();
        let meshes = [&m];
        let d = BundleDomains { meshes: &meshes, disks: None, sphere: None };
        let b = coalesce(&[cluster_of(&set, vec![0])], &set, &asg, &d).unwrap();
        assert!(!b[0].is_assigned());
        assert_eq!(b[0].color, UNASSIGNED_GRAY);
    }

    #[test]
    fn empty_cluster_list() {
        let m = three_region_mesh();
        let meshes = [&m];
        let d = BundleDomains { meshes: &meshes, disks: None, sphere: None };
        assert!(coalesce(&[], &StreamlineSet::default(), &[], &d).unwrap().is_empty());
    }

    #[test]
    fn endpoint_centroids_match_hand_average() {
        let m = three_region_mesh();
        let mut lines = Vec::new();
        for c in 0..5 {
            let y = c as f64 * 30.0;
            for j in 0..3 {
                let jitter = j as f64 * 0.1;
                lines.push(vec![[0.0 + jitter, y, 0.5], [2.0, y + jitter, 1.0], [4.0 - jitter, y + 2.0 * jitter, 0.0]]);
            }
        }
        let set = StreamlineSet::new(lines.clone()).unwrap();
        let qb = quickbundles(&set, 2.0, 12).unwrap();
        assert_eq!(qb.clusters.len(), 5);
        let asg = assign_endpoints(&set, &[&m], 200.0).unwrap();
        let meshes = [&m];
        let d = BundleDomains { meshes: &meshes, disks: None, sphere: None };
        let b = coalesce(&qb.clusters, &set, &asg, &d).unwrap();
        for (c, bundle) in b.iter().enumerate() {
            let mut s = [0.0; 3];
            let mut e = [0.0; 3];
            for j in 0..3 {
                let l = &lines[c * 3 + j];
                for a in 0..3 {
                    s[a] += l[0][a] / 3.0;
                    e[a] += l[2][a] / 3.0;
                }
            }
            assert!(dist(bundle.endpoints[0].position, s) < 1e-12);
            assert!(dist(bundle.endpoints[1].position, e) < 1e-12);
        }
    }
}
