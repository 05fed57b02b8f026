use std::collections::{BTreeMap, HashSet};

use super::TriMesh;
use crate::error::{Error, Result};

pub fn edge_count(mesh: &TriMesh) -> usize {
    let mut edges = HashSet::with_capacity(mesh.face_count() * 2);
    for f in mesh.faces() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            edges.insert((a.min(b), a.max(b)));
        }
    }
    edges.len()
}

/// V - E + F over the referenced vertices.
pub fn euler_characteristic(mesh: &TriMesh) -> i64 {
    let v = mesh.vertex_count() - mesh.isolated_vertices().len();
    v as i64 - edge_count(mesh) as i64 + mesh.face_count() as i64
}

/// Boundary loops, each oriented so the surface lies to its left and started
/// at its smallest vertex index. Longest loops come first.
pub fn boundary_loops(mesh: &TriMesh) -> Vec<Vec<usize>> {
    let mut directed = HashSet::with_capacity(mesh.face_count() * 3);
    for f in mesh.faces() {
        for k in 0..3 {
            directed.insert((f[k], f[(k + 1) % 3]));
        }
    }
    let mut outgoing: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(a, b) in &directed {
        if !directed.contains(&(b, a)) {
            outgoing.entry(a).or_default().push(b);
        }
    }
    for targets in outgoing.values_mut() {
        targets.sort_unstable();
    }

    let mut loops = Vec::new();
    while let Some((&start, _)) = outgoing.iter().find(|(_, t)| !t.is_empty()) {
        let mut lp = vec![start];
        let mut cur = start;
        loop {
            let targets = outgoing.get_mut(&cur).expect("boundary edge chain");
            let next = targets.remove(0);
            if next == start {
                break;
            }
            lp.push(next);
            cur = next;
            if outgoing.get(&cur).map_or(true, |t| t.is_empty()) {
                // open chain; only reachable for inconsistent input
                break;
            }
        }
        let min_pos = lp.iter().enumerate().min_by_key(|(_, v)| **v).map(|(i, _)| i).unwrap_or(0);
        lp.rotate_left(min_pos);
        loops.push(lp);
    }
    loops.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    loops
}

/// Component index per face; faces sharing a vertex are connected.
pub fn connected_components(mesh: &TriMesh) -> (usize, Vec<usize>) {
    let n = mesh.vertex_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for f in mesh.faces() {
        let r0 = find(&mut parent, f[0]);
        for &v in &f[1..] {
            let r = find(&mut parent, v);
            if r != r0 {
                let (lo, hi) = (r.min(r0), r.max(r0));
                parent[hi] = lo;
            }
        }
    }
    let mut ids = BTreeMap::new();
    let comp: Vec<usize> = mesh
        .faces()
        .iter()
        .map(|f| {
            let root = find(&mut parent, f[0]);
            let next = ids.len();
            *ids.entry(root).or_insert(next)
        })
        .collect();
    (ids.len(), comp)
}

/// Checks that the mesh is a single connected disk: one boundary loop and
/// Euler characteristic 1.
pub fn validate_disk_topology(mesh: &TriMesh) -> Result<()> {
    let (ncomp, _) = connected_components(mesh);
    if ncomp != 1 {
        return Err(Error::Topology(format!("mesh has {ncomp} connected components, expected 1")));
    }
    let chi = euler_characteristic(mesh);
    let loops = boundary_loops(mesh).len();
    if chi != 1 || loops != 1 {
        return Err(Error::Topology(format!(
            "not a disk: Euler characteristic {chi}, {loops} boundary loops (expected 1 and 1)"
        )));
    }
    Ok(())
}
