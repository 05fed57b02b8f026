use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Hemisphere, RegionId, TriMesh};
use crate::tract::Bundle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub name: String,
    /// Region area over the total area of its hemisphere.
    pub relative_area: f64,
    pub hemisphere: Hemisphere,
    pub color: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub region_a: RegionId,
    pub region_b: RegionId,
    pub bundle_count: usize,
    pub streamline_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GraphReport {
    pub assigned_bundles: usize,
    pub assigned_streamlines: usize,
    pub unassigned_bundles: usize,
    pub unassigned_streamlines: usize,
}

/// Undirected region graph. Edges are keyed by the sorted region pair and
/// kept in ascending order; self-loops are allowed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConnectivityGraph {
    pub nodes: BTreeMap<RegionId, GraphNode>,
    pub edges: Vec<GraphEdge>,
}

impl ConnectivityGraph {
    pub fn edge(&self, a: RegionId, b: RegionId) -> Option<&GraphEdge> {
        let key = (a.min(b), a.max(b));
        self.edges
            .binary_search_by(|e| (e.region_a, e.region_b).cmp(&key))
            .ok()
            .map(|i| &self.edges[i])
    }

    /// Symmetric streamline-count matrix over the node ids in ascending order.
    pub fn adjacency(&self) -> (Vec<RegionId>, Vec<Vec<usize>>) {
        let ids: Vec<RegionId> = self.nodes.keys().copied().collect();
        let pos: BTreeMap<RegionId, usize> = ids.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let mut m = vec![vec![0; ids.len()]; ids.len()];
        for e in &self.edges {
            let (i, j) = (pos[&e.region_a], pos[&e.region_b]);
            m[i][j] = e.streamline_count;
            m[j][i] = e.streamline_count;
        }
        (ids, m)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let map_err = |e: csv::Error| Error::Parse(format!("csv: {e}"));
        out.write_record(["region_a", "region_b", "bundle_count", "streamline_count"]).map_err(map_err)?;
        for e in &self.edges {
            out.serialize((e.region_a, e.region_b, e.bundle_count, e.streamline_count)).map_err(map_err)?;
        }
        out.flush().map_err(|e| Error::Parse(format!("csv: {e}")))?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Nodes come from the region tables of `meshes`; relative areas are
/// normalized per hemisphere. Unassigned bundles are only counted.
pub fn build_graph(bundles: &[Bundle], meshes: &[&TriMesh]) -> Result<(ConnectivityGraph, GraphReport)> {
    let mut nodes = BTreeMap::new();
    let mut areas: Vec<(RegionId, Hemisphere, f64)> = Vec::new();
    for m in meshes {
        let region_areas = m.region_areas();
        for (id, info) in m.regions().iter() {
            if nodes.contains_key(&id) {
                return Err(Error::Region(id, "appears in more than one mesh".into()));
            }
            let area = region_areas.get(&id).copied().unwrap_or(0.0);
            if !(area > 0.0) {
                return Err(Error::Region(id, "has no surface area".into()));
            }
            areas.push((id, m.hemisphere(), area));
            nodes.insert(
                id,
                GraphNode { name: info.name.clone(), relative_area: 0.0, hemisphere: m.hemisphere(), color: info.color },
            );
        }
    }
    let mut totals: BTreeMap<Hemisphere, f64> = BTreeMap::new();
    for &(_, h, a) in &areas {
        *totals.entry(h).or_default() += a;
    }
    for (id, h, a) in areas {
        nodes.get_mut(&id).expect("node inserted above").relative_area = a / totals[&h];
    }

    let mut report = GraphReport::default();
    let mut edges: BTreeMap<(RegionId, RegionId), GraphEdge> = BTreeMap::new();
    for b in bundles {
        let Some((a, c)) = b.regions else {
            report.unassigned_bundles += 1;
            report.unassigned_streamlines += b.member_count();
            continue;
        };
        for r in [a, c] {
            if !nodes.contains_key(&r) {
                return Err(Error::Region(r, "referenced by a bundle but missing from the region tables".into()));
            }
        }
        let e = edges.entry((a.min(c), a.max(c))).or_insert(GraphEdge {
            region_a: a.min(c),
            region_b: a.max(c),
            bundle_count: 0,
            streamline_count: 0,
        });
        e.bundle_count += 1;
        e.streamline_count += b.member_count();
        report.assigned_bundles += 1;
        report.assigned_streamlines += b.member_count();
    }
    Ok((ConnectivityGraph { nodes, edges: edges.into_values().collect() }, report))
}
