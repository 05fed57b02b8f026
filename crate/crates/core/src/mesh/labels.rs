use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use super::io::default_region;
use super::{validate_disk_topology, RegionId, RegionInfo, RegionTable, TriMesh};
use crate::error::{Error, Result};

/// Deterministic display colour for a label id: golden-ratio hue stepping.
pub fn label_color(id: RegionId) -> [f64; 3] {
    let h = (id as f64 * 0.618_033_988_749_894_9).fract() * 6.0;
    let (s, v) = (0.65, 0.9);
    let c = v * s;
    let x = c * (1.0 - ((h % 2.0) - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [r + m, g + m, b + m]
}

/// Reads `vertex_id,label_id[,label_name,r,g,b]` rows. A row whose vertex
/// field is `*` declares the label given to vertices without a row.
pub fn attach_labels(mesh: TriMesh, csv: impl AsRef<Path>) -> Result<TriMesh> {
    let path = csv.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    attach_labels_from_reader(mesh, file)
}

pub fn attach_labels_from_reader(mesh: TriMesh, reader: impl Read) -> Result<TriMesh> {
    let n = mesh.vertex_count();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);

    let mut labels: Vec<Option<RegionId>> = vec![None; n];
    let mut default_label = None;
    let mut table = RegionTable::new();

    for (row_no, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("label CSV row {}: {e}", row_no + 1)))?;
        if rec.len() == 0 || (rec.len() == 1 && rec[0].is_empty()) {
            continue;
        }
        if row_no == 0 && rec[0].eq_ignore_ascii_case("vertex_id") {
            continue;
        }
        if rec.len() != 2 && rec.len() != 6 {
            return Err(Error::Parse(format!(
                "label CSV row {}: expected 2 or 6 fields, got {}",
                row_no + 1,
                rec.len()
            )));
        }
        let label: RegionId = rec[1]
            .parse()
            .map_err(|_| Error::Parse(format!("label CSV row {}: bad label id '{}'", row_no + 1, &rec[1])))?;
        if rec.len() == 6 && !table.contains(label) {
            let mut color = [0.0; 3];
            for (k, c) in color.iter_mut().enumerate() {
                *c = rec[3 + k]
                    .parse()
                    .map_err(|_| Error::Parse(format!("label CSV row {}: bad colour component", row_no + 1)))?;
                if !(0.0..=1.0).contains(c) {
                    return Err(Error::Label(format!(
                        "row {}: colour component {c} outside [0, 1]",
                        row_no + 1
                    )));
                }
            }
            table.insert(label, RegionInfo { name: rec[2].to_string(), color, area_mm2: 0.0 });
        }
        if &rec[0] == "*" {
            default_label = Some(label);
            continue;
        }
        let vid: usize = rec[0]
            .parse()
            .map_err(|_| Error::Parse(format!("label CSV row {}: bad vertex id '{}'", row_no + 1, &rec[0])))?;
        if vid >= n {
            return Err(Error::Label(format!("vertex id {vid} out of range (mesh has {n} vertices)")));
        }
        if labels[vid].replace(label).is_some() {
            return Err(Error::Label(format!("duplicate row for vertex {vid}")));
        }
    }

    let labels = labels
        .into_iter()
        .enumerate()
        .map(|(v, l)| {
            l.or(default_label)
                .ok_or_else(|| Error::Label(format!("vertex {v} has no label and no default label is declared")))
        })
        .collect::<Result<Vec<_>>>()?;
    let used: BTreeSet<RegionId> = labels.iter().copied().collect();
    for &id in &used {
        if !table.contains(id) {
            table.insert(id, default_region(id));
        }
    }
    table.retain(|id, _| used.contains(id));
    mesh.with_labels(labels, table)
}

/// Submesh left after deleting a labelled region, with the old-to-new vertex map.
#[derive(Debug, Clone)]
pub struct RemovedRegion {
    pub mesh: TriMesh,
    pub vertex_map: Vec<Option<usize>>,
}

/// Deletes every face whose three corners carry `label`, drops the vertices
/// that become unreferenced, and checks that what remains is a single disk.
pub fn remove_region(mesh: &TriMesh, label: RegionId) -> Result<RemovedRegion> {
    let labels = mesh
        .labels()
        .ok_or_else(|| Error::Label("mesh has no labels".into()))?;
    if !labels.contains(&label) {
        return Ok(RemovedRegion { mesh: mesh.clone(), vertex_map: (0..mesh.vertex_count()).map(Some).collect() });
    }
    let kept: Vec<[usize; 3]> = mesh
        .faces()
        .iter()
        .filter(|f| !f.iter().all(|&v| labels[v] == label))
        .copied()
        .collect();
    if kept.is_empty() {
        return Err(Error::Region(label, "removing the region leaves an empty mesh".into()));
    }
    let mut vertex_map = vec![None; mesh.vertex_count()];
    let mut next = 0;
    for f in &kept {
        for &v in f {
            if vertex_map[v].is_none() {
                vertex_map[v] = Some(next);
                next += 1;
            }
        }
    }
    // keep vertex order stable: renumber in ascending old index
    let mut order: Vec<usize> = (0..mesh.vertex_count()).filter(|&v| vertex_map[v].is_some()).collect();
    order.sort_unstable();
    for (new, &old) in order.iter().enumerate() {
        vertex_map[old] = Some(new);
    }
    let vertices = order.iter().map(|&v| mesh.vertices()[v]).collect();
    let faces = kept.iter().map(|f| f.map(|v| vertex_map[v].unwrap())).collect();
    let new_labels: Vec<RegionId> = order.iter().map(|&v| labels[v]).collect();
    let channels: BTreeMap<String, Vec<f64>> = mesh
        .channels()
        .iter()
        .map(|(k, vals)| (k.clone(), order.iter().map(|&v| vals[v]).collect()))
        .collect();
    let used: BTreeSet<RegionId> = new_labels.iter().copied().collect();
    let mut table = mesh.regions().clone();
    table.retain(|id, _| used.contains(id));

    let out = TriMesh::from_parts(vertices, faces, Some(new_labels), table, channels, mesh.hemisphere())?;
    let (ncomp, _) = super::connected_components(&out);
    if ncomp != 1 {
        return Err(Error::Region(label, format!("removal disconnects the mesh into {ncomp} parts")));
    }
    validate_disk_topology(&out).map_err(|e| Error::Region(label, format!("result is not a disk: {e}")))?;
    Ok(RemovedRegion { mesh: out, vertex_map })
}
