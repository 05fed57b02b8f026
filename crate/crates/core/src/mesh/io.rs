use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Hemisphere, RegionId, RegionInfo, RegionTable, TriMesh};
use crate::error::{Error, Result};
use crate::geom::Vec3;

pub const MESH_JSON_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Vtk,
    Json,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "off" => Some(MeshFormat::Off),
            "vtk" => Some(MeshFormat::Vtk),
            "json" => Some(MeshFormat::Json),
            _ => None,
        }
    }
}

impl std::str::FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "off" => Ok(MeshFormat::Off),
            "vtk" => Ok(MeshFormat::Vtk),
            "json" => Ok(MeshFormat::Json),
            _ => Err(Error::InvalidParameter(format!("unknown mesh format '{s}'"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RegionRecord {
    id: RegionId,
    name: String,
    color: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct MeshDocument {
    version: u32,
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<RegionId>>,
    #[serde(default)]
    channels: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    regions: Option<Vec<RegionRecord>>,
    #[serde(default)]
    hemisphere: Hemisphere,
}

pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text, format)
}

pub fn parse_mesh(text: &str, format: MeshFormat) -> Result<TriMesh> {
    match format {
        MeshFormat::Off => parse_off(text),
        MeshFormat::Vtk => parse_vtk(text),
        MeshFormat::Json => parse_json(text),
    }
}

pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>, format: MeshFormat) -> Result<()> {
    let path = path.as_ref();
    let text = format_mesh(mesh, format)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn format_mesh(mesh: &TriMesh, format: MeshFormat) -> Result<String> {
    let mut s = String::new();
    match format {
        MeshFormat::Off => {
            let _ = writeln!(s, "OFF\n{} {} 0", mesh.vertex_count(), mesh.face_count());
            for p in mesh.vertices() {
                let _ = writeln!(s, "{:?} {:?} {:?}", p[0], p[1], p[2]);
            }
            for f in mesh.faces() {
                let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
            }
        }
        MeshFormat::Vtk => {
            let _ = writeln!(s, "# vtk DataFile Version 3.0\ncortex-atlas mesh\nASCII\nDATASET POLYDATA");
            let _ = writeln!(s, "POINTS {} double", mesh.vertex_count());
            for p in mesh.vertices() {
                let _ = writeln!(s, "{:?} {:?} {:?}", p[0], p[1], p[2]);
            }
            let _ = writeln!(s, "POLYGONS {} {}", mesh.face_count(), 4 * mesh.face_count());
            for f in mesh.faces() {
                let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
            }
        }
        MeshFormat::Json => {
            let regions = (!mesh.regions().is_empty()).then(|| {
                mesh.regions()
                    .iter()
                    .map(|(id, r)| RegionRecord { id, name: r.name.clone(), color: r.color })
                    .collect()
            });
            let doc = MeshDocument {
                version: MESH_JSON_VERSION,
                vertices: mesh.vertices().to_vec(),
                faces: mesh.faces().to_vec(),
                labels: mesh.labels().map(<[_]>::to_vec),
                channels: mesh.channels().clone(),
                regions,
                hemisphere: mesh.hemisphere(),
            };
            s = serde_json::to_string(&doc)?;
        }
    }
    Ok(s)
}

/// Whitespace token stream with `#` comments stripped.
fn tokens(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace)
}

fn next_num<'a, T: std::str::FromStr>(it: &mut impl Iterator<Item = &'a str>, what: &str) -> Result<T> {
    let tok = it
        .next()
        .ok_or_else(|| Error::Parse(format!("unexpected end of file while reading {what}")))?;
    tok.parse()
        .map_err(|_| Error::Parse(format!("invalid {what}: '{tok}'")))
}

fn parse_off(text: &str) -> Result<TriMesh> {
    let mut it = tokens(text).peekable();
    match it.next() {
        Some("OFF") => {}
        Some(h) if h.starts_with("OFF") => {
            return Err(Error::Parse(format!("unsupported OFF variant '{h}'")));
        }
        _ => return Err(Error::Parse("missing OFF header".into())),
    }
    let nv: usize = next_num(&mut it, "vertex count")?;
    let nf: usize = next_num(&mut it, "face count")?;
    let _ne: usize = next_num(&mut it, "edge count")?;
    if nv == 0 || nf == 0 {
        return Err(Error::EmptyMesh);
    }
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        vertices.push([
            next_num(&mut it, "coordinate")?,
            next_num(&mut it, "coordinate")?,
            next_num(&mut it, "coordinate")?,
        ]);
    }
    let faces = read_faces(&mut it, nf)?;
    TriMesh::new(vertices, faces)
}

fn read_faces<'a>(it: &mut impl Iterator<Item = &'a str>, nf: usize) -> Result<Vec<[usize; 3]>> {
    let mut faces = Vec::with_capacity(nf);
    for fi in 0..nf {
        let n: usize = next_num(it, "face size")?;
        if n != 3 {
            return Err(Error::Parse(format!("face {fi} has {n} corners; only triangles are supported")));
        }
        faces.push([
            next_num(it, "face index")?,
            next_num(it, "face index")?,
            next_num(it, "face index")?,
        ]);
    }
    Ok(faces)
}

fn parse_vtk(text: &str) -> Result<TriMesh> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if !header.starts_with("# vtk DataFile") {
        return Err(Error::Parse("missing VTK header".into()));
    }
    let _title = lines.next();
    let kind = lines.next().unwrap_or("").trim();
    if !kind.eq_ignore_ascii_case("ASCII") {
        return Err(Error::Parse(format!("only ASCII legacy VTK is supported, got '{kind}'")));
    }
    let rest: Vec<&str> = lines.collect();
    let body = rest.join("\n");
    let mut it = body.split_whitespace();
    let mut vertices = None;
    let mut faces = None;
    while let Some(tok) = it.next() {
        match tok.to_ascii_uppercase().as_str() {
            "DATASET" => {
                let ty = it.next().unwrap_or("");
                if !ty.eq_ignore_ascii_case("POLYDATA") {
                    return Err(Error::Parse(format!("unsupported VTK dataset '{ty}'")));
                }
            }
            "POINTS" => {
                let n: usize = next_num(&mut it, "point count")?;
                let _ty = it.next();
                let mut v = Vec::with_capacity(n);
                for _ in 0..n {
                    v.push([
                        next_num(&mut it, "coordinate")?,
                        next_num(&mut it, "coordinate")?,
                        next_num(&mut it, "coordinate")?,
                    ]);
                }
                vertices = Some(v);
            }
            "POLYGONS" => {
                let n: usize = next_num(&mut it, "polygon count")?;
                let _size: usize = next_num(&mut it, "polygon list size")?;
                faces = Some(read_faces(&mut it, n)?);
            }
            // attribute sections are not part of the supported subset
            "POINT_DATA" | "CELL_DATA" => break,
            other => return Err(Error::Parse(format!("unexpected VTK token '{other}'"))),
        }
    }
    let vertices = vertices.ok_or_else(|| Error::Parse("VTK file has no POINTS".into()))?;
    let faces = faces.ok_or_else(|| Error::Parse("VTK file has no POLYGONS".into()))?;
    if vertices.is_empty() || faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    TriMesh::new(vertices, faces)
}

fn parse_json(text: &str) -> Result<TriMesh> {
    let doc: MeshDocument = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if doc.version != MESH_JSON_VERSION {
        return Err(Error::Parse(format!("unsupported mesh JSON version {}", doc.version)));
    }
    if doc.vertices.is_empty() || doc.faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mut table = RegionTable::new();
    match doc.regions {
        Some(records) => {
            for r in records {
                if table.contains(r.id) {
                    return Err(Error::Label(format!("duplicate region id {}", r.id)));
                }
                table.insert(r.id, RegionInfo { name: r.name, color: r.color, area_mm2: 0.0 });
            }
        }
        None => {
            if let Some(labels) = &doc.labels {
                for &id in labels {
                    table.insert(id, default_region(id));
                }
            }
        }
    }
    TriMesh::from_parts(doc.vertices, doc.faces, doc.labels, table, doc.channels, doc.hemisphere)
}

pub(crate) fn default_region(id: RegionId) -> RegionInfo {
    RegionInfo { name: format!("region_{id}"), color: super::label_color(id), area_mm2: 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn off_single_triangle() {
        let m = parse_mesh("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n", MeshFormat::Off).unwrap();
        assert_eq!((m.vertex_count(), m.face_count()), (3, 1));
        assert_eq!(super::super::boundary_loops(&m), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn off_with_comments_and_inline_counts() {
        let m = parse_mesh("OFF # header\n# c\n3 1 0\n0 0 0 1 0 0\n0 1 0\n3 0 1 2", MeshFormat::Off).unwrap();
        assert_eq!(m.face_count(), 1);
    }

    #[test]
    fn off_out_of_range_index() {
        let err = parse_mesh("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 99\n", MeshFormat::Off).unwrap_err();
        assert!(matches!(err, Error::Topology(_)), "{err}");
    }

    #[test]
    fn off_errors() {
        assert!(matches!(parse_mesh("PLY\n", MeshFormat::Off), Err(Error::Parse(_))));
        assert!(matches!(parse_mesh("OFF\n3 1 0\n0 0 0\n1 0", MeshFormat::Off), Err(Error::Parse(_))));
        assert!(matches!(parse_mesh("OFF\n0 0 0\n", MeshFormat::Off), Err(Error::EmptyMesh)));
        assert!(matches!(
            parse_mesh("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n", MeshFormat::Off),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn vtk_roundtrip() {
        let m = crate::fixtures::flat_disk(3);
        let text = format_mesh(&m, MeshFormat::Vtk).unwrap();
        let back = parse_mesh(&text, MeshFormat::Vtk).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.faces(), m.faces());
    }

    #[test]
    fn vtk_rejects_binary_and_other_datasets() {
        assert!(parse_mesh("# vtk DataFile Version 3.0\nt\nBINARY\n", MeshFormat::Vtk).is_err());
        let grid = "# vtk DataFile Version 3.0\nt\nASCII\nDATASET STRUCTURED_POINTS\n";
        assert!(parse_mesh(grid, MeshFormat::Vtk).is_err());
    }

    #[test]
    fn json_roundtrip_is_bit_exact() {
        let mut m = crate::fixtures::hemisphere(6);
        let n = m.vertex_count();
        m = m
            .with_channel("myelin", (0..n).map(|i| (i as f64).sin() / 3.0).collect())
            .unwrap()
            .with_hemisphere(Hemisphere::Left);
        let text = format_mesh(&m, MeshFormat::Json).unwrap();
        let back = parse_mesh(&text, MeshFormat::Json).unwrap();
        assert_eq!(back, m);
    }
}
