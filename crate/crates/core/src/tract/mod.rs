//! Tractography streamlines: ingestion, greedy MDF clustering, endpoint
//! region assignment and coalescing of clusters into bundles.

mod assign;
mod bundle;
mod cluster;

use std::io::{BufRead, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::geom::Vec3;

pub use assign::{assign_endpoints, EndpointAssignment, VertexIndex, DEFAULT_DMAX_MM};
pub use bundle::{coalesce, Bundle, BundleDomains, BundleEndpoint};
pub use cluster::{mdf, quickbundles, resample, Cluster, QuickBundles, DEFAULT_K, DEFAULT_THETA_MM};

pub type Polyline = Vec<Vec3>;

pub const BINARY_MAGIC: &[u8; 4] = b"TRKS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamlineFormat {
    Text,
    Binary,
}

impl std::str::FromStr for StreamlineFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(StreamlineFormat::Text),
            "binary" | "bin" | "trks" => Ok(StreamlineFormat::Binary),
            _ => Err(Error::InvalidParameter(format!("unknown streamline format '{s}'"))),
        }
    }
}

/// Ordered streamlines in the mesh coordinate frame (mm). Order matters: the
/// clustering pass is order-dependent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StreamlineSet {
    lines: Vec<Polyline>,
}

impl StreamlineSet {
    /// Validates the polylines and collapses consecutive duplicate points.
    /// A polyline whose points are all equal is kept as a zero-length
    /// two-point line so that clustering can report and skip it.
    pub fn new(lines: Vec<Polyline>) -> Result<Self> {
        let mut out = Vec::with_capacity(lines.len());
        for (index, line) in lines.into_iter().enumerate() {
            if line.len() < 2 {
                return Err(Error::Streamline { index, reason: format!("{} point(s), need at least 2", line.len()) });
            }
            if line.iter().flatten().any(|c| !c.is_finite()) {
                return Err(Error::Streamline { index, reason: "non-finite coordinate".into() });
            }
            let mut dedup: Polyline = Vec::with_capacity(line.len());
            for p in &line {
                if dedup.last() != Some(p) {
                    dedup.push(*p);
                }
            }
            if dedup.len() == 1 {
                dedup.push(dedup[0]);
            }
            out.push(dedup);
        }
        Ok(Self { lines: out })
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn get(&self, i: usize) -> &[Vec3] {
        &self.lines[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Polyline> {
        self.lines.iter()
    }
}

pub fn load_streamlines(path: impl AsRef<Path>, format: StreamlineFormat) -> Result<StreamlineSet> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);
    match format {
        StreamlineFormat::Text => read_text(reader),
        StreamlineFormat::Binary => read_binary(reader),
    }
}

pub fn save_streamlines(set: &StreamlineSet, path: impl AsRef<Path>, format: StreamlineFormat) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    match format {
        StreamlineFormat::Text => write_text(set, &mut w),
        StreamlineFormat::Binary => write_binary(set, &mut w),
    }
    .and_then(|_| w.flush().map_err(|e| Error::io(path, e)))
}

/// One `x y z` line per point, blank lines between streamlines.
pub fn read_text(reader: impl BufRead) -> Result<StreamlineSet> {
    let mut lines = Vec::new();
    let mut cur: Polyline = Vec::new();
    for (no, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse(format!("line {}: {e}", no + 1)))?;
        let t = line.trim();
        if t.is_empty() {
            if !cur.is_empty() {
                lines.push(std::mem::take(&mut cur));
            }
            continue;
        }
        let nums: Vec<f64> = t
            .split_whitespace()
            .map(|x| x.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse(format!("line {}: malformed point '{t}'", no + 1)))?;
        if nums.len() != 3 {
            return Err(Error::Parse(format!("line {}: expected 3 coordinates, got {}", no + 1, nums.len())));
        }
        cur.push([nums[0], nums[1], nums[2]]);
    }
    if !cur.is_empty() {
        lines.push(cur);
    }
    StreamlineSet::new(lines)
}

pub fn write_text(set: &StreamlineSet, w: &mut impl Write) -> Result<()> {
    let io = |e| Error::Parse(format!("write failed: {e}"));
    for (i, line) in set.iter().enumerate() {
        if i > 0 {
            writeln!(w).map_err(io)?;
        }
        for p in line {
            writeln!(w, "{:?} {:?} {:?}", p[0], p[1], p[2]).map_err(io)?;
        }
    }
    Ok(())
}

/// `TRKS`, u32 count, then per streamline u32 point count and f32 triples (little-endian).
pub fn read_binary(mut r: impl Read) -> Result<StreamlineSet> {
    let mut magic = [0u8; 4];
    match r.read_exact(&mut magic) {
        Ok(()) => {}
        // an empty file is an empty set
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
            return Ok(StreamlineSet::default());
        }
        Err(e) => return Err(Error::Parse(e.to_string())),
    }
    if &magic != BINARY_MAGIC {
        return Err(Error::Parse(format!("bad magic {magic:?}, expected TRKS")));
    }
    let trunc = |what: &str, i: usize| Error::Parse(format!("truncated file: {what} of streamline {i} missing"));
    let count = r.read_u32::<LittleEndian>().map_err(|_| Error::Parse("truncated header".into()))? as usize;
    let mut lines = Vec::with_capacity(count.min(1 << 20));
    for i in 0..count {
        let n = r.read_u32::<LittleEndian>().map_err(|_| trunc("point count", i))? as usize;
        let mut line = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            let mut p = [0.0; 3];
            for c in &mut p {
                *c = f64::from(r.read_f32::<LittleEndian>().map_err(|_| trunc("points", i))?);
            }
            line.push(p);
        }
        lines.push(line);
    }
    StreamlineSet::new(lines)
}

pub fn write_binary(set: &StreamlineSet, w: &mut impl Write) -> Result<()> {
    let io = |e: std::io::Error| Error::Parse(format!("write failed: {e}"));
    w.write_all(BINARY_MAGIC).map_err(io)?;
    w.write_u32::<LittleEndian>(set.len() as u32).map_err(io)?;
    for line in set.iter() {
        w.write_u32::<LittleEndian>(line.len() as u32).map_err(io)?;
        for p in line {
            for c in p {
                w.write_f32::<LittleEndian>(*c as f32).map_err(io)?;
            }
        }
    }
    Ok(())
}
