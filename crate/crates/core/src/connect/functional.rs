use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Colormap, OverlayField};
use crate::error::{Error, Result};
use crate::mesh::RegionId;

pub const TSF_MAGIC: &[u8; 4] = b"TSF1";

/// Centred sums of squares at or below this fraction of the raw energy count
/// as zero variance; rounding alone leaves about 1e-32 there.
const DEGENERATE_REL: f64 = 1e-24;

/// Per-vertex time series, `vertices × samples`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesField {
    vertices: usize,
    samples: usize,
    data: Vec<f64>,
}

impl TimeSeriesField {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let samples = rows.first().map_or(0, |r| r.len());
        let vertices = rows.len();
        let mut data = Vec::with_capacity(vertices * samples);
        for (v, r) in rows.into_iter().enumerate() {
            if r.len() != samples {
                return Err(Error::TimeSeries(format!("vertex {v} has {} samples, expected {samples}", r.len())));
            }
            data.extend(r);
        }
        Self::from_flat(vertices, samples, data)
    }

    pub fn from_flat(vertices: usize, samples: usize, data: Vec<f64>) -> Result<Self> {
        if vertices == 0 {
            return Err(Error::TimeSeries("no vertices".into()));
        }
        if samples < 2 {
            return Err(Error::TimeSeries(format!("{samples} samples per vertex, need at least 2")));
        }
        if data.len() != vertices * samples {
            return Err(Error::TimeSeries(format!("{} values for {vertices}x{samples}", data.len())));
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::TimeSeries(format!("non-finite value at vertex {} sample {}", i / samples, i % samples)));
        }
        Ok(TimeSeriesField { vertices, samples, data })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn sample_count(&self) -> usize {
        self.samples
    }

    pub fn series(&self, v: usize) -> &[f64] {
        &self.data[v * self.samples..(v + 1) * self.samples]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.samples)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Mean series over all vertices.
    pub fn mean_series(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.samples];
        for r in self.rows() {
            for (gi, x) in g.iter_mut().zip(r) {
                *gi += x;
            }
        }
        let n = self.vertices as f64;
        g.iter_mut().for_each(|x| *x /= n);
        g
    }
}

pub fn read_tsf(path: &Path) -> Result<TimeSeriesField> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_tsf_from(std::io::BufReader::new(f))
}

pub fn read_tsf_from<R: Read>(mut r: R) -> Result<TimeSeriesField> {
    let trunc = |what: &str| Error::TimeSeries(format!("truncated TSF1 data: missing {what}"));
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| trunc("magic"))?;
    if &magic != TSF_MAGIC {
        return Err(Error::TimeSeries("not a TSF1 file (bad magic)".into()));
    }
    let v = r.read_u32::<LittleEndian>().map_err(|_| trunc("vertex count"))? as usize;
    let t = r.read_u32::<LittleEndian>().map_err(|_| trunc("sample count"))? as usize;
    let n = v.checked_mul(t).ok_or_else(|| Error::TimeSeries("dimensions overflow".into()))?;
    let mut raw = Vec::new();
    r.take(n as u64 * 4).read_to_end(&mut raw).map_err(|e| Error::TimeSeries(e.to_string()))?;
    if raw.len() != n * 4 {
        return Err(Error::TimeSeries(format!("truncated TSF1 data: expected {n} values, found {}", raw.len() / 4)));
    }
    let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect();
    TimeSeriesField::from_flat(v, t, data)
}

/// Values are stored as f32.
pub fn write_tsf(path: &Path, ts: &TimeSeriesField) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_tsf_to(&mut w, ts).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_tsf_to<W: Write>(w: &mut W, ts: &TimeSeriesField) -> std::io::Result<()> {
    w.write_all(TSF_MAGIC)?;
    w.write_u32::<LittleEndian>(ts.vertices as u32)?;
    w.write_u32::<LittleEndian>(ts.samples as u32)?;
    for x in &ts.data {
        w.write_f32::<LittleEndian>(*x as f32)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Seed {
    Vertex(usize),
    /// Mean series over every vertex carrying the label.
    Region(RegionId),
}

fn centred(x: &[f64]) -> (Vec<f64>, f64, bool) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let ss: f64 = c.iter().map(|v| v * v).sum();
    let raw: f64 = x.iter().map(|v| v * v).sum();
    let degenerate = x.iter().all(|v| *v == x[0]) || ss <= DEGENERATE_REL * raw;
    (c, ss, degenerate)
}

/// Pearson correlation of every vertex series with the seed series.
/// `labels` runs over the same vertices as `ts` and is needed for region seeds.
/// Zero-variance series give 0 and are listed in `degenerate`.
pub fn seed_correlation(ts: &TimeSeriesField, seed: Seed, labels: Option<&[RegionId]>) -> Result<OverlayField> {
    if ts.samples < 3 {
        return Err(Error::TimeSeries(format!("correlation needs at least 3 samples, have {}", ts.samples)));
    }
    let (name, seed_series) = match seed {
        Seed::Vertex(v) => {
            if v >= ts.vertices {
                return Err(Error::InvalidParameter(format!("seed vertex {v} out of range (V = {})", ts.vertices)));
            }
            (format!("correlation_vertex_{v}"), ts.series(v).to_vec())
        }
        Seed::Region(r) => {
            let labels = labels.ok_or_else(|| Error::Label("region seed needs vertex labels".into()))?;
            if labels.len() != ts.vertices {
                return Err(Error::TimeSeries(format!("{} labels for {} series", labels.len(), ts.vertices)));
            }
            let mut s = vec![0.0; ts.samples];
            let mut n = 0usize;
            for (row, _) in ts.rows().zip(labels).filter(|(_, l)| **l == r) {
                n += 1;
                s.iter_mut().zip(row).for_each(|(a, b)| *a += b);
            }
            if n == 0 {
                return Err(Error::Region(r, "seed region has no vertices".into()));
            }
            s.iter_mut().for_each(|a| *a /= n as f64);
            (format!("correlation_region_{r}"), s)
        }
    };
    let (sc, sss, seed_flat) = centred(&seed_series);
    let results: Vec<(f64, bool)> = (0..ts.vertices)
        .into_par_iter()
        .map(|v| {
            let (c, ss, flat) = centred(ts.series(v));
            if flat || seed_flat {
                return (0.0, true);
            }
            let cov: f64 = c.iter().zip(&sc).map(|(a, b)| a * b).sum();
            ((cov / (ss.sqrt() * sss.sqrt())).clamp(-1.0, 1.0), false)
        })
        .collect();
    let degenerate = results.iter().enumerate().filter(|(_, r)| r.1).map(|(i, _)| i).collect();
    let values = results.into_iter().map(|r| r.0).collect();
    let mut overlay = OverlayField::new(name, values, Some([-1.0, 1.0]), Colormap::Diverging)?;
    overlay.degenerate = degenerate;
    Ok(overlay)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regression {
    pub field: TimeSeriesField,
    pub warnings: Vec<String>,
}

/// Least-squares residual of every vertex series after regressing out
/// `[1, g]`, `g` being the mean series over all vertices. A flat `g` only
/// removes the per-vertex mean.
pub fn regress_mean_gray(ts: &TimeSeriesField) -> Result<Regression> {
    if ts.samples < 3 {
        return Err(Error::TimeSeries(format!("regression needs at least 3 samples, have {}", ts.samples)));
    }
    let g = ts.mean_series();
    let (gc, gss, _) = centred(&g);
    // relative to the typical centred energy of a vertex series, not of g
    let typical = ts.rows().map(|r| centred(r).1).sum::<f64>() / ts.vertices as f64;
    let flat = gss <= 1e-20 * typical || g.iter().all(|x| *x == g[0]);
    let mut warnings = Vec::new();
    if flat {
        warnings.push("mean gray series has zero variance; only the per-vertex mean was removed".to_string());
    }
    let data: Vec<f64> = ts
        .data
        .par_chunks_exact(ts.samples)
        .flat_map_iter(|row| {
            let (c, _, _) = centred(row);
            let beta = if flat { 0.0 } else { c.iter().zip(&gc).map(|(a, b)| a * b).sum::<f64>() / gss };
            c.into_iter().zip(gc.clone()).map(move |(y, x)| y - beta * x)
        })
        .collect();
    Ok(Regression { field: TimeSeriesField::from_flat(ts.vertices, ts.samples, data)?, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(v: usize, t: usize, seed: u64) -> TimeSeriesField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TimeSeriesField::new((0..v).map(|_| (0..t).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()).unwrap()
    }

    #[test]
    fn correlation_examples() {
        let s = vec![1.0, 3.0, 2.0, 5.0, 4.0];
        let neg: Vec<f64> = s.iter().map(|x| -x).collect();
        let ts = TimeSeriesField::new(vec![s.clone(), s, neg, vec![7.0; 5]]).unwrap();
        let o = seed_correlation(&ts, Seed::Vertex(0), None).unwrap();
        assert!((o.values[1] - 1.0).abs() < 1e-15);
        assert!((o.values[2] + 1.0).abs() < 1e-15);
        assert_eq!(o.values[3], 0.0);
        assert_eq!(o.degenerate, vec![3]);
        assert_eq!(o.range, [-1.0, 1.0]);
        assert_eq!(o.colormap, Colormap::Diverging);
    }

    #[test]
    fn region_seed_averages_members() {
        let ts = TimeSeriesField::new(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, 0.0]]).unwrap();
        let o = seed_correlation(&ts, Seed::Region(4), Some(&[4, 4, 9])).unwrap();
        assert!((o.values[2] - 1.0).abs() < 1e-15);
        assert!(seed_correlation(&ts, Seed::Region(5), Some(&[4, 4, 9])).is_err());
        assert!(seed_correlation(&ts, Seed::Region(4), None).is_err());
        assert!(seed_correlation(&ts, Seed::Vertex(3), None).is_err());
    }

    #[test]
    fn short_series_rejected() {
        let ts = TimeSeriesField::new(vec![vec![1.0, 2.0]]).unwrap();
        assert!(seed_correlation(&ts, Seed::Vertex(0), None).is_err());
        assert!(regress_mean_gray(&ts).is_err());
        assert!(TimeSeriesField::new(vec![vec![1.0]]).is_err());
        assert!(TimeSeriesField::new(vec![vec![1.0, f64::NAN]]).is_err());
        assert!(TimeSeriesField::new(vec![vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn identical_series_regress_to_zero() {
        let row = vec![0.3, -1.2, 4.0, 2.5];
        let ts = TimeSeriesField::new(vec![row.clone(); 7]).unwrap();
        let r = regress_mean_gray(&ts).unwrap();
        assert!(r.field.as_flat().iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn orthogonal_zero_mean_series_unchanged() {
        // g = mean of rows 1 and 2 = [1, 0, -1, 0]; row 0 is orthogonal to it and zero mean
        let ts = TimeSeriesField::new(vec![vec![0.0, 1.0, 0.0, -1.0], vec![2.0, -1.0, -2.0, 1.0], vec![1.0, 0.0, -1.0, 0.0]])
            .unwrap();
        let g = ts.mean_series();
        let r = regress_mean_gray(&ts).unwrap();
        assert!(g.iter().zip([1.0, 0.0, -1.0, 0.0]).all(|(a, b)| (a - b).abs() < 1e-15));
        for (a, b) in r.field.series(0).iter().zip(ts.series(0)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn residuals_orthogonal_to_mean_gray() {
        let ts = random_field(10, 20, 3);
        let g = ts.mean_series();
        let r = regress_mean_gray(&ts).unwrap();
        assert!(r.warnings.is_empty());
        for row in r.field.rows() {
            assert!(row.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-10);
            assert!(row.iter().sum::<f64>().abs() < 1e-10);
        }
        let twice = regress_mean_gray(&r.field).unwrap();
        for (a, b) in twice.field.as_flat().iter().zip(r.field.as_flat()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn flat_mean_gray_removes_only_the_mean() {
        let ts = TimeSeriesField::new(vec![vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]]).unwrap();
        let r = regress_mean_gray(&ts).unwrap();
        assert_eq!(r.warnings.len(), 1);
        assert_eq!(r.field.series(0), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn tsf_round_trip_and_truncation() {
        let ts = TimeSeriesField::new(vec![vec![0.5, -1.25, 3.0], vec![1.0, 2.0, 4.0]]).unwrap();
        let mut buf = Vec::new();
        write_tsf_to(&mut buf, &ts).unwrap();
        assert_eq!(&buf[..4], b"TSF1");
        assert_eq!(buf.len(), 12 + 6 * 4);
        assert_eq!(read_tsf_from(&buf[..]).unwrap(), ts);
        let err = read_tsf_from(&buf[..buf.len() - 4]).unwrap_err();
        assert!(err.to_string().contains("truncated"));
        assert!(read_tsf_from(&b"TSF2\0\0\0\0\0\0\0\0"[..]).is_err());
    }
}
