use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Colormap {
    Grayscale,
    Diverging,
    Categorical,
}

impl std::str::FromStr for Colormap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grayscale" => Ok(Colormap::Grayscale),
            "diverging" => Ok(Colormap::Diverging),
            "categorical" => Ok(Colormap::Categorical),
            _ => Err(Error::Overlay(format!("unknown colormap '{s}'"))),
        }
    }
}

/// Per-vertex scalar over one or more meshes, concatenated in `meshes` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayField {
    pub name: String,
    pub meshes: Vec<String>,
    pub values: Vec<f64>,
    pub range: [f64; 2],
    pub colormap: Colormap,
    /// Vertices whose value is a placeholder (zero-variance correlation).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate: Vec<usize>,
}

impl OverlayField {
    /// Without an explicit range the data min/max is used.
    pub fn new(name: impl Into<String>, values: Vec<f64>, range: Option<[f64; 2]>, colormap: Colormap) -> Result<Self> {
        let name = name.into();
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::Overlay(format!("overlay '{name}' has a non-finite value at vertex {i}")));
        }
        let range = match range {
            Some(r) => {
                if !(r[0] <= r[1]) {
                    return Err(Error::Overlay(format!("overlay '{name}' has an empty range {r:?}")));
                }
                if let Some(i) = values.iter().position(|x| *x < r[0] || *x > r[1]) {
                    return Err(Error::Overlay(format!("overlay '{name}' value at vertex {i} lies outside {r:?}")));
                }
                r
            }
            None => values
                .iter()
                .fold(None, |acc: Option<[f64; 2]>, &x| Some(acc.map_or([x, x], |[a, b]| [a.min(x), b.max(x)])))
                .unwrap_or([0.0, 0.0]),
        };
        Ok(OverlayField { name, meshes: Vec::new(), values, range, colormap, degenerate: Vec::new() })
    }
}

fn default_colormap(channel: &str) -> Colormap {
    if channel.contains("label") || channel.contains("parcel") {
        Colormap::Categorical
    } else {
        Colormap::Grayscale
    }
}

/// Builds an overlay from a named vertex channel present on every mesh.
pub fn attach_channel(meshes: &[(&str, &TriMesh)], channel: &str, colormap: Option<Colormap>) -> Result<OverlayField> {
    let mut values = Vec::new();
    for (id, m) in meshes {
        let c = m.channel(channel).ok_or_else(|| Error::Overlay(format!("mesh '{id}' has no channel '{channel}'")))?;
        if c.len() != m.vertex_count() {
            return Err(Error::Overlay(format!("channel '{channel}' has {} values for {} vertices", c.len(), m.vertex_count())));
        }
        values.extend_from_slice(c);
    }
    let mut o = OverlayField::new(channel, values, None, colormap.unwrap_or_else(|| default_colormap(channel)))?;
    o.meshes = meshes.iter().map(|(id, _)| id.to_string()).collect();
    Ok(o)
}

/// Registers a computed field against meshes whose vertex counts add up to its length.
pub fn attach_field(meshes: &[(&str, &TriMesh)], mut field: OverlayField) -> Result<OverlayField> {
    let total: usize = meshes.iter().map(|(_, m)| m.vertex_count()).sum();
    if field.values.len() != total {
        return Err(Error::Overlay(format!(
            "overlay '{}' has {} values for {total} vertices",
            field.name,
            field.values.len()
        )));
    }
    field.meshes = meshes.iter().map(|(id, _)| id.to_string()).collect();
    Ok(field)
}
