//! Cortical surface mapping and connectivity toolkit.
//!
//! Disk-topology hemisphere meshes are mapped onto the unit disk (harmonic
//! map followed by area correction), lifted onto a shared sphere, and
//! decorated with clustered tractography bundles and functional overlays.
//! Everything is bundled into a deterministic, versioned scene document.

pub mod connect;
pub mod error;
pub mod fixtures;
pub mod geom;
pub mod mesh;
pub mod param;
pub mod pipeline;
pub mod scene;
pub mod sphere;
pub mod tract;

pub use error::{Error, Result};
