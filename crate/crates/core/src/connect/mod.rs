//! Region-pair connectivity graphs, resting-state style functional overlays
//! and scalar overlays attached to the surface meshes.

mod functional;
mod graph;
mod overlay;

pub use functional::{
    read_tsf, regress_mean_gray, seed_correlation, write_tsf, Regression, Seed, TimeSeriesField, TSF_MAGIC,
};
pub use graph::{build_graph, ConnectivityGraph, GraphEdge, GraphNode, GraphReport};
pub use overlay::{attach_channel, attach_field, Colormap, OverlayField};
