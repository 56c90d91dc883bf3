//! vasculatree: vascular point clouds to solver-ready segment trees.
//!
//! The crate turns a raw centerline point cloud (nodes with 3D positions,
//! radii, and neighbour lists) into a rooted tree of vessel segments, then
//! simplifies that tree with a family of filters and rewrites:
//!
//! 1. [`ingest`] parses and validates CSV/JSON point clouds.
//! 2. [`graph`] keeps the largest connected component, classifies nodes by
//!    degree, selects a root, and decomposes the graph into oriented
//!    segments via shortest paths.
//! 3. [`morphometry`] computes per-segment metrics, generations, Strahler
//!    orders, and the per-generation information-density profile.
//! 4. [`prune`] applies radius/generation filters, connected-subtree
//!    extraction, pseudo-trifurcation removal, series joins, and
//!    short-terminal removal, each as a pure tree-to-tree rewrite with an
//!    audit report.
//! 5. [`project`] produces 2D polyline projections (lateral and Mercator)
//!    and renders them to SVG or CSV.
//! 6. [`pipeline`] wires configurable step chains together and exports
//!    trees in a 1D-solver-friendly format.
//!
//! The crate performs no file I/O: parsers take strings, serializers
//! return strings. All operations are pure functions over immutable
//! values and safe to call from multiple threads.

#[cfg(test)]
pub(crate) mod fixtures;
pub mod geometry;
pub mod graph;
pub mod ingest;
pub mod morphometry;
pub mod pipeline;
pub mod project;
pub mod prune;
pub mod tree;

pub use geometry::{Axis, Point3};
pub use graph::{
    extract_segments, largest_component, select_root, NodeKind, RootPolicy, SegmentExtraction,
    VesselGraph,
};
pub use ingest::{
    parse_point_cloud, validate, Format, NodeId, NodeRecord, ParseReport, PointCloud, Unit,
};
pub use morphometry::{
    assign_generations, generation_cutoff, generation_profile, information_delta, segment_metrics,
    segment_metrics_map, strahler_orders, GenerationCutoff, GenerationProfile, PeakMode,
    SegmentMetrics,
};
pub use project::{
    lateral_projection, mercator_projection, parse_polylines_csv, render_csv, render_svg, Center,
    MercatorOptions, Plane, Polyline2D,
};
pub use prune::{
    connected_subtree, filter_segments, remove_pseudo_trifurcations, remove_short_terminals,
    series_join, simplify_fixpoint, FilterSpec, PruneReport,
};
pub use tree::{Segment, SegmentId, SegmentTree, TreeNode};
