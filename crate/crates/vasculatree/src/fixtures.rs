//! Shared test fixtures. Compiled only for unit tests.

use crate::geometry::Point3;
use crate::graph::{extract_segments, largest_component};
use crate::ingest::{NodeId, NodeRecord, PointCloud, Unit};
use crate::tree::SegmentTree;

/// The 7-node F1 fixture: edges 0-1, 1-2, 2-3, 2-4, 4-5, 4-6.
///
/// Node 0 sits highest in z so the default root policy selects it.
/// Radii decrease from 1.0 at the inlet to 0.6 at the leaves; only the
/// root segment [0,1,2] has nodes above 0.85 mm.
pub(crate) fn f1_records() -> Vec<NodeRecord> {
    let rows: [(u64, [f64; 3], f64, &[u64]); 7] = [
        (0, [0.0, 0.0, 10.0], 1.0, &[1]),
        (1, [0.0, 0.0, 8.0], 0.9, &[0, 2]),
        (2, [0.0, 0.0, 6.0], 0.8, &[1, 3, 4]),
        (3, [-2.0, 0.0, 5.0], 0.7, &[2]),
        (4, [2.0, 0.0, 5.0], 0.7, &[2, 5, 6]),
        (5, [3.0, 0.0, 3.0], 0.6, &[4]),
        (6, [1.0, 0.0, 3.0], 0.6, &[4]),
    ];
    rows.iter()
        .map(|&(id, pos, radius, neighbors)| NodeRecord {
            id: NodeId(id),
            position: Point3::new(pos[0], pos[1], pos[2]),
            radius,
            neighbors: neighbors.iter().map(|&n| NodeId(n)).collect(),
        })
        .collect()
}

pub(crate) fn f1_cloud() -> PointCloud {
    PointCloud::from_records(f1_records(), Unit::Mm).unwrap()
}

/// The segment tree of F1 rooted at node 0: S0=[0,1,2], S1=[2,3],
/// S2=[2,4], S3=[4,5], S4=[4,6].
pub(crate) fn f1_tree() -> SegmentTree {
    let (graph, _) = largest_component(&f1_cloud()).unwrap();
    extract_segments(&graph, NodeId(0)).unwrap().tree
}
