//! Connected vessel graphs and their decomposition into segments.
//!
//! [`largest_component`] keeps the biggest connected component of a
//! point cloud. Nodes are classified by degree: one neighbour is
//! *terminal*, two is *body*, three or more is *junction*. A terminal
//! node is selected as the root (inlet), and [`extract_segments`] runs
//! Dijkstra from it (edge weight = Euclidean distance) to decompose the
//! graph into oriented segments assembled as a [`SegmentTree`].
//!
//! The data is expected to be a tree but is not guaranteed acyclic:
//! edges that end up outside the shortest-path tree (cycle chords) are
//! dropped and counted, since every downstream operator requires a tree.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Axis, Point3};
use crate::ingest::{NodeId, PointCloud};
use crate::tree::{Segment, SegmentId, SegmentTree, TreeError, TreeNode};

/// Node classification by degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    /// Exactly one neighbour; a branch end or the inlet.
    Terminal,
    /// Exactly two neighbours; shapes geometry, not topology.
    Body,
    /// Three or more neighbours; a branching point.
    Junction,
}

impl std::fmt::Display for NodeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NodeKind::Terminal => write!(f, "terminal"),
            NodeKind::Body => write!(f, "body"),
            NodeKind::Junction => write!(f, "junction"),
        }
    }
}

/// Node counts per kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KindCounts {
    pub terminal: usize,
    pub body: usize,
    pub junction: usize,
}

/// How the root (inlet) node is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RootPolicy {
    /// Terminal node with the maximal coordinate along the axis; ties
    /// break to the lowest id. The default is the +z axis.
    AxisMax(Axis),
    /// A specific node, which must be terminal.
    Explicit(NodeId),
}

impl Default for RootPolicy {
    fn default() -> Self {
        RootPolicy::AxisMax(Axis::Z)
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("largest component is a single node; a vessel graph needs at least one edge")]
    SingleNodeComponent,
    #[error("graph has no terminal nodes")]
    NoTerminals,
    #[error("node {id} not found in graph")]
    NodeNotFound { id: NodeId },
    #[error("root must be a terminal node, but node {id} is {kind}")]
    RootNotTerminal { id: NodeId, kind: NodeKind },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// A connected, simple, undirected graph of vessel nodes.
#[derive(Debug, Clone)]
pub struct VesselGraph {
    ids: Vec<NodeId>,
    positions: Vec<Point3>,
    radii: Vec<f64>,
    /// Adjacency as internal indices, each list sorted by neighbour id.
    adjacency: Vec<Vec<usize>>,
    kinds: Vec<NodeKind>,
}

impl VesselGraph {
    fn from_component(cloud: &PointCloud, members: &[usize]) -> Result<Self, GraphError> {
        if members.len() < 2 {
            return Err(GraphError::SingleNodeComponent);
        }
        let nodes = cloud.nodes();
        let mut index_of: BTreeMap<NodeId, usize> = BTreeMap::new();
        for (new_index, &old) in members.iter().enumerate() {
            index_of.insert(nodes[old].id, new_index);
        }
        let mut ids = Vec::with_capacity(members.len());
        let mut positions = Vec::with_capacity(members.len());
        let mut radii = Vec::with_capacity(members.len());
        let mut adjacency = Vec::with_capacity(members.len());
        for &old in members {
            let record = &nodes[old];
            ids.push(record.id);
            positions.push(record.position);
            radii.push(record.radius);
            adjacency.push(
                record
                    .neighbors
                    .iter()
                    .map(|n| index_of[n])
                    .collect::<Vec<_>>(),
            );
        }
        let kinds = adjacency
            .iter()
            .map(|neighbors| match neighbors.len() {
                0 => unreachable!("components of size >= 2 have no isolated nodes"),
                1 => NodeKind::Terminal,
                2 => NodeKind::Body,
                _ => NodeKind::Junction,
            })
            .collect();
        Ok(Self {
            ids,
            positions,
            radii,
            adjacency,
            kinds,
        })
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Node ids in ascending order.
    pub fn node_ids(&self) -> &[NodeId] {
        &self.ids
    }

    fn index(&self, id: NodeId) -> Result<usize, GraphError> {
        self.ids
            .binary_search(&id)
            .map_err(|_| GraphError::NodeNotFound { id })
    }

    pub fn position(&self, id: NodeId) -> Result<Point3, GraphError> {
        Ok(self.positions[self.index(id)?])
    }

    pub fn radius(&self, id: NodeId) -> Result<f64, GraphError> {
        Ok(self.radii[self.index(id)?])
    }

    pub fn degree(&self, id: NodeId) -> Result<usize, GraphError> {
        Ok(self.adjacency[self.index(id)?].len())
    }

    /// Classification of one node.
    pub fn kind(&self, id: NodeId) -> Result<NodeKind, GraphError> {
        Ok(self.kinds[self.index(id)?])
    }

    /// Classification of every node, keyed by id.
    pub fn classify_nodes(&self) -> BTreeMap<NodeId, NodeKind> {
        self.ids
            .iter()
            .zip(&self.kinds)
            .map(|(&id, &kind)| (id, kind))
            .collect()
    }

    pub fn kind_counts(&self) -> KindCounts {
        let mut counts = KindCounts {
            terminal: 0,
            body: 0,
            junction: 0,
        };
        for kind in &self.kinds {
            match kind {
                NodeKind::Terminal => counts.terminal += 1,
                NodeKind::Body => counts.body += 1,
                NodeKind::Junction => counts.junction += 1,
            }
        }
        counts
    }

    /// Terminal node ids in ascending order.
    pub fn terminals(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.ids
            .iter()
            .zip(&self.kinds)
            .filter(|(_, &k)| k == NodeKind::Terminal)
            .map(|(&id, _)| id)
    }

    /// Min and max node radius.
    pub fn radius_range(&self) -> (f64, f64) {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &r in &self.radii {
            min = min.min(r);
            max = max.max(r);
        }
        (min, max)
    }
}

/// Keep the largest connected component of `cloud`.
///
/// Returns the component as a graph together with the number of
/// discarded nodes. Ties between equal-sized components break to the
/// one containing the smallest node id.
pub fn largest_component(cloud: &PointCloud) -> Result<(VesselGraph, usize), GraphError> {
    if cloud.is_empty() {
        return Err(GraphError::EmptyCloud);
    }
    let nodes = cloud.nodes();
    let index_of: BTreeMap<NodeId, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id, i))
        .collect();

    let mut component = vec![usize::MAX; nodes.len()];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for start in 0..nodes.len() {
        if component[start] != usize::MAX {
            continue;
        }
        let label = components.len();
        let mut members = Vec::new();
        let mut queue = VecDeque::from([start]);
        component[start] = label;
        while let Some(at) = queue.pop_front() {
            members.push(at);
            for neighbor in &nodes[at].neighbors {
                let ni = index_of[neighbor];
                if component[ni] == usize::MAX {
                    component[ni] = label;
                    queue.push_back(ni);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }

    // Largest component; ties break to the smallest contained node id.
    // Nodes are sorted by id, so the smallest member index decides.
    let best = components
        .iter()
        .enumerate()
        .min_by_key(|(_, m)| (Reverse(m.len()), m[0]))
        .map(|(i, _)| i)
        .expect("cloud is non-empty");
    let members = &components[best];
    let removed = nodes.len() - members.len();
    let graph = VesselGraph::from_component(cloud, members)?;
    Ok((graph, removed))
}

/// Select the root (inlet) node under `policy`.
pub fn select_root(graph: &VesselGraph, policy: RootPolicy) -> Result<NodeId, GraphError> {
    match policy {
        RootPolicy::Explicit(id) => {
            let kind = graph.kind(id)?;
            if kind != NodeKind::Terminal {
                return Err(GraphError::RootNotTerminal { id, kind });
            }
            Ok(id)
        }
        RootPolicy::AxisMax(axis) => {
            let mut best: Option<(f64, NodeId)> = None;
            for id in graph.terminals() {
                let coord = graph.position(id)?.along(axis);
                let better = match best {
                    None => true,
                    // Strictly greater wins; equal keeps the lower id,
                    // which was seen first in ascending id order.
                    Some((best_coord, _)) => coord > best_coord,
                };
                if better {
                    best = Some((coord, id));
                }
            }
            best.map(|(_, id)| id).ok_or(GraphError::NoTerminals)
        }
    }
}

/// Result of decomposing a graph into segments.
#[derive(Debug, Clone)]
pub struct SegmentExtraction {
    pub tree: SegmentTree,
    /// Edges absent from the shortest-path tree (cycle chords), dropped.
    pub dropped_edges: usize,
}

/// Decompose `graph` into a rooted [`SegmentTree`] by shortest paths
/// from `root`.
///
/// Dijkstra uses Euclidean edge weights; equal-length paths prefer the
/// smaller predecessor id, making the decomposition deterministic. The
/// shortest-path tree is split at its branch points, which coincide
/// with the graph's junction nodes whenever the graph is acyclic.
/// Segments are numbered in breadth-first order from the root, children
/// ordered by the id of their first interior step.
pub fn extract_segments(
    graph: &VesselGraph,
    root: NodeId,
) -> Result<SegmentExtraction, GraphError> {
    let root_kind = graph.kind(root)?;
    if root_kind != NodeKind::Terminal {
        return Err(GraphError::RootNotTerminal {
            id: root,
            kind: root_kind,
        });
    }
    let n = graph.node_count();
    let root_index = graph.index(root)?;

    // Dijkstra with deterministic tie-breaking on predecessor id.
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    let mut settled = vec![false; n];
    let mut heap: BinaryHeap<Reverse<(TotalF64, u64)>> = BinaryHeap::new();
    dist[root_index] = 0.0;
    heap.push(Reverse((TotalF64(0.0), graph.ids[root_index].0)));
    while let Some(Reverse((TotalF64(d), id))) = heap.pop() {
        let at = graph
            .ids
            .binary_search(&NodeId(id))
            .expect("heap holds known ids");
        if settled[at] || d > dist[at] {
            continue;
        }
        settled[at] = true;
        for &next in &graph.adjacency[at] {
            if settled[next] {
                continue;
            }
            let cand = d + graph.positions[at].distance(&graph.positions[next]);
            if cand < dist[next] {
                dist[next] = cand;
                pred[next] = at;
                heap.push(Reverse((TotalF64(cand), graph.ids[next].0)));
            } else if cand == dist[next]
                && pred[next] != usize::MAX
                && graph.ids[at] < graph.ids[pred[next]]
            {
                pred[next] = at;
            }
        }
    }

    // Children lists of the shortest-path tree, ordered by node id.
    let mut tree_children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..n {
        if v != root_index {
            debug_assert!(settled[v], "graph is connected");
            tree_children[pred[v]].push(v);
        }
    }
    for children in &mut tree_children {
        children.sort_unstable_by_key(|&c| graph.ids[c]);
    }
    let dropped_edges = graph.edge_count() - (n - 1);

    // Walk the shortest-path tree into segments, breadth-first.
    let tree_node = |i: usize| TreeNode {
        id: graph.ids[i],
        position: graph.positions[i],
        radius: graph.radii[i],
    };
    let mut segments: Vec<(SegmentId, Segment, Option<SegmentId>)> = Vec::new();
    let mut queue: VecDeque<(usize, usize, Option<SegmentId>)> = VecDeque::new();
    // The root is terminal, so it has exactly one tree child.
    queue.push_back((root_index, tree_children[root_index][0], None));
    while let Some((start, step, parent)) = queue.pop_front() {
        let mut nodes = vec![tree_node(start)];
        let mut at = step;
        loop {
            nodes.push(tree_node(at));
            match tree_children[at].as_slice() {
                [only] => at = *only,
                _ => break,
            }
        }
        let id = SegmentId(segments.len() as u64);
        segments.push((id, Segment::new(nodes)?, parent));
        for &child in &tree_children[at] {
            queue.push_back((at, child, Some(id)));
        }
    }

    let tree = SegmentTree::build(SegmentId(0), segments)?;
    Ok(SegmentExtraction {
        tree,
        dropped_edges,
    })
}

/// f64 wrapper ordered by `total_cmp` for use in the Dijkstra heap.
#[derive(Debug, Clone, Copy, PartialEq)]
struct TotalF64(f64);

impl Eq for TotalF64 {}

impl PartialOrd for TotalF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TotalF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{f1_cloud, f1_records};
    use crate::ingest::{NodeRecord, Unit};

    fn ids(v: &[u64]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn largest_component_keeps_connected_fixture() {
        let (graph, removed) = largest_component(&f1_cloud()).unwrap();
        assert_eq!(graph.node_count(), 7);
        assert_eq!(removed, 0);
    }

    #[test]
    fn largest_component_drops_isolated_pair() {
        let mut records = f1_records();
        records.push(NodeRecord {
            id: NodeId(8),
            position: Point3::new(50.0, 0.0, 0.0),
            radius: 0.5,
            neighbors: vec![NodeId(9)],
        });
        records.push(NodeRecord {
            id: NodeId(9),
            position: Point3::new(51.0, 0.0, 0.0),
            radius: 0.5,
            neighbors: vec![NodeId(8)],
        });
        let cloud = PointCloud::from_records(records, Unit::Mm).unwrap();
        let (graph, removed) = largest_component(&cloud).unwrap();
        assert_eq!(graph.node_count(), 7);
        assert_eq!(removed, 2);
        assert!(graph.position(NodeId(8)).is_err());
    }

    #[test]
    fn component_tie_breaks_to_smallest_node_id() {
        // Two 3-node paths: {0,2,4} and {1,3,5}. Equal size; the one
        // containing id 0 wins.
        let records: Vec<NodeRecord> = [
            (0u64, &[2u64][..]),
            (1, &[3]),
            (2, &[0, 4]),
            (3, &[1, 5]),
            (4, &[2]),
            (5, &[3]),
        ]
        .iter()
        .map(|&(id, neighbors)| NodeRecord {
            id: NodeId(id),
            position: Point3::new(id as f64, 0.0, 0.0),
            radius: 1.0,
            neighbors: neighbors.iter().map(|&n| NodeId(n)).collect(),
        })
        .collect();
        let cloud = PointCloud::from_records(records, Unit::Mm).unwrap();
        let (graph, removed) = largest_component(&cloud).unwrap();
        assert_eq!(removed, 3);
        assert_eq!(graph.node_ids(), ids(&[0, 2, 4]).as_slice());
    }

    #[test]
    fn empty_cloud_is_an_error() {
        let cloud = PointCloud::from_records(Vec::new(), Unit::Mm).unwrap();
        assert!(matches!(
            largest_component(&cloud),
            Err(GraphError::EmptyCloud)
        ));
    }

    #[test]
    fn classify_f1_by_degree() {
        let (graph, _) = largest_component(&f1_cloud()).unwrap();
        let kinds = graph.classify_nodes();
        for id in [0u64, 3, 5, 6] {
            assert_eq!(kinds[&NodeId(id)], NodeKind::Terminal, "node {id}");
        }
        assert_eq!(kinds[&NodeId(1)], NodeKind::Body);
        for id in [2u64, 4] {
            assert_eq!(kinds[&NodeId(id)], NodeKind::Junction, "node {id}");
        }
        let counts = graph.kind_counts();
        assert_eq!((counts.terminal, counts.body, counts.junction), (4, 1, 2));
    }

    #[test]
    fn classify_path_and_star() {
        let path: Vec<NodeRecord> = [(0u64, &[1u64][..]), (1, &[0, 2]), (2, &[1])]
            .iter()
            .map(|&(id, ns)| NodeRecord {
                id: NodeId(id),
                position: Point3::new(id as f64, 0.0, 0.0),
                radius: 1.0,
                neighbors: ns.iter().map(|&n| NodeId(n)).collect(),
            })
            .collect();
        let cloud = PointCloud::from_records(path, Unit::Mm).unwrap();
        let (graph, _) = largest_component(&cloud).unwrap();
        assert_eq!(graph.kind(NodeId(0)).unwrap(), NodeKind::Terminal);
        assert_eq!(graph.kind(NodeId(1)).unwrap(), NodeKind::Body);
        assert_eq!(graph.kind(NodeId(2)).unwrap(), NodeKind::Terminal);

        let star: Vec<NodeRecord> = [(0u64, &[1u64, 2, 3][..]), (1, &[0]), (2, &[0]), (3, &[0])]
            .iter()
            .map(|&(id, ns)| NodeRecord {
                id: NodeId(id),
                position: Point3::new(id as f64, 1.0, 0.0),
                radius: 1.0,
                neighbors: ns.iter().map(|&n| NodeId(n)).collect(),
            })
            .collect();
        let cloud = PointCloud::from_records(star, Unit::Mm).unwrap();
        let (graph, _) = largest_component(&cloud).unwrap();
        assert_eq!(graph.kind(NodeId(0)).unwrap(), NodeKind::Junction);
        for id in [1u64, 2, 3] {
            assert_eq!(graph.kind(NodeId(id)).unwrap(), NodeKind::Terminal);
        }
    }

    #[test]
    fn axis_max_root_selects_highest_terminal() {
        let (graph, _) = largest_component(&f1_cloud()).unwrap();
        let root = select_root(&graph, RootPolicy::AxisMax(Axis::Z)).unwrap();
        assert_eq!(root, NodeId(0));
    }

    #[test]
    fn axis_max_ties_break_to_lowest_id() {
        // Terminals 3 and 6 share the maximal z; 3 wins.
        let mut records = f1_records();
        records[0].position = Point3::new(0.0, 0.0, 1.0);
        records[3].position = Point3::new(-2.0, 0.0, 20.0);
        records[6].position = Point3::new(1.0, 0.0, 20.0);
        let cloud = PointCloud::from_records(records, Unit::Mm).unwrap();
        let (graph, _) = largest_component(&cloud).unwrap();
        let root = select_root(&graph, RootPolicy::AxisMax(Axis::Z)).unwrap();
        assert_eq!(root, NodeId(3));
    }

    #[test]
    fn explicit_root_must_be_terminal() {
        let (graph, _) = largest_component(&f1_cloud()).unwrap();
        assert_eq!(
            select_root(&graph, RootPolicy::Explicit(NodeId(0))).unwrap(),
            NodeId(0)
        );
        let err = select_root(&graph, RootPolicy::Explicit(NodeId(1))).unwrap_err();
        assert!(matches!(
            err,
            GraphError::RootNotTerminal {
                id: NodeId(1),
                kind: NodeKind::Body
            }
        ));
    }

    #[test]
    fn f1_decomposes_into_five_segments() {
        let (graph, _) = largest_component(&f1_cloud()).unwrap();
        let extraction = extract_segments(&graph, NodeId(0)).unwrap();
        let tree = &extraction.tree;
        assert_eq!(extraction.dropped_edges, 0);
        assert_eq!(tree.len(), 5);
        assert_eq!(tree.root(), SegmentId(0));

        let expect: [(u64, &[u64], Option<u64>); 5] = [
            (0, &[0, 1, 2], None),
            (1, &[2, 3], Some(0)),
            (2, &[2, 4], Some(0)),
            (3, &[4, 5], Some(2)),
            (4, &[4, 6], Some(2)),
        ];
        for (sid, nodes, parent) in expect {
            let seg = tree.segment(SegmentId(sid)).unwrap();
            assert_eq!(seg.node_ids(), ids(nodes), "segment {sid}");
            assert_eq!(tree.parent(SegmentId(sid)), parent.map(SegmentId));
        }
    }

    #[test]
    fn path_graph_is_a_single_segment() {
        let records: Vec<NodeRecord> = [(0u64, &[1u64][..]), (1, &[0, 2]), (2, &[1])]
            .iter()
            .map(|&(id, ns)| NodeRecord {
                id: NodeId(id),
                position: Point3::new(0.0, 0.0, -(id as f64)),
                radius: 1.0,
                neighbors: ns.iter().map(|&n| NodeId(n)).collect(),
            })
            .collect();
        let cloud = PointCloud::from_records(records, Unit::Mm).unwrap();
        let (graph, _) = largest_component(&cloud).unwrap();
        let root = select_root(&graph, RootPolicy::default()).unwrap();
        assert_eq!(root, NodeId(0));
        let extraction = extract_segments(&graph, root).unwrap();
        assert_eq!(extraction.tree.len(), 1);
        assert_eq!(
            extraction.tree.segment(SegmentId(0)).unwrap().node_ids(),
            ids(&[0, 1, 2])
        );
    }

    #[test]
    fn long_chord_is_dropped_and_counted() {
        // F1 plus chord 3-5: the chord is longer than the tree paths, so
        // the decomposition matches plain F1 with one dropped edge.
        let mut records = f1_records();
        records[3].neighbors.push(NodeId(5));
        records[5].neighbors.push(NodeId(3));
        let cloud = PointCloud::from_records(records, Unit::Mm).unwrap();
        let (graph, _) = largest_component(&cloud).unwrap();
        let extraction = extract_segments(&graph, NodeId(0)).unwrap();
        assert_eq!(extraction.dropped_edges, 1);
        assert_eq!(extraction.tree.len(), 5);

        let plain = extract_segments(&largest_component(&f1_cloud()).unwrap().0, NodeId(0))
            .unwrap()
            .tree;
        for id in plain.ids() {
            assert_eq!(
                extraction.tree.segment(id).unwrap().node_ids(),
                plain.segment(id).unwrap().node_ids(),
                "segment {id}"
            );
        }
    }

    #[test]
    fn decomposition_is_deterministic() {
        let (graph, _) = largest_component(&f1_cloud()).unwrap();
        let a = extract_segments(&graph, NodeId(0)).unwrap();
        let b = extract_segments(&graph, NodeId(0)).unwrap();
        assert_eq!(a.tree, b.tree);
        assert_eq!(a.tree.to_json(), b.tree.to_json());
    }

    #[test]
    fn segments_span_all_nodes_and_orient_away_from_root() {
        let (graph, _) = largest_component(&f1_cloud()).unwrap();
        let tree = extract_segments(&graph, NodeId(0)).unwrap().tree;
        let mut covered: std::collections::BTreeSet<NodeId> = Default::default();
        for id in tree.ids() {
            let seg = tree.segment(id).unwrap();
            covered.extend(seg.node_ids());
            // Interior nodes have degree 2 in the graph.
            for node in &seg.nodes()[1..seg.node_count() - 1] {
                assert_eq!(graph.degree(node.id).unwrap(), 2);
            }
        }
        assert_eq!(covered.len(), graph.node_count());
    }
}
