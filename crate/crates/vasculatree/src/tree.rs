//! Rooted segment trees: the central data structure of the crate.
//!
//! A [`SegmentTree`] is a rooted tree whose edges are vessel [`Segment`]s:
//! oriented polylines of at least two nodes, each node carrying a 3D
//! position and a radius. A child segment starts at the node where its
//! parent ends, so junction nodes are shared between segments.
//!
//! Trees are self-contained values: pruning rewrites, morphometry, and
//! projection all operate on the tree alone, without the originating
//! graph. Segment ids are stable across rewrites, which keeps audit
//! reports meaningful.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point3;
use crate::ingest::NodeId;

/// Identifier of a segment, stable across rewrites.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct SegmentId(pub u64);

impl std::fmt::Display for SegmentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One node of a segment polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeNode {
    pub id: NodeId,
    pub position: Point3,
    pub radius: f64,
}

/// An oriented maximal path of nodes; first node is proximal (closer to
/// the root), last node is distal.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    nodes: Vec<TreeNode>,
}

impl Segment {
    /// Build a segment; at least two nodes are required.
    pub fn new(nodes: Vec<TreeNode>) -> Result<Self, TreeError> {
        if nodes.len() < 2 {
            return Err(TreeError::TooFewNodes { count: nodes.len() });
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Proximal endpoint.
    pub fn first(&self) -> &TreeNode {
        &self.nodes[0]
    }

    /// Distal endpoint.
    pub fn last(&self) -> &TreeNode {
        self.nodes.last().expect("segments have >= 2 nodes")
    }

    /// Node ids in order, mostly useful in tests.
    pub fn node_ids(&self) -> Vec<NodeId> {
        self.nodes.iter().map(|n| n.id).collect()
    }

    /// Polyline arc length in millimetres.
    pub fn polyline_length(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[0].position.distance(&w[1].position))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct SegmentEntry {
    segment: Segment,
    parent: Option<SegmentId>,
    children: Vec<SegmentId>,
}

/// Rooted directed tree of segments.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentTree {
    root: SegmentId,
    entries: BTreeMap<SegmentId, SegmentEntry>,
}

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("segment needs at least 2 nodes, got {count}")]
    TooFewNodes { count: usize },
    #[error("duplicate segment id {id}")]
    DuplicateSegment { id: SegmentId },
    #[error("root segment {id} not found")]
    RootMissing { id: SegmentId },
    #[error("segment {child} references unknown parent {parent}")]
    UnknownParent { child: SegmentId, parent: SegmentId },
    #[error("segment {id} is not reachable from the root")]
    Unreachable { id: SegmentId },
    #[error("cycle detected at segment {id}")]
    Cycle { id: SegmentId },
    #[error(
        "segment {child} must start where parent {parent} ends \
         (child first node does not match parent last node)"
    )]
    EndpointMismatch { parent: SegmentId, child: SegmentId },
    #[error("tree has no segments")]
    Empty,
    #[error("invalid tree JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl SegmentTree {
    /// Assemble a tree from `(id, segment, parent)` triples.
    ///
    /// Children lists are derived and kept sorted by id. Validation
    /// checks rooted-tree shape and endpoint sharing between parents
    /// and children.
    pub fn build(
        root: SegmentId,
        segments: Vec<(SegmentId, Segment, Option<SegmentId>)>,
    ) -> Result<Self, TreeError> {
        if segments.is_empty() {
            return Err(TreeError::Empty);
        }
        let mut entries: BTreeMap<SegmentId, SegmentEntry> = BTreeMap::new();
        for (id, segment, parent) in segments {
            let previous = entries.insert(
                id,
                SegmentEntry {
                    segment,
                    parent,
                    children: Vec::new(),
                },
            );
            if previous.is_some() {
                return Err(TreeError::DuplicateSegment { id });
            }
        }
        let ids: Vec<SegmentId> = entries.keys().copied().collect();
        for id in &ids {
            let parent = entries[id].parent;
            match parent {
                Some(p) => {
                    if !entries.contains_key(&p) {
                        return Err(TreeError::UnknownParent {
                            child: *id,
                            parent: p,
                        });
                    }
                    entries.get_mut(&p).expect("checked above").children.push(*id);
                }
                None => {
                    if *id != root {
                        return Err(TreeError::Unreachable { id: *id });
                    }
                }
            }
        }
        for entry in entries.values_mut() {
            entry.children.sort_unstable();
        }
        let tree = Self { root, entries };
        tree.validate()?;
        Ok(tree)
    }

    /// Check structural invariants; cheap enough to run after rewrites.
    pub fn validate(&self) -> Result<(), TreeError> {
        if !self.entries.contains_key(&self.root) {
            return Err(TreeError::RootMissing { id: self.root });
        }
        if self.entries[&self.root].parent.is_some() {
            return Err(TreeError::Cycle { id: self.root });
        }
        // Reachability + acyclicity: BFS from the root must visit every
        // segment exactly once.
        let mut seen = BTreeSet::new();
        let mut queue = std::collections::VecDeque::from([self.root]);
        while let Some(id) = queue.pop_front() {
            if !seen.insert(id) {
                return Err(TreeError::Cycle { id });
            }
            for &child in &self.entries[&id].children {
                if self.entries[&child].parent != Some(id) {
                    return Err(TreeError::Unreachable { id: child });
                }
                queue.push_back(child);
            }
        }
        if seen.len() != self.entries.len() {
            let missing = self
                .entries
                .keys()
                .find(|id| !seen.contains(id))
                .expect("some id is unvisited");
            return Err(TreeError::Unreachable { id: *missing });
        }
        // Endpoint sharing: a child starts with its parent's last node.
        for (&id, entry) in &self.entries {
            if let Some(parent) = entry.parent {
                let parent_last = self.entries[&parent].segment.last();
                let child_first = entry.segment.first();
                if parent_last.id != child_first.id
                    || parent_last.position != child_first.position
                {
                    return Err(TreeError::EndpointMismatch { parent, child: id });
                }
            }
        }
        Ok(())
    }

    pub fn root(&self) -> SegmentId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: SegmentId) -> bool {
        self.entries.contains_key(&id)
    }

    /// Segment ids in ascending order.
    pub fn ids(&self) -> impl Iterator<Item = SegmentId> + '_ {
        self.entries.keys().copied()
    }

    pub fn segment(&self, id: SegmentId) -> Option<&Segment> {
        self.entries.get(&id).map(|e| &e.segment)
    }

    pub fn parent(&self, id: SegmentId) -> Option<SegmentId> {
        self.entries.get(&id).and_then(|e| e.parent)
    }

    /// Children sorted by id.
    pub fn children(&self, id: SegmentId) -> &[SegmentId] {
        self.entries
            .get(&id)
            .map(|e| e.children.as_slice())
            .unwrap_or(&[])
    }

    pub fn is_leaf(&self, id: SegmentId) -> bool {
        self.children(id).is_empty()
    }

    /// Breadth-first order from the root; children visited in id order.
    pub fn bfs_order(&self) -> Vec<SegmentId> {
        let mut order = Vec::with_capacity(self.entries.len());
        let mut queue = std::collections::VecDeque::from([self.root]);
        while let Some(id) = queue.pop_front() {
            order.push(id);
            queue.extend(self.children(id).iter().copied());
        }
        order
    }

    /// Count of distinct nodes: junction endpoints shared by a parent
    /// and its children are counted once.
    pub fn distinct_node_count(&self) -> usize {
        self.entries
            .iter()
            .map(|(&id, e)| {
                if id == self.root {
                    e.segment.node_count()
                } else {
                    e.segment.node_count() - 1
                }
            })
            .sum()
    }

    /// Every distinct node, visiting shared junction endpoints once, in
    /// ascending (segment id, node index) order.
    pub fn distinct_nodes(&self) -> impl Iterator<Item = &TreeNode> + '_ {
        self.entries.iter().flat_map(move |(&id, e)| {
            let skip = usize::from(id != self.root);
            e.segment.nodes()[skip..].iter()
        })
    }

    /// Sorted multiset of distinct node positions (bit-exact keys).
    pub fn position_multiset(&self) -> Vec<[u64; 3]> {
        let mut keys: Vec<[u64; 3]> = self.distinct_nodes().map(|n| n.position.bits()).collect();
        keys.sort_unstable();
        keys
    }

    /// Largest node id present; fresh ids can start above it.
    pub fn max_node_id(&self) -> u64 {
        self.entries
            .values()
            .flat_map(|e| e.segment.nodes())
            .map(|n| n.id.0)
            .max()
            .unwrap_or(0)
    }

    /// Serialize to the tree JSON schema.
    ///
    /// Schema: `{"root": id, "segments": [{"id": .., "nodes": [{"pos":
    /// [x,y,z], "radius": ..}, ..], "children": [..]}]}`. Node ids are an
    /// in-memory notion and are not part of the wire format.
    pub fn to_json(&self) -> String {
        let doc = JsonTree {
            root: self.root,
            segments: self
                .entries
                .iter()
                .map(|(&id, e)| JsonSegment {
                    id,
                    nodes: e
                        .segment
                        .nodes()
                        .iter()
                        .map(|n| JsonNode {
                            pos: n.position,
                            radius: n.radius,
                        })
                        .collect(),
                    children: e.children.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("tree serialization cannot fail")
    }

    /// Parse a tree from the JSON schema, validating structure and
    /// endpoint sharing (positions must agree to 1e-9 mm).
    ///
    /// Node ids are synthesized in breadth-first order; a child's first
    /// node adopts the id and exact position of its parent's last node.
    pub fn from_json(source: &str) -> Result<Self, TreeError> {
        let doc: JsonTree = serde_json::from_str(source)?;
        if doc.segments.is_empty() {
            return Err(TreeError::Empty);
        }

        let mut raw: BTreeMap<SegmentId, JsonSegment> = BTreeMap::new();
        for seg in doc.segments {
            let id = seg.id;
            if raw.insert(id, seg).is_some() {
                return Err(TreeError::DuplicateSegment { id });
            }
        }
        if !raw.contains_key(&doc.root) {
            return Err(TreeError::RootMissing { id: doc.root });
        }
        // Derive parents from children lists.
        let mut parent: BTreeMap<SegmentId, SegmentId> = BTreeMap::new();
        for (&id, seg) in &raw {
            for &child in &seg.children {
                if !raw.contains_key(&child) {
                    return Err(TreeError::UnknownParent { child, parent: id });
                }
                if parent.insert(child, id).is_some() {
                    return Err(TreeError::Cycle { id: child });
                }
            }
        }

        // BFS from the root, assigning node ids and sharing junctions.
        let mut next_node_id = 0u64;
        let mut entries: BTreeMap<SegmentId, SegmentEntry> = BTreeMap::new();
        let mut queue = std::collections::VecDeque::from([doc.root]);
        let mut visited = BTreeSet::new();
        while let Some(id) = queue.pop_front() {
            if !visited.insert(id) {
                return Err(TreeError::Cycle { id });
            }
            let seg = &raw[&id];
            if seg.nodes.len() < 2 {
                return Err(TreeError::TooFewNodes {
                    count: seg.nodes.len(),
                });
            }
            let mut nodes = Vec::with_capacity(seg.nodes.len());
            let start = if let Some(&p) = parent.get(&id) {
                let parent_last = *entries
                    .get(&p)
                    .expect("parents are visited before children in BFS")
                    .segment
                    .last();
                let first = &seg.nodes[0];
                if first.pos.distance(&parent_last.position) > 1e-9
                    || (first.radius - parent_last.radius).abs() > 1e-9
                {
                    return Err(TreeError::EndpointMismatch {
                        parent: p,
                        child: id,
                    });
                }
                nodes.push(parent_last);
                1
            } else {
                0
            };
            for n in &seg.nodes[start..] {
                nodes.push(TreeNode {
                    id: NodeId(next_node_id),
                    position: n.pos,
                    radius: n.radius,
                });
                next_node_id += 1;
            }
            entries.insert(
                id,
                SegmentEntry {
                    segment: Segment::new(nodes)?,
                    parent: parent.get(&id).copied(),
                    children: {
                        let mut c = seg.children.clone();
                        c.sort_unstable();
                        c
                    },
                },
            );
            queue.extend(entries[&id].children.iter().copied());
        }
        if visited.len() != raw.len() {
            let missing = raw
                .keys()
                .find(|id| !visited.contains(id))
                .expect("some id is unvisited");
            return Err(TreeError::Unreachable { id: *missing });
        }

        let tree = Self {
            root: doc.root,
            entries,
        };
        tree.validate()?;
        Ok(tree)
    }

    // Internal mutation hooks for the prune rewrites. Keeping them
    // crate-private preserves the invariants for library users.

    pub(crate) fn remove_leaf(&mut self, id: SegmentId) {
        debug_assert!(self.children(id).is_empty());
        let entry = self.entries.remove(&id).expect("segment exists");
        if let Some(p) = entry.parent {
            let siblings = &mut self.entries.get_mut(&p).expect("parent exists").children;
            siblings.retain(|&c| c != id);
        }
    }

    /// Remove `id`, attaching its children to its parent and replacing
    /// each child's first node with `id`'s first node (move-up).
    pub(crate) fn splice_out(&mut self, id: SegmentId) {
        let entry = self.entries.remove(&id).expect("segment exists");
        let parent = entry.parent.expect("splice_out never removes the root");
        let new_head = *entry.segment.first();
        let children = entry.children;
        for &child in &children {
            let child_entry = self.entries.get_mut(&child).expect("child exists");
            child_entry.parent = Some(parent);
            child_entry.segment.nodes[0] = new_head;
        }
        let parent_children = &mut self
            .entries
            .get_mut(&parent)
            .expect("parent exists")
            .children;
        parent_children.retain(|&c| c != id);
        parent_children.extend(children);
        parent_children.sort_unstable();
    }

    /// Merge `child` into `parent` (series join). The parent keeps its
    /// id; node lists are concatenated with the shared junction kept
    /// once; the child's children are adopted.
    pub(crate) fn merge_single_child(&mut self, parent: SegmentId, child: SegmentId) {
        debug_assert_eq!(self.children(parent), &[child]);
        let child_entry = self.entries.remove(&child).expect("child exists");
        let grandchildren = child_entry.children;
        for &g in &grandchildren {
            self.entries.get_mut(&g).expect("grandchild exists").parent = Some(parent);
        }
        let parent_entry = self.entries.get_mut(&parent).expect("parent exists");
        parent_entry
            .segment
            .nodes
            .extend_from_slice(&child_entry.segment.nodes[1..]);
        parent_entry.children = grandchildren;
        parent_entry.children.sort_unstable();
    }

    /// Keep only `keep` (which must be parent-closed and contain the
    /// root); used by connected-subtree extraction.
    pub(crate) fn restrict(&self, keep: &BTreeSet<SegmentId>) -> SegmentTree {
        debug_assert!(keep.contains(&self.root));
        let entries = self
            .entries
            .iter()
            .filter(|(id, _)| keep.contains(id))
            .map(|(&id, e)| {
                let children = e
                    .children
                    .iter()
                    .copied()
                    .filter(|c| keep.contains(c))
                    .collect();
                (
                    id,
                    SegmentEntry {
                        segment: e.segment.clone(),
                        parent: e.parent,
                        children,
                    },
                )
            })
            .collect();
        SegmentTree {
            root: self.root,
            entries,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonTree {
    root: SegmentId,
    segments: Vec<JsonSegment>,
}

#[derive(Serialize, Deserialize)]
struct JsonSegment {
    id: SegmentId,
    nodes: Vec<JsonNode>,
    children: Vec<SegmentId>,
}

#[derive(Serialize, Deserialize)]
struct JsonNode {
    pos: Point3,
    radius: f64,
}
