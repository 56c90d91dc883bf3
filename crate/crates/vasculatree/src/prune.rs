//! Filters and tree rewrites that reduce a segment tree to a smaller,
//! still-connected subtree, each with an audit report.
//!
//! Filters select an *eligible* subset of segments without touching the
//! tree; [`connected_subtree`] then materializes the largest connected
//! subtree of an eligible set, discarding eligible segments whose
//! ancestors are not eligible. The structural rewrites are pure
//! tree-to-tree functions:
//!
//! * [`remove_pseudo_trifurcations`] splices out artifact short
//!   segments that have children, re-heading the children at the short
//!   segment's proximal node (move-up).
//! * [`series_join`] merges every parent with its only child until no
//!   single-child segment remains.
//! * [`remove_short_terminals`] drops leaf segments below a node-count
//!   threshold in one simultaneous pass over the current leaves.
//! * [`simplify_fixpoint`] alternates short-terminal removal and series
//!   joins until neither changes the tree.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::morphometry::SegmentMetrics;
use crate::tree::{SegmentId, SegmentTree};

/// An eligibility filter over segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterSpec {
    /// Mean node radius strictly exceeds the threshold (mm).
    MeanRadius { threshold: f64 },
    /// At least `proportion` of the nodes have radius strictly above
    /// the threshold.
    Proportional { threshold: f64, proportion: f64 },
    /// Some node radius strictly exceeds the threshold.
    SingleNode { threshold: f64 },
    /// Generation at most `max_generation`.
    MaxGeneration { max_generation: u32 },
}

impl FilterSpec {
    /// Short name for reports.
    pub fn name(&self) -> &'static str {
        match self {
            FilterSpec::MeanRadius { .. } => "mean_radius",
            FilterSpec::Proportional { .. } => "proportional",
            FilterSpec::SingleNode { .. } => "single_node",
            FilterSpec::MaxGeneration { .. } => "max_generation",
        }
    }

    /// Reject non-finite or out-of-range parameters.
    pub fn check(&self) -> Result<(), PruneError> {
        let bad = |message: String| Err(PruneError::InvalidFilter { message });
        match *self {
            FilterSpec::MeanRadius { threshold } | FilterSpec::SingleNode { threshold } => {
                if !threshold.is_finite() || threshold < 0.0 {
                    return bad(format!("radius threshold must be >= 0, got {threshold}"));
                }
            }
            FilterSpec::Proportional {
                threshold,
                proportion,
            } => {
                if !threshold.is_finite() || threshold < 0.0 {
                    return bad(format!("radius threshold must be >= 0, got {threshold}"));
                }
                if !proportion.is_finite() || proportion <= 0.0 || proportion > 1.0 {
                    return bad(format!("proportion must be in (0, 1], got {proportion}"));
                }
            }
            FilterSpec::MaxGeneration { .. } => {}
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PruneError {
    #[error("invalid filter: {message}")]
    InvalidFilter { message: String },
    #[error("tree has no inlet: root segment {root} is not in the eligible set")]
    RootNotEligible { root: SegmentId },
    #[error("metrics missing for segment {id}")]
    MissingMetrics { id: SegmentId },
}

/// Audit record of one filter or rewrite application.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PruneReport {
    pub operation: String,
    pub segments_before: usize,
    pub segments_after: usize,
    /// Segments removed outright (filtered out, spliced, or dropped).
    pub removed: Vec<SegmentId>,
    /// `(parent, child)` pairs merged by series joins.
    pub joined: Vec<(SegmentId, SegmentId)>,
    /// Eligible segments discarded because an ancestor was not kept.
    pub discarded_disconnected: Vec<SegmentId>,
    /// Distinct nodes dropped from the tree by this operation.
    pub nodes_removed: usize,
    pub warnings: Vec<String>,
}

impl PruneReport {
    fn new(operation: &str, segments_before: usize) -> Self {
        Self {
            operation: operation.to_string(),
            segments_before,
            segments_after: segments_before,
            removed: Vec::new(),
            joined: Vec::new(),
            discarded_disconnected: Vec::new(),
            nodes_removed: 0,
            warnings: Vec::new(),
        }
    }

    /// The count identity every report must satisfy:
    /// `before - removed - joins - discarded == after`.
    pub fn arithmetic_holds(&self) -> bool {
        self.segments_before
            == self.segments_after
                + self.removed.len()
                + self.joined.len()
                + self.discarded_disconnected.len()
    }

    /// True when the operation changed nothing.
    pub fn is_identity(&self) -> bool {
        self.removed.is_empty() && self.joined.is_empty() && self.discarded_disconnected.is_empty()
    }
}

/// Evaluate `spec` on every segment, returning the eligible subset.
///
/// The result may be disconnected; pair with [`connected_subtree`] to
/// materialize a usable tree.
pub fn filter_segments(
    tree: &SegmentTree,
    metrics: &std::collections::BTreeMap<SegmentId, SegmentMetrics>,
    spec: &FilterSpec,
) -> Result<BTreeSet<SegmentId>, PruneError> {
    spec.check()?;
    let mut eligible = BTreeSet::new();
    match spec {
        FilterSpec::MeanRadius { threshold } => {
            for id in tree.ids() {
                let m = metrics
                    .get(&id)
                    .ok_or(PruneError::MissingMetrics { id })?;
                if m.mean_radius > *threshold {
                    eligible.insert(id);
                }
            }
        }
        FilterSpec::SingleNode { threshold } => {
            for id in tree.ids() {
                let seg = tree.segment(id).expect("id comes from the tree");
                if seg.nodes().iter().any(|n| n.radius > *threshold) {
                    eligible.insert(id);
                }
            }
        }
        FilterSpec::Proportional {
            threshold,
            proportion,
        } => {
            for id in tree.ids() {
                let seg = tree.segment(id).expect("id comes from the tree");
                let over = seg.nodes().iter().filter(|n| n.radius > *threshold).count();
                if over as f64 / seg.node_count() as f64 >= *proportion {
                    eligible.insert(id);
                }
            }
        }
        FilterSpec::MaxGeneration { max_generation } => {
            let generations = crate::morphometry::assign_generations(tree);
            for (id, generation) in generations {
                if generation <= *max_generation {
                    eligible.insert(id);
                }
            }
        }
    }
    Ok(eligible)
}

/// Materialize the connected subtree of `eligible`, top-down: starting
/// from the root, a segment is kept iff it is eligible and its parent
/// is kept. Eligible segments left behind are reported as discarded.
///
/// Errors when the root segment is not eligible ("tree has no inlet").
pub fn connected_subtree(
    tree: &SegmentTree,
    eligible: &BTreeSet<SegmentId>,
) -> Result<(SegmentTree, PruneReport), PruneError> {
    let root = tree.root();
    if !eligible.contains(&root) {
        return Err(PruneError::RootNotEligible { root });
    }
    let live: BTreeSet<SegmentId> = eligible
        .iter()
        .copied()
        .filter(|&id| tree.contains(id))
        .collect();

    let mut kept = BTreeSet::from([root]);
    for id in tree.bfs_order() {
        if id == root {
            continue;
        }
        let parent = tree.parent(id).expect("non-root has a parent");
        if live.contains(&id) && kept.contains(&parent) {
            kept.insert(id);
        }
    }

    let nodes_before = tree.distinct_node_count();
    let result = tree.restrict(&kept);
    let mut report = PruneReport::new("connected_subtree", live.len());
    report.segments_after = kept.len();
    report.discarded_disconnected = live.difference(&kept).copied().collect();
    report.nodes_removed = nodes_before - result.distinct_node_count();
    debug_assert!(report.arithmetic_holds());
    Ok((result, report))
}

/// Splice out short internal segments (move-up).
///
/// Every non-root segment with at most `short_node_count` nodes that
/// has children is removed: its children re-parent to the short
/// segment's parent and their first node becomes the short segment's
/// first node. The pass iterates until no such segment remains, so
/// stacked short segments collapse to the topmost junction. Short
/// childless segments are left alone. A short root is kept with a
/// warning, since the inlet cannot be removed.
pub fn remove_pseudo_trifurcations(
    tree: &SegmentTree,
    short_node_count: usize,
) -> (SegmentTree, PruneReport) {
    let mut result = tree.clone();
    let mut report = PruneReport::new("remove_pseudo_trifurcations", tree.len());
    let nodes_before = tree.distinct_node_count();
    let mut missing_signature = 0usize;

    loop {
        let candidates: Vec<SegmentId> = result
            .ids()
            .filter(|&id| {
                id != result.root()
                    && !result.children(id).is_empty()
                    && result
                        .segment(id)
                        .expect("id comes from the tree")
                        .node_count()
                        <= short_node_count
            })
            .collect();
        if candidates.is_empty() {
            break;
        }
        for id in candidates {
            // A candidate may have been re-headed by an earlier splice
            // in this round; re-check before mutating.
            if !result.contains(id)
                || result.children(id).is_empty()
                || result.segment(id).expect("checked").node_count() > short_node_count
            {
                continue;
            }
            let seg = result.segment(id).expect("checked");
            let both_radii_exceed_length =
                seg.first().radius > seg.polyline_length() && seg.last().radius > seg.polyline_length();
            if !both_radii_exceed_length {
                missing_signature += 1;
            }
            result.splice_out(id);
            report.removed.push(id);
        }
    }

    let root_seg = tree.segment(tree.root()).expect("root exists");
    if root_seg.node_count() <= short_node_count && !tree.children(tree.root()).is_empty() {
        report.warnings.push(format!(
            "root segment {} has <= {short_node_count} nodes but the inlet cannot be removed",
            tree.root()
        ));
    }
    if missing_signature > 0 {
        report.warnings.push(format!(
            "{missing_signature} of {} removed short segments lack the radius-exceeds-length \
             artifact signature",
            report.removed.len()
        ));
    }

    report.segments_after = result.len();
    report.nodes_removed = nodes_before - result.distinct_node_count();
    debug_assert!(report.arithmetic_holds());
    debug_assert!(result.validate().is_ok());
    (result, report)
}

/// Merge every parent with its single child until no segment has
/// exactly one child. The parent keeps its id; node lists concatenate
/// with the shared junction kept once, so distinct node count and
/// polyline geometry are unchanged.
pub fn series_join(tree: &SegmentTree) -> (SegmentTree, PruneReport) {
    let mut result = tree.clone();
    let mut report = PruneReport::new("series_join", tree.len());

    loop {
        let joinable: Option<SegmentId> = result
            .ids()
            .find(|&id| result.children(id).len() == 1);
        match joinable {
            None => break,
            Some(parent) => {
                let child = result.children(parent)[0];
                result.merge_single_child(parent, child);
                report.joined.push((parent, child));
            }
        }
    }

    report.segments_after = result.len();
    debug_assert!(report.arithmetic_holds());
    debug_assert!(result.validate().is_ok());
    (result, report)
}

/// Remove leaf segments with fewer than `min_nodes` nodes.
///
/// One simultaneous pass over the current leaves: a segment whose
/// children all get removed in this pass is *not* reconsidered. The
/// root is never removed; a short root leaf is kept with a warning.
pub fn remove_short_terminals(tree: &SegmentTree, min_nodes: usize) -> (SegmentTree, PruneReport) {
    let mut result = tree.clone();
    let mut report = PruneReport::new("remove_short_terminals", tree.len());
    let nodes_before = tree.distinct_node_count();

    let doomed: Vec<SegmentId> = tree
        .ids()
        .filter(|&id| {
            tree.is_leaf(id)
                && tree
                    .segment(id)
                    .expect("id comes from the tree")
                    .node_count()
                    < min_nodes
        })
        .collect();
    for id in doomed {
        if id == tree.root() {
            report.warnings.push(format!(
                "root segment {id} has fewer than {min_nodes} nodes but the inlet cannot be removed"
            ));
            continue;
        }
        result.remove_leaf(id);
        report.removed.push(id);
    }

    report.segments_after = result.len();
    report.nodes_removed = nodes_before - result.distinct_node_count();
    debug_assert!(report.arithmetic_holds());
    debug_assert!(result.validate().is_ok());
    (result, report)
}

/// Alternate [`remove_short_terminals`] and [`series_join`] until
/// neither changes the tree. Terminates because every productive round
/// strictly reduces the segment count.
pub fn simplify_fixpoint(tree: &SegmentTree, min_nodes: usize) -> (SegmentTree, PruneReport) {
    let mut result = tree.clone();
    let mut report = PruneReport::new("simplify_fixpoint", tree.len());
    let nodes_before = tree.distinct_node_count();

    loop {
        let (after_removal, removal) = remove_short_terminals(&result, min_nodes);
        let (after_join, join) = series_join(&after_removal);
        report.removed.extend(removal.removed);
        report.joined.extend(join.joined);
        report.warnings.extend(removal.warnings);
        let changed = after_join.len() != result.len();
        result = after_join;
        if !changed {
            break;
        }
    }
    report.warnings.dedup();

    report.segments_after = result.len();
    report.nodes_removed = nodes_before - result.distinct_node_count();
    debug_assert!(report.arithmetic_holds());
    debug_assert!(result.validate().is_ok());
    (result, report)
}
