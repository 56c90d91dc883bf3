//! Configurable filter/rewrite pipelines and the solver export format.
//!
//! A pipeline runs an ordered list of steps against a segment tree.
//! Filter steps select eligible segments without touching the tree;
//! consecutive filters intersect. A `connected_subtree` step
//! materializes the pending selection into a new tree. Rewrite steps
//! require a materialized tree. Every step appends a [`PruneReport`] to
//! the audit chain, and each report's `after` count equals the next
//! report's `before` count.
//!
//! If the pipeline ends with a pending selection smaller than the full
//! tree, a final `connected_subtree` is applied implicitly (and
//! reported), so the pipeline always yields a connected tree.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Axis, Point3};
use crate::ingest::{Format, NodeId};
use crate::morphometry::{segment_metrics_map, SegmentMetrics};
use crate::project::Plane;
use crate::prune::{
    connected_subtree, filter_segments, remove_pseudo_trifurcations, remove_short_terminals,
    series_join, simplify_fixpoint, FilterSpec, PruneError, PruneReport,
};
use crate::tree::{SegmentId, SegmentTree, TreeError};

/// One pipeline step: a filter, the materialization step, or a rewrite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    MeanRadius {
        threshold: f64,
    },
    Proportional {
        threshold: f64,
        proportion: f64,
    },
    SingleNode {
        threshold: f64,
    },
    MaxGeneration {
        max_generation: u32,
    },
    ConnectedSubtree,
    RemovePseudoTrifurcations {
        #[serde(default = "default_short_node_count")]
        short_node_count: usize,
    },
    SeriesJoin,
    RemoveShortTerminals {
        #[serde(default = "default_min_nodes")]
        min_nodes: usize,
    },
    Simplify {
        #[serde(default = "default_min_nodes")]
        min_nodes: usize,
    },
}

fn default_short_node_count() -> usize {
    2
}

fn default_min_nodes() -> usize {
    5
}

impl Step {
    pub fn name(&self) -> &'static str {
        match self {
            Step::MeanRadius { .. } => "mean_radius",
            Step::Proportional { .. } => "proportional",
            Step::SingleNode { .. } => "single_node",
            Step::MaxGeneration { .. } => "max_generation",
            Step::ConnectedSubtree => "connected_subtree",
            Step::RemovePseudoTrifurcations { .. } => "remove_pseudo_trifurcations",
            Step::SeriesJoin => "series_join",
            Step::RemoveShortTerminals { .. } => "remove_short_terminals",
            Step::Simplify { .. } => "simplify",
        }
    }

    fn as_filter(&self) -> Option<FilterSpec> {
        match *self {
            Step::MeanRadius { threshold } => Some(FilterSpec::MeanRadius { threshold }),
            Step::Proportional {
                threshold,
                proportion,
            } => Some(FilterSpec::Proportional {
                threshold,
                proportion,
            }),
            Step::SingleNode { threshold } => Some(FilterSpec::SingleNode { threshold }),
            Step::MaxGeneration { max_generation } => {
                Some(FilterSpec::MaxGeneration { max_generation })
            }
            _ => None,
        }
    }
}

/// Root selection in a pipeline config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum RootConfig {
    AxisMax { axis: Axis },
    Explicit { node: NodeId },
}

impl Default for RootConfig {
    fn default() -> Self {
        RootConfig::AxisMax { axis: Axis::Z }
    }
}

impl From<RootConfig> for crate::graph::RootPolicy {
    fn from(config: RootConfig) -> Self {
        match config {
            RootConfig::AxisMax { axis } => crate::graph::RootPolicy::AxisMax(axis),
            RootConfig::Explicit { node } => crate::graph::RootPolicy::Explicit(node),
        }
    }
}

/// Input file description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputConfig {
    pub path: PathBuf,
    /// Inferred from the extension when omitted.
    #[serde(default)]
    pub format: Option<FormatConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatConfig {
    Csv,
    Json,
}

impl From<FormatConfig> for Format {
    fn from(f: FormatConfig) -> Self {
        match f {
            FormatConfig::Csv => Format::Csv,
            FormatConfig::Json => Format::Json,
        }
    }
}

/// Output targets; all optional, all distinct.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputsConfig {
    /// Final tree in the tree JSON schema.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<PathBuf>,
    /// Solver export JSON.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<PathBuf>,
    /// Projection plot as SVG.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
    /// Projection plot as CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// Audit report JSON (parse stats, step reports, final summary).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

/// Plot settings used when `outputs.svg` or `outputs.csv` are set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlotConfig {
    pub projection: ProjectionKind,
    pub style: StyleKind,
    /// Plane for the lateral projection.
    pub plane: Plane,
    /// Explicit Mercator center; node centroid when omitted.
    pub center: Option<Point3>,
}

impl Default for PlotConfig {
    fn default() -> Self {
        Self {
            projection: ProjectionKind::Mercator,
            style: StyleKind::Generation,
            plane: Plane::Xz,
            center: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionKind {
    Lateral,
    Mercator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StyleKind {
    Generation,
    Strahler,
}

/// Full pipeline configuration, loaded from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: InputConfig,
    #[serde(default)]
    pub root: RootConfig,
    pub steps: Vec<Step>,
    #[serde(default)]
    pub outputs: OutputsConfig,
    #[serde(default)]
    pub plot: PlotConfig,
}

impl PipelineConfig {
    /// Parse and validate a config document. Unknown step names are
    /// rejected by the schema; serde errors carry line numbers.
    pub fn from_json(source: &str) -> Result<Self, PipelineError> {
        let config: PipelineConfig =
            serde_json::from_str(source).map_err(PipelineError::Config)?;
        config.check()?;
        Ok(config)
    }

    /// Structural validation: non-empty steps, distinct paths, valid
    /// filter parameters.
    pub fn check(&self) -> Result<(), PipelineError> {
        if self.steps.is_empty() {
            return Err(PipelineError::InvalidConfig {
                message: "steps list must not be empty".to_string(),
            });
        }
        for (index, step) in self.steps.iter().enumerate() {
            if let Some(filter) = step.as_filter() {
                filter.check().map_err(|source| PipelineError::Step {
                    index,
                    op: step.name().to_string(),
                    source,
                })?;
            }
        }
        let mut paths: Vec<&PathBuf> = [
            self.outputs.tree.as_ref(),
            self.outputs.solver.as_ref(),
            self.outputs.svg.as_ref(),
            self.outputs.csv.as_ref(),
            self.outputs.report.as_ref(),
        ]
        .into_iter()
        .flatten()
        .collect();
        paths.push(&self.input.path);
        paths.sort();
        for pair in paths.windows(2) {
            if pair[0] == pair[1] {
                return Err(PipelineError::InvalidConfig {
                    message: format!("path `{}` referenced more than once", pair[0].display()),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    Config(#[source] serde_json::Error),
    #[error("invalid config: {message}")]
    InvalidConfig { message: String },
    #[error("step {index} ({op}): {source}")]
    Step {
        index: usize,
        op: String,
        source: PruneError,
    },
    #[error("step {index} ({op}): rewrites need a materialized tree; insert connected_subtree after filter steps")]
    UnmaterializedSelection { index: usize, op: String },
    #[error("step {index} ({op}) left no eligible segments")]
    EmptyResult { index: usize, op: String },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Outcome of running the step chain.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub tree: SegmentTree,
    pub reports: Vec<PruneReport>,
}

/// Apply `steps` in order to `tree`.
///
/// Reports from failed runs are not returned here; [`run_steps_partial`]
/// exposes the reports accumulated before the failure.
pub fn run_steps(tree: &SegmentTree, steps: &[Step]) -> Result<PipelineRun, PipelineError> {
    let (result, reports) = run_steps_partial(tree, steps);
    result.map(|tree| PipelineRun { tree, reports })
}

/// Like [`run_steps`], but always hands back the report chain built so
/// far, so callers can persist a partial audit log on failure.
pub fn run_steps_partial(
    tree: &SegmentTree,
    steps: &[Step],
) -> (Result<SegmentTree, PipelineError>, Vec<PruneReport>) {
    let mut current = tree.clone();
    let mut pending: Option<BTreeSet<SegmentId>> = None;
    let mut metrics: Option<std::collections::BTreeMap<SegmentId, SegmentMetrics>> = None;
    let mut reports: Vec<PruneReport> = Vec::new();

    for (index, step) in steps.iter().enumerate() {
        let step_err = |source: PruneError| PipelineError::Step {
            index,
            op: step.name().to_string(),
            source,
        };
        match step {
            filter_step if filter_step.as_filter().is_some() => {
                let spec = filter_step.as_filter().expect("guard checked");
                let m = metrics.get_or_insert_with(|| segment_metrics_map(&current));
                let eligible = match filter_segments(&current, m, &spec) {
                    Ok(e) => e,
                    Err(e) => return (Err(step_err(e)), reports),
                };
                let live: BTreeSet<SegmentId> =
                    pending.unwrap_or_else(|| current.ids().collect());
                let kept: BTreeSet<SegmentId> =
                    live.intersection(&eligible).copied().collect();
                let mut report = PruneReport {
                    operation: filter_step.name().to_string(),
                    segments_before: live.len(),
                    segments_after: kept.len(),
                    removed: live.difference(&kept).copied().collect(),
                    joined: Vec::new(),
                    discarded_disconnected: Vec::new(),
                    nodes_removed: 0,
                    warnings: Vec::new(),
                };
                if kept.is_empty() {
                    report.warnings.push("no segments remain eligible".to_string());
                    reports.push(report);
                    return (
                        Err(PipelineError::EmptyResult {
                            index,
                            op: filter_step.name().to_string(),
                        }),
                        reports,
                    );
                }
                reports.push(report);
                pending = Some(kept);
            }
            Step::ConnectedSubtree => {
                let eligible = pending
                    .take()
                    .unwrap_or_else(|| current.ids().collect());
                match connected_subtree(&current, &eligible) {
                    Ok((next, report)) => {
                        reports.push(report);
                        current = next;
                        metrics = None;
                    }
                    Err(e) => return (Err(step_err(e)), reports),
                }
            }
            rewrite => {
                if pending.is_some() {
                    return (
                        (Err(PipelineError::UnmaterializedSelection {
                            index,
                            op: rewrite.name().to_string(),
                        })),
                        reports,
                    );
                }
                let (next, report) = match *rewrite {
                    Step::RemovePseudoTrifurcations { short_node_count } => {
                        remove_pseudo_trifurcations(&current, short_node_count)
                    }
                    Step::SeriesJoin => series_join(&current),
                    Step::RemoveShortTerminals { min_nodes } => {
                        remove_short_terminals(&current, min_nodes)
                    }
                    Step::Simplify { min_nodes } => simplify_fixpoint(&current, min_nodes),
                    _ => unreachable!("filters and connected_subtree handled above"),
                };
                reports.push(report);
                current = next;
                metrics = None;
            }
        }
    }

    // A trailing filter selection is materialized implicitly so the
    // pipeline always ends on a connected tree.
    if let Some(eligible) = pending.take() {
        if eligible.len() != current.len() {
            match connected_subtree(&current, &eligible) {
                Ok((next, mut report)) => {
                    report.operation = "connected_subtree (implicit)".to_string();
                    reports.push(report);
                    current = next;
                }
                Err(e) => {
                    return (
                        Err(PipelineError::Step {
                            index: steps.len(),
                            op: "connected_subtree (implicit)".to_string(),
                            source: e,
                        }),
                        reports,
                    )
                }
            }
        }
    }

    (Ok(current), reports)
}

/// One vessel row of the solver export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverVessel {
    pub id: SegmentId,
    pub length_mm: f64,
    pub inlet_radius_mm: f64,
    pub outlet_radius_mm: f64,
    pub parent: Option<SegmentId>,
    pub children: Vec<SegmentId>,
}

/// Vessel table consumed by 1D flow solvers: per vessel the length,
/// inlet/outlet radii, and tree connectivity. Export only; no solver is
/// implemented here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverExport {
    pub vessels: Vec<SolverVessel>,
}

#[derive(Debug, Error)]
pub enum SolverExportError {
    #[error("segment {id} has zero length; solver vessels need positive length")]
    ZeroLength { id: SegmentId },
    #[error("invalid solver JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("solver export is not a rooted tree: {message}")]
    NotATree { message: String },
}

impl SolverExport {
    /// Build the export from a tree. Inlet/outlet radii are the radii
    /// of each segment's first/last node.
    pub fn from_tree(tree: &SegmentTree) -> Result<Self, SolverExportError> {
        let mut vessels = Vec::with_capacity(tree.len());
        for id in tree.ids() {
            let seg = tree.segment(id).expect("id comes from the tree");
            let length = seg.polyline_length();
            if length <= 0.0 {
                return Err(SolverExportError::ZeroLength { id });
            }
            vessels.push(SolverVessel {
                id,
                length_mm: length,
                inlet_radius_mm: seg.first().radius,
                outlet_radius_mm: seg.last().radius,
                parent: tree.parent(id),
                children: tree.children(id).to_vec(),
            });
        }
        Ok(Self { vessels })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solver export serialization cannot fail")
    }

    /// Parse and structurally validate a solver export document.
    pub fn from_json(source: &str) -> Result<Self, SolverExportError> {
        let export: SolverExport = serde_json::from_str(source)?;
        export.check()?;
        Ok(export)
    }

    /// Verify the connectivity forms a rooted tree and values are
    /// positive.
    pub fn check(&self) -> Result<(), SolverExportError> {
        let err = |message: String| Err(SolverExportError::NotATree { message });
        let ids: BTreeSet<SegmentId> = self.vessels.iter().map(|v| v.id).collect();
        if ids.len() != self.vessels.len() {
            return err("duplicate vessel ids".to_string());
        }
        let roots: Vec<SegmentId> = self
            .vessels
            .iter()
            .filter(|v| v.parent.is_none())
            .map(|v| v.id)
            .collect();
        if roots.len() != 1 {
            return err(format!("expected exactly 1 root vessel, found {}", roots.len()));
        }
        let by_id: std::collections::BTreeMap<SegmentId, &SolverVessel> =
            self.vessels.iter().map(|v| (v.id, v)).collect();
        for vessel in &self.vessels {
            if vessel.length_mm <= 0.0
                || vessel.inlet_radius_mm <= 0.0
                || vessel.outlet_radius_mm <= 0.0
            {
                return err(format!("vessel {} has nonpositive geometry", vessel.id));
            }
            for child in &vessel.children {
                match by_id.get(child) {
                    None => return err(format!("vessel {} lists unknown child {child}", vessel.id)),
                    Some(c) if c.parent != Some(vessel.id) => {
                        return err(format!(
                            "child {child} does not point back to parent {}",
                            vessel.id
                        ))
                    }
                    Some(_) => {}
                }
            }
            if let Some(parent) = vessel.parent {
                match by_id.get(&parent) {
                    None => return err(format!("vessel {} lists unknown parent {parent}", vessel.id)),
                    Some(p) if !p.children.contains(&vessel.id) => {
                        return err(format!(
                            "parent {parent} does not list child {}",
                            vessel.id
                        ))
                    }
                    Some(_) => {}
                }
            }
        }
        // Reachability from the root covers every vessel (no cycles).
        let mut seen = BTreeSet::new();
        let mut queue = std::collections::VecDeque::from([roots[0]]);
        while let Some(id) = queue.pop_front() {
            if !seen.insert(id) {
                return err(format!("cycle at vessel {id}"));
            }
            queue.extend(by_id[&id].children.iter().copied());
        }
        if seen.len() != self.vessels.len() {
            return err("unreachable vessels present".to_string());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::f1_tree;

    #[test]
    fn filter_then_connected_keeps_only_root_segment() {
        let tree = f1_tree();
        let steps = vec![
            Step::MeanRadius { threshold: 0.85 },
            Step::ConnectedSubtree,
        ];
        let run = run_steps(&tree, &steps).unwrap();
        assert_eq!(run.tree.len(), 1);
        assert!(run.tree.contains(SegmentId(0)));
        assert_eq!(run.reports.len(), 2);
        assert_eq!(run.reports[0].segments_before, 5);
        assert_eq!(run.reports[0].segments_after, 1);
        assert_eq!(run.reports[1].segments_before, 1);
        assert_eq!(run.reports[1].segments_after, 1);
    }

    #[test]
    fn zero_threshold_filter_is_identity() {
        let tree = f1_tree();
        let run = run_steps(&tree, &[Step::SingleNode { threshold: 0.0 }]).unwrap();
        assert_eq!(run.tree, tree);
        assert_eq!(run.reports.len(), 1, "no implicit materialization needed");
    }

    #[test]
    fn report_chain_counts_are_consistent() {
        let tree = f1_tree();
        let steps = vec![
            Step::RemovePseudoTrifurcations { short_node_count: 2 },
            Step::MeanRadius { threshold: 0.0 },
            Step::ConnectedSubtree,
            Step::Simplify { min_nodes: 5 },
        ];
        let run = run_steps(&tree, &steps).unwrap();
        for pair in run.reports.windows(2) {
            assert_eq!(pair[0].segments_after, pair[1].segments_before);
        }
        for report in &run.reports {
            assert!(report.arithmetic_holds(), "{report:?}");
        }
    }

    #[test]
    fn rewrite_after_unmaterialized_filter_is_rejected() {
        let tree = f1_tree();
        let steps = vec![
            Step::MeanRadius { threshold: 0.85 },
            Step::SeriesJoin,
        ];
        let err = run_steps(&tree, &steps).unwrap_err();
        assert!(matches!(
            err,
            PipelineError::UnmaterializedSelection { index: 1, .. }
        ));
    }

    #[test]
    fn filter_to_empty_reports_partial_chain() {
        let tree = f1_tree();
        let steps = vec![Step::MeanRadius { threshold: 99.0 }];
        let (result, reports) = run_steps_partial(&tree, &steps);
        assert!(matches!(
            result,
            Err(PipelineError::EmptyResult { index: 0, .. })
        ));
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].segments_after, 0);
    }

    #[test]
    fn root_filtered_out_surfaces_step_index() {
        // Radii are not monotone: the root segment is thin and its
        // child thick, so the radius filter excludes the inlet and the
        // connected_subtree step fails with the step index.
        use crate::geometry::Point3;
        use crate::tree::{Segment, TreeNode};
        let node = |id: u64, x: f64, radius: f64| TreeNode {
            id: NodeId(id),
            position: Point3::new(x, 0.0, 0.0),
            radius,
        };
        let tree = SegmentTree::build(
            SegmentId(0),
            vec![
                (
                    SegmentId(0),
                    Segment::new(vec![node(0, 0.0, 0.2), node(1, 1.0, 0.2)]).unwrap(),
                    None,
                ),
                (
                    SegmentId(1),
                    Segment::new(vec![node(1, 1.0, 0.2), node(2, 2.0, 1.5)]).unwrap(),
                    Some(SegmentId(0)),
                ),
            ],
        )
        .unwrap();
        let steps = vec![
            Step::SingleNode { threshold: 1.0 },
            Step::ConnectedSubtree,
        ];
        let err = run_steps(&tree, &steps).unwrap_err();
        match err {
            PipelineError::Step { index, source, .. } => {
                assert_eq!(index, 1);
                assert!(matches!(source, PruneError::RootNotEligible { .. }));
            }
            other => panic!("expected Step error, got {other:?}"),
        }
    }

    #[test]
    fn trailing_selection_is_materialized_implicitly() {
        let tree = f1_tree();
        let steps = vec![Step::MeanRadius { threshold: 0.85 }];
        let run = run_steps(&tree, &steps).unwrap();
        assert_eq!(run.tree.len(), 1);
        assert_eq!(run.reports.len(), 2);
        assert_eq!(run.reports[1].operation, "connected_subtree (implicit)");
    }

    #[test]
    fn config_rejects_unknown_step_and_empty_steps() {
        let unknown = r#"{
            "input": {"path": "a.csv"},
            "steps": [{"op": "frobnicate"}]
        }"#;
        assert!(matches!(
            PipelineConfig::from_json(unknown),
            Err(PipelineError::Config(_))
        ));

        let empty = r#"{"input": {"path": "a.csv"}, "steps": []}"#;
        assert!(matches!(
            PipelineConfig::from_json(empty),
            Err(PipelineError::InvalidConfig { .. })
        ));
    }

    #[test]
    fn config_rejects_duplicate_paths() {
        let config = r#"{
            "input": {"path": "a.csv"},
            "steps": [{"op": "series_join"}],
            "outputs": {"tree": "out.json", "solver": "out.json"}
        }"#;
        assert!(matches!(
            PipelineConfig::from_json(config),
            Err(PipelineError::InvalidConfig { .. })
        ));
    }

    #[test]
    fn config_parses_defaults() {
        let config = r#"{
            "input": {"path": "a.csv"},
            "steps": [
                {"op": "remove_pseudo_trifurcations"},
                {"op": "mean_radius", "threshold": 0.6},
                {"op": "connected_subtree"},
                {"op": "simplify"}
            ],
            "outputs": {"tree": "tree.json"}
        }"#;
        let parsed = PipelineConfig::from_json(config).unwrap();
        assert_eq!(parsed.steps.len(), 4);
        assert_eq!(
            parsed.steps[0],
            Step::RemovePseudoTrifurcations { short_node_count: 2 }
        );
        assert_eq!(parsed.steps[3], Step::Simplify { min_nodes: 5 });
        assert_eq!(parsed.root, RootConfig::AxisMax { axis: Axis::Z });
    }

    #[test]
    fn solver_export_round_trips() {
        let tree = f1_tree();
        let export = SolverExport::from_tree(&tree).unwrap();
        let json = export.to_json();
        let back = SolverExport::from_json(&json).unwrap();
        assert_eq!(back.vessels.len(), export.vessels.len());
        for (a, b) in export.vessels.iter().zip(&back.vessels) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.parent, b.parent);
            assert_eq!(a.children, b.children);
            assert!((a.length_mm - b.length_mm).abs() <= 1e-9);
            assert!((a.inlet_radius_mm - b.inlet_radius_mm).abs() <= 1e-9);
            assert!((a.outlet_radius_mm - b.outlet_radius_mm).abs() <= 1e-9);
        }
    }

    #[test]
    fn solver_export_rejects_broken_topology() {
        let tree = f1_tree();
        let mut export = SolverExport::from_tree(&tree).unwrap();
        export.vessels[1].parent = Some(SegmentId(99));
        assert!(export.check().is_err());
    }
}
