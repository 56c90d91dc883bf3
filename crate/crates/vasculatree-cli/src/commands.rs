//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use vasculatree::geometry::{Axis, Point3};
use vasculatree::graph::{extract_segments, largest_component, select_root, RootPolicy};
use vasculatree::ingest::{parse_point_cloud, Format, NodeId, Unit};
use vasculatree::morphometry::{
    assign_generations, generation_profile, segment_metrics_map, strahler_orders,
};
use vasculatree::pipeline::{
    run_steps_partial, PipelineConfig, ProjectionKind, SolverExport, StyleKind,
};
use vasculatree::project::{
    lateral_projection, mercator_projection, render_csv, render_svg, style_by_generation,
    style_by_strahler, Center, MercatorOptions, Plane, Polyline2D,
};
use vasculatree::prune::PruneReport;
use vasculatree::tree::SegmentTree;

use crate::errors::CliError;
use crate::io::{atomic_write, read_to_string};

fn infer_format(path: &Path, explicit: Option<Format>) -> Result<Format, CliError> {
    if let Some(format) = explicit {
        return Ok(format);
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Ok(Format::Csv),
        Some("json") => Ok(Format::Json),
        _ => Err(CliError::usage(format!(
            "cannot infer format of `{}`; pass --format csv|json",
            path.display()
        ))),
    }
}

pub fn stats(
    input: &Path,
    format: Option<Format>,
    axis: Axis,
    root_node: Option<u64>,
) -> Result<(), CliError> {
    let format = infer_format(input, format)?;
    let source = read_to_string(input)?;
    let (cloud, parse_report) = parse_point_cloud(&source, format)?;

    let (graph, removed) = largest_component(&cloud)?;
    let policy = match root_node {
        Some(id) => RootPolicy::Explicit(NodeId(id)),
        None => RootPolicy::AxisMax(axis),
    };
    let root = select_root(&graph, policy)?;
    let extraction = extract_segments(&graph, root)?;
    let tree = &extraction.tree;

    let counts = graph.kind_counts();
    let metrics = segment_metrics_map(tree);
    let profile = generation_profile(tree, &metrics);
    let strahler = strahler_orders(tree);
    let tree_order = strahler[&tree.root()];
    let (radius_min, radius_max) = graph.radius_range();

    let mut out = String::new();
    let _ = writeln!(
        out,
        "nodes: {} (terminal {}, body {}, junction {})",
        graph.node_count(),
        counts.terminal,
        counts.body,
        counts.junction
    );
    let _ = writeln!(out, "edges: {}", graph.edge_count());
    let _ = writeln!(
        out,
        "symmetrization repairs: {}",
        parse_report.symmetrization_repairs
    );
    let _ = writeln!(out, "disconnected nodes removed: {removed}");
    let _ = writeln!(out, "root: node {root}");
    let _ = writeln!(out, "segments: {}", tree.len());
    let _ = writeln!(out, "dropped chord edges: {}", extraction.dropped_edges);
    let _ = writeln!(out, "generations: {}", profile.generation_count());
    let _ = writeln!(out, "strahler order: {tree_order}");
    let _ = writeln!(out, "radius range: {radius_min} - {radius_max} mm");
    let _ = writeln!(out, "generation profile:");
    out.push_str(&profile.to_csv());
    print!("{out}");
    Ok(())
}

/// Summary blocks of the audit report JSON.
#[derive(Serialize)]
struct AuditReport<'a> {
    input: InputSummary,
    graph: GraphSummary,
    steps: &'a [PruneReport],
    #[serde(rename = "final", skip_serializing_if = "Option::is_none")]
    outcome: Option<FinalSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct InputSummary {
    path: String,
    node_count: usize,
    symmetrization_repairs: usize,
    source_unit: Unit,
}

#[derive(Serialize, Clone, Copy)]
struct GraphSummary {
    disconnected_nodes_removed: usize,
    root_node: NodeId,
    dropped_chord_edges: usize,
    terminal: usize,
    body: usize,
    junction: usize,
    segments: usize,
}

#[derive(Serialize)]
struct FinalSummary {
    segments: usize,
    generations: usize,
    strahler_order: u32,
    distinct_nodes: usize,
}

/// Paths in a config resolve relative to the config file's directory.
fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

pub fn prune(config_path: &Path) -> Result<(), CliError> {
    let config_text = read_to_string(config_path)?;
    let config = PipelineConfig::from_json(&config_text)?;
    let base = config_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));

    let input_path = resolve(&base, &config.input.path);
    let format = infer_format(&input_path, config.input.format.map(Into::into))?;
    let source = read_to_string(&input_path)?;
    let (cloud, parse_report) = parse_point_cloud(&source, format)?;

    let (graph, removed) = largest_component(&cloud)?;
    let root = select_root(&graph, config.root.into())?;
    let extraction = extract_segments(&graph, root)?;
    let counts = graph.kind_counts();
    let graph_summary = GraphSummary {
        disconnected_nodes_removed: removed,
        root_node: root,
        dropped_chord_edges: extraction.dropped_edges,
        terminal: counts.terminal,
        body: counts.body,
        junction: counts.junction,
        segments: extraction.tree.len(),
    };

    let (result, reports) = run_steps_partial(&extraction.tree, &config.steps);

    let write_report = |outcome: Option<FinalSummary>,
                        error: Option<String>,
                        reports: &[PruneReport]|
     -> Result<(), CliError> {
        if let Some(report_path) = &config.outputs.report {
            let doc = AuditReport {
                input: InputSummary {
                    path: config.input.path.display().to_string(),
                    node_count: parse_report.node_count,
                    symmetrization_repairs: parse_report.symmetrization_repairs,
                    source_unit: parse_report.source_unit,
                },
                graph: graph_summary,
                steps: reports,
                outcome,
                error,
            };
            let json =
                serde_json::to_string_pretty(&doc).expect("report serialization cannot fail");
            atomic_write(&resolve(&base, report_path), &json)?;
        }
        Ok(())
    };

    let tree = match result {
        Ok(tree) => tree,
        Err(err) => {
            // Partial audit trail is still written on failure.
            write_report(None, Some(err.to_string()), &reports)?;
            return Err(err.into());
        }
    };

    let generations = assign_generations(&tree);
    let generation_count = generations.values().max().map_or(0, |g| *g as usize + 1);
    let strahler = strahler_orders(&tree);
    let summary = FinalSummary {
        segments: tree.len(),
        generations: generation_count,
        strahler_order: strahler[&tree.root()],
        distinct_nodes: tree.distinct_node_count(),
    };
    write_report(Some(summary), None, &reports)?;

    if let Some(path) = &config.outputs.tree {
        atomic_write(&resolve(&base, path), &tree.to_json())?;
    }
    if let Some(path) = &config.outputs.solver {
        let export = SolverExport::from_tree(&tree)?;
        atomic_write(&resolve(&base, path), &export.to_json())?;
    }
    if config.outputs.svg.is_some() || config.outputs.csv.is_some() {
        let styles = match config.plot.style {
            StyleKind::Generation => style_by_generation(&tree),
            StyleKind::Strahler => style_by_strahler(&tree),
        };
        let polylines = match config.plot.projection {
            ProjectionKind::Lateral => lateral_projection(&tree, config.plot.plane, &styles),
            ProjectionKind::Mercator => {
                let options = MercatorOptions {
                    center: config
                        .plot
                        .center
                        .map_or(Center::Centroid, Center::Explicit),
                    ..Default::default()
                };
                mercator_projection(&tree, &styles, &options)?.0
            }
        };
        if let Some(path) = &config.outputs.svg {
            atomic_write(&resolve(&base, path), &render_svg(&polylines)?)?;
        }
        if let Some(path) = &config.outputs.csv {
            atomic_write(&resolve(&base, path), &render_csv(&polylines)?)?;
        }
    }

    println!(
        "final tree: {} segments in {} generations",
        tree.len(),
        generation_count
    );
    Ok(())
}

pub struct RenderArgs {
    pub tree: PathBuf,
    pub projection: ProjectionKind,
    pub style: StyleKind,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub plane: Plane,
    pub center: Option<String>,
    pub pole: Axis,
    pub lat_clamp: f64,
}

fn parse_center(spec: &str) -> Result<Point3, CliError> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::usage(format!(
            "--center expects `x,y,z`, got `{spec}`"
        )));
    }
    let mut coords = [0.0f64; 3];
    for (slot, part) in coords.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("invalid --center coordinate `{part}`")))?;
    }
    Ok(Point3::new(coords[0], coords[1], coords[2]))
}

pub fn render(args: &RenderArgs) -> Result<(), CliError> {
    if args.output.is_none() && args.csv.is_none() {
        return Err(CliError::usage(
            "render needs at least one of --output (SVG) or --csv",
        ));
    }
    let tree = SegmentTree::from_json(&read_to_string(&args.tree)?)?;
    let styles = match args.style {
        StyleKind::Generation => style_by_generation(&tree),
        StyleKind::Strahler => style_by_strahler(&tree),
    };
    let polylines: Vec<Polyline2D> = match args.projection {
        ProjectionKind::Lateral => lateral_projection(&tree, args.plane, &styles),
        ProjectionKind::Mercator => {
            let center = match &args.center {
                Some(spec) => Center::Explicit(parse_center(spec)?),
                None => Center::Centroid,
            };
            let options = MercatorOptions {
                center,
                pole: args.pole,
                lat_clamp_deg: args.lat_clamp,
            };
            mercator_projection(&tree, &styles, &options)?.0
        }
    };
    if let Some(path) = &args.output {
        atomic_write(path, &render_svg(&polylines)?)?;
    }
    if let Some(path) = &args.csv {
        atomic_write(path, &render_csv(&polylines)?)?;
    }
    Ok(())
}

pub fn export_solver(tree_path: &Path, output: &Path) -> Result<(), CliError> {
    let tree = SegmentTree::from_json(&read_to_string(tree_path)?)?;
    let export = SolverExport::from_tree(&tree)?;
    atomic_write(output, &export.to_json())?;
    println!("exported {} vessels", export.vessels.len());
    Ok(())
}
