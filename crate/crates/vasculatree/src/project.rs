//! 2D polyline projections of segment trees, for plotting.
//!
//! Two projections are provided. The lateral projection drops one
//! coordinate orthographically. The Mercator projection treats each
//! node as a direction from a center point (the node centroid by
//! default, +z as the pole): longitude `lambda = atan2(dy, dx)`,
//! latitude `phi = asin(dz / |d|)` clamped away from the poles, mapped
//! to `(u, v) = (lambda, ln tan(pi/4 + phi/2))`. It preserves the
//! branching structure of the tree but not segment lengths.
//!
//! Longitude is unwrapped along each polyline and child polylines
//! inherit their parent's unwrapped junction value, so consecutive
//! points never jump by more than pi and parent/child junction points
//! stay bit-identical.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Axis, Point3};
use crate::ingest::NodeId;
use crate::morphometry::{assign_generations, strahler_orders};
use crate::tree::{SegmentId, SegmentTree};

/// Projection plane for the lateral (orthographic) view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    Xy,
    Xz,
    Yz,
}

impl Plane {
    fn project(&self, p: &Point3) -> (f64, f64) {
        match self {
            Plane::Xy => (p.x, p.y),
            Plane::Xz => (p.x, p.z),
            Plane::Yz => (p.y, p.z),
        }
    }
}

/// A projected segment: ordered 2D points plus a style rank that
/// drives line colour and weight (generation or Strahler order).
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline2D {
    pub segment_id: SegmentId,
    pub points: Vec<(f64, f64)>,
    pub style_rank: u32,
}

/// Center of the Mercator sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Center {
    /// Mean of the tree's distinct node positions.
    Centroid,
    Explicit(Point3),
}

/// Mercator projection parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MercatorOptions {
    pub center: Center,
    /// Axis treated as the pole.
    pub pole: Axis,
    /// Latitude clamp in degrees, keeping points off the singularity.
    pub lat_clamp_deg: f64,
}

impl Default for MercatorOptions {
    fn default() -> Self {
        Self {
            center: Center::Centroid,
            pole: Axis::Z,
            lat_clamp_deg: 85.0,
        }
    }
}

/// Incidents from a Mercator run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct MercatorReport {
    /// Nodes that coincided with the center and were nudged 1e-9 mm
    /// toward a segment neighbour.
    pub perturbed_nodes: usize,
}

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error("all nodes coincide with the projection center")]
    DegenerateTree,
    #[error("no polylines to render")]
    EmptyPolylineSet,
    #[error("polyline CSV line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// Style ranks from generation numbers.
pub fn style_by_generation(tree: &SegmentTree) -> BTreeMap<SegmentId, u32> {
    assign_generations(tree)
}

/// Style ranks from Strahler orders, inverted so that the highest
/// order gets rank 0 (thickest line).
pub fn style_by_strahler(tree: &SegmentTree) -> BTreeMap<SegmentId, u32> {
    let orders = strahler_orders(tree);
    let max = orders.values().copied().max().unwrap_or(1);
    orders.into_iter().map(|(id, o)| (id, max - o)).collect()
}

/// Orthographic projection onto `plane`, one polyline per segment in
/// ascending segment-id order.
pub fn lateral_projection(
    tree: &SegmentTree,
    plane: Plane,
    styles: &BTreeMap<SegmentId, u32>,
) -> Vec<Polyline2D> {
    tree.ids()
        .map(|id| {
            let seg = tree.segment(id).expect("id comes from the tree");
            Polyline2D {
                segment_id: id,
                points: seg.nodes().iter().map(|n| plane.project(&n.position)).collect(),
                style_rank: styles.get(&id).copied().unwrap_or(0),
            }
        })
        .collect()
}

/// Mercator projection of the tree around a center point.
pub fn mercator_projection(
    tree: &SegmentTree,
    styles: &BTreeMap<SegmentId, u32>,
    options: &MercatorOptions,
) -> Result<(Vec<Polyline2D>, MercatorReport), ProjectError> {
    let center = match options.center {
        Center::Explicit(p) => p,
        Center::Centroid => {
            let mut sum = Point3::ORIGIN;
            let mut count = 0usize;
            for node in tree.distinct_nodes() {
                sum = sum.add(&node.position);
                count += 1;
            }
            sum.scale(1.0 / count as f64)
        }
    };

    if tree.distinct_nodes().all(|n| n.position == center) {
        return Err(ProjectError::DegenerateTree);
    }

    // Nudge nodes sitting exactly on the center toward a same-segment
    // neighbour, keyed by node id so shared junctions move coherently.
    // Walking in BFS order lets a node in a fully-coincident segment
    // borrow a direction through an already-perturbed junction.
    let mut perturbed: BTreeMap<NodeId, Point3> = BTreeMap::new();
    for id in tree.bfs_order() {
        let nodes = tree.segment(id).expect("id comes from the tree").nodes();
        for (i, node) in nodes.iter().enumerate() {
            if node.position != center || perturbed.contains_key(&node.id) {
                continue;
            }
            let effective =
                |n: &crate::tree::TreeNode| perturbed.get(&n.id).copied().unwrap_or(n.position);
            let neighbor = nodes[i + 1..]
                .iter()
                .chain(nodes[..i].iter().rev())
                .map(effective)
                .find(|p| *p != center);
            if let Some(p) = neighbor {
                let direction = p.sub(&node.position);
                let unit = direction.scale(1.0 / direction.norm());
                perturbed.insert(node.id, node.position.add(&unit.scale(1e-9)));
            }
        }
    }
    let report = MercatorReport {
        perturbed_nodes: perturbed.len(),
    };
    if report.perturbed_nodes > 0 {
        log::warn!(
            "{} node(s) coincided with the projection center and were perturbed by 1e-9 mm",
            report.perturbed_nodes
        );
    }

    let lat_clamp = options.lat_clamp_deg.to_radians();
    let angles = |node_id: NodeId, position: &Point3| -> (f64, f64) {
        let pos = perturbed.get(&node_id).unwrap_or(position);
        let d = pos.sub(&center);
        // Cyclic permutation mapping the configured pole onto +z.
        let (dx, dy, dz) = match options.pole {
            Axis::Z => (d.x, d.y, d.z),
            Axis::X => (d.y, d.z, d.x),
            Axis::Y => (d.z, d.x, d.y),
        };
        let lambda = dy.atan2(dx);
        let phi = (dz / d.norm()).asin().clamp(-lat_clamp, lat_clamp);
        (lambda, phi)
    };

    // Walk breadth-first so each child inherits the parent's unwrapped
    // junction longitude before unwrapping its own points.
    let mut polylines: BTreeMap<SegmentId, Polyline2D> = BTreeMap::new();
    let mut junction_u: BTreeMap<SegmentId, f64> = BTreeMap::new();
    for id in tree.bfs_order() {
        let seg = tree.segment(id).expect("id comes from the tree");
        let mut points = Vec::with_capacity(seg.node_count());
        let mut prev_lambda = 0.0f64;
        let mut prev_u = 0.0f64;
        for (i, node) in seg.nodes().iter().enumerate() {
            let (lambda, phi) = angles(node.id, &node.position);
            let v = (PI / 4.0 + phi / 2.0).tan().ln();
            let u = if i == 0 {
                match tree.parent(id) {
                    None => lambda,
                    Some(_) => junction_u[&id],
                }
            } else {
                prev_u + wrap_to_pi(lambda - prev_lambda)
            };
            points.push((u, v));
            prev_lambda = lambda;
            prev_u = u;
        }
        for &child in tree.children(id) {
            junction_u.insert(child, prev_u);
        }
        polylines.insert(
            id,
            Polyline2D {
                segment_id: id,
                points,
                style_rank: styles.get(&id).copied().unwrap_or(0),
            },
        );
    }

    Ok((polylines.into_values().collect(), report))
}

/// Map `x` into (-pi, pi].
fn wrap_to_pi(x: f64) -> f64 {
    let wrapped = (-x + PI).rem_euclid(2.0 * PI);
    PI - wrapped
}

/// Fixed palette for style ranks (wraps after ten).
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn stroke_color(rank: u32) -> &'static str {
    PALETTE[(rank as usize) % PALETTE.len()]
}

fn stroke_width(rank: u32) -> f64 {
    // Thinner with increasing rank; floor keeps deep ranks visible.
    (2.4 * 0.82f64.powi(rank as i32)).max(0.4)
}

/// Render polylines as an SVG 1.1 document, one `<path>` per polyline
/// in ascending segment-id order, viewBox auto-fitted with a 5% margin.
/// Output is deterministic for identical input.
pub fn render_svg(polylines: &[Polyline2D]) -> Result<String, ProjectError> {
    if polylines.is_empty() {
        return Err(ProjectError::EmptyPolylineSet);
    }
    let mut sorted: Vec<&Polyline2D> = polylines.iter().collect();
    sorted.sort_by_key(|p| p.segment_id);

    let mut min_u = f64::INFINITY;
    let mut max_u = f64::NEG_INFINITY;
    let mut min_v = f64::INFINITY;
    let mut max_v = f64::NEG_INFINITY;
    for p in &sorted {
        for &(u, v) in &p.points {
            min_u = min_u.min(u);
            max_u = max_u.max(u);
            min_v = min_v.min(v);
            max_v = max_v.max(v);
        }
    }
    let span_u = (max_u - min_u).max(1e-12);
    let span_v = (max_v - min_v).max(1e-12);
    let margin_u = span_u * 0.05;
    let margin_v = span_v * 0.05;

    let mut out = String::new();
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).expect("string write");
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{} {} {} {}">"#,
        min_u - margin_u,
        min_v - margin_v,
        span_u + 2.0 * margin_u,
        span_v + 2.0 * margin_v,
    )
    .expect("string write");
    for p in &sorted {
        let mut d = String::new();
        for (i, &(u, v)) in p.points.iter().enumerate() {
            // SVG y grows downward: flip v around the data midline.
            let y = max_v + min_v - v;
            let op = if i == 0 { 'M' } else { 'L' };
            write!(d, "{}{} {} ", op, u, y).expect("string write");
        }
        writeln!(
            out,
            r#"  <path d="{}" fill="none" stroke="{}" stroke-width="{:.3}" data-segment="{}" data-rank="{}"/>"#,
            d.trim_end(),
            stroke_color(p.style_rank),
            stroke_width(p.style_rank),
            p.segment_id,
            p.style_rank,
        )
        .expect("string write");
    }
    writeln!(out, "</svg>").expect("string write");
    Ok(out)
}

/// Render polylines as CSV: `segment_id,point_index,u,v`. Style ranks
/// are not part of the CSV schema.
pub fn render_csv(polylines: &[Polyline2D]) -> Result<String, ProjectError> {
    if polylines.is_empty() {
        return Err(ProjectError::EmptyPolylineSet);
    }
    let mut sorted: Vec<&Polyline2D> = polylines.iter().collect();
    sorted.sort_by_key(|p| p.segment_id);
    let mut out = String::from("segment_id,point_index,u,v\n");
    for p in &sorted {
        for (i, &(u, v)) in p.points.iter().enumerate() {
            writeln!(out, "{},{},{},{}", p.segment_id, i, u, v).expect("string write");
        }
    }
    Ok(out)
}

/// Parse polylines back from the CSV schema. Ranks default to 0.
pub fn parse_polylines_csv(source: &str) -> Result<Vec<Polyline2D>, ProjectError> {
    let mut lines = source.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "segment_id,point_index,u,v" => {}
        _ => {
            return Err(ProjectError::Csv {
                line: 1,
                message: "expected header `segment_id,point_index,u,v`".to_string(),
            })
        }
    }
    let mut by_segment: BTreeMap<SegmentId, Vec<(usize, f64, f64)>> = BTreeMap::new();
    for (index, line) in lines {
        let line_no = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(ProjectError::Csv {
                line: line_no,
                message: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let bad = |message: String| ProjectError::Csv {
            line: line_no,
            message,
        };
        let segment: u64 = fields[0]
            .parse()
            .map_err(|_| bad(format!("invalid segment id `{}`", fields[0])))?;
        let point: usize = fields[1]
            .parse()
            .map_err(|_| bad(format!("invalid point index `{}`", fields[1])))?;
        let u: f64 = fields[2]
            .parse()
            .map_err(|_| bad(format!("invalid u `{}`", fields[2])))?;
        let v: f64 = fields[3]
            .parse()
            .map_err(|_| bad(format!("invalid v `{}`", fields[3])))?;
        by_segment
            .entry(SegmentId(segment))
            .or_default()
            .push((point, u, v));
    }
    let mut polylines = Vec::with_capacity(by_segment.len());
    for (segment_id, mut points) in by_segment {
        points.sort_by_key(|&(i, _, _)| i);
        polylines.push(Polyline2D {
            segment_id,
            points: points.into_iter().map(|(_, u, v)| (u, v)).collect(),
            style_rank: 0,
        });
    }
    Ok(polylines)
}
