//! Per-segment metrics, generation assignment, Strahler ordering, and
//! the information-density profile used to cap tree depth.
//!
//! Segment volume is the sum of conical frusta between consecutive
//! nodes. For a node pair at distance `L` with radii `r_a`, `r_b` the
//! frustum volume is `(pi/3) * L * (r_a^2 + r_a*r_b + r_b^2)`, which
//! degenerates to a cylinder for equal radii.
//!
//! Information density of a generation is `I = v / n`, the total
//! segment volume over the segment count. Its first difference
//! `dI(i) = I(i+1) - I(i)` quantifies the information added by each
//! extra generation; the generation cutoff is the first index where
//! `|dI|` falls below the peak divided by a configurable divisor.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::tree::{Segment, SegmentId, SegmentTree};

/// Derived metrics of one segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentMetrics {
    /// Polyline arc length, mm.
    pub length: f64,
    /// Summed frustum volume, mm^3.
    pub volume: f64,
    /// Arithmetic mean of all node radii, endpoints included, mm.
    pub mean_radius: f64,
    /// Median of all node radii, mm.
    pub median_radius: f64,
    pub node_count: usize,
}

#[derive(Debug, Error)]
pub enum MorphometryError {
    #[error("information delta needs at least 2 generations, got {generations}")]
    TooFewGenerations { generations: usize },
    #[error("information delta series is empty")]
    EmptyDelta,
}

/// Compute length, volume, and radius statistics for one segment.
pub fn segment_metrics(segment: &Segment) -> SegmentMetrics {
    let nodes = segment.nodes();
    let mut length = 0.0;
    let mut volume = 0.0;
    for pair in nodes.windows(2) {
        let step = pair[0].position.distance(&pair[1].position);
        let (ra, rb) = (pair[0].radius, pair[1].radius);
        length += step;
        volume += PI / 3.0 * step * (ra * ra + ra * rb + rb * rb);
    }
    let mut radii: Vec<f64> = nodes.iter().map(|n| n.radius).collect();
    radii.sort_by(f64::total_cmp);
    let mean_radius = radii.iter().sum::<f64>() / radii.len() as f64;
    let median_radius = if radii.len() % 2 == 1 {
        radii[radii.len() / 2]
    } else {
        (radii[radii.len() / 2 - 1] + radii[radii.len() / 2]) / 2.0
    };
    SegmentMetrics {
        length,
        volume,
        mean_radius,
        median_radius,
        node_count: nodes.len(),
    }
}

/// Metrics for every segment of a tree, keyed by id.
///
/// Per-segment work runs in parallel; the result map is ordered by id,
/// so output is independent of thread count.
pub fn segment_metrics_map(tree: &SegmentTree) -> BTreeMap<SegmentId, SegmentMetrics> {
    let ids: Vec<SegmentId> = tree.ids().collect();
    ids.par_iter()
        .map(|&id| {
            (
                id,
                segment_metrics(tree.segment(id).expect("id comes from the tree")),
            )
        })
        .collect()
}

/// Assign generations: the root segment is generation 0, children are
/// one deeper than their parent.
pub fn assign_generations(tree: &SegmentTree) -> BTreeMap<SegmentId, u32> {
    let mut generations = BTreeMap::new();
    for id in tree.bfs_order() {
        let generation = match tree.parent(id) {
            None => 0,
            Some(p) => generations[&p] + 1,
        };
        generations.insert(id, generation);
    }
    generations
}

/// Bottom-up Strahler orders.
///
/// Leaves get order 1. A parent takes its children's maximum order, or
/// that maximum plus one when two or more children share it.
pub fn strahler_orders(tree: &SegmentTree) -> BTreeMap<SegmentId, u32> {
    let mut orders = BTreeMap::new();
    for &id in tree.bfs_order().iter().rev() {
        let order = {
            let children = tree.children(id);
            if children.is_empty() {
                1
            } else {
                let max = children.iter().map(|c| orders[c]).max().expect("non-empty");
                let ties = children.iter().filter(|c| orders[*c] == max).count();
                if ties >= 2 {
                    max + 1
                } else {
                    max
                }
            }
        };
        orders.insert(id, order);
    }
    orders
}

/// Per-generation aggregate row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenerationRow {
    pub generation: u32,
    /// Segment count, `n`.
    pub count: usize,
    /// Total segment volume, `v`, mm^3.
    pub volume: f64,
    /// Information density `I = v / n`, mm^3 per segment.
    pub info_density: f64,
}

/// Segment count, volume, and information density per generation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationProfile {
    rows: Vec<GenerationRow>,
}

impl GenerationProfile {
    pub fn rows(&self) -> &[GenerationRow] {
        &self.rows
    }

    pub fn generation_count(&self) -> usize {
        self.rows.len()
    }

    /// CSV export: `generation,n,volume_mm3,info_density`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generation,n,volume_mm3,info_density\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.generation, row.count, row.volume, row.info_density
            ));
        }
        out
    }
}

/// Aggregate `n`, `v`, and `I = v/n` per generation.
///
/// Volumes accumulate in ascending segment-id order, so the result is
/// deterministic.
pub fn generation_profile(
    tree: &SegmentTree,
    metrics: &BTreeMap<SegmentId, SegmentMetrics>,
) -> GenerationProfile {
    let generations = assign_generations(tree);
    let max_generation = generations.values().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max_generation as usize + 1];
    let mut volumes = vec![0.0f64; max_generation as usize + 1];
    for (id, &generation) in &generations {
        counts[generation as usize] += 1;
        volumes[generation as usize] += metrics[id].volume;
    }
    let rows = counts
        .into_iter()
        .zip(volumes)
        .enumerate()
        .map(|(generation, (count, volume))| GenerationRow {
            generation: generation as u32,
            count,
            volume,
            info_density: volume / count as f64,
        })
        .collect();
    GenerationProfile { rows }
}

/// First difference of information density: `dI(i) = I(i+1) - I(i)`.
pub fn information_delta(profile: &GenerationProfile) -> Result<Vec<f64>, MorphometryError> {
    if profile.rows.len() < 2 {
        return Err(MorphometryError::TooFewGenerations {
            generations: profile.rows.len(),
        });
    }
    Ok(profile
        .rows
        .windows(2)
        .map(|w| w[1].info_density - w[0].info_density)
        .collect())
}

/// How the peak of the delta series is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PeakMode {
    /// Peak of `|dI|`. The delta series of a narrowing tree is mostly
    /// negative, so magnitude is the meaningful default.
    #[default]
    Magnitude,
    /// Signed maximum of `dI`.
    Signed,
}

/// Result of the generation-cutoff scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenerationCutoff {
    /// Largest generation index worth keeping.
    pub generation: usize,
    /// False when no index fell below the threshold (no cutoff), in
    /// which case `generation` is the last generation index.
    pub found: bool,
    /// True when the delta series is all zero and the peak is undefined.
    pub degenerate: bool,
}

/// Scan for the first generation whose `|dI|` drops below `peak /
/// divisor`.
///
/// With no qualifying index the scan reports the last generation index
/// (`deltas.len()`, since the series is one shorter than the profile).
pub fn generation_cutoff(
    deltas: &[f64],
    divisor: f64,
    mode: PeakMode,
) -> Result<GenerationCutoff, MorphometryError> {
    if deltas.is_empty() {
        return Err(MorphometryError::EmptyDelta);
    }
    let peak = match mode {
        PeakMode::Magnitude => deltas.iter().fold(0.0f64, |acc, d| acc.max(d.abs())),
        PeakMode::Signed => deltas.iter().fold(f64::NEG_INFINITY, |acc, d| acc.max(*d)),
    };
    if peak == 0.0 && deltas.iter().all(|d| *d == 0.0) {
        log::warn!("information-density deltas are all zero; peak undefined, no cutoff");
        return Ok(GenerationCutoff {
            generation: deltas.len(),
            found: false,
            degenerate: true,
        });
    }
    let threshold = peak / divisor;
    for (i, d) in deltas.iter().enumerate() {
        if d.abs() < threshold {
            return Ok(GenerationCutoff {
                generation: i,
                found: true,
                degenerate: false,
            });
        }
    }
    Ok(GenerationCutoff {
        generation: deltas.len(),
        found: false,
        degenerate: false,
    })
}
