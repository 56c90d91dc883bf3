//! Point-cloud parsing, validation, and serialization.
//!
//! Input files describe one node per record: an id, a 3D position, a
//! radius, and the ids of neighbouring nodes. Two formats are supported:
//!
//! * CSV with header `id,x,y,z,radius,neighbors`, where `neighbors` is a
//!   semicolon-separated id list (`3;7;12`). Values are always
//!   millimetres.
//! * JSON `{"unit": "mm"|"um", "nodes": [{"id", "pos": [x,y,z],
//!   "radius", "neighbors": [..]}]}`. Micrometre inputs are converted to
//!   millimetres on ingest.
//!
//! Raw adjacency is treated as undirected: a one-sided listing (a lists
//! b, b omits a) is repaired by symmetrization rather than rejected, and
//! the repair count is surfaced in the [`ParseReport`].

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point3;

/// Identifier of a point-cloud node, preserved from the input file.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Declared length unit of an input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "mm")]
    Mm,
    #[serde(rename = "um")]
    Um,
}

/// Input file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// One raw node: id, position (mm), radius (mm), neighbour ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    #[serde(rename = "pos")]
    pub position: Point3,
    pub radius: f64,
    pub neighbors: Vec<NodeId>,
}

/// A validated, symmetrized point cloud in canonical millimetres.
///
/// Invariants: node ids are unique, every neighbour id refers to an
/// existing node, adjacency is symmetric, and no node lists itself or a
/// duplicate neighbour. Nodes are stored sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    nodes: Vec<NodeRecord>,
}

/// Statistics from one parse run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseReport {
    pub node_count: usize,
    /// One-sided adjacency listings repaired by symmetrization.
    pub symmetrization_repairs: usize,
    pub source_unit: Unit,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate node id {id}")]
    DuplicateId { id: NodeId },
    #[error("node {node} lists neighbor {neighbor}, which does not exist")]
    DanglingNeighbor { node: NodeId, neighbor: NodeId },
    #[error("node {id}: radius must be positive, got {radius}")]
    NonPositiveRadius { id: NodeId, radius: f64 },
    #[error("node {id}: position and radius must be finite")]
    NonFinite { id: NodeId },
    #[error("node {id} lists itself as a neighbor")]
    SelfLoop { id: NodeId },
    #[error("node {id} lists neighbor {neighbor} more than once")]
    DuplicateNeighbor { id: NodeId, neighbor: NodeId },
    #[error("node {id} has an empty neighbor list")]
    EmptyNeighbors { id: NodeId },
    #[error("CSV read error: {0}")]
    Csv(#[from] csv::Error),
}

const CSV_HEADER: [&str; 6] = ["id", "x", "y", "z", "radius", "neighbors"];

/// Parse a point cloud from `source` in the given `format`.
///
/// Adjacency is symmetrized and the repair count recorded in the report.
/// Node records that violate their invariants (nonpositive radius,
/// self-loop, duplicate or empty neighbour list) are rejected.
pub fn parse_point_cloud(
    source: &str,
    format: Format,
) -> Result<(PointCloud, ParseReport), IngestError> {
    match format {
        Format::Csv => parse_csv(source),
        Format::Json => parse_json(source),
    }
}

fn parse_csv(source: &str) -> Result<(PointCloud, ParseReport), IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source.as_bytes());

    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(IngestError::Malformed {
            line: 1,
            message: format!(
                "expected header `{}`, got `{}`",
                CSV_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut records = Vec::new();
    for row in reader.into_records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let malformed = |message: String| IngestError::Malformed { line, message };

        if row.len() != 6 {
            return Err(malformed(format!("expected 6 fields, got {}", row.len())));
        }
        let id: u64 = row[0]
            .parse()
            .map_err(|_| malformed(format!("invalid id `{}`", &row[0])))?;
        let mut coords = [0.0f64; 3];
        for (slot, (field, name)) in coords
            .iter_mut()
            .zip([(1, "x"), (2, "y"), (3, "z")].iter().copied())
        {
            let value: f64 = row[field]
                .parse()
                .map_err(|_| malformed(format!("invalid {name} `{}`", &row[field])))?;
            if !value.is_finite() {
                return Err(malformed(format!("non-finite {name} `{}`", &row[field])));
            }
            *slot = value;
        }
        let radius: f64 = row[4]
            .parse()
            .map_err(|_| malformed(format!("invalid radius `{}`", &row[4])))?;
        if !radius.is_finite() {
            return Err(malformed(format!("non-finite radius `{}`", &row[4])));
        }
        if radius <= 0.0 {
            return Err(malformed(format!(
                "nonpositive radius {radius} for node {id}"
            )));
        }
        if row[5].is_empty() {
            return Err(malformed(format!("empty neighbors list for node {id}")));
        }
        let mut neighbors = Vec::new();
        for part in row[5].split(';') {
            let n: u64 = part
                .trim()
                .parse()
                .map_err(|_| malformed(format!("invalid neighbor id `{part}`")))?;
            neighbors.push(NodeId(n));
        }
        records.push(NodeRecord {
            id: NodeId(id),
            position: Point3::new(coords[0], coords[1], coords[2]),
            radius,
            neighbors,
        });
    }

    let (cloud, repairs) = normalize(records, Unit::Mm, true)?;
    let report = ParseReport {
        node_count: cloud.len(),
        symmetrization_repairs: repairs,
        source_unit: Unit::Mm,
    };
    Ok((cloud, report))
}

#[derive(Serialize, Deserialize)]
struct JsonCloud {
    #[serde(default = "default_unit")]
    unit: Unit,
    nodes: Vec<NodeRecord>,
}

fn default_unit() -> Unit {
    Unit::Mm
}

fn parse_json(source: &str) -> Result<(PointCloud, ParseReport), IngestError> {
    let raw: JsonCloud = serde_json::from_str(source)?;
    let unit = raw.unit;
    for node in &raw.nodes {
        if !node.position.is_finite() || !node.radius.is_finite() {
            return Err(IngestError::NonFinite { id: node.id });
        }
        if node.radius <= 0.0 {
            return Err(IngestError::NonPositiveRadius {
                id: node.id,
                radius: node.radius,
            });
        }
    }
    let (cloud, repairs) = normalize(raw.nodes, unit, true)?;
    let report = ParseReport {
        node_count: cloud.len(),
        symmetrization_repairs: repairs,
        source_unit: unit,
    };
    Ok((cloud, report))
}

/// Shared normalization: unit conversion, invariant checks, adjacency
/// symmetrization, deterministic ordering.
fn normalize(
    mut records: Vec<NodeRecord>,
    unit: Unit,
    reject_empty_neighbors: bool,
) -> Result<(PointCloud, usize), IngestError> {
    if unit == Unit::Um {
        for node in &mut records {
            node.position = node.position.scale(1e-3);
            node.radius *= 1e-3;
        }
    }

    let mut ids = BTreeSet::new();
    for node in &records {
        if !ids.insert(node.id) {
            return Err(IngestError::DuplicateId { id: node.id });
        }
    }

    for node in &records {
        if !node.position.is_finite() || !node.radius.is_finite() {
            return Err(IngestError::NonFinite { id: node.id });
        }
        if node.radius <= 0.0 {
            return Err(IngestError::NonPositiveRadius {
                id: node.id,
                radius: node.radius,
            });
        }
        if reject_empty_neighbors && node.neighbors.is_empty() {
            return Err(IngestError::EmptyNeighbors { id: node.id });
        }
        let mut seen = BTreeSet::new();
        for &n in &node.neighbors {
            if n == node.id {
                return Err(IngestError::SelfLoop { id: node.id });
            }
            if !ids.contains(&n) {
                return Err(IngestError::DanglingNeighbor {
                    node: node.id,
                    neighbor: n,
                });
            }
            if !seen.insert(n) {
                return Err(IngestError::DuplicateNeighbor {
                    id: node.id,
                    neighbor: n,
                });
            }
        }
    }

    // Symmetrize: if a lists b but b omits a, add the reverse entry.
    let mut adjacency: BTreeMap<NodeId, BTreeSet<NodeId>> = records
        .iter()
        .map(|n| (n.id, n.neighbors.iter().copied().collect()))
        .collect();
    let mut repairs = 0usize;
    let listings: Vec<(NodeId, NodeId)> = records
        .iter()
        .flat_map(|n| n.neighbors.iter().map(move |&m| (n.id, m)))
        .collect();
    for (a, b) in listings {
        let back = adjacency.get_mut(&b).expect("neighbor ids verified above");
        if back.insert(a) {
            repairs += 1;
        }
    }

    for node in &mut records {
        node.neighbors = adjacency
            .remove(&node.id)
            .expect("every node present in adjacency")
            .into_iter()
            .collect();
    }
    records.sort_by_key(|n| n.id);

    Ok((PointCloud { nodes: records }, repairs))
}

impl PointCloud {
    /// Build a cloud from in-memory records.
    ///
    /// Applies the same normalization as parsing (unit conversion,
    /// symmetrization, invariant checks) except that empty neighbour
    /// lists are allowed; isolated nodes are reported by [`validate`]
    /// and removed by component selection downstream.
    pub fn from_records(records: Vec<NodeRecord>, unit: Unit) -> Result<Self, IngestError> {
        let (cloud, _) = normalize(records, unit, false)?;
        Ok(cloud)
    }

    /// Nodes sorted by id.
    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeRecord> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .ok()
            .map(|i| &self.nodes[i])
    }

    /// Undirected edge count.
    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.neighbors.len()).sum::<usize>() / 2
    }

    /// Serialize to the CSV schema (always millimetres).
    pub fn to_csv_string(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(CSV_HEADER)
            .expect("writing to Vec cannot fail");
        for node in &self.nodes {
            let neighbors = node
                .neighbors
                .iter()
                .map(|n| n.0.to_string())
                .collect::<Vec<_>>()
                .join(";");
            writer
                .write_record(&[
                    node.id.0.to_string(),
                    node.position.x.to_string(),
                    node.position.y.to_string(),
                    node.position.z.to_string(),
                    node.radius.to_string(),
                    neighbors,
                ])
                .expect("writing to Vec cannot fail");
        }
        String::from_utf8(writer.into_inner().expect("no partial flush"))
            .expect("CSV output is UTF-8")
    }

    /// Serialize to the JSON schema (always millimetres).
    pub fn to_json_string(&self) -> String {
        let doc = JsonCloud {
            unit: Unit::Mm,
            nodes: self.nodes.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("point cloud serialization cannot fail")
    }
}

/// Options for [`validate`].
#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    /// A radius is flagged when it exceeds this multiple of the median.
    pub outlier_multiplier: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            outlier_multiplier: 10.0,
        }
    }
}

/// Report-only findings over a cloud; never mutates anything.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    /// Nodes with no neighbours.
    pub degree_zero: Vec<NodeId>,
    /// Nodes whose radius exceeds `outlier_multiplier` times the median.
    pub radius_outliers: Vec<NodeId>,
    /// Groups of nodes sharing an identical position.
    pub duplicate_positions: Vec<Vec<NodeId>>,
    pub median_radius: f64,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.degree_zero.is_empty()
            && self.radius_outliers.is_empty()
            && self.duplicate_positions.is_empty()
    }
}

/// Inspect a cloud for degree-0 nodes, radius outliers, and duplicate
/// positions.
pub fn validate(cloud: &PointCloud, options: &ValidateOptions) -> ValidationReport {
    let degree_zero = cloud
        .nodes
        .iter()
        .filter(|n| n.neighbors.is_empty())
        .map(|n| n.id)
        .collect();

    let mut radii: Vec<f64> = cloud.nodes.iter().map(|n| n.radius).collect();
    radii.sort_by(f64::total_cmp);
    let median_radius = if radii.is_empty() {
        0.0
    } else if radii.len() % 2 == 1 {
        radii[radii.len() / 2]
    } else {
        (radii[radii.len() / 2 - 1] + radii[radii.len() / 2]) / 2.0
    };
    let radius_outliers = cloud
        .nodes
        .iter()
        .filter(|n| n.radius > options.outlier_multiplier * median_radius)
        .map(|n| n.id)
        .collect();

    let mut by_position: BTreeMap<[u64; 3], Vec<NodeId>> = BTreeMap::new();
    for node in &cloud.nodes {
        by_position
            .entry(node.position.bits())
            .or_default()
            .push(node.id);
    }
    let duplicate_positions = by_position
        .into_values()
        .filter(|group| group.len() > 1)
        .collect();

    ValidationReport {
        degree_zero,
        radius_outliers,
        duplicate_positions,
        median_radius,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_node_csv() -> &'static str {
        "id,x,y,z,radius,neighbors\n0,0,0,0,1.0,1\n1,1,0,0,0.9,0\n"
    }

    #[test]
    fn parses_minimal_two_node_cloud() {
        let (cloud, report) = parse_point_cloud(two_node_csv(), Format::Csv).unwrap();
        assert_eq!(cloud.len(), 2);
        assert_eq!(cloud.edge_count(), 1);
        assert_eq!(cloud.node(NodeId(0)).unwrap().neighbors, vec![NodeId(1)]);
        assert_eq!(cloud.node(NodeId(1)).unwrap().neighbors, vec![NodeId(0)]);
        assert_eq!(report.symmetrization_repairs, 0);
    }

    #[test]
    fn one_sided_listing_is_repaired() {
        // Node 0 lists 1 but node 1 lists only 2: the 1->0 entry is added.
        let src = "id,x,y,z,radius,neighbors\n0,0,0,0,1.0,1\n1,1,0,0,0.9,2\n2,2,0,0,0.8,1\n";
        let (cloud, report) = parse_point_cloud(src, Format::Csv).unwrap();
        assert_eq!(report.symmetrization_repairs, 1);
        assert_eq!(
            cloud.node(NodeId(1)).unwrap().neighbors,
            vec![NodeId(0), NodeId(2)]
        );
        assert_eq!(cloud.edge_count(), 2);
    }

    #[test]
    fn nonpositive_radius_reports_line() {
        let src = "id,x,y,z,radius,neighbors\n0,0,0,0,-1.0,1\n1,1,0,0,0.9,0\n";
        let err = parse_point_cloud(src, Format::Csv).unwrap_err();
        match err {
            IngestError::Malformed { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("nonpositive radius"), "{message}");
            }
            other => panic!("expected Malformed, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_id_rejected() {
        let src = "id,x,y,z,radius,neighbors\n0,0,0,0,1.0,1\n0,1,0,0,0.9,0\n1,2,0,0,0.8,0\n";
        assert!(matches!(
            parse_point_cloud(src, Format::Csv),
            Err(IngestError::DuplicateId { id: NodeId(0) })
        ));
    }

    #[test]
    fn dangling_neighbor_names_both_ids() {
        let src = "id,x,y,z,radius,neighbors\n0,0,0,0,1.0,7\n";
        let err = parse_point_cloud(src, Format::Csv).unwrap_err();
        match err {
            IngestError::DanglingNeighbor { node, neighbor } => {
                assert_eq!(node, NodeId(0));
                assert_eq!(neighbor, NodeId(7));
            }
            other => panic!("expected DanglingNeighbor, got {other:?}"),
        }
    }

    #[test]
    fn empty_neighbors_rejected_at_parse() {
        let src = "id,x,y,z,radius,neighbors\n0,0,0,0,1.0,\n";
        assert!(matches!(
            parse_point_cloud(src, Format::Csv),
            Err(IngestError::Malformed { line: 2, .. })
        ));
    }

    #[test]
    fn self_loop_rejected() {
        let src = "id,x,y,z,radius,neighbors\n0,0,0,0,1.0,0\n";
        assert!(matches!(
            parse_point_cloud(src, Format::Csv),
            Err(IngestError::SelfLoop { id: NodeId(0) })
        ));
    }

    #[test]
    fn micrometre_input_converted_to_millimetres() {
        let json = r#"{"unit":"um","nodes":[
            {"id":0,"pos":[1000,0,0],"radius":500,"neighbors":[1]},
            {"id":1,"pos":[2000,0,0],"radius":400,"neighbors":[0]}
        ]}"#;
        let (cloud, report) = parse_point_cloud(json, Format::Json).unwrap();
        assert_eq!(report.source_unit, Unit::Um);
        let n0 = cloud.node(NodeId(0)).unwrap();
        assert!((n0.position.x - 1.0).abs() < 1e-12);
        assert!((n0.radius - 0.5).abs() < 1e-12);
    }

    #[test]
    fn validate_clean_two_node_cloud() {
        let (cloud, _) = parse_point_cloud(two_node_csv(), Format::Csv).unwrap();
        let report = validate(&cloud, &ValidateOptions::default());
        assert!(report.is_clean(), "{report:?}");
    }

    #[test]
    fn validate_flags_degree_zero_after_edit() {
        // A node whose only neighbour was dropped: construct directly,
        // since the parser rejects empty neighbour lists.
        let records = vec![
            NodeRecord {
                id: NodeId(0),
                position: Point3::new(0.0, 0.0, 0.0),
                radius: 1.0,
                neighbors: vec![NodeId(1)],
            },
            NodeRecord {
                id: NodeId(1),
                position: Point3::new(1.0, 0.0, 0.0),
                radius: 1.0,
                neighbors: vec![NodeId(0)],
            },
            NodeRecord {
                id: NodeId(2),
                position: Point3::new(2.0, 0.0, 0.0),
                radius: 1.0,
                neighbors: vec![],
            },
        ];
        let cloud = PointCloud::from_records(records, Unit::Mm).unwrap();
        let report = validate(&cloud, &ValidateOptions::default());
        assert_eq!(report.degree_zero, vec![NodeId(2)]);
    }

    #[test]
    fn validate_flags_radius_outlier_against_median() {
        let records: Vec<NodeRecord> = [(0u64, 0.1), (1, 0.1), (2, 0.1), (3, 10.0)]
            .iter()
            .map(|&(id, radius)| NodeRecord {
                id: NodeId(id),
                position: Point3::new(id as f64, 0.0, 0.0),
                radius,
                neighbors: vec![NodeId((id + 1) % 4)],
            })
            .collect();
        let cloud = PointCloud::from_records(records, Unit::Mm).unwrap();
        let report = validate(
            &cloud,
            &ValidateOptions {
                outlier_multiplier: 10.0,
            },
        );
        assert_eq!(report.median_radius, 0.1);
        assert_eq!(report.radius_outliers, vec![NodeId(3)]);
    }

    #[test]
    fn validate_groups_duplicate_positions() {
        let records = vec![
            NodeRecord {
                id: NodeId(0),
                position: Point3::new(1.0, 2.0, 3.0),
                radius: 1.0,
                neighbors: vec![NodeId(1)],
            },
            NodeRecord {
                id: NodeId(1),
                position: Point3::new(1.0, 2.0, 3.0),
                radius: 1.0,
                neighbors: vec![NodeId(0)],
            },
        ];
        let cloud = PointCloud::from_records(records, Unit::Mm).unwrap();
        let report = validate(&cloud, &ValidateOptions::default());
        assert_eq!(report.duplicate_positions, vec![vec![NodeId(0), NodeId(1)]]);
    }

    #[test]
    fn validate_never_mutates() {
        let (cloud, _) = parse_point_cloud(two_node_csv(), Format::Csv).unwrap();
        let before = cloud.clone();
        let _ = validate(&cloud, &ValidateOptions::default());
        assert_eq!(cloud, before);
    }

    /// Strategy for small valid clouds: a random tree plus extra edges,
    /// guaranteeing symmetric adjacency and valid radii.
    fn arb_cloud() -> impl Strategy<Value = PointCloud> {
        (2usize..12).prop_flat_map(|n| {
            let parents: Vec<_> = (1..n).map(|i| 0..i).collect();
            let radii = proptest::collection::vec(0.1f64..5.0, n);
            let coords = proptest::collection::vec(-50.0f64..50.0, n * 3);
            (parents, radii, coords).prop_map(move |(parents, radii, coords)| {
                let mut neighbors: Vec<Vec<NodeId>> = vec![Vec::new(); n];
                for (child, parent) in parents.iter().copied().enumerate() {
                    let child = child + 1;
                    neighbors[child].push(NodeId(parent as u64));
                }
                let records = (0..n)
                    .map(|i| NodeRecord {
                        id: NodeId(i as u64),
                        position: Point3::new(
                            coords[3 * i],
                            coords[3 * i + 1],
                            coords[3 * i + 2],
                        ),
                        radius: radii[i],
                        neighbors: neighbors[i].clone(),
                    })
                    .collect();
                PointCloud::from_records(records, Unit::Mm).unwrap()
            })
        })
    }

    proptest! {
        /// parse(serialize(cloud)) == cloud for both formats.
        #[test]
        fn round_trip_csv_and_json(cloud in arb_cloud()) {
            let (from_csv, _) = parse_point_cloud(&cloud.to_csv_string(), Format::Csv).unwrap();
            prop_assert_eq!(&from_csv, &cloud);
            let (from_json, _) = parse_point_cloud(&cloud.to_json_string(), Format::Json).unwrap();
            prop_assert_eq!(&from_json, &cloud);
        }

        /// After parse, adjacency is symmetric and hollow.
        #[test]
        fn adjacency_symmetric_and_hollow(cloud in arb_cloud()) {
            for node in cloud.nodes() {
                for &n in &node.neighbors {
                    prop_assert_ne!(n, node.id);
                    let back = cloud.node(n).unwrap();
                    prop_assert!(back.neighbors.contains(&node.id));
                }
            }
        }
    }
}
