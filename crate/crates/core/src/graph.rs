//! Graphs, labeled datasets, and the manifest + CSV dataset format.
//!
//! A dataset on disk is a JSON manifest
//!
//! ```json
//! {"node_correspondence": true,
//!  "subjects": [{"file": "s01.csv", "label": "a"}, {"file": "s02.csv", "label": "b"}]}
//! ```
//!
//! where each `file` (relative to the manifest's directory) is a dense,
//! header-less, comma-separated symmetric adjacency matrix. Zero entries mean
//! "no edge" and the diagonal is ignored. A subject may also carry an optional
//! `"node_labels": [..]` array.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label given to every node of a graph that carries no node labels.
pub const DEFAULT_NODE_LABEL: &str = "_";

/// Largest tolerated `|a_ij - a_ji|` when reading an adjacency matrix.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(u: usize, v: usize, weight: f64) -> Self {
        Self { u, v, weight }
    }

    fn key(&self) -> (usize, usize) {
        (self.u.min(self.v), self.u.max(self.v))
    }
}

/// Simple undirected graph with optional node labels and real edge weights.
///
/// Fields are public so that malformed graphs can be represented and reported
/// by [`Graph::validate`]; [`Graph::new`] only returns well-formed graphs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    pub node_count: usize,
    pub node_labels: Option<Vec<String>>,
    pub edges: Vec<Edge>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Violation {
    EmptyGraph,
    SelfLoop { node: usize },
    EndpointOutOfRange { u: usize, v: usize },
    DuplicateEdge { u: usize, v: usize },
    NonFiniteWeight { u: usize, v: usize },
    LabelArity { expected: usize, found: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::EmptyGraph => write!(f, "graph has no nodes"),
            Violation::SelfLoop { node } => write!(f, "self-loop at node {node}"),
            Violation::EndpointOutOfRange { u, v } => write!(f, "edge ({u}, {v}) out of range"),
            Violation::DuplicateEdge { u, v } => write!(f, "duplicate edge ({u}, {v})"),
            Violation::NonFiniteWeight { u, v } => write!(f, "non-finite weight on ({u}, {v})"),
            Violation::LabelArity { expected, found } => {
                write!(f, "label arity: {found} labels for {expected} nodes")
            }
        }
    }
}

impl Graph {
    pub fn new(node_count: usize, node_labels: Option<Vec<String>>, edges: Vec<Edge>) -> Result<Self> {
        let graph = Self { node_count, node_labels, edges };
        let violations = graph.validate();
        if violations.is_empty() {
            Ok(graph)
        } else {
            Err(Error::InvalidGraph { index: 0, violations })
        }
    }

    /// Builds a graph from a dense symmetric matrix, keeping the nonzero
    /// strictly-upper-triangular entries as edges.
    pub fn from_adjacency(rows: &[Vec<f64>]) -> Self {
        let node_count = rows.len();
        let mut edges = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &w) in row.iter().enumerate().skip(i + 1) {
                if w != 0.0 {
                    edges.push(Edge::new(i, j, w));
                }
            }
        }
        Self { node_count, node_labels: None, edges }
    }

    /// Dense adjacency matrix; absent edges are 0.
    pub fn adjacency(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.node_count]; self.node_count];
        for e in &self.edges {
            a[e.u][e.v] = e.weight;
            a[e.v][e.u] = e.weight;
        }
        a
    }

    /// Returns every invariant violation; an empty list means the graph is well-formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.node_count == 0 {
            out.push(Violation::EmptyGraph);
        }
        let mut seen = HashSet::new();
        for e in &self.edges {
            if e.u == e.v {
                out.push(Violation::SelfLoop { node: e.u });
            }
            if e.u >= self.node_count || e.v >= self.node_count {
                out.push(Violation::EndpointOutOfRange { u: e.u, v: e.v });
            }
            if !seen.insert(e.key()) {
                let (u, v) = e.key();
                out.push(Violation::DuplicateEdge { u, v });
            }
            if !e.weight.is_finite() {
                out.push(Violation::NonFiniteWeight { u: e.u, v: e.v });
            }
        }
        if let Some(labels) = &self.node_labels {
            if labels.len() != self.node_count {
                out.push(Violation::LabelArity { expected: self.node_count, found: labels.len() });
            }
        }
        out
    }

    pub fn label(&self, node: usize) -> &str {
        match &self.node_labels {
            Some(labels) => &labels[node],
            None => DEFAULT_NODE_LABEL,
        }
    }

    /// True when some edge weight differs from 1.
    pub fn is_weighted(&self) -> bool {
        self.edges.iter().any(|e| e.weight != 1.0)
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permute_nodes(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.node_count);
        let node_labels = self.node_labels.as_ref().map(|labels| {
            let mut out = vec![String::new(); labels.len()];
            for (i, l) in labels.iter().enumerate() {
                out[perm[i]] = l.clone();
            }
            out
        });
        let edges = self
            .edges
            .iter()
            .map(|e| Edge::new(perm[e.u], perm[e.v], e.weight))
            .collect();
        Self { node_count: self.node_count, node_labels, edges }
    }
}

/// Population label of a graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    A,
    B,
}

impl Group {
    /// Class encoding used by the classifier: a → +1, b → −1.
    pub fn sign(self) -> f64 {
        match self {
            Group::A => 1.0,
            Group::B => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Group::A => "a",
            Group::B => "b",
        }
    }
}

impl std::str::FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(Group::A),
            "b" => Ok(Group::B),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// Counts `(m, n)` of the two groups.
pub fn group_sizes(labels: &[Group]) -> (usize, usize) {
    let m = labels.iter().filter(|&&g| g == Group::A).count();
    (m, labels.len() - m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledGraphDataset {
    graphs: Vec<Graph>,
    labels: Vec<Group>,
    node_correspondence: bool,
}

impl LabeledGraphDataset {
    pub fn new(graphs: Vec<Graph>, labels: Vec<Group>, node_correspondence: bool) -> Result<Self> {
        if graphs.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} graphs but {} labels",
                graphs.len(),
                labels.len()
            )));
        }
        for (index, g) in graphs.iter().enumerate() {
            let violations = g.validate();
            if !violations.is_empty() {
                return Err(Error::InvalidGraph { index, violations });
            }
        }
        let (m, n) = group_sizes(&labels);
        if m < 2 || n < 2 {
            return Err(Error::GroupTooSmall { m, n });
        }
        if node_correspondence {
            let first = graphs[0].node_count;
            if let Some(g) = graphs.iter().find(|g| g.node_count != first) {
                return Err(Error::InvalidDataset(format!(
                    "node correspondence declared but graphs have {} and {} nodes",
                    first, g.node_count
                )));
            }
        }
        Ok(Self { graphs, labels, node_correspondence })
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn labels(&self) -> &[Group] {
        &self.labels
    }

    pub fn node_correspondence(&self) -> bool {
        self.node_correspondence
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// `(m, n)`: sizes of samples A and B.
    pub fn group_sizes(&self) -> (usize, usize) {
        group_sizes(&self.labels)
    }

    /// Index sets of samples A and B, each in dataset order.
    pub fn split_by_label(&self) -> (Vec<usize>, Vec<usize>) {
        split_by_label(&self.labels)
    }
}

/// Index sets of samples A and B, each in the original order.
pub fn split_by_label(labels: &[Group]) -> (Vec<usize>, Vec<usize>) {
    let a = (0..labels.len()).filter(|&i| labels[i] == Group::A).collect();
    let b = (0..labels.len()).filter(|&i| labels[i] == Group::B).collect();
    (a, b)
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    node_correspondence: bool,
    subjects: Vec<Subject>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Subject {
    file: PathBuf,
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    node_labels: Option<Vec<String>>,
}

pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<LabeledGraphDataset> {
    let manifest_path = manifest_path.as_ref();
    let text = fs::read_to_string(manifest_path)
        .map_err(|source| Error::Io { path: manifest_path.to_path_buf(), source })?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|source| Error::Manifest { path: manifest_path.to_path_buf(), source })?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let mut graphs = Vec::with_capacity(manifest.subjects.len());
    let mut labels = Vec::with_capacity(manifest.subjects.len());
    for subject in manifest.subjects {
        labels.push(subject.label.parse::<Group>()?);
        let path = base.join(&subject.file);
        let matrix = read_adjacency_csv(&path)?;
        let mut graph = Graph::from_adjacency(&matrix);
        graph.node_labels = subject.node_labels;
        graphs.push(graph);
    }
    LabeledGraphDataset::new(graphs, labels, manifest.node_correspondence)
}

/// Writes `manifest.json` plus one `subject_XXX.csv` per graph into `dir`.
/// Returns the manifest path.
pub fn save_dataset(dataset: &LabeledGraphDataset, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    let mut subjects = Vec::with_capacity(dataset.len());
    for (i, (g, label)) in dataset.graphs().iter().zip(dataset.labels()).enumerate() {
        let file = PathBuf::from(format!("subject_{i:03}.csv"));
        write_adjacency_csv(&dir.join(&file), &g.adjacency())?;
        subjects.push(Subject {
            file,
            label: label.as_str().to_string(),
            node_labels: g.node_labels.clone(),
        });
    }
    let manifest = Manifest { node_correspondence: dataset.node_correspondence(), subjects };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|source| Error::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Reads a dense square symmetric matrix.
pub fn read_adjacency_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    message: format!("not a number: {field:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let size = rows.len();
    if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != size) {
        return Err(Error::NonSquare { path: path.to_path_buf(), rows: size, row, cols: r.len() });
    }
    for i in 0..size {
        for j in (i + 1)..size {
            if (rows[i][j] - rows[j][i]).abs() > SYMMETRY_TOLERANCE {
                return Err(Error::NonSymmetric {
                    path: path.to_path_buf(),
                    i,
                    j,
                    a: rows[i][j],
                    b: rows[j][i],
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_adjacency_csv(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    write_matrix_csv(path, rows.iter().map(|r| r.as_slice()))
}

pub(crate) fn write_matrix_csv<'a>(path: &Path, rows: impl Iterator<Item = &'a [f64]>) -> Result<()> {
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io { path: path.to_path_buf(), source },
            _ => unreachable!(),
        }
    } else {
        Error::Parse { path: path.to_path_buf(), message: e.to_string() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        Graph::new(
            3,
            None,
            vec![Edge::new(0, 1, 0.5), Edge::new(0, 2, -0.2), Edge::new(1, 2, 1.5)],
        )
        .unwrap()
    }

    #[test]
    fn triangle_is_valid() {
        assert!(triangle().validate().is_empty());
    }

    #[test]
    fn self_loop_reported() {
        let g = Graph { node_count: 3, node_labels: None, edges: vec![Edge::new(0, 0, 1.0)] };
        assert_eq!(g.validate(), vec![Violation::SelfLoop { node: 0 }]);
    }

    #[test]
    fn label_arity_reported() {
        let g = Graph {
            node_count: 3,
            node_labels: Some(vec!["x".into(), "y".into()]),
            edges: vec![],
        };
        assert_eq!(g.validate(), vec![Violation::LabelArity { expected: 3, found: 2 }]);
    }

    #[test]
    fn duplicate_and_out_of_range_edges() {
        let g = Graph {
            node_count: 2,
            node_labels: None,
            edges: vec![Edge::new(0, 1, 1.0), Edge::new(1, 0, 2.0), Edge::new(1, 5, 1.0)],
        };
        let v = g.validate();
        assert!(v.contains(&Violation::DuplicateEdge { u: 0, v: 1 }));
        assert!(v.contains(&Violation::EndpointOutOfRange { u: 1, v: 5 }));
    }

    #[test]
    fn adjacency_keeps_strict_upper_nonzeros() {
        let g = Graph::from_adjacency(&[
            vec![1.0, 0.5, 0.0],
            vec![0.5, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        assert_eq!(g.edges, vec![Edge::new(0, 1, 0.5)]);
    }

    #[test]
    fn split_preserves_order() {
        use Group::*;
        assert_eq!(split_by_label(&[A, B, A, B]), (vec![0, 2], vec![1, 3]));
        assert_eq!(split_by_label(&[A, A, B, B]), (vec![0, 1], vec![2, 3]));
    }

    #[test]
    fn single_group_rejected() {
        let gs = vec![triangle(); 4];
        let err = LabeledGraphDataset::new(gs, vec![Group::A; 4], true).unwrap_err();
        assert!(matches!(err, Error::GroupTooSmall { m: 4, n: 0 }));
    }

    #[test]
    fn correspondence_requires_equal_sizes() {
        let mut gs = vec![triangle(); 4];
        gs[3] = Graph::new(4, None, vec![]).unwrap();
        use Group::*;
        assert!(LabeledGraphDataset::new(gs.clone(), vec![A, A, B, B], true).is_err());
        assert!(LabeledGraphDataset::new(gs, vec![A, A, B, B], false).is_ok());
    }

    #[test]
    fn unknown_label() {
        assert!(matches!("c".parse::<Group>(), Err(Error::UnknownLabel(_))));
    }
}
