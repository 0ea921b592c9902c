//! Topological graph kernels: Weisfeiler-Lehman subtree and shortest-path.
//!
//! Both operate on unweighted [`DiscreteGraph`]s; weighted graphs are first
//! thresholded with [`discretize`]. Feature maps are sparse count vectors and
//! kernel values are their inner products, so every Gram matrix is PSD by
//! construction.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernel::{KernelMatrix, Provenance};

/// Unweighted, node-labeled simple graph.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteGraph {
    pub node_labels: Vec<String>,
    /// Sorted neighbor lists.
    pub neighbors: Vec<Vec<usize>>,
}

impl DiscreteGraph {
    pub fn new(node_labels: Vec<String>, edges: &[(usize, usize)]) -> Self {
        let mut neighbors = vec![Vec::new(); node_labels.len()];
        for &(u, v) in edges {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Self { node_labels, neighbors }
    }

    pub fn node_count(&self) -> usize {
        self.node_labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permute_nodes(&self, perm: &[usize]) -> Self {
        let mut labels = vec![String::new(); self.node_count()];
        let mut edges = Vec::new();
        for (u, list) in self.neighbors.iter().enumerate() {
            labels[perm[u]] = self.node_labels[u].clone();
            edges.extend(list.iter().filter(|&&v| u < v).map(|&v| (perm[u], perm[v])));
        }
        Self::new(labels, &edges)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// WL iterations `h`.
    pub wl_iterations: usize,
    /// Edges are kept iff `|weight| >= threshold`. Required for weighted input.
    pub edge_threshold: Option<f64>,
    pub normalize: bool,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { wl_iterations: 3, edge_threshold: None, normalize: false }
    }
}

/// Keeps exactly the edges with `|weight| >= threshold`.
pub fn discretize(g: &Graph, threshold: f64) -> DiscreteGraph {
    let labels = (0..g.node_count).map(|i| g.label(i).to_string()).collect();
    let edges: Vec<(usize, usize)> = g
        .edges
        .iter()
        .filter(|e| e.weight.abs() >= threshold)
        .map(|e| (e.u, e.v))
        .collect();
    DiscreteGraph::new(labels, &edges)
}

/// Thresholds every graph, insisting on an explicit threshold when any graph is weighted.
pub fn discretize_all(graphs: &[Graph], threshold: Option<f64>) -> Result<Vec<DiscreteGraph>> {
    let t = match threshold {
        Some(t) => t,
        None if graphs.iter().any(Graph::is_weighted) => {
            return Err(Error::Config(
                "weighted graphs need an edge threshold (--threshold) for WL/SP kernels".into(),
            ))
        }
        None => 0.0,
    };
    Ok(graphs.iter().map(|g| discretize(g, t)).collect())
}

/// Sparse feature vector sorted by key.
type Features<K> = Vec<(K, f64)>;

fn counts<K: Ord + Clone>(keys: impl Iterator<Item = K>) -> Features<K> {
    let mut map = BTreeMap::new();
    for k in keys {
        *map.entry(k).or_insert(0.0) += 1.0;
    }
    map.into_iter().collect()
}

fn sparse_dot<K: Ord>(a: &[(K, f64)], b: &[(K, f64)]) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// Maps label strings to dense ids assigned in sorted string order.
fn intern_labels(graphs: &[DiscreteGraph]) -> Vec<Vec<u32>> {
    let alphabet: BTreeSet<&str> = graphs
        .iter()
        .flat_map(|g| g.node_labels.iter().map(String::as_str))
        .collect();
    let ids: BTreeMap<&str, u32> = alphabet.into_iter().zip(0..).collect();
    graphs
        .iter()
        .map(|g| g.node_labels.iter().map(|l| ids[l.as_str()]).collect())
        .collect()
}

/// WL subtree features for iterations `0..=h`, keyed by `(iteration, compressed label)`.
///
/// At every iteration each node's signature (own label, sorted neighbor labels)
/// is compressed through one dictionary shared by all graphs; fresh labels are
/// handed out in sorted signature order, so the result does not depend on
/// graph order or scheduling.
pub fn wl_features(graphs: &[DiscreteGraph], h: usize) -> Vec<Features<(u32, u32)>> {
    let mut labels = intern_labels(graphs);
    let mut features: Vec<Features<(u32, u32)>> = labels
        .iter()
        .map(|ls| counts(ls.iter().map(|&l| (0, l))))
        .collect();

    for iter in 1..=h as u32 {
        let signatures: Vec<Vec<(u32, Vec<u32>)>> = graphs
            .iter()
            .zip(&labels)
            .map(|(g, ls)| {
                (0..g.node_count())
                    .map(|v| {
                        let mut nb: Vec<u32> = g.neighbors[v].iter().map(|&u| ls[u]).collect();
                        nb.sort_unstable();
                        (ls[v], nb)
                    })
                    .collect()
            })
            .collect();
        let dictionary: BTreeMap<&(u32, Vec<u32>), u32> = signatures
            .iter()
            .flatten()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .zip(0..)
            .collect();
        labels = signatures
            .iter()
            .map(|sigs| sigs.iter().map(|s| dictionary[s]).collect())
            .collect();
        for (f, ls) in features.iter_mut().zip(&labels) {
            f.extend(counts(ls.iter().map(|&l| (iter, l))));
        }
    }
    features
}

pub fn wl_kernel_matrix(graphs: &[DiscreteGraph], h: usize) -> KernelMatrix {
    let features = wl_features(graphs, h);
    let provenance = Provenance::new("wl").with("h", h);
    KernelMatrix::from_fn(graphs.len(), provenance, |i, j| sparse_dot(&features[i], &features[j]))
}

/// All-pairs hop distances by Floyd–Warshall; `None` for unreachable pairs.
pub fn hop_distances(g: &DiscreteGraph) -> Vec<Vec<Option<u32>>> {
    let n = g.node_count();
    let mut d = vec![vec![None; n]; n];
    for (u, list) in g.neighbors.iter().enumerate() {
        d[u][u] = Some(0);
        for &v in list {
            d[u][v] = Some(1);
        }
    }
    for k in 0..n {
        for i in 0..n {
            let Some(dik) = d[i][k] else { continue };
            for j in 0..n {
                if let Some(dkj) = d[k][j] {
                    let through = dik + dkj;
                    if d[i][j].is_none_or(|cur| through < cur) {
                        d[i][j] = Some(through);
                    }
                }
            }
        }
    }
    d
}

/// Shortest-path features: counts of `(smaller label, larger label, hop length)`
/// over unordered pairs of distinct, mutually reachable nodes.
pub fn sp_features(graphs: &[DiscreteGraph]) -> Vec<Features<(u32, u32, u32)>> {
    let labels = intern_labels(graphs);
    graphs
        .iter()
        .zip(&labels)
        .map(|(g, ls)| {
            let d = hop_distances(g);
            let n = g.node_count();
            let triples = (0..n).flat_map(|u| {
                let d = &d;
                ((u + 1)..n).filter_map(move |v| {
                    d[u][v].map(|len| (ls[u].min(ls[v]), ls[u].max(ls[v]), len))
                })
            });
            counts(triples)
        })
        .collect()
}

pub fn sp_kernel_matrix(graphs: &[DiscreteGraph]) -> KernelMatrix {
    let features = sp_features(graphs);
    let provenance = Provenance::new("sp").with("path_length", "hops").with("comparison", "dirac");
    KernelMatrix::from_fn(graphs.len(), provenance, |i, j| sparse_dot(&features[i], &features[j]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphKernel {
    WeisfeilerLehman,
    ShortestPath,
}

/// Thresholds, builds the chosen kernel, and normalizes if configured.
pub fn graph_kernel_matrix(graphs: &[Graph], kind: GraphKernel, cfg: &KernelConfig) -> Result<KernelMatrix> {
    let discrete = discretize_all(graphs, cfg.edge_threshold)?;
    let mut k = match kind {
        GraphKernel::WeisfeilerLehman => wl_kernel_matrix(&discrete, cfg.wl_iterations),
        GraphKernel::ShortestPath => sp_kernel_matrix(&discrete),
    };
    k.provenance
        .params
        .insert("edge_threshold".into(), cfg.edge_threshold.unwrap_or(0.0).into());
    if cfg.normalize {
        k = k.normalized()?;
    } else {
        k.provenance.params.insert("normalized".into(), false.into());
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn uniform(n: usize, edges: &[(usize, usize)]) -> DiscreteGraph {
        DiscreteGraph::new(vec!["_".into(); n], edges)
    }

    #[test]
    fn discretize_threshold() {
        let g = Graph::new(
            3,
            None,
            vec![Edge::new(0, 1, 0.1), Edge::new(0, 2, 0.5), Edge::new(1, 2, -0.7)],
        )
        .unwrap();
        assert_eq!(discretize(&g, 0.4).edge_count(), 2);
        assert_eq!(discretize(&g, 0.0).edge_count(), 3);
        assert_eq!(discretize(&g, f64::INFINITY).edge_count(), 0);
        assert!(discretize(&g, 0.0).node_labels.iter().all(|l| l == "_"));
    }

    #[test]
    fn weighted_input_requires_threshold() {
        let g = Graph::new(2, None, vec![Edge::new(0, 1, 0.3)]).unwrap();
        assert!(discretize_all(std::slice::from_ref(&g), None).is_err());
        let binary = Graph::new(2, None, vec![Edge::new(0, 1, 1.0)]).unwrap();
        assert_eq!(discretize_all(&[binary], None).unwrap()[0].edge_count(), 1);
        assert_eq!(discretize_all(&[g], Some(0.5)).unwrap()[0].edge_count(), 0);
    }

    #[test]
    fn wl_single_edge_h1() {
        let g = uniform(2, &[(0, 1)]);
        let k = wl_kernel_matrix(&[g.clone(), g], 1);
        assert_eq!(k.get(0, 1), 8.0);
    }

    #[test]
    fn wl_disjoint_alphabets_h0() {
        let g1 = DiscreteGraph::new(vec!["x".into(), "y".into()], &[(0, 1)]);
        let g2 = DiscreteGraph::new(vec!["p".into(), "q".into()], &[(0, 1)]);
        assert_eq!(wl_kernel_matrix(&[g1, g2], 0).get(0, 1), 0.0);
    }

    #[test]
    fn wl_distinguishes_path_from_star_after_one_iteration() {
        let path = uniform(4, &[(0, 1), (1, 2), (2, 3)]);
        let star = uniform(4, &[(0, 1), (0, 2), (0, 3)]);
        let k0 = wl_kernel_matrix(&[path.clone(), star.clone()], 0);
        assert_eq!(k0.get(0, 1), 16.0);
        let k1 = wl_kernel_matrix(&[path, star], 1);
        // both have 2 vs 3 leaves: leaf signature (l, [l]) shared: 2 * 3
        assert_eq!(k1.get(0, 1), 16.0 + 6.0);
    }

    #[test]
    fn sp_path_graph() {
        let g = uniform(3, &[(0, 1), (1, 2)]);
        assert_eq!(sp_kernel_matrix(&[g]).get(0, 0), 5.0);
    }

    #[test]
    fn sp_edgeless_is_zero() {
        let g = uniform(4, &[]);
        let k = sp_kernel_matrix(&[g.clone(), g]);
        assert_eq!(k.as_slice(), &[0.0; 4]);
    }

    #[test]
    fn floyd_warshall_disconnected() {
        let d = hop_distances(&uniform(4, &[(0, 1), (2, 3)]));
        assert_eq!(d[0][1], Some(1));
        assert_eq!(d[0][2], None);
        assert_eq!(d[3][3], Some(0));
    }

    #[test]
    fn permutation_keeps_structure() {
        let g = DiscreteGraph::new(vec!["a".into(), "b".into(), "c".into()], &[(0, 1), (1, 2)]);
        let p = g.permute_nodes(&[2, 0, 1]);
        assert_eq!(p.node_labels, vec!["b", "c", "a"]);
        assert_eq!(p.neighbors[0], vec![1, 2]);
        let k = wl_kernel_matrix(&[g.clone(), p.clone()], 2);
        assert_eq!(k.get(0, 1), k.get(0, 0));
        let s = sp_kernel_matrix(&[g, p]);
        assert_eq!(s.get(0, 1), s.get(0, 0));
    }

    #[test]
    fn normalization_option() {
        let graphs = vec![
            Graph::new(3, None, vec![Edge::new(0, 1, 1.0)]).unwrap(),
            Graph::new(3, None, vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0)]).unwrap(),
        ];
        let cfg = KernelConfig { normalize: true, ..KernelConfig::default() };
        let k = graph_kernel_matrix(&graphs, GraphKernel::WeisfeilerLehman, &cfg).unwrap();
        assert_eq!(k.get(0, 0), 1.0);
        assert_eq!(k.get(1, 1), 1.0);
        assert!(k.get(0, 1) < 1.0);
    }
}
