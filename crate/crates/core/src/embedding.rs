//! Vector embeddings of graphs that share a node set, and the Gaussian kernel on them.

use rand::seq::index;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, LabeledGraphDataset};
use crate::kernel::{KernelMatrix, Provenance};
use crate::rng::{self, Purpose};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum EmbeddingMethod {
    /// Direct connection embedding of graphs with `node_count` nodes.
    Dce { node_count: usize },
    /// Distances to the DCE vectors of the listed prototype graphs.
    Dre { prototypes: Vec<usize> },
}

/// `N × d` matrix of embedded graphs.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedDataset {
    pub vectors: Vec<Vec<f64>>,
    pub method: EmbeddingMethod,
}

impl EmbeddedDataset {
    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }
}

/// Strictly-upper-triangular adjacency entries in row-major order.
pub fn dce_vector(g: &Graph) -> Vec<f64> {
    let n = g.node_count;
    let mut v = vec![0.0; n * n.saturating_sub(1) / 2];
    for e in &g.edges {
        let (i, j) = (e.u.min(e.v), e.u.max(e.v));
        v[dce_position(n, i, j)] = e.weight;
    }
    v
}

/// Index of the entry for node pair `i < j` in a DCE vector of an `n`-node graph.
pub fn dce_position(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Inverse of [`dce_vector`]: zero entries become absent edges.
pub fn graph_from_dce(node_count: usize, v: &[f64]) -> Graph {
    let mut rows = vec![vec![0.0; node_count]; node_count];
    let mut k = 0;
    for i in 0..node_count {
        for j in (i + 1)..node_count {
            rows[i][j] = v[k];
            rows[j][i] = v[k];
            k += 1;
        }
    }
    Graph::from_adjacency(&rows)
}

pub fn dce_embed(d: &LabeledGraphDataset) -> Result<EmbeddedDataset> {
    if !d.node_correspondence() {
        return Err(Error::NoNodeCorrespondence);
    }
    let vectors = d.graphs().iter().map(dce_vector).collect();
    Ok(EmbeddedDataset {
        vectors,
        method: EmbeddingMethod::Dce { node_count: d.graphs()[0].node_count },
    })
}

pub fn dre_embed(d: &LabeledGraphDataset, prototypes: &[usize]) -> Result<EmbeddedDataset> {
    if prototypes.is_empty() {
        return Err(Error::EmptyPrototypes);
    }
    if let Some(&index) = prototypes.iter().find(|&&p| p >= d.len()) {
        return Err(Error::PrototypeOutOfRange { index, count: d.len() });
    }
    let base = dce_embed(d)?.vectors;
    let vectors = base
        .iter()
        .map(|v| prototypes.iter().map(|&p| euclidean(v, &base[p])).collect())
        .collect();
    Ok(EmbeddedDataset { vectors, method: EmbeddingMethod::Dre { prototypes: prototypes.to_vec() } })
}

/// `size` distinct prototype indices drawn uniformly from `0..count`, ascending.
pub fn random_prototypes(count: usize, size: usize, seed: u64) -> Result<Vec<usize>> {
    if size == 0 {
        return Err(Error::EmptyPrototypes);
    }
    if size > count {
        return Err(Error::PrototypeOutOfRange { index: size, count });
    }
    let mut rng = rng::stream(seed, Purpose::Prototypes, 0);
    let mut picked = index::sample(&mut rng, count, size).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median of all pairwise Euclidean distances (mean of the two middle values
/// for an even count).
pub fn median_heuristic(vectors: &[Vec<f64>]) -> Result<f64> {
    if vectors.len() < 2 {
        return Err(Error::InvalidDataset("median heuristic needs at least 2 vectors".into()));
    }
    let mut dists = Vec::with_capacity(vectors.len() * (vectors.len() - 1) / 2);
    for i in 0..vectors.len() {
        for j in (i + 1)..vectors.len() {
            dists.push(euclidean(&vectors[i], &vectors[j]));
        }
    }
    let sigma = median(&mut dists);
    if sigma > 0.0 {
        Ok(sigma)
    } else {
        Err(Error::DegenerateDataset)
    }
}

/// Median of a nonempty slice; sorts it in place.
pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// `K_ij = exp(-|v_i - v_j|² / (2σ²))`.
pub fn gaussian_gram(vectors: &[Vec<f64>], sigma: f64) -> Result<KernelMatrix> {
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidBandwidth(sigma));
    }
    let denom = 2.0 * sigma * sigma;
    let provenance = Provenance::new("gaussian")
        .with("sigma", sigma)
        .with("form", "exp(-d^2/(2 sigma^2))");
    Ok(KernelMatrix::from_fn(vectors.len(), provenance, |i, j| {
        if i == j {
            1.0
        } else {
            (-squared_distance(&vectors[i], &vectors[j]) / denom).exp()
        }
    }))
}

/// Bandwidth choice for [`gaussian_gram`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bandwidth {
    MedianHeuristic,
    Fixed(f64),
}

/// Gaussian Gram matrix of an embedding, with the embedding recorded in the provenance.
pub fn embedded_gram(e: &EmbeddedDataset, bandwidth: Bandwidth) -> Result<KernelMatrix> {
    let sigma = match bandwidth {
        Bandwidth::MedianHeuristic => median_heuristic(&e.vectors)?,
        Bandwidth::Fixed(s) => s,
    };
    let mut k = gaussian_gram(&e.vectors, sigma)?;
    let (name, extra) = match &e.method {
        EmbeddingMethod::Dce { node_count } => ("dce", serde_json::json!({ "node_count": node_count })),
        EmbeddingMethod::Dre { prototypes } => (
            "dre",
            serde_json::json!({ "prototypes": prototypes, "base": "dce" }),
        ),
    };
    k.provenance.method = format!("{name}+gaussian");
    k.provenance.params.insert("embedding".into(), extra);
    k.provenance.params.insert(
        "bandwidth".into(),
        match bandwidth {
            Bandwidth::MedianHeuristic => "median-heuristic".into(),
            Bandwidth::Fixed(_) => "fixed".into(),
        },
    );
    Ok(k)
}
