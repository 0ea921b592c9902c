//! Star-graph simulation and the Type I / Type II error experiment.
//!
//! Each dataset holds `m` class-A and `n` class-B star graphs on `d + 1` nodes
//! (node 0 is the hub). The `d` edge weights of a graph are a multivariate
//! normal draw: mean 0 for class A, `δ·1` for class B, shared covariance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cbt::{nested_cv, CbtConfig};
use crate::embedding::{dce_embed, embedded_gram, Bandwidth};
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, Group, LabeledGraphDataset};
use crate::ktst::{ktst_labeled, p_value, Convention, KtstConfig};
use crate::rng::{self, BoxMuller, Purpose};

/// Lower-triangular Cholesky factor of an SPD covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceFactor {
    lower: Vec<Vec<f64>>,
}

impl CovarianceFactor {
    pub fn identity(d: usize) -> Self {
        let lower = (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self { lower }
    }

    pub fn from_covariance(cov: &[Vec<f64>]) -> Result<Self> {
        let d = cov.len();
        if cov.iter().any(|r| r.len() != d) {
            return Err(Error::Config("covariance must be square".into()));
        }
        let m = nalgebra::DMatrix::from_fn(d, d, |i, j| cov[i][j]);
        if (0..d).any(|i| (0..i).any(|j| (cov[i][j] - cov[j][i]).abs() > 1e-12)) {
            return Err(Error::Config("covariance must be symmetric".into()));
        }
        let chol = m
            .cholesky()
            .ok_or_else(|| Error::Config("covariance is not positive definite".into()))?;
        let l = chol.l();
        Ok(Self { lower: (0..d).map(|i| (0..d).map(|j| l[(i, j)]).collect()).collect() })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn apply(&self, z: &[f64]) -> Vec<f64> {
        self.lower
            .iter()
            .map(|row| row.iter().zip(z).map(|(l, z)| l * z).sum())
            .collect()
    }
}

pub fn star_graph(weights: &[f64]) -> Graph {
    let edges = weights.iter().enumerate().map(|(i, &w)| Edge::new(0, i + 1, w)).collect();
    Graph { node_count: weights.len() + 1, node_labels: None, edges }
}

/// Star-graph dataset with identity covariance: A first (`m` graphs), then B.
pub fn gen_star_dataset(d: usize, delta: f64, m: usize, n: usize, seed: u64) -> Result<LabeledGraphDataset> {
    gen_star_dataset_with(&CovarianceFactor::identity(d), delta, m, n, seed)
}

/// Normals come from one Box–Muller stream in graph order, `d` per graph; the
/// same seed yields the same underlying draws for every `δ`.
pub fn gen_star_dataset_with(
    cov: &CovarianceFactor,
    delta: f64,
    m: usize,
    n: usize,
    seed: u64,
) -> Result<LabeledGraphDataset> {
    let d = cov.dim();
    if d == 0 {
        return Err(Error::Config("dimension must be at least 1".into()));
    }
    let mut normals = BoxMuller::new(rng::stream(seed, Purpose::StarGraphs, 0));
    let mut graphs = Vec::with_capacity(m + n);
    let mut labels = Vec::with_capacity(m + n);
    for group in std::iter::repeat_n(Group::A, m).chain(std::iter::repeat_n(Group::B, n)) {
        let z: Vec<f64> = (0..d).map(|_| normals.next_normal()).collect();
        let shift = if group == Group::B { delta } else { 0.0 };
        let w: Vec<f64> = cov.apply(&z).into_iter().map(|x| x + shift).collect();
        graphs.push(star_graph(&w));
        labels.push(group);
    }
    LabeledGraphDataset::new(graphs, labels, true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dimension: usize,
    pub deltas: Vec<f64>,
    pub m: usize,
    pub n: usize,
    pub repetitions: usize,
    pub thetas: Vec<f64>,
    pub permutations: usize,
    /// Permutations for the CBT null; defaults to `permutations`.
    pub cbt_permutations: Option<usize>,
    pub seed: u64,
    pub convention: Convention,
    pub smooth: bool,
    pub folds: usize,
    pub c_grid: Vec<f64>,
    /// Optional SPD covariance of the edge weights (identity when absent).
    pub covariance: Option<Vec<Vec<f64>>>,
    pub run_ktst: bool,
    pub run_cbt: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dimension: 5,
            deltas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            m: 20,
            n: 20,
            repetitions: 500,
            thetas: vec![0.05, 0.01],
            permutations: 1000,
            cbt_permutations: None,
            seed: 0,
            convention: Convention::Geq,
            smooth: false,
            folds: 5,
            c_grid: crate::cbt::default_c_grid(),
            covariance: None,
            run_ktst: true,
            run_cbt: true,
        }
    }
}

impl SimConfig {
    /// 1000 repetitions and 10000 permutations per test.
    pub fn paper_scale() -> Self {
        Self { repetitions: 1000, permutations: 10_000, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.dimension < 1 {
            return bad("dimension must be at least 1");
        }
        if self.m < 2 || self.n < 2 {
            return Err(Error::GroupTooSmall { m: self.m, n: self.n });
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|&d| d < 0.0 || !d.is_finite()) {
            return bad("effect sizes must be finite and non-negative");
        }
        if self.thetas.is_empty() || self.thetas.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return bad("thresholds must lie in (0, 1)");
        }
        if self.repetitions == 0 || self.permutations == 0 || self.cbt_permutations == Some(0) {
            return bad("repetitions and permutations must be positive");
        }
        if let Some(cov) = &self.covariance {
            if cov.len() != self.dimension {
                return bad("covariance size must equal the dimension");
            }
        }
        if self.run_cbt {
            self.cbt_config(0).validate(&sim_labels(self.m, self.n))?;
        }
        Ok(())
    }

    fn cbt_config(&self, seed: u64) -> CbtConfig {
        CbtConfig {
            folds: self.folds,
            c_grid: self.c_grid.clone(),
            repetitions: 1,
            permutations: self.cbt_permutations.unwrap_or(self.permutations),
            seed,
            convention: self.convention,
            smooth: self.smooth,
        }
    }

    fn covariance_factor(&self) -> Result<CovarianceFactor> {
        match &self.covariance {
            Some(cov) => CovarianceFactor::from_covariance(cov),
            None => Ok(CovarianceFactor::identity(self.dimension)),
        }
    }
}

fn sim_labels(m: usize, n: usize) -> Vec<Group> {
    let mut l = vec![Group::A; m];
    l.extend(vec![Group::B; n]);
    l
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestKind {
    #[serde(rename = "CBT")]
    Cbt,
    #[serde(rename = "KTST")]
    Ktst,
}

/// p-values of both tests on one simulated dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepetitionOutcome {
    pub ktst_p: Option<f64>,
    pub cbt_p: Option<f64>,
}

/// Runs both tests on the dataset of repetition `rep` at effect size `delta`.
///
/// The dataset seed and the permutation seeds depend only on `(seed, rep)`, so
/// different effect sizes reuse the same underlying normal draws.
pub fn run_repetition(cfg: &SimConfig, cov: &CovarianceFactor, delta: f64, rep: usize) -> Result<RepetitionOutcome> {
    let rep_seed = rng::child_seed(cfg.seed, Purpose::SimulationRepetition, rep as u64);
    let data = gen_star_dataset_with(cov, delta, cfg.m, cfg.n, rep_seed)?;
    let k = embedded_gram(&dce_embed(&data)?, Bandwidth::MedianHeuristic)?;
    let ktst_p = if cfg.run_ktst {
        let kc = KtstConfig {
            permutations: cfg.permutations,
            seed: rep_seed,
            convention: cfg.convention,
            smooth: cfg.smooth,
        };
        Some(ktst_labeled(&k, data.labels(), &kc)?.p_value)
    } else {
        None
    };
    let cbt_p = if cfg.run_cbt {
        // one nested-CV evaluation for the observed statistic, as for each null draw
        let cc = cfg.cbt_config(rep_seed);
        let observed = crate::cbt::repetition_accuracy(&k, data.labels(), &cc, 0)?.accuracy;
        let null = cbt_null_sequential(&k, data.labels(), &cc)?;
        Some(p_value(observed, &null, cc.convention, cc.smooth)?)
    } else {
        None
    };
    Ok(RepetitionOutcome { ktst_p, cbt_p })
}

// Repetitions are already spread over the thread pool.
fn cbt_null_sequential(k: &crate::kernel::KernelMatrix, labels: &[Group], cfg: &CbtConfig) -> Result<Vec<f64>> {
    use rand::seq::SliceRandom;
    (0..cfg.permutations)
        .map(|j| {
            let mut rng = rng::stream(cfg.seed, Purpose::CbtPermutation, j as u64);
            let mut permuted = labels.to_vec();
            permuted.shuffle(&mut rng);
            nested_cv(k, &permuted, cfg, &mut rng).map(|o| o.accuracy)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub delta: f64,
    pub theta: f64,
    pub test: TestKind,
    /// Fraction of repetitions with `p ≤ θ`.
    pub rejection_frequency: f64,
    /// Type I frequency at `δ = 0`, Type II (`1 − rejection`) otherwise.
    pub error_frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: SimConfig,
    pub cells: Vec<Cell>,
    /// Per δ (config order), per repetition p-values.
    pub p_values: Vec<Vec<RepetitionOutcome>>,
    pub notes: Vec<String>,
}

impl SimulationReport {
    pub fn cell(&self, delta: f64, theta: f64, test: TestKind) -> Option<&Cell> {
        self.cells.iter().find(|c| c.delta == delta && c.theta == theta && c.test == test)
    }

    /// Table with one row per δ and, for each θ, CBT and KTST columns for
    /// Type I and Type II error. Cells that do not apply hold `-`.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["ground_truth".to_string(), "delta".into(), "m".into(), "n".into()];
        for kind in ["type1", "type2"] {
            for theta in &self.config.thetas {
                for test in ["CBT", "KTST"] {
                    header.push(format!("{kind}_{test}_theta{theta}"));
                }
            }
        }
        let mut out = header.join(",");
        out.push('\n');
        for &delta in &self.config.deltas {
            let truth = if delta == 0.0 { "H0 true" } else { "H0 false" };
            let mut row = vec![truth.to_string(), delta.to_string(), self.config.m.to_string(), self.config.n.to_string()];
            for kind_is_type1 in [true, false] {
                for &theta in &self.config.thetas {
                    for test in [TestKind::Cbt, TestKind::Ktst] {
                        let applies = kind_is_type1 == (delta == 0.0);
                        let value = self.cell(delta, theta, test).filter(|_| applies);
                        row.push(value.map_or("-".into(), |c| format!("{:.3}", c.error_frequency)));
                    }
                }
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn run_error_experiment(cfg: &SimConfig) -> Result<SimulationReport> {
    cfg.validate()?;
    let cov = cfg.covariance_factor()?;
    let mut cells = Vec::new();
    let mut all = Vec::with_capacity(cfg.deltas.len());
    for &delta in &cfg.deltas {
        let outcomes: Vec<RepetitionOutcome> = (0..cfg.repetitions)
            .into_par_iter()
            .map(|rep| run_repetition(cfg, &cov, delta, rep))
            .collect::<Result<_>>()?;
        for &theta in &cfg.thetas {
            for test in [TestKind::Cbt, TestKind::Ktst] {
                let ps: Vec<f64> = outcomes
                    .iter()
                    .filter_map(|o| match test {
                        TestKind::Cbt => o.cbt_p,
                        TestKind::Ktst => o.ktst_p,
                    })
                    .collect();
                if ps.is_empty() {
                    continue;
                }
                let rejection = ps.iter().filter(|&&p| p <= theta).count() as f64 / ps.len() as f64;
                let error = if delta == 0.0 { rejection } else { 1.0 - rejection };
                cells.push(Cell { delta, theta, test, rejection_frequency: rejection, error_frequency: error });
            }
        }
        all.push(outcomes);
    }
    Ok(SimulationReport {
        config: cfg.clone(),
        cells,
        p_values: all,
        notes: vec![
            "kernel: DCE embedding + Gaussian exp(-d^2/(2 sigma^2)), sigma by median heuristic".into(),
            "CBT: one nested-CV evaluation per dataset (observed and each null draw)".into(),
            "rejection: p <= theta".into(),
        ],
    })
}
