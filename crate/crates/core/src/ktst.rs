//! Kernel two-sample test: unbiased MMD² estimate with a permutation null.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{split_by_label, Group};
use crate::kernel::{KernelMatrix, Provenance};
use crate::rng::{self, Purpose};

/// How ties between the observed statistic and null values are counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// `#{T ≥ T*} / M`
    #[default]
    Geq,
    /// `#{T > T*} / M`
    Greater,
}

impl std::str::FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geq" => Ok(Convention::Geq),
            "greater" => Ok(Convention::Greater),
            other => Err(Error::Config(format!("unknown p-value convention {other:?}"))),
        }
    }
}

/// Permutation p-value. With `smooth` the estimate is `(b + 1) / (M + 1)`.
pub fn p_value(observed: f64, null: &[f64], convention: Convention, smooth: bool) -> Result<f64> {
    if null.is_empty() {
        return Err(Error::EmptyNull);
    }
    let exceed = match convention {
        Convention::Geq => null.iter().filter(|&&t| t >= observed).count(),
        Convention::Greater => null.iter().filter(|&&t| t > observed).count(),
    };
    Ok(if smooth {
        (exceed + 1) as f64 / (null.len() + 1) as f64
    } else {
        exceed as f64 / null.len() as f64
    })
}

/// Unbiased MMD² with sample A at indices `0..m` and B at `m..m+n`.
pub fn mmd2u(k: &KernelMatrix, m: usize, n: usize) -> Result<f64> {
    if k.size() != m + n {
        return Err(Error::DimensionMismatch { expected: m + n, found: k.size() });
    }
    let a: Vec<usize> = (0..m).collect();
    let b: Vec<usize> = (m..m + n).collect();
    mmd2u_split(k, &a, &b)
}

/// Unbiased MMD² for arbitrary disjoint index sets.
pub fn mmd2u_split(k: &KernelMatrix, a: &[usize], b: &[usize]) -> Result<f64> {
    let (m, n) = (a.len(), b.len());
    if m < 2 || n < 2 {
        return Err(Error::GroupTooSmall { m, n });
    }
    let within = |idx: &[usize]| -> f64 {
        let mut s = 0.0;
        for (p, &i) in idx.iter().enumerate() {
            let row = k.row(i);
            for (q, &j) in idx.iter().enumerate() {
                if p != q {
                    s += row[j];
                }
            }
        }
        s
    };
    let mut cross = 0.0;
    for &i in a {
        let row = k.row(i);
        for &j in b {
            cross += row[j];
        }
    }
    let (mf, nf) = (m as f64, n as f64);
    Ok(within(a) / (mf * (mf - 1.0)) - 2.0 * cross / (mf * nf) + within(b) / (nf * (nf - 1.0)))
}

/// Null sample of `permutations` MMD² values, each from a uniformly random
/// regrouping of the `m + n` indices. Permutation `i` draws from its own
/// counter-based stream, so the output does not depend on thread count.
pub fn ktst_null(k: &KernelMatrix, m: usize, n: usize, permutations: usize, seed: u64) -> Result<Vec<f64>> {
    if k.size() != m + n {
        return Err(Error::DimensionMismatch { expected: m + n, found: k.size() });
    }
    if m < 2 || n < 2 {
        return Err(Error::GroupTooSmall { m, n });
    }
    (0..permutations)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, Purpose::KtstPermutation, i as u64);
            let mut idx: Vec<usize> = (0..m + n).collect();
            idx.shuffle(&mut rng);
            let (a, b) = idx.split_at(m);
            mmd2u_split(k, a, b)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KtstConfig {
    pub permutations: usize,
    pub seed: u64,
    pub convention: Convention,
    pub smooth: bool,
}

impl Default for KtstConfig {
    fn default() -> Self {
        Self { permutations: 10_000, seed: 0, convention: Convention::Geq, smooth: false }
    }
}

/// Result of a permutation test.
#[derive(Clone, Debug, PartialEq)]
pub struct TestReport {
    pub statistic: f64,
    pub null_sample: Vec<f64>,
    pub p_value: f64,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub convention: Convention,
    pub smooth: bool,
    pub provenance: Provenance,
}

impl TestReport {
    pub fn permutations(&self) -> usize {
        self.null_sample.len()
    }

    /// Recomputes the p-value from the stored statistic, null sample and convention.
    pub fn recompute_p_value(&self) -> Result<f64> {
        p_value(self.statistic, &self.null_sample, self.convention, self.smooth)
    }

    pub fn null_summary(&self) -> NullSummary {
        NullSummary::of(&self.null_sample)
    }

    pub fn rejects(&self, theta: f64) -> bool {
        self.p_value <= theta
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullSummary {
    pub min: f64,
    pub max: f64,
    /// `(probability, value)` pairs, nearest-rank quantiles.
    pub quantiles: Vec<(f64, f64)>,
}

impl NullSummary {
    pub const PROBABILITIES: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

    pub fn of(sample: &[f64]) -> Self {
        let mut s = sample.to_vec();
        s.sort_by(|a, b| a.total_cmp(b));
        let at = |p: f64| {
            let rank = ((p * s.len() as f64).ceil() as usize).clamp(1, s.len());
            s[rank - 1]
        };
        Self {
            min: s[0],
            max: s[s.len() - 1],
            quantiles: Self::PROBABILITIES.iter().map(|&p| (p, at(p))).collect(),
        }
    }
}

/// KTST on a Gram matrix already ordered A-first (`0..m` is sample A).
pub fn ktst(k: &KernelMatrix, m: usize, n: usize, cfg: &KtstConfig) -> Result<TestReport> {
    if cfg.permutations == 0 {
        return Err(Error::Config("at least one permutation is required".into()));
    }
    let statistic = mmd2u(k, m, n)?;
    let null_sample = ktst_null(k, m, n, cfg.permutations, cfg.seed)?;
    let p = p_value(statistic, &null_sample, cfg.convention, cfg.smooth)?;
    Ok(TestReport {
        statistic,
        null_sample,
        p_value: p,
        m,
        n,
        seed: cfg.seed,
        convention: cfg.convention,
        smooth: cfg.smooth,
        provenance: k.provenance.clone(),
    })
}

/// KTST on a Gram matrix in dataset order with per-row group labels.
pub fn ktst_labeled(k: &KernelMatrix, labels: &[Group], cfg: &KtstConfig) -> Result<TestReport> {
    if k.size() != labels.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), found: k.size() });
    }
    let (a, b) = split_by_label(labels);
    let order: Vec<usize> = a.iter().chain(&b).copied().collect();
    ktst(&k.select(&order), a.len(), b.len(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(xs: &[f64]) -> KernelMatrix {
        KernelMatrix::from_fn(xs.len(), Provenance::new("linear"), |i, j| xs[i] * xs[j])
    }

    #[test]
    fn linear_kernel_example() {
        assert_eq!(mmd2u(&linear(&[0.0, 1.0, 2.0, 3.0]), 2, 2).unwrap(), 3.5);
    }

    #[test]
    fn identical_samples_gaussian() {
        let x = [0.3, 1.1];
        let g = |a: f64, b: f64| (-(a - b) * (a - b) / 2.0).exp();
        let pts = [x[0], x[1], x[0], x[1]];
        let k = KernelMatrix::from_fn(4, Provenance::new("gaussian"), |i, j| g(pts[i], pts[j]));
        let got = mmd2u(&k, 2, 2).unwrap();
        let expected = g(x[0], x[1]) - 1.0;
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
        assert!(got <= 0.0);
    }

    #[test]
    fn constant_kernel_is_zero() {
        let k = KernelMatrix::from_fn(5, Provenance::new("const"), |_, _| 1.0);
        assert_eq!(mmd2u(&k, 2, 3).unwrap(), 0.0);
        let null = ktst_null(&k, 2, 3, 50, 1).unwrap();
        assert!(null.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mmd_errors() {
        let k = linear(&[0.0, 1.0, 2.0, 3.0]);
        assert!(matches!(mmd2u(&k, 1, 3), Err(Error::GroupTooSmall { .. })));
        assert!(matches!(mmd2u(&k, 2, 3), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn p_value_conventions() {
        let null = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(p_value(2.5, &null, Convention::Geq, false).unwrap(), 0.5);
        assert_eq!(p_value(5.0, &null, Convention::Geq, false).unwrap(), 0.0);
        assert_eq!(p_value(1.0, &[1.0; 4], Convention::Geq, false).unwrap(), 1.0);
        assert_eq!(p_value(1.0, &[1.0; 4], Convention::Greater, false).unwrap(), 0.0);
        assert_eq!(p_value(5.0, &null, Convention::Geq, true).unwrap(), 0.2);
        assert!(matches!(p_value(1.0, &[], Convention::Geq, false), Err(Error::EmptyNull)));
    }

    #[test]
    fn single_permutation_is_reproducible() {
        let k = linear(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let a = ktst_null(&k, 2, 3, 1, 99).unwrap();
        let b = ktst_null(&k, 2, 3, 1, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identity_regrouping_reproduces_observed() {
        // tiny pool: some permutations put {0,1} in A and must hit the observed value exactly
        let k = linear(&[0.0, 1.0, 2.0, 3.0]);
        let observed = mmd2u(&k, 2, 2).unwrap();
        let null = ktst_null(&k, 2, 2, 200, 5).unwrap();
        assert!(null.contains(&observed));
    }

    #[test]
    fn report_is_self_consistent() {
        let k = linear(&[0.0, 0.2, 0.1, 2.0, 2.2, 2.1]);
        let cfg = KtstConfig { permutations: 300, seed: 4, ..Default::default() };
        let r = ktst(&k, 3, 3, &cfg).unwrap();
        assert_eq!(r.permutations(), 300);
        assert_eq!(r.recompute_p_value().unwrap(), r.p_value);
        assert_eq!(ktst(&k, 3, 3, &cfg).unwrap(), r);
    }

    #[test]
    fn labeled_reorders_to_a_first() {
        use Group::*;
        let xs = [2.0, 0.0, 3.0, 1.0];
        let k = linear(&xs);
        let cfg = KtstConfig { permutations: 10, ..Default::default() };
        let r = ktst_labeled(&k, &[B, A, B, A], &cfg).unwrap();
        assert_eq!(r.statistic, 3.5);
    }

    #[test]
    fn null_summary_quantiles() {
        let s: Vec<f64> = (1..=100).map(f64::from).collect();
        let q = NullSummary::of(&s);
        assert_eq!(q.min, 1.0);
        assert_eq!(q.max, 100.0);
        assert_eq!(q.quantiles[3], (0.5, 50.0));
        assert_eq!(q.quantiles[5], (0.95, 95.0));
    }
}
