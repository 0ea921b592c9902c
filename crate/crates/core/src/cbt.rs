//! Classification-based test: SVM balanced accuracy under nested stratified
//! cross-validation, with a label-permutation null.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::median;
use crate::error::{Error, Result};
use crate::graph::{group_sizes, Group};
use crate::kernel::KernelMatrix;
use crate::ktst::{p_value, Convention, TestReport};
use crate::rng::{self, Purpose};
use crate::svm::{class_of, svm_train, Smo, SvmModel};

/// 25 values from 1e-5 to 1e5, evenly spaced in log scale.
pub fn default_c_grid() -> Vec<f64> {
    (0..25).map(|i| 10f64.powf(-5.0 + 10.0 * i as f64 / 24.0)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbtConfig {
    pub folds: usize,
    pub c_grid: Vec<f64>,
    pub repetitions: usize,
    pub permutations: usize,
    pub seed: u64,
    pub convention: Convention,
    pub smooth: bool,
}

impl Default for CbtConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            c_grid: default_c_grid(),
            repetitions: 100,
            permutations: 10_000,
            seed: 0,
            convention: Convention::Geq,
            smooth: false,
        }
    }
}

impl CbtConfig {
    pub fn validate(&self, labels: &[Group]) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("need at least 2 folds, got {}", self.folds)));
        }
        let (m, n) = group_sizes(labels);
        if self.folds > m.min(n) {
            return Err(Error::TooManyFolds { folds: self.folds, smallest: m.min(n) });
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|&c| c <= 0.0 || !c.is_finite()) {
            return Err(Error::Config("C grid must be nonempty and positive".into()));
        }
        if self.c_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("C grid must be strictly increasing".into()));
        }
        if self.repetitions == 0 || self.permutations == 0 {
            return Err(Error::Config("repetitions and permutations must be positive".into()));
        }
        Ok(())
    }
}

/// `k` disjoint, sorted test-index sets covering `0..labels.len()`.
///
/// Each class is shuffled and dealt round-robin over the folds; class B
/// continues where class A stopped so fold sizes stay balanced overall.
pub fn stratified_kfold(labels: &[Group], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    stratified_kfold_with(labels, k, &mut rng::stream(seed, Purpose::Folds, 0))
}

pub fn stratified_kfold_with(labels: &[Group], k: usize, rng: &mut impl Rng) -> Result<Vec<Vec<usize>>> {
    let (m, n) = group_sizes(labels);
    if k < 2 || k > m.min(n) {
        return Err(Error::TooManyFolds { folds: k, smallest: m.min(n) });
    }
    let mut folds = vec![Vec::new(); k];
    let mut offset = 0;
    for group in [Group::A, Group::B] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == group).collect();
        members.shuffle(rng);
        for (pos, &i) in members.iter().enumerate() {
            folds[(offset + pos) % k].push(i);
        }
        offset += members.len();
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// `½ (TP/m + TN/n)` with group A as the positive class.
pub fn balanced_accuracy(truth: &[Group], predicted: &[Group]) -> Result<f64> {
    if truth.len() != predicted.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), found: predicted.len() });
    }
    let (m, n) = group_sizes(truth);
    if m == 0 || n == 0 {
        return Err(Error::SingleClass);
    }
    let hits = |g: Group| truth.iter().zip(predicted).filter(|(&t, &p)| t == g && p == g).count();
    Ok(0.5 * (hits(Group::A) as f64 / m as f64 + hits(Group::B) as f64 / n as f64))
}

/// One nested cross-validation estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct CvOutcome {
    pub accuracy: f64,
    /// C chosen in each outer fold.
    pub selected_c: Vec<f64>,
}

/// Nested CV balanced accuracy with folds drawn from the stream of `rep_seed`.
pub fn nested_cv_accuracy(k: &KernelMatrix, labels: &[Group], cfg: &CbtConfig, rep_seed: u64) -> Result<f64> {
    Ok(nested_cv(k, labels, cfg, &mut rng::stream(rep_seed, Purpose::Folds, 0))?.accuracy)
}

/// Outer κ-fold loop; in each outer fold an inner κ-fold CV on the training
/// part picks the C with the best mean balanced accuracy (smallest C on ties),
/// a model with that C is refit on the whole training part and scored on the
/// held-out fold. The inner fold count drops to the smallest class count of
/// the outer training part when that is below κ.
pub fn nested_cv(k: &KernelMatrix, labels: &[Group], cfg: &CbtConfig, rng: &mut impl Rng) -> Result<CvOutcome> {
    if k.size() != labels.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), found: k.size() });
    }
    cfg.validate(labels)?;
    let outer = stratified_kfold_with(labels, cfg.folds, rng)?;
    let mut in_test = vec![false; labels.len()];
    let mut total = 0.0;
    let mut selected_c = Vec::with_capacity(outer.len());
    for test in &outer {
        in_test.iter_mut().for_each(|t| *t = false);
        test.iter().for_each(|&i| in_test[i] = true);
        let train = canonical_order(labels, (0..labels.len()).filter(|&i| !in_test[i]));
        let train_labels: Vec<Group> = train.iter().map(|&i| labels[i]).collect();

        let c = select_c(k, &train, &train_labels, cfg, rng)?;
        selected_c.push(c);

        let block = gram_block(k, &train);
        let y: Vec<f64> = train_labels.iter().map(|g| g.sign()).collect();
        let model = svm_train(&block, &y, c)?;
        let truth: Vec<Group> = test.iter().map(|&i| labels[i]).collect();
        let predicted = predict_points(k, &train, &model, test);
        total += balanced_accuracy(&truth, &predicted)?;
    }
    Ok(CvOutcome { accuracy: total / outer.len() as f64, selected_c })
}

fn select_c(
    k: &KernelMatrix,
    train: &[usize],
    train_labels: &[Group],
    cfg: &CbtConfig,
    rng: &mut impl Rng,
) -> Result<f64> {
    let (m, n) = group_sizes(train_labels);
    let inner_k = cfg.folds.min(m.min(n));
    let inner = stratified_kfold_with(train_labels, inner_k, rng)?;
    let mut scores = vec![0.0; cfg.c_grid.len()];
    let mut held = vec![false; train.len()];
    for val in &inner {
        held.iter_mut().for_each(|h| *h = false);
        val.iter().for_each(|&p| held[p] = true);
        // positions within `train` stay in canonical order
        let fit_pos: Vec<usize> = (0..train.len()).filter(|&p| !held[p]).collect();
        let fit: Vec<usize> = fit_pos.iter().map(|&p| train[p]).collect();
        let block = gram_block(k, &fit);
        let y: Vec<f64> = fit_pos.iter().map(|&p| train_labels[p].sign()).collect();
        let val_points: Vec<usize> = val.iter().map(|&p| train[p]).collect();
        let truth: Vec<Group> = val.iter().map(|&p| train_labels[p]).collect();
        let mut smo = Smo::new(&block, &y)?;
        for (score, &c) in scores.iter_mut().zip(&cfg.c_grid) {
            let model = smo.solve(c)?;
            let predicted = predict_points(k, &fit, &model, &val_points);
            *score += balanced_accuracy(&truth, &predicted)?;
        }
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(cfg.c_grid[best])
}

/// Group A members first, then group B, each ascending. Makes training
/// independent of how the two groups interleave in the dataset.
fn canonical_order(labels: &[Group], idx: impl Iterator<Item = usize>) -> Vec<usize> {
    let idx: Vec<usize> = idx.collect();
    let mut out: Vec<usize> = idx.iter().copied().filter(|&i| labels[i] == Group::A).collect();
    out.extend(idx.iter().copied().filter(|&i| labels[i] == Group::B));
    out
}

fn gram_block(k: &KernelMatrix, idx: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(idx.len() * idx.len());
    for &i in idx {
        let row = k.row(i);
        out.extend(idx.iter().map(|&j| row[j]));
    }
    out
}

fn predict_points(k: &KernelMatrix, train: &[usize], model: &SvmModel, points: &[usize]) -> Vec<Group> {
    points
        .iter()
        .map(|&p| {
            let row = k.row(p);
            let f = model
                .support
                .iter()
                .zip(&model.dual_coef)
                .map(|(&s, a)| a * row[train[s]])
                .sum::<f64>()
                + model.bias;
            class_of(f)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CbtReport {
    /// Statistic is the median acc_CV over repetitions.
    pub test: TestReport,
    pub acc_cv_all: Vec<f64>,
    pub p_values_per_repetition: Vec<f64>,
    /// `(C, times selected)` over all outer folds of all repetitions, in grid order.
    pub c_selected_histogram: Vec<(f64, usize)>,
}

/// acc_CV of repetition `r` (its own fold stream).
pub fn repetition_accuracy(k: &KernelMatrix, labels: &[Group], cfg: &CbtConfig, r: usize) -> Result<CvOutcome> {
    let rep_seed = rng::child_seed(cfg.seed, Purpose::CbtRepetition, r as u64);
    nested_cv(k, labels, cfg, &mut rng::stream(rep_seed, Purpose::Folds, 0))
}

/// Permutation null of acc_CV: permutation `j` shuffles the labels and runs
/// one nested CV with fresh folds, all from stream `j`.
pub fn cbt_null(k: &KernelMatrix, labels: &[Group], cfg: &CbtConfig) -> Result<Vec<f64>> {
    cfg.validate(labels)?;
    (0..cfg.permutations)
        .into_par_iter()
        .map(|j| {
            let mut rng = rng::stream(cfg.seed, Purpose::CbtPermutation, j as u64);
            let mut permuted = labels.to_vec();
            permuted.shuffle(&mut rng);
            nested_cv(k, &permuted, cfg, &mut rng).map(|o| o.accuracy)
        })
        .collect()
}

/// Full CBT on a Gram matrix in dataset order.
pub fn cbt(k: &KernelMatrix, labels: &[Group], cfg: &CbtConfig) -> Result<CbtReport> {
    cfg.validate(labels)?;
    let outcomes: Vec<CvOutcome> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|r| repetition_accuracy(k, labels, cfg, r))
        .collect::<Result<_>>()?;
    let acc_cv_all: Vec<f64> = outcomes.iter().map(|o| o.accuracy).collect();
    let statistic = median(&mut acc_cv_all.clone());
    let null_sample = cbt_null(k, labels, cfg)?;
    let p = p_value(statistic, &null_sample, cfg.convention, cfg.smooth)?;
    let p_values_per_repetition = acc_cv_all
        .iter()
        .map(|&a| p_value(a, &null_sample, cfg.convention, cfg.smooth))
        .collect::<Result<_>>()?;
    let c_selected_histogram = cfg
        .c_grid
        .iter()
        .map(|&c| (c, outcomes.iter().flat_map(|o| &o.selected_c).filter(|&&s| s == c).count()))
        .collect();
    let (m, n) = group_sizes(labels);
    let mut provenance = k.provenance.clone();
    provenance.params.insert("classifier".into(), "svm-smo".into());
    provenance.params.insert("null_folds".into(), "fresh-per-permutation".into());
    Ok(CbtReport {
        test: TestReport {
            statistic,
            null_sample,
            p_value: p,
            m,
            n,
            seed: cfg.seed,
            convention: cfg.convention,
            smooth: cfg.smooth,
            provenance,
        },
        acc_cv_all,
        p_values_per_repetition,
        c_selected_histogram,
    })
}
