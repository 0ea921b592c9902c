//! Soft-margin kernel SVM on a precomputed Gram block, trained by SMO.
//!
//! Dual problem (with `Q_ij = y_i y_j K_ij`):
//!
//! ```text
//! minimize ½ αᵀQα − Σα   subject to  Σ y_i α_i = 0,  0 ≤ α_i ≤ C
//! ```
//!
//! Each step picks the maximal KKT violator `i` (lowest index on ties) and the
//! partner `j` giving the largest second-order decrease of the objective, then
//! solves the two-variable subproblem analytically. Training stops when the
//! maximal violation gap drops below [`TOLERANCE`].

use crate::error::{Error, Result};
use crate::graph::Group;

pub const TOLERANCE: f64 = 1e-3;
const TAU: f64 = 1e-12;
/// Iteration cap is `MAX_ITER_FACTOR * n_train`.
pub const MAX_ITER_FACTOR: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    /// Indices into the training block of the points with `α > 0`.
    pub support: Vec<usize>,
    /// `α_i y_i` for each support index.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub iterations: usize,
}

impl SvmModel {
    /// `Σ α_i y_i k(x_i, x) + b` given the kernel values against the support points.
    pub fn decision_value(&self, k_support: &[f64]) -> Result<f64> {
        if k_support.len() != self.support.len() {
            return Err(Error::DimensionMismatch { expected: self.support.len(), found: k_support.len() });
        }
        Ok(self.dual_coef.iter().zip(k_support).map(|(a, k)| a * k).sum::<f64>() + self.bias)
    }

    /// Decision value for a point given its kernel row against the whole training block.
    pub fn decision_value_full(&self, k_train: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.dual_coef)
            .map(|(&s, a)| a * k_train[s])
            .sum::<f64>()
            + self.bias
    }

    /// Dual variables `α_i` (nonnegative) of the support points.
    pub fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        self.dual_coef.iter().map(|a| a.abs())
    }
}

/// Class from a decision value; exact zero goes to `+` (group A).
pub fn class_of(decision: f64) -> Group {
    if decision >= 0.0 {
        Group::A
    } else {
        Group::B
    }
}

/// Predicts from kernel values against the support points.
pub fn svm_predict(model: &SvmModel, k_support: &[f64]) -> Result<Group> {
    model.decision_value(k_support).map(class_of)
}

/// Trains on a row-major `n × n` Gram block with labels `y ∈ {+1, −1}`.
pub fn svm_train(k: &[f64], y: &[f64], c: f64) -> Result<SvmModel> {
    Smo::new(k, y)?.solve(c)
}

/// SMO state. Successive calls to [`Smo::solve`] with non-decreasing `C`
/// warm-start from the previous solution, which stays feasible.
pub struct Smo<'a> {
    k: &'a [f64],
    y: Vec<f64>,
    alpha: Vec<f64>,
    /// Gradient `Qα − 1`.
    grad: Vec<f64>,
    c: f64,
}

impl<'a> Smo<'a> {
    pub fn new(k: &'a [f64], y: &[f64]) -> Result<Self> {
        let n = y.len();
        if k.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: k.len() });
        }
        if let Some(&bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(Error::Config(format!("labels must be ±1, got {bad}")));
        }
        if !(y.contains(&1.0) && y.contains(&-1.0)) {
            return Err(Error::SingleClass);
        }
        Ok(Self { k, y: y.to_vec(), alpha: vec![0.0; n], grad: vec![-1.0; n], c: 0.0 })
    }

    fn n(&self) -> usize {
        self.y.len()
    }

    #[inline]
    fn kij(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n() + j]
    }

    #[inline]
    fn in_up(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            self.alpha[t] < self.c
        } else {
            self.alpha[t] > 0.0
        }
    }

    #[inline]
    fn in_low(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            self.alpha[t] > 0.0
        } else {
            self.alpha[t] < self.c
        }
    }

    /// Working pair, or `None` once the violation gap is below tolerance.
    /// Also returns the current gap.
    fn select(&self) -> (Option<(usize, usize)>, f64) {
        let n = self.n();
        let mut gmax = f64::NEG_INFINITY;
        let mut i = None;
        for t in 0..n {
            if self.in_up(t) {
                let v = -self.y[t] * self.grad[t];
                if v > gmax {
                    gmax = v;
                    i = Some(t);
                }
            }
        }
        let Some(i) = i else { return (None, 0.0) };
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best = f64::INFINITY;
        let mut j = None;
        let kii = self.kij(i, i);
        for t in 0..n {
            if !self.in_low(t) {
                continue;
            }
            let v = self.y[t] * self.grad[t];
            gmax2 = gmax2.max(v);
            let b = gmax + v;
            if b > 0.0 {
                let mut a = kii + self.kij(t, t) - 2.0 * self.kij(i, t);
                if a <= 0.0 {
                    a = TAU;
                }
                let gain = -(b * b) / a;
                if gain < best {
                    best = gain;
                    j = Some(t);
                }
            }
        }
        let gap = gmax + gmax2;
        if gap < TOLERANCE {
            return (None, gap);
        }
        (j.map(|j| (i, j)), gap)
    }

    fn update(&mut self, i: usize, j: usize) {
        let c = self.c;
        let (yi, yj) = (self.y[i], self.y[j]);
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let mut quad = self.kij(i, i) + self.kij(j, j) - 2.0 * self.kij(i, j);
        if quad <= 0.0 {
            quad = TAU;
        }
        let (mut ai, mut aj) = (old_i, old_j);
        if yi != yj {
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = ((ai - old_i) * yi, (aj - old_j) * yj);
        let n = self.n();
        let (row_i, row_j) = (&self.k[i * n..(i + 1) * n], &self.k[j * n..(j + 1) * n]);
        for t in 0..n {
            self.grad[t] += self.y[t] * (row_i[t] * di + row_j[t] * dj);
        }
    }

    /// Solves for regularization `c`. `c` must not be smaller than the previous call's.
    pub fn solve(&mut self, c: f64) -> Result<SvmModel> {
        if c <= 0.0 || !c.is_finite() {
            return Err(Error::Config(format!("C must be positive, got {c}")));
        }
        if c < self.c {
            return Err(Error::Config("warm-started C values must be non-decreasing".into()));
        }
        self.c = c;
        let cap = MAX_ITER_FACTOR * self.n();
        let mut iterations = 0;
        loop {
            let (pair, gap) = self.select();
            let Some((i, j)) = pair else { break };
            if iterations >= cap {
                return Err(Error::NonConvergence { iterations, gap, c });
            }
            self.update(i, j);
            iterations += 1;
        }
        Ok(self.model(iterations))
    }

    fn bias(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free, mut sum) = (0usize, 0.0);
        for t in 0..self.n() {
            let yg = self.y[t] * self.grad[t];
            if self.alpha[t] >= self.c {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if self.alpha[t] <= 0.0 {
                if self.y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum += yg;
            }
        }
        let rho = if free > 0 { sum / free as f64 } else { 0.5 * (ub + lb) };
        -rho
    }

    fn model(&self, iterations: usize) -> SvmModel {
        let support: Vec<usize> = (0..self.n()).filter(|&t| self.alpha[t] > 0.0).collect();
        let dual_coef = support.iter().map(|&t| self.alpha[t] * self.y[t]).collect();
        SvmModel { support, dual_coef, bias: self.bias(), c: self.c, iterations }
    }
}

/// Largest KKT violation gap of `model` on its training block (for checks).
pub fn kkt_gap(k: &[f64], y: &[f64], model: &SvmModel) -> f64 {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    for (&s, &a) in model.support.iter().zip(&model.dual_coef) {
        alpha[s] = a * y[s];
    }
    let grad: Vec<f64> = (0..n)
        .map(|t| (0..n).map(|s| y[t] * y[s] * k[t * n + s] * alpha[s]).sum::<f64>() - 1.0)
        .collect();
    let c = model.c;
    let up = (0..n).filter(|&t| if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 });
    let low = (0..n).filter(|&t| if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c });
    let m = up.map(|t| -y[t] * grad[t]).fold(f64::NEG_INFINITY, f64::max);
    let big_m = low.map(|t| -y[t] * grad[t]).fold(f64::INFINITY, f64::min);
    m - big_m
}
