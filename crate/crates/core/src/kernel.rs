//! Gram matrices with provenance, and their CSV + JSON sidecar format.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::graph::{read_adjacency_csv, write_matrix_csv, Group};

pub const SYMMETRY_TOLERANCE: f64 = 1e-9;
/// Smallest eigenvalue may be as low as `-PSD_TOLERANCE * largest eigenvalue`.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Which kernel produced a matrix and with which parameters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub method: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
}

impl Provenance {
    pub fn new(method: impl Into<String>) -> Self {
        Self { method: method.into(), params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}

/// Dense symmetric `N × N` kernel matrix, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    size: usize,
    values: Vec<f64>,
    pub provenance: Provenance,
}

impl KernelMatrix {
    /// Wraps row-major values; checks only the shape.
    pub fn from_row_major(size: usize, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.len() != size * size {
            return Err(Error::DimensionMismatch { expected: size * size, found: values.len() });
        }
        Ok(Self { size, values, provenance })
    }

    pub fn from_rows(rows: &[Vec<f64>], provenance: Provenance) -> Result<Self> {
        let size = rows.len();
        let mut values = Vec::with_capacity(size * size);
        for r in rows {
            if r.len() != size {
                return Err(Error::DimensionMismatch { expected: size, found: r.len() });
            }
            values.extend_from_slice(r);
        }
        Ok(Self { size, values, provenance })
    }

    /// Builds `K[i][j] = f(i, j)` evaluating only `j >= i` and mirroring.
    pub fn from_fn(size: usize, provenance: Provenance, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; size * size];
        for i in 0..size {
            for j in i..size {
                let v = f(i, j);
                values[i * size + j] = v;
                values[j * size + i] = v;
            }
        }
        Self { size, values, provenance }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.size..(i + 1) * self.size]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.size.max(1))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Largest `|K_ij - K_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.size {
            for j in (i + 1)..self.size {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = nalgebra::DMatrix::from_row_slice(self.size, self.size, &self.values);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Checks symmetry and positive semidefiniteness within the crate tolerances.
    pub fn check(&self) -> Result<()> {
        let asym = self.asymmetry();
        if asym > SYMMETRY_TOLERANCE {
            return Err(Error::InvalidKernel(format!("asymmetry {asym:e}")));
        }
        if self.size == 0 {
            return Ok(());
        }
        let ev = self.eigenvalues();
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        if lo < -PSD_TOLERANCE * hi.max(0.0) {
            return Err(Error::InvalidKernel(format!(
                "not positive semidefinite: eigenvalues in [{lo:e}, {hi:e}]"
            )));
        }
        Ok(())
    }

    /// Principal submatrix on `idx` (in that order).
    pub fn select(&self, idx: &[usize]) -> KernelMatrix {
        let k = idx.len();
        let mut values = Vec::with_capacity(k * k);
        for &i in idx {
            let row = self.row(i);
            values.extend(idx.iter().map(|&j| row[j]));
        }
        KernelMatrix { size: k, values, provenance: self.provenance.clone() }
    }

    /// Cosine normalization `K_ij / sqrt(K_ii K_jj)`; the diagonal becomes exactly 1.
    pub fn normalized(&self) -> Result<KernelMatrix> {
        let diag: Vec<f64> = (0..self.size).map(|i| self.get(i, i)).collect();
        if let Some((index, &value)) = diag.iter().enumerate().find(|(_, &d)| d.is_nan() || d <= 0.0) {
            return Err(Error::NonPositiveDiagonal { index, value });
        }
        let mut out = KernelMatrix::from_fn(self.size, self.provenance.clone(), |i, j| {
            if i == j {
                1.0
            } else {
                self.get(i, j) / (diag[i] * diag[j]).sqrt()
            }
        });
        out.provenance.params.insert("normalized".into(), Value::Bool(true));
        Ok(out)
    }

    /// Writes `path` (CSV values) and the sidecar `path.with_extension("json")`.
    /// `labels`, when given, are stored in the sidecar so the matrix can be
    /// tested later without the original dataset.
    pub fn save(&self, path: &Path, labels: Option<&[Group]>) -> Result<PathBuf> {
        write_matrix_csv(path, self.rows())?;
        let sidecar = sidecar_path(path);
        let doc = Sidecar {
            size: self.size,
            provenance: self.provenance.clone(),
            labels: labels.map(|l| l.to_vec()),
        };
        let text = serde_json::to_string_pretty(&doc).expect("sidecar serializes");
        fs::write(&sidecar, text).map_err(|source| Error::Io { path: sidecar.clone(), source })?;
        Ok(sidecar)
    }

    /// Reads a matrix written by [`KernelMatrix::save`]. The sidecar is optional;
    /// without it provenance is `precomputed` and no labels are returned.
    pub fn load(path: &Path) -> Result<(KernelMatrix, Option<Vec<Group>>)> {
        let rows = read_adjacency_csv(path)?;
        let sidecar = sidecar_path(path);
        let (provenance, labels) = if sidecar.exists() {
            let text = fs::read_to_string(&sidecar)
                .map_err(|source| Error::Io { path: sidecar.clone(), source })?;
            let doc: Sidecar = serde_json::from_str(&text)
                .map_err(|source| Error::Manifest { path: sidecar.clone(), source })?;
            if doc.size != rows.len() {
                return Err(Error::DimensionMismatch { expected: doc.size, found: rows.len() });
            }
            (doc.provenance, doc.labels)
        } else {
            (Provenance::new("precomputed"), None)
        };
        Ok((KernelMatrix::from_rows(&rows, provenance)?, labels))
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    size: usize,
    provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<Group>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn km(rows: &[Vec<f64>]) -> KernelMatrix {
        KernelMatrix::from_rows(rows, Provenance::new("test")).unwrap()
    }

    #[test]
    fn normalize_rank_one() {
        let k = km(&[vec![4.0, 2.0], vec![2.0, 1.0]]).normalized().unwrap();
        assert_eq!(k.as_slice(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn normalize_is_idempotent() {
        let k = km(&[vec![3.0, 1.0, 0.5], vec![1.0, 2.0, 0.2], vec![0.5, 0.2, 5.0]]);
        let once = k.normalized().unwrap();
        let twice = once.normalized().unwrap();
        for (a, b) in once.as_slice().iter().zip(twice.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_zero_diagonal_fails() {
        let err = km(&[vec![0.0, 0.0], vec![0.0, 1.0]]).normalized().unwrap_err();
        assert!(matches!(err, Error::NonPositiveDiagonal { index: 0, .. }));
    }

    #[test]
    fn check_rejects_indefinite() {
        assert!(km(&[vec![1.0, 2.0], vec![2.0, 1.0]]).check().is_err());
        assert!(km(&[vec![1.0, 0.5], vec![0.4, 1.0]]).check().is_err());
        assert!(km(&[vec![1.0, 0.5], vec![0.5, 1.0]]).check().is_ok());
    }

    #[test]
    fn select_principal_submatrix() {
        let k = KernelMatrix::from_fn(4, Provenance::new("t"), |i, j| (i * 10 + j) as f64);
        let s = k.select(&[3, 1]);
        assert_eq!(s.as_slice(), &[33.0, 13.0, 13.0, 11.0]);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("K.csv");
        let k = KernelMatrix::from_fn(3, Provenance::new("gaussian").with("sigma", 0.7), |i, j| {
            1.0 / (1.0 + (i + j) as f64 * 0.1234567)
        });
        let labels = vec![Group::A, Group::B, Group::A];
        k.save(&path, Some(&labels)).unwrap();
        let (back, l) = KernelMatrix::load(&path).unwrap();
        assert_eq!(back, k);
        assert_eq!(l, Some(labels));
    }
}
