//! Labelled feature matrix shared by every module.

use crate::error::{Error, Result};

/// Row-major `n × d` feature matrix with labels in `{-1, +1}` and an optional
/// per-sample contamination mask (`true` = injected outlier).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<f64>,
    n_features: usize,
    mask: Option<Vec<bool>>,
}

impl Dataset {
    /// Builds a dataset from a flat row-major buffer.
    pub fn new(features: Vec<f64>, labels: Vec<f64>, n_features: usize) -> Result<Self> {
        if n_features == 0 && !labels.is_empty() {
            return Err(Error::InvalidData("zero feature columns".into()));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::LengthMismatch {
                expected: labels.len() * n_features,
                actual: features.len(),
            });
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite feature in row {}",
                i / n_features
            )));
        }
        if let Some(i) = labels.iter().position(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidData(format!(
                "label {} in row {i} is not -1 or +1",
                labels[i]
            )));
        }
        Ok(Self {
            features,
            labels,
            n_features,
            mask: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<f64>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: rows.len(),
                actual: labels.len(),
            });
        }
        let mut flat = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::InvalidData(format!(
                    "row {i} has {} features, expected {d}",
                    r.len()
                )));
            }
            flat.extend_from_slice(r);
        }
        Self::new(flat, labels, d)
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: mask.len(),
            });
        }
        self.mask = Some(mask);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.features[i * self.n_features + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.n_features.max(1))
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    /// Number of samples flagged in the contamination mask.
    pub fn n_flagged(&self) -> usize {
        self.mask
            .as_ref()
            .map_or(0, |m| m.iter().filter(|&&b| b).count())
    }

    pub(crate) fn features_mut(&mut self) -> &mut [f64] {
        &mut self.features
    }

    pub(crate) fn labels_mut(&mut self) -> &mut [f64] {
        &mut self.labels
    }

    pub(crate) fn mask_mut(&mut self) -> &mut Vec<bool> {
        let n = self.len();
        self.mask.get_or_insert_with(|| vec![false; n])
    }

    /// Rows selected by `indices`, in that order. The mask follows the rows.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let d = self.n_features;
        let mut features = Vec::with_capacity(indices.len() * d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features,
            labels,
            n_features: d,
            mask: self
                .mask
                .as_ref()
                .map(|m| indices.iter().map(|&i| m[i]).collect()),
        }
    }

    /// Fraction of samples with label `+1`.
    pub fn positive_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.labels.iter().filter(|&&y| y > 0.0).count() as f64 / self.len() as f64
    }
}
