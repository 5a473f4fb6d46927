//! Validated prediction dumps: the universal input of every metric and
//! calibration map.
//!
//! A [`PredictionSet`] holds an `n x k` matrix of class probabilities,
//! optionally the logits they came from, and the true labels. Class
//! indices are 0-based throughout the crate; converting from 1-based
//! labels is the job of the I/O layer.

use crate::error::{CalibError, Result};

/// Row sums may be off by this much before validation rejects them.
pub const ROW_SUM_TOL: f64 = 1e-6;
/// When both logits and probabilities are supplied, each probability
/// entry must match the row softmax of the logits this closely.
pub const SOFTMAX_CONSISTENCY_TOL: f64 = 1e-9;

/// Numerically stable softmax of one logit row.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the row maximum, ties broken to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// An immutable, validated set of `n` predictions over `k` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    logits: Option<Vec<f64>>,
    probs: Vec<f64>,
    labels: Vec<usize>,
    n: usize,
    k: usize,
}

/// Predicted class and its confidence for every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TopLabelView {
    /// `argmax_j probs[i][j]`, ties broken to the lowest class index.
    pub pred: Vec<usize>,
    /// `probs[i][pred[i]]`.
    pub conf: Vec<f64>,
}

fn flatten_rect(rows: &[Vec<f64>], what: &str) -> Result<(Vec<f64>, usize)> {
    let k = rows[0].len();
    let mut flat = Vec::with_capacity(rows.len() * k);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != k {
            return Err(CalibError::DimensionMismatch(format!(
                "{what} row {i} has {} entries, expected {k}",
                row.len()
            )));
        }
        flat.extend_from_slice(row);
    }
    Ok((flat, k))
}

fn check_finite(flat: &[f64], k: usize) -> Result<()> {
    for (idx, v) in flat.iter().enumerate() {
        if !v.is_finite() {
            return Err(CalibError::NonFinite {
                row: idx / k,
                col: idx % k,
            });
        }
    }
    Ok(())
}

impl PredictionSet {
    /// Validates raw predictions into a `PredictionSet`.
    ///
    /// At least one of `logits`/`probs` must be given. When only logits
    /// are given, probabilities are their row-wise softmax. When both are
    /// given, they must agree to [`SOFTMAX_CONSISTENCY_TOL`]. Probability
    /// rows may miss a sum of 1 by up to [`ROW_SUM_TOL`] and are then
    /// silently renormalized.
    pub fn from_parts(
        logits: Option<Vec<Vec<f64>>>,
        probs: Option<Vec<Vec<f64>>>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(CalibError::EmptyInput);
        }

        let logits = match logits {
            Some(rows) => {
                if rows.len() != n {
                    return Err(CalibError::DimensionMismatch(format!(
                        "{} logit rows for {n} labels",
                        rows.len()
                    )));
                }
                let (flat, k) = flatten_rect(&rows, "logits")?;
                check_finite(&flat, k)?;
                Some((flat, k))
            }
            None => None,
        };

        let raw_probs = match probs {
            Some(rows) => {
                if rows.len() != n {
                    return Err(CalibError::DimensionMismatch(format!(
                        "{} probability rows for {n} labels",
                        rows.len()
                    )));
                }
                let (flat, k) = flatten_rect(&rows, "probs")?;
                check_finite(&flat, k)?;
                Some((flat, k))
            }
            None => None,
        };

        let k = match (&logits, &raw_probs) {
            (Some((_, kl)), Some((_, kp))) => {
                if kl != kp {
                    return Err(CalibError::DimensionMismatch(format!(
                        "logits have {kl} columns, probs have {kp}"
                    )));
                }
                *kl
            }
            (Some((_, kl)), None) => *kl,
            (None, Some((_, kp))) => *kp,
            (None, None) => {
                return Err(CalibError::DimensionMismatch(
                    "neither logits nor probs provided".into(),
                ))
            }
        };
        if k < 2 {
            return Err(CalibError::TooFewClasses(k));
        }

        for (row, &label) in labels.iter().enumerate() {
            if label >= k {
                return Err(CalibError::LabelOutOfRange { row, label, k });
            }
        }

        let mut probs = match raw_probs {
            Some((flat, _)) => {
                for (i, row) in flat.chunks_exact(k).enumerate() {
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > ROW_SUM_TOL || row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                        return Err(CalibError::NotNormalized { row: i, sum });
                    }
                }
                if let Some((z, _)) = &logits {
                    for i in 0..n {
                        let sm = softmax(&z[i * k..(i + 1) * k]);
                        let row = &flat[i * k..(i + 1) * k];
                        if sm.iter().zip(row).any(|(a, b)| (a - b).abs() > SOFTMAX_CONSISTENCY_TOL) {
                            return Err(CalibError::LogitsProbsMismatch { row: i });
                        }
                    }
                }
                flat
            }
            None => {
                let (z, _) = logits.as_ref().expect("at least one input present");
                let mut flat = Vec::with_capacity(n * k);
                for row in z.chunks_exact(k) {
                    flat.extend_from_slice(&softmax(row));
                }
                flat
            }
        };

        // Silent renormalization: 32-bit dumps round row sums. Rows
        // already within 1e-12 are left untouched so that an exact dump
        // reloads bit-identically.
        for row in probs.chunks_exact_mut(k) {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                row.iter_mut().for_each(|p| *p /= sum);
            }
        }

        Ok(Self {
            logits: logits.map(|(flat, _)| flat),
            probs,
            labels,
            n,
            k,
        })
    }

    pub fn from_logits(logits: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        Self::from_parts(Some(logits), None, labels)
    }

    pub fn from_probs(probs: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        Self::from_parts(None, Some(probs), labels)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn has_logits(&self) -> bool {
        self.logits.is_some()
    }

    pub fn probs_row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.k..(i + 1) * self.k]
    }

    pub fn logits_row(&self, i: usize) -> Option<&[f64]> {
        self.logits.as_ref().map(|z| &z[i * self.k..(i + 1) * self.k])
    }

    pub fn prob_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks_exact(self.k)
    }

    /// Predicted class and confidence per sample (argmax, lowest index on ties).
    pub fn top_label(&self) -> TopLabelView {
        let mut pred = Vec::with_capacity(self.n);
        let mut conf = Vec::with_capacity(self.n);
        for row in self.prob_rows() {
            let j = argmax(row);
            pred.push(j);
            conf.push(row[j]);
        }
        TopLabelView { pred, conf }
    }
}
