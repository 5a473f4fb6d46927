//! Histogram binning: a piecewise-constant map per class, fitted
//! one-vs-rest.

use serde::{Deserialize, Serialize};

use crate::binning::{BinEdges, BinningScheme};
use crate::error::Result;
use crate::prediction::PredictionSet;

use super::{apply_per_class, CalibrationMap};

/// Histogram binning fits 20 bins by default.
pub const DEFAULT_HISTOGRAM_BINS: usize = 20;

/// One class's step table: bin edges plus the replacement value per bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBins {
    pub edges: BinEdges,
    pub theta: Vec<f64>,
}

/// A fitted histogram-binning map, one step table per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramMap {
    pub classes: Vec<ClassBins>,
}

impl HistogramMap {
    pub fn k(&self) -> usize {
        self.classes.len()
    }

    /// The calibrated score for confidence `p` in class `class`.
    pub fn eval(&self, class: usize, p: f64) -> f64 {
        let cb = &self.classes[class];
        let bin = cb.edges.assign(p.clamp(0.0, 1.0)).expect("clamped input");
        cb.theta[bin]
    }

    /// Calibrates each row one-vs-rest and renormalizes.
    pub fn apply(&self, ps: &PredictionSet) -> Result<PredictionSet> {
        apply_per_class(self.k(), |class, p| self.eval(class, p), ps)
    }
}

/// Fits histogram binning on a calibration set: per class, within each
/// bin the replacement value is the fraction of samples whose label is
/// that class (the in-bin squared-loss minimizer); empty bins fall back
/// to the bin midpoint.
pub fn fit_histogram_binning(
    calib: &PredictionSet,
    bins: usize,
    scheme: BinningScheme,
) -> Result<CalibrationMap> {
    let mut classes = Vec::with_capacity(calib.k());
    for class in 0..calib.k() {
        let confs: Vec<f64> = (0..calib.n()).map(|i| calib.probs_row(i)[class]).collect();
        let edges = BinEdges::for_scheme(scheme, bins, &confs)?;
        let m = edges.bin_count();
        let mut counts = vec![0usize; m];
        let mut positives = vec![0usize; m];
        for (i, &p) in confs.iter().enumerate() {
            let b = edges.assign(p)?;
            counts[b] += 1;
            positives[b] += (calib.labels()[i] == class) as usize;
        }
        let theta = (0..m)
            .map(|b| {
                if counts[b] > 0 {
                    positives[b] as f64 / counts[b] as f64
                } else {
                    edges.midpoint(b)
                }
            })
            .collect();
        classes.push(ClassBins { edges, theta });
    }
    Ok(CalibrationMap::Histogram(HistogramMap { classes }))
}
