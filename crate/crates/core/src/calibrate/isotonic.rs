//! Isotonic regression calibration: per class, a nondecreasing step
//! map fitted with pool-adjacent-violators on the one-vs-rest
//! indicators.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::prediction::PredictionSet;

use super::pava::pava;
use super::{apply_per_class, CalibrationMap};

/// A nondecreasing step function on `[0, 1]`: `breakpoints` has one
/// more entry than `levels`, starts at 0, and ends at 1; piece `b`
/// covers `[breakpoints[b], breakpoints[b+1])` with the last piece
/// closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    pub breakpoints: Vec<f64>,
    pub levels: Vec<f64>,
}

impl StepFunction {
    pub fn eval(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let idx = self.breakpoints.partition_point(|&b| b <= p);
        self.levels[idx.saturating_sub(1).min(self.levels.len() - 1)]
    }
}

/// A fitted isotonic map, one step function per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicMap {
    pub classes: Vec<StepFunction>,
}

impl IsotonicMap {
    pub fn k(&self) -> usize {
        self.classes.len()
    }

    pub fn eval(&self, class: usize, p: f64) -> f64 {
        self.classes[class].eval(p)
    }

    /// Calibrates each row one-vs-rest and renormalizes.
    pub fn apply(&self, ps: &PredictionSet) -> Result<PredictionSet> {
        apply_per_class(self.k(), |class, p| self.eval(class, p), ps)
    }
}

/// Fits one nondecreasing step map per class: sort by the class
/// confidence, pool duplicate confidences into weighted indicator
/// means, run PAVA, then place breakpoints at midpoints between
/// adjacent distinct confidences where the fitted level changes. The
/// map extends constantly to the whole of `[0, 1]`.
pub fn fit_isotonic(calib: &PredictionSet) -> Result<CalibrationMap> {
    let mut classes = Vec::with_capacity(calib.k());
    for class in 0..calib.k() {
        let mut pairs: Vec<(f64, f64)> = (0..calib.n())
            .map(|i| {
                (
                    calib.probs_row(i)[class],
                    (calib.labels()[i] == class) as u8 as f64,
                )
            })
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite confidences"));

        // Duplicate confidences must share one fitted value: pool them
        // up front into (confidence, indicator mean, count).
        let mut xs: Vec<f64> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut i = 0;
        while i < pairs.len() {
            let x = pairs[i].0;
            let mut sum = 0.0;
            let mut count = 0usize;
            while i < pairs.len() && pairs[i].0 == x {
                sum += pairs[i].1;
                count += 1;
                i += 1;
            }
            xs.push(x);
            values.push(sum / count as f64);
            weights.push(count as f64);
        }

        let fitted = pava(&values, &weights)?;

        let mut breakpoints = vec![0.0];
        let mut levels = vec![fitted[0]];
        for g in 1..fitted.len() {
            if fitted[g] != fitted[g - 1] {
                breakpoints.push((xs[g - 1] + xs[g]) / 2.0);
                levels.push(fitted[g]);
            }
        }
        breakpoints.push(1.0);
        classes.push(StepFunction { breakpoints, levels });
    }
    Ok(CalibrationMap::Isotonic(IsotonicMap { classes }))
}
