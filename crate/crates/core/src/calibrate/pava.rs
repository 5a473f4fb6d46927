//! Pool-adjacent-violators: the exact solver for least-squares
//! regression under a nondecreasing constraint.

use crate::error::{CalibError, Result};

/// Returns the unique nondecreasing minimizer of
/// `sum_i w_i (theta_i - v_i)^2`. Pooled blocks carry their weighted
/// mean.
pub fn pava(values: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(CalibError::EmptyInput);
    }
    if values.len() != weights.len() {
        return Err(CalibError::LengthMismatch {
            left: values.len(),
            right: weights.len(),
        });
    }
    for (i, &w) in weights.iter().enumerate() {
        if !(w > 0.0) {
            return Err(CalibError::NonPositiveWeight(i));
        }
    }

    // Stack of blocks (weighted mean, total weight, member count).
    let mut means: Vec<f64> = Vec::with_capacity(values.len());
    let mut block_w: Vec<f64> = Vec::with_capacity(values.len());
    let mut sizes: Vec<usize> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        means.push(v);
        block_w.push(w);
        sizes.push(1);
        while means.len() > 1 && means[means.len() - 2] > means[means.len() - 1] {
            let (m1, w1, s1) = (means.pop().unwrap(), block_w.pop().unwrap(), sizes.pop().unwrap());
            let top = means.len() - 1;
            let merged_w = block_w[top] + w1;
            means[top] = (means[top] * block_w[top] + m1 * w1) / merged_w;
            block_w[top] = merged_w;
            sizes[top] += s1;
        }
    }

    let mut fitted = Vec::with_capacity(values.len());
    for (m, s) in means.iter().zip(&sizes) {
        fitted.extend(std::iter::repeat(*m).take(*s));
    }
    Ok(fitted)
}
