//! Linear-logit calibration maps: temperature, vector, and matrix
//! scaling, fitted by minimizing calibration-set NLL with full-batch
//! gradient descent and Armijo backtracking.

use crate::error::{CalibError, Result};
use crate::metrics::LOG_CLAMP;
use crate::prediction::{softmax, PredictionSet};

use super::{CalibrationMap, FitReport};

/// Gradient-norm convergence threshold.
pub const GRAD_TOL: f64 = 1e-7;
/// Iteration cap for the descent loop.
pub const MAX_ITERS: usize = 10_000;
/// Armijo sufficient-decrease constant.
const ARMIJO_C: f64 = 1e-4;
/// `ln T` is confined to `[-LOG_T_BOUND, LOG_T_BOUND]`.
const LOG_T_BOUND: f64 = 4.605170185988091; // ln 100

/// Which affine family to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingMode {
    /// `softmax(z / T)`, a single scalar.
    Temperature,
    /// `softmax(v ⊙ z)`, one scale per class.
    Vector,
    /// `softmax(v ⊙ z + b)`.
    VectorBias,
    /// `softmax(W z + b)`, a full affine map.
    MatrixBias,
}

impl ScalingMode {
    pub fn name(self) -> &'static str {
        match self {
            ScalingMode::Temperature => "temperature",
            ScalingMode::Vector => "vector",
            ScalingMode::VectorBias => "vector-bias",
            ScalingMode::MatrixBias => "matrix-bias",
        }
    }

    pub fn param_count(self, k: usize) -> usize {
        match self {
            ScalingMode::Temperature => 1,
            ScalingMode::Vector => k,
            ScalingMode::VectorBias => 2 * k,
            ScalingMode::MatrixBias => k * k + k,
        }
    }

    /// Initial parameters: the identity map (T = 1, v = 1, W = I, b = 0).
    fn init_params(self, k: usize) -> Vec<f64> {
        match self {
            ScalingMode::Temperature => vec![0.0],
            ScalingMode::Vector => vec![1.0; k],
            ScalingMode::VectorBias => {
                let mut p = vec![1.0; k];
                p.extend(vec![0.0; k]);
                p
            }
            ScalingMode::MatrixBias => {
                let mut p = vec![0.0; k * k + k];
                for j in 0..k {
                    p[j * k + j] = 1.0;
                }
                p
            }
        }
    }

    fn clamp(self, params: &mut [f64]) {
        if self == ScalingMode::Temperature {
            params[0] = params[0].clamp(-LOG_T_BOUND, LOG_T_BOUND);
        }
    }
}

/// A fitted linear-logit map.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearScaling {
    Temperature { t: f64 },
    Vector { v: Vec<f64> },
    VectorBias { v: Vec<f64>, b: Vec<f64> },
    MatrixBias { w: Vec<Vec<f64>>, b: Vec<f64> },
}

impl LinearScaling {
    pub fn mode(&self) -> ScalingMode {
        match self {
            LinearScaling::Temperature { .. } => ScalingMode::Temperature,
            LinearScaling::Vector { .. } => ScalingMode::Vector,
            LinearScaling::VectorBias { .. } => ScalingMode::VectorBias,
            LinearScaling::MatrixBias { .. } => ScalingMode::MatrixBias,
        }
    }

    /// `None` for temperature scaling, which fits any class count.
    pub fn k(&self) -> Option<usize> {
        match self {
            LinearScaling::Temperature { .. } => None,
            LinearScaling::Vector { v } => Some(v.len()),
            LinearScaling::VectorBias { v, .. } => Some(v.len()),
            LinearScaling::MatrixBias { b, .. } => Some(b.len()),
        }
    }

    /// The affine part `W z + b` of the map.
    pub fn transform(&self, z: &[f64]) -> Result<Vec<f64>> {
        if let Some(k) = self.k() {
            if k != z.len() {
                return Err(CalibError::ClassCountMismatch {
                    map_k: k,
                    input_k: z.len(),
                });
            }
        }
        Ok(match self {
            LinearScaling::Temperature { t } => z.iter().map(|&v| v / t).collect(),
            LinearScaling::Vector { v } => z.iter().zip(v).map(|(&zi, &vi)| vi * zi).collect(),
            LinearScaling::VectorBias { v, b } => z
                .iter()
                .zip(v)
                .zip(b)
                .map(|((&zi, &vi), &bi)| vi * zi + bi)
                .collect(),
            LinearScaling::MatrixBias { w, b } => w
                .iter()
                .zip(b)
                .map(|(row, &bi)| row.iter().zip(z).map(|(&wl, &zl)| wl * zl).sum::<f64>() + bi)
                .collect(),
        })
    }

    /// `softmax(W z + b)` for one logit row.
    pub fn scale_logits(&self, z: &[f64]) -> Result<Vec<f64>> {
        for (col, &v) in z.iter().enumerate() {
            if !v.is_finite() {
                return Err(CalibError::NonFinite { row: 0, col });
            }
        }
        Ok(softmax(&self.transform(z)?))
    }

    /// Applies the map to every row. The output keeps the transformed
    /// logits; prediction sets without logits fall back to
    /// `ln(max(p, 1e-12))` as the logit surrogate.
    pub fn apply(&self, ps: &PredictionSet) -> Result<PredictionSet> {
        if let Some(k) = self.k() {
            if k != ps.k() {
                return Err(CalibError::ClassCountMismatch {
                    map_k: k,
                    input_k: ps.k(),
                });
            }
        }
        let mut rows = Vec::with_capacity(ps.n());
        for i in 0..ps.n() {
            let z: Vec<f64> = match ps.logits_row(i) {
                Some(row) => row.to_vec(),
                None => ps.probs_row(i).iter().map(|&p| p.max(LOG_CLAMP).ln()).collect(),
            };
            rows.push(self.transform(&z)?);
        }
        PredictionSet::from_logits(rows, ps.labels().to_vec())
    }

    fn from_params(mode: ScalingMode, params: &[f64], k: usize) -> Self {
        match mode {
            ScalingMode::Temperature => LinearScaling::Temperature { t: params[0].exp() },
            ScalingMode::Vector => LinearScaling::Vector { v: params.to_vec() },
            ScalingMode::VectorBias => LinearScaling::VectorBias {
                v: params[..k].to_vec(),
                b: params[k..].to_vec(),
            },
            ScalingMode::MatrixBias => LinearScaling::MatrixBias {
                w: params[..k * k].chunks_exact(k).map(<[f64]>::to_vec).collect(),
                b: params[k * k..].to_vec(),
            },
        }
    }

    fn summary(&self) -> String {
        fn range(vals: &[f64]) -> (f64, f64) {
            vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
        }
        match self {
            LinearScaling::Temperature { t } => format!("T = {t:.6}"),
            LinearScaling::Vector { v } => {
                let (lo, hi) = range(v);
                format!("v in [{lo:.4}, {hi:.4}]")
            }
            LinearScaling::VectorBias { v, b } => {
                let (vlo, vhi) = range(v);
                let (blo, bhi) = range(b);
                format!("v in [{vlo:.4}, {vhi:.4}], b in [{blo:.4}, {bhi:.4}]")
            }
            LinearScaling::MatrixBias { w, b } => {
                let flat: Vec<f64> = w.iter().flatten().copied().collect();
                let (wlo, whi) = range(&flat);
                let (blo, bhi) = range(b);
                format!("W in [{wlo:.4}, {whi:.4}], b in [{blo:.4}, {bhi:.4}]")
            }
        }
    }
}

/// Applies the mode's affine transform for raw optimizer parameters.
fn transform_params(mode: ScalingMode, params: &[f64], z: &[f64], out: &mut [f64]) {
    let k = z.len();
    match mode {
        ScalingMode::Temperature => {
            let inv_t = (-params[0]).exp();
            for j in 0..k {
                out[j] = inv_t * z[j];
            }
        }
        ScalingMode::Vector => {
            for j in 0..k {
                out[j] = params[j] * z[j];
            }
        }
        ScalingMode::VectorBias => {
            for j in 0..k {
                out[j] = params[j] * z[j] + params[k + j];
            }
        }
        ScalingMode::MatrixBias => {
            for j in 0..k {
                let row = &params[j * k..(j + 1) * k];
                out[j] = row.iter().zip(z).map(|(&w, &v)| w * v).sum::<f64>() + params[k * k + j];
            }
        }
    }
}

fn flat_logits(ps: &PredictionSet) -> Vec<f64> {
    let mut flat = Vec::with_capacity(ps.n() * ps.k());
    for i in 0..ps.n() {
        match ps.logits_row(i) {
            Some(row) => flat.extend_from_slice(row),
            None => flat.extend(ps.probs_row(i).iter().map(|&p| p.max(LOG_CLAMP).ln())),
        }
    }
    flat
}

fn objective(
    mode: ScalingMode,
    params: &[f64],
    logits: &[f64],
    labels: &[usize],
    k: usize,
) -> (f64, Vec<f64>) {
    let n = labels.len();
    let mut grad = vec![0.0; params.len()];
    let mut nll = 0.0;
    let mut u = vec![0.0; k];
    for (i, &y) in labels.iter().enumerate() {
        let z = &logits[i * k..(i + 1) * k];
        transform_params(mode, params, z, &mut u);

        let max = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = u.iter().map(|&v| (v - max).exp()).sum();
        let lse = max + sum_exp.ln();
        nll += lse - u[y];

        // d(-ln p_y)/du_j = softmax(u)_j - 1(j = y)
        for j in 0..k {
            let g = (u[j] - lse).exp() - (j == y) as u8 as f64;
            match mode {
                ScalingMode::Temperature => grad[0] -= g * u[j],
                ScalingMode::Vector => grad[j] += g * z[j],
                ScalingMode::VectorBias => {
                    grad[j] += g * z[j];
                    grad[k + j] += g;
                }
                ScalingMode::MatrixBias => {
                    for l in 0..k {
                        grad[j * k + l] += g * z[l];
                    }
                    grad[k * k + j] += g;
                }
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    grad.iter_mut().for_each(|g| *g *= inv_n);
    (nll * inv_n, grad)
}

/// Calibration-set NLL of `softmax(transform(z))` and its analytic
/// gradient with respect to the mode's free parameters (temperature is
/// parametrized as `ln T`). Requires logits.
pub fn nll_objective_grad(
    ps: &PredictionSet,
    params: &[f64],
    mode: ScalingMode,
) -> Result<(f64, Vec<f64>)> {
    if !ps.has_logits() {
        return Err(CalibError::MissingLogits);
    }
    if params.len() != mode.param_count(ps.k()) {
        return Err(CalibError::LengthMismatch {
            left: params.len(),
            right: mode.param_count(ps.k()),
        });
    }
    Ok(objective(mode, params, &flat_logits(ps), ps.labels(), ps.k()))
}

/// Fits one of the linear-logit families by deterministic full-batch
/// gradient descent with Armijo backtracking (halving), starting from
/// the identity map. Non-convergence is reported in the [`FitReport`],
/// not an error. Prediction sets without logits are fitted on
/// `ln(max(p, 1e-12))`.
pub fn fit_linear_scaling(
    calib: &PredictionSet,
    mode: ScalingMode,
) -> Result<(CalibrationMap, FitReport)> {
    let k = calib.k();
    let logits = flat_logits(calib);
    let labels = calib.labels();
    let obj = |p: &[f64]| objective(mode, p, &logits, labels, k);

    let mut params = mode.init_params(k);
    let (mut f, mut grad) = obj(&params);
    let initial_nll = f;
    let norm = |g: &[f64]| g.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut iterations = 0;
    let mut step_start = 1.0;
    while norm(&grad) >= GRAD_TOL && iterations < MAX_ITERS {
        let grad_sq: f64 = grad.iter().map(|v| v * v).sum();
        let mut step = step_start;
        let mut accepted = false;
        for _ in 0..60 {
            let mut candidate: Vec<f64> = params
                .iter()
                .zip(&grad)
                .map(|(&p, &g)| p - step * g)
                .collect();
            mode.clamp(&mut candidate);
            let (fc, gc) = obj(&candidate);
            if fc <= f - ARMIJO_C * step * grad_sq {
                params = candidate;
                f = fc;
                grad = gc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break;
        }
        step_start = (step * 2.0).min(1.0);
    }

    let converged = norm(&grad) < GRAD_TOL;
    let scaling = LinearScaling::from_params(mode, &params, k);
    let report = FitReport {
        initial_nll,
        final_nll: f,
        iterations,
        converged,
        summary: scaling.summary(),
    };
    Ok((CalibrationMap::LinearLogit(scaling), report))
}
