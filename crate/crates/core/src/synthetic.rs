//! Synthetic prediction sets with known ground-truth calibration.
//!
//! Labels are sampled from `softmax(z)` for Gaussian true logits `z`,
//! while the emitted logits are `s * z`. At distortion `s = 1` the
//! emitted probabilities equal the true conditional label
//! distribution, so the set is calibrated by construction; `s > 1`
//! makes it overconfident and `s < 1` underconfident. Fitting a
//! temperature on an `s`-distorted set should recover `T ~ s`.

use crate::error::{CalibError, Result};
use crate::prediction::{softmax, PredictionSet};

/// SplitMix64: a fixed 64-bit counter-based generator with a
/// documented bit-stream, so generated sets are reproducible across
/// implementations.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Standard normal via the Box-Muller transform; each draw
    /// consumes exactly two uniforms and uses the cosine branch.
    pub fn next_normal(&mut self) -> f64 {
        let u1 = ((self.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64; // (0, 1]
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthMode {
    /// Emitted logits equal the true logits (`s` forced to 1).
    Calibrated,
    /// Emitted logits are `s * z`.
    Distorted,
}

/// Configuration of one synthetic draw.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub k: usize,
    /// Scale of the zero-mean Gaussian true logits.
    pub sigma: f64,
    /// Multiplier applied to the emitted logits.
    pub distortion: f64,
    pub seed: u64,
    pub mode: SynthMode,
}

impl SynthConfig {
    pub fn distorted(n: usize, k: usize, sigma: f64, distortion: f64, seed: u64) -> Self {
        Self {
            n,
            k,
            sigma,
            distortion,
            seed,
            mode: SynthMode::Distorted,
        }
    }

    pub fn calibrated(n: usize, k: usize, sigma: f64, seed: u64) -> Self {
        Self {
            n,
            k,
            sigma,
            distortion: 1.0,
            seed,
            mode: SynthMode::Calibrated,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(CalibError::InvalidConfig("n must be at least 1".into()));
        }
        if self.k < 2 {
            return Err(CalibError::InvalidConfig("need at least 2 classes".into()));
        }
        if !(self.sigma >= 0.0) {
            return Err(CalibError::InvalidConfig(format!(
                "sigma {} must be >= 0",
                self.sigma
            )));
        }
        if !(self.distortion > 0.0) {
            return Err(CalibError::InvalidConfig(format!(
                "distortion {} must be > 0",
                self.distortion
            )));
        }
        if self.mode == SynthMode::Calibrated && self.distortion != 1.0 {
            return Err(CalibError::InvalidConfig(
                "calibrated mode requires distortion = 1".into(),
            ));
        }
        Ok(())
    }
}

/// Draws a synthetic prediction set: per sample, `k` true logits
/// `z ~ N(0, sigma^2)`, a label from `softmax(z)`, and emitted logits
/// `distortion * z`. Bitwise deterministic for a fixed seed.
pub fn generate(cfg: &SynthConfig) -> Result<PredictionSet> {
    cfg.validate()?;
    let mut rng = SplitMix64::new(cfg.seed);
    let mut logits = Vec::with_capacity(cfg.n);
    let mut labels = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let z: Vec<f64> = (0..cfg.k).map(|_| cfg.sigma * rng.next_normal()).collect();
        let true_probs = softmax(&z);

        let u = rng.next_f64();
        let mut label = cfg.k - 1;
        let mut cum = 0.0;
        for (j, &p) in true_probs.iter().enumerate() {
            cum += p;
            if u < cum {
                label = j;
                break;
            }
        }
        labels.push(label);
        logits.push(z.into_iter().map(|v| cfg.distortion * v).collect());
    }
    PredictionSet::from_logits(logits, labels)
}
