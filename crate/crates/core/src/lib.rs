//! Framework-agnostic confidence-calibration toolkit.
//!
//! Measures how well classifier confidences match empirical accuracy
//! (ECE, MCE, classwise ECE, NLL, Brier score, reliability tables),
//! fits post-hoc calibration maps (histogram binning, isotonic
//! regression, temperature/vector/matrix scaling), and generates
//! synthetic prediction sets with known ground-truth calibration.
//!
//! The usual flow:
//!
//! ```
//! use calim_core::{
//!     fit_linear_scaling, generate, BinningScheme, MetricsReport, ScalingMode, SynthConfig,
//! };
//!
//! // An overconfident synthetic model: logits scaled by 2.
//! let calib = generate(&SynthConfig::distorted(2000, 5, 2.0, 2.0, 1)).unwrap();
//! let test = generate(&SynthConfig::distorted(2000, 5, 2.0, 2.0, 2)).unwrap();
//!
//! let before = MetricsReport::with_defaults(&test).unwrap();
//! let (map, _report) = fit_linear_scaling(&calib, ScalingMode::Temperature).unwrap();
//! let after = MetricsReport::with_defaults(&map.apply(&test).unwrap()).unwrap();
//! assert!(after.ece < before.ece);
//! ```

pub mod binning;
pub mod calibrate;
pub mod error;
pub mod losses;
pub mod metrics;
pub mod prediction;
pub mod synthetic;

pub use binning::{
    classwise_reliability_table, reliability_table, BinEdges, BinStats, BinningScheme,
    ReliabilityTable, TableMode,
};
pub use calibrate::{
    fit_histogram_binning, fit_isotonic, fit_linear_scaling, nll_objective_grad, pava,
    CalibrationMap, ClassBins, FitReport, HistogramMap, IsotonicMap, LinearScaling, ScalingMode,
    StepFunction, DEFAULT_HISTOGRAM_BINS,
};
pub use error::{CalibError, Result};
pub use losses::{cross_entropy, entropy, focal_loss, kl_divergence, smooth_labels};
pub use metrics::{
    accuracy, brier, cwece, ece, mce, nll, MetricsReport, DEFAULT_METRIC_BINS, LOG_CLAMP,
};
pub use prediction::{argmax, softmax, PredictionSet, TopLabelView};
pub use synthetic::{generate, SplitMix64, SynthConfig, SynthMode};

/// Reliability diagrams are drawn on 10 bins by default.
pub const DEFAULT_DIAGRAM_BINS: usize = 10;
