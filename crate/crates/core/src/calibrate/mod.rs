//! Post-hoc calibration maps: fitting on a calibration set, applying
//! to prediction sets, and the versioned map-file format.

mod histogram;
mod isotonic;
mod pava;
mod scaling;

pub use histogram::{fit_histogram_binning, ClassBins, HistogramMap, DEFAULT_HISTOGRAM_BINS};
pub use isotonic::{fit_isotonic, IsotonicMap, StepFunction};
pub use pava::pava;
pub use scaling::{
    fit_linear_scaling, nll_objective_grad, LinearScaling, ScalingMode, GRAD_TOL, MAX_ITERS,
};

use serde::Deserialize;
use serde_json::json;

use crate::error::{CalibError, Result};
use crate::prediction::PredictionSet;

/// Map-file format version written and accepted by this crate.
pub const MAP_FORMAT_VERSION: u32 = 1;

/// A fitted calibration map of any family.
#[derive(Debug, Clone, PartialEq)]
pub enum CalibrationMap {
    Histogram(HistogramMap),
    Isotonic(IsotonicMap),
    LinearLogit(LinearScaling),
}

/// Outcome of an optimizer-based fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub initial_nll: f64,
    pub final_nll: f64,
    pub iterations: usize,
    pub converged: bool,
    pub summary: String,
}

/// Shared one-vs-rest application: map each class score, renormalize,
/// and emit a probs-only set. An all-zero row falls back to uniform.
fn apply_per_class(
    map_k: usize,
    eval: impl Fn(usize, f64) -> f64,
    ps: &PredictionSet,
) -> Result<PredictionSet> {
    if map_k != ps.k() {
        return Err(CalibError::ClassCountMismatch {
            map_k,
            input_k: ps.k(),
        });
    }
    let k = ps.k();
    let mut rows = Vec::with_capacity(ps.n());
    for i in 0..ps.n() {
        let q: Vec<f64> = ps
            .probs_row(i)
            .iter()
            .enumerate()
            .map(|(class, &p)| eval(class, p))
            .collect();
        let sum: f64 = q.iter().sum();
        rows.push(if sum < 1e-12 {
            vec![1.0 / k as f64; k]
        } else {
            q.into_iter().map(|v| v / sum).collect()
        });
    }
    PredictionSet::from_probs(rows, ps.labels().to_vec())
}

#[derive(Deserialize)]
struct MapFileRepr {
    version: u32,
    method: String,
    k: usize,
    params: serde_json::Value,
}

impl CalibrationMap {
    /// Class count the map was fitted for; temperature maps accept any.
    pub fn k(&self) -> Option<usize> {
        match self {
            CalibrationMap::Histogram(h) => Some(h.k()),
            CalibrationMap::Isotonic(iso) => Some(iso.k()),
            CalibrationMap::LinearLogit(lin) => lin.k(),
        }
    }

    /// The method name used in map files and CLI flags.
    pub fn method(&self) -> &'static str {
        match self {
            CalibrationMap::Histogram(_) => "histogram",
            CalibrationMap::Isotonic(_) => "isotonic",
            CalibrationMap::LinearLogit(lin) => lin.mode().name(),
        }
    }

    /// Applies the map: nonparametric maps calibrate one-vs-rest and
    /// renormalize; linear maps transform the logits.
    pub fn apply(&self, ps: &PredictionSet) -> Result<PredictionSet> {
        match self {
            CalibrationMap::Histogram(h) => h.apply(ps),
            CalibrationMap::Isotonic(iso) => iso.apply(ps),
            CalibrationMap::LinearLogit(lin) => lin.apply(ps),
        }
    }

    /// Serializes to the versioned map-file document
    /// `{version, method, k, params}`.
    pub fn to_json(&self, k_hint: usize) -> String {
        let k = self.k().unwrap_or(k_hint);
        let (method, params) = match self {
            CalibrationMap::Histogram(h) => ("histogram", json!(h)),
            CalibrationMap::Isotonic(iso) => ("isotonic", json!(iso)),
            CalibrationMap::LinearLogit(lin) => (
                lin.mode().name(),
                match lin {
                    LinearScaling::Temperature { t } => json!({ "t": t }),
                    LinearScaling::Vector { v } => json!({ "v": v }),
                    LinearScaling::VectorBias { v, b } => json!({ "v": v, "b": b }),
                    LinearScaling::MatrixBias { w, b } => json!({ "w": w, "b": b }),
                },
            ),
        };
        let doc = json!({
            "version": MAP_FORMAT_VERSION,
            "method": method,
            "k": k,
            "params": params,
        });
        serde_json::to_string_pretty(&doc).expect("map serialization cannot fail")
    }

    /// Parses a map-file document, checking version and class-count
    /// consistency.
    pub fn from_json(text: &str) -> Result<Self> {
        let repr: MapFileRepr = serde_json::from_str(text)
            .map_err(|e| CalibError::MalformedMap(e.to_string()))?;
        if repr.version != MAP_FORMAT_VERSION {
            return Err(CalibError::MalformedMap(format!(
                "unsupported version {}",
                repr.version
            )));
        }
        if repr.k < 2 {
            return Err(CalibError::MalformedMap(format!("k = {} < 2", repr.k)));
        }
        let bad = |e: serde_json::Error| CalibError::MalformedMap(e.to_string());
        let map = match repr.method.as_str() {
            "histogram" => {
                CalibrationMap::Histogram(serde_json::from_value(repr.params).map_err(bad)?)
            }
            "isotonic" => {
                CalibrationMap::Isotonic(serde_json::from_value(repr.params).map_err(bad)?)
            }
            "temperature" => {
                #[derive(Deserialize)]
                struct P {
                    t: f64,
                }
                let p: P = serde_json::from_value(repr.params).map_err(bad)?;
                if !(p.t > 0.0) {
                    return Err(CalibError::MalformedMap(format!("T = {} <= 0", p.t)));
                }
                CalibrationMap::LinearLogit(LinearScaling::Temperature { t: p.t })
            }
            "vector" => {
                #[derive(Deserialize)]
                struct P {
                    v: Vec<f64>,
                }
                let p: P = serde_json::from_value(repr.params).map_err(bad)?;
                CalibrationMap::LinearLogit(LinearScaling::Vector { v: p.v })
            }
            "vector-bias" => {
                #[derive(Deserialize)]
                struct P {
                    v: Vec<f64>,
                    b: Vec<f64>,
                }
                let p: P = serde_json::from_value(repr.params).map_err(bad)?;
                if p.v.len() != p.b.len() {
                    return Err(CalibError::MalformedMap("v and b lengths differ".into()));
                }
                CalibrationMap::LinearLogit(LinearScaling::VectorBias { v: p.v, b: p.b })
            }
            "matrix-bias" => {
                #[derive(Deserialize)]
                struct P {
                    w: Vec<Vec<f64>>,
                    b: Vec<f64>,
                }
                let p: P = serde_json::from_value(repr.params).map_err(bad)?;
                if p.w.len() != p.b.len() || p.w.iter().any(|row| row.len() != p.b.len()) {
                    return Err(CalibError::MalformedMap("W is not square of b's size".into()));
                }
                CalibrationMap::LinearLogit(LinearScaling::MatrixBias { w: p.w, b: p.b })
            }
            other => {
                return Err(CalibError::MalformedMap(format!("unknown method '{other}'")))
            }
        };
        if let Some(k) = map.k() {
            if k != repr.k {
                return Err(CalibError::MalformedMap(format!(
                    "header says k = {}, params imply k = {k}",
                    repr.k
                )));
            }
        }
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binning::BinningScheme;

    fn sample_set() -> PredictionSet {
        PredictionSet::from_logits(
            vec![
                vec![2.0, -1.0, 0.3],
                vec![-0.4, 1.1, 0.0],
                vec![0.2, 0.2, 1.9],
                vec![1.4, 0.9, -2.0],
                vec![-1.0, -1.2, 0.8],
            ],
            vec![0, 1, 2, 0, 2],
        )
        .unwrap()
    }

    #[test]
    fn identity_temperature_apply_preserves_probs() {
        let ps = sample_set();
        let map = CalibrationMap::LinearLogit(LinearScaling::Temperature { t: 1.0 });
        let out = map.apply(&ps).unwrap();
        for i in 0..ps.n() {
            for (a, b) in out.probs_row(i).iter().zip(ps.probs_row(i)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn every_map_family_outputs_distributions() {
        let ps = sample_set();
        let maps = vec![
            fit_histogram_binning(&ps, 5, BinningScheme::EqualWidth).unwrap(),
            fit_isotonic(&ps).unwrap(),
            fit_linear_scaling(&ps, ScalingMode::Temperature).unwrap().0,
            fit_linear_scaling(&ps, ScalingMode::Vector).unwrap().0,
            fit_linear_scaling(&ps, ScalingMode::VectorBias).unwrap().0,
            fit_linear_scaling(&ps, ScalingMode::MatrixBias).unwrap().0,
        ];
        for map in maps {
            let out = map.apply(&ps).unwrap();
            for i in 0..out.n() {
                let row = out.probs_row(i);
                let sum: f64 = row.iter().sum();
                assert!((sum - 1.0).abs() < 1e-9, "{}: row {i} sums to {sum}", map.method());
                assert!(row.iter().all(|&p| p >= 0.0));
            }
        }
    }

    #[test]
    fn class_count_mismatch_on_apply() {
        let ps = sample_set();
        let binary = PredictionSet::from_probs(vec![vec![0.6, 0.4]], vec![0]).unwrap();
        let map = fit_histogram_binning(&ps, 4, BinningScheme::EqualWidth).unwrap();
        assert!(matches!(
            map.apply(&binary),
            Err(CalibError::ClassCountMismatch { map_k: 3, input_k: 2 })
        ));
    }

    #[test]
    fn map_files_round_trip_every_family() {
        let ps = sample_set();
        let maps = vec![
            fit_histogram_binning(&ps, 3, BinningScheme::EqualFrequency).unwrap(),
            fit_isotonic(&ps).unwrap(),
            fit_linear_scaling(&ps, ScalingMode::Temperature).unwrap().0,
            fit_linear_scaling(&ps, ScalingMode::Vector).unwrap().0,
            fit_linear_scaling(&ps, ScalingMode::VectorBias).unwrap().0,
            fit_linear_scaling(&ps, ScalingMode::MatrixBias).unwrap().0,
        ];
        for map in maps {
            let text = map.to_json(ps.k());
            let back = CalibrationMap::from_json(&text).unwrap();
            assert_eq!(map, back, "round trip changed a {} map", map.method());
        }
    }

    #[test]
    fn map_file_rejects_bad_documents() {
        assert!(CalibrationMap::from_json("not json").is_err());
        assert!(CalibrationMap::from_json(r#"{"version":99,"method":"temperature","k":2,"params":{"t":1.0}}"#).is_err());
        assert!(CalibrationMap::from_json(r#"{"version":1,"method":"nope","k":2,"params":{}}"#).is_err());
        assert!(CalibrationMap::from_json(r#"{"version":1,"method":"temperature","k":2,"params":{"t":-1.0}}"#).is_err());
        assert!(CalibrationMap::from_json(r#"{"version":1,"method":"vector","k":3,"params":{"v":[1.0,2.0]}}"#).is_err());
    }

    #[test]
    fn all_zero_rows_fall_back_to_uniform() {
        // An isotonic map that sends everything to 0 in each class.
        let iso = IsotonicMap {
            classes: vec![
                StepFunction { breakpoints: vec![0.0, 1.0], levels: vec![0.0] },
                StepFunction { breakpoints: vec![0.0, 1.0], levels: vec![0.0] },
            ],
        };
        let ps = PredictionSet::from_probs(vec![vec![0.3, 0.7]], vec![0]).unwrap();
        let out = iso.apply(&ps).unwrap();
        assert_eq!(out.probs_row(0), &[0.5, 0.5]);
    }
}
