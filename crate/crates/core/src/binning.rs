//! Confidence binning and the per-bin statistics behind reliability
//! diagrams and binned metrics.
//!
//! Intervals follow the right-open convention with a closed last
//! interval: bin `m` covers `[edges[m], edges[m+1])` except the final
//! bin, which covers `[edges[M-1], 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{CalibError, Result};
use crate::prediction::PredictionSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinningScheme {
    #[serde(rename = "equal-width")]
    EqualWidth,
    #[serde(rename = "equal-frequency")]
    EqualFrequency,
}

impl std::fmt::Display for BinningScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BinningScheme::EqualWidth => write!(f, "equal-width"),
            BinningScheme::EqualFrequency => write!(f, "equal-frequency"),
        }
    }
}

impl std::str::FromStr for BinningScheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "equal-width" => Ok(BinningScheme::EqualWidth),
            "equal-frequency" => Ok(BinningScheme::EqualFrequency),
            other => Err(format!(
                "unknown binning scheme '{other}' (expected equal-width or equal-frequency)"
            )),
        }
    }
}

/// An ordered partition of `[0, 1]` into bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinEdges {
    edges: Vec<f64>,
    scheme: BinningScheme,
}

impl BinEdges {
    /// `m` equal-width bins: edge `i` sits at `i / m`.
    pub fn equal_width(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(CalibError::InvalidBinCount);
        }
        let edges = (0..=m).map(|i| i as f64 / m as f64).collect();
        Ok(Self {
            edges,
            scheme: BinningScheme::EqualWidth,
        })
    }

    /// Bins holding (as nearly as possible) equal numbers of samples.
    ///
    /// Interior edges sit at midpoints between the order statistics
    /// adjacent to each `i/m` cut. A cut that falls inside a run of tied
    /// confidences is dropped, merging the two bins, so membership is
    /// never ambiguous; the effective bin count may therefore shrink.
    pub fn equal_frequency(confidences: &[f64], m: usize) -> Result<Self> {
        if m == 0 {
            return Err(CalibError::InvalidBinCount);
        }
        if confidences.is_empty() {
            return Err(CalibError::EmptyInput);
        }
        for &p in confidences {
            if !(0.0..=1.0).contains(&p) {
                return Err(CalibError::OutOfRange(p));
            }
        }
        let mut sorted = confidences.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite confidences"));
        let n = sorted.len();

        let mut edges = vec![0.0];
        for i in 1..m {
            let cut = i * n / m;
            if cut == 0 || cut >= n {
                continue;
            }
            let (lo, hi) = (sorted[cut - 1], sorted[cut]);
            if lo < hi {
                let mid = (lo + hi) / 2.0;
                if mid > *edges.last().unwrap() && mid < 1.0 {
                    edges.push(mid);
                }
            }
        }
        edges.push(1.0);
        Ok(Self {
            edges,
            scheme: BinningScheme::EqualFrequency,
        })
    }

    /// Builds edges for the given scheme; `confidences` feeds the
    /// equal-frequency quantiles and is ignored for equal-width.
    pub fn for_scheme(scheme: BinningScheme, m: usize, confidences: &[f64]) -> Result<Self> {
        match scheme {
            BinningScheme::EqualWidth => Self::equal_width(m),
            BinningScheme::EqualFrequency => Self::equal_frequency(confidences, m),
        }
    }

    pub fn bin_count(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn scheme(&self) -> BinningScheme {
        self.scheme
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// `(lower, upper)` of bin `m` (0-based).
    pub fn interval(&self, m: usize) -> (f64, f64) {
        (self.edges[m], self.edges[m + 1])
    }

    /// Midpoint of bin `m`.
    pub fn midpoint(&self, m: usize) -> f64 {
        let (lo, hi) = self.interval(m);
        (lo + hi) / 2.0
    }

    /// The unique bin index (0-based) whose interval contains `p`.
    pub fn assign(&self, p: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&p) {
            return Err(CalibError::OutOfRange(p));
        }
        // First index with edge > p, minus one; p = 1.0 lands in the
        // closed last bin.
        let idx = self.edges.partition_point(|&e| e <= p);
        Ok(idx.saturating_sub(1).min(self.bin_count() - 1))
    }
}

/// Marks whether a table bins top-label confidences or one class's
/// confidences against its one-vs-rest indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableMode {
    TopLabel,
    /// 0-based class index.
    Classwise(usize),
}

/// Count, empirical accuracy, and mean confidence of one bin.
/// `accuracy`/`confidence` are `None` for empty bins so that metrics
/// skip them instead of absorbing a bogus zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BinStats {
    pub count: usize,
    pub accuracy: Option<f64>,
    pub confidence: Option<f64>,
}

/// Per-bin `(count, accuracy, mean confidence)` rows over one
/// prediction set.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityTable {
    pub edges: BinEdges,
    pub bins: Vec<BinStats>,
    pub n: usize,
    pub mode: TableMode,
}

fn tabulate(
    edges: &BinEdges,
    pairs: impl Iterator<Item = (f64, bool)>,
    n: usize,
    mode: TableMode,
) -> Result<ReliabilityTable> {
    let m = edges.bin_count();
    let mut counts = vec![0usize; m];
    let mut hits = vec![0usize; m];
    let mut conf_sums = vec![0.0f64; m];
    for (conf, hit) in pairs {
        let b = edges.assign(conf)?;
        counts[b] += 1;
        hits[b] += hit as usize;
        conf_sums[b] += conf;
    }
    let bins = (0..m)
        .map(|b| BinStats {
            count: counts[b],
            accuracy: (counts[b] > 0).then(|| hits[b] as f64 / counts[b] as f64),
            confidence: (counts[b] > 0).then(|| conf_sums[b] / counts[b] as f64),
        })
        .collect();
    Ok(ReliabilityTable {
        edges: edges.clone(),
        bins,
        n,
        mode,
    })
}

/// Bins samples by top-label confidence; accuracy is the fraction of
/// correctly predicted samples per bin.
pub fn reliability_table(ps: &PredictionSet, edges: &BinEdges) -> Result<ReliabilityTable> {
    let view = ps.top_label();
    let pairs = view
        .conf
        .iter()
        .zip(&view.pred)
        .zip(ps.labels())
        .map(|((&c, &p), &y)| (c, p == y));
    tabulate(edges, pairs, ps.n(), TableMode::TopLabel)
}

/// Bins all samples by their confidence in class `class` (0-based);
/// accuracy is the fraction whose true label is that class.
pub fn classwise_reliability_table(
    ps: &PredictionSet,
    edges: &BinEdges,
    class: usize,
) -> Result<ReliabilityTable> {
    if class >= ps.k() {
        return Err(CalibError::ClassOutOfRange {
            class,
            k: ps.k(),
        });
    }
    let pairs = (0..ps.n()).map(|i| (ps.probs_row(i)[class], ps.labels()[i] == class));
    tabulate(edges, pairs, ps.n(), TableMode::Classwise(class))
}
