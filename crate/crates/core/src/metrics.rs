//! Scalar calibration and quality metrics.
//!
//! Binned metrics (ECE, MCE, cwECE) skip empty bins: empty bins carry
//! weight zero in the weighted sums and are excluded from the max.
//! NLL and Brier are the two proper scoring rules; NLL clamps
//! probabilities at [`LOG_CLAMP`] before the log because real dumps
//! contain exact zeros.

use serde::{Deserialize, Serialize};

use crate::binning::{classwise_reliability_table, reliability_table, BinEdges, BinningScheme, ReliabilityTable};
use crate::error::{CalibError, Result};
use crate::prediction::PredictionSet;

/// Lower clamp applied inside every logarithm.
pub const LOG_CLAMP: f64 = 1e-12;
/// ECE, cwECE, and MCE are computed on 15 bins by default.
pub const DEFAULT_METRIC_BINS: usize = 15;

/// Fraction of samples whose predicted class equals the label.
pub fn accuracy(ps: &PredictionSet) -> f64 {
    let view = ps.top_label();
    let hits = view
        .pred
        .iter()
        .zip(ps.labels())
        .filter(|(p, y)| p == y)
        .count();
    hits as f64 / ps.n() as f64
}

/// Expected calibration error: the count-weighted mean of per-bin
/// |accuracy - confidence| gaps.
pub fn ece(table: &ReliabilityTable) -> f64 {
    table
        .bins
        .iter()
        .filter_map(|b| {
            let (a, c) = (b.accuracy?, b.confidence?);
            Some(b.count as f64 / table.n as f64 * (a - c).abs())
        })
        .sum()
}

/// Maximum calibration error: the largest gap over nonempty bins.
pub fn mce(table: &ReliabilityTable) -> Result<f64> {
    table
        .bins
        .iter()
        .filter_map(|b| {
            let (a, c) = (b.accuracy?, b.confidence?);
            Some((a - c).abs())
        })
        .fold(None, |acc: Option<f64>, gap| Some(acc.map_or(gap, |m| m.max(gap))))
        .ok_or(CalibError::AllBinsEmpty)
}

/// Classwise ECE: the mean over classes of the one-vs-rest binned gap
/// sums, all classes sharing the same `edges`.
pub fn cwece(ps: &PredictionSet, edges: &BinEdges) -> Result<f64> {
    let mut total = 0.0;
    for class in 0..ps.k() {
        let table = classwise_reliability_table(ps, edges, class)?;
        total += ece(&table);
    }
    Ok(total / ps.k() as f64)
}

/// Negative log-likelihood of the true labels, in nats.
pub fn nll(ps: &PredictionSet) -> f64 {
    let sum: f64 = ps
        .labels()
        .iter()
        .enumerate()
        .map(|(i, &y)| ps.probs_row(i)[y].max(LOG_CLAMP).ln())
        .sum();
    -sum / ps.n() as f64
}

/// Brier score: mean squared distance between the probability row and
/// the one-hot label vector.
pub fn brier(ps: &PredictionSet) -> f64 {
    let mut sum = 0.0;
    for (i, &y) in ps.labels().iter().enumerate() {
        for (j, &p) in ps.probs_row(i).iter().enumerate() {
            let t = (j == y) as u8 as f64;
            sum += (p - t) * (p - t);
        }
    }
    sum / ps.n() as f64
}

/// All six metrics of one prediction set under one binning
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub ece: f64,
    pub mce: f64,
    pub cwece: f64,
    pub nll: f64,
    pub brier: f64,
    pub bins: usize,
    pub scheme: BinningScheme,
}

impl MetricsReport {
    /// Computes every metric with `bins` bins of the given scheme.
    pub fn compute(ps: &PredictionSet, bins: usize, scheme: BinningScheme) -> Result<Self> {
        let view = ps.top_label();
        let edges = BinEdges::for_scheme(scheme, bins, &view.conf)?;
        let table = reliability_table(ps, &edges)?;
        Ok(Self {
            accuracy: accuracy(ps),
            ece: ece(&table),
            mce: mce(&table)?,
            cwece: cwece(ps, &edges)?,
            nll: nll(ps),
            brier: brier(ps),
            bins,
            scheme,
        })
    }

    /// Computes the default report: 15 equal-width bins.
    pub fn with_defaults(ps: &PredictionSet) -> Result<Self> {
        Self::compute(ps, DEFAULT_METRIC_BINS, BinningScheme::EqualWidth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binning::BinEdges;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn two_sample_half_accurate() -> PredictionSet {
        // conf [0.6, 0.9], correctness [yes, no]
        PredictionSet::from_probs(vec![vec![0.4, 0.6], vec![0.1, 0.9]], vec![1, 0]).unwrap()
    }

    // conf [0.2, 0.8] with correctness [no, yes]; K = 5 so that a
    // top-label confidence of 0.2 is reachable.
    fn low_and_high_conf() -> PredictionSet {
        PredictionSet::from_probs(
            vec![
                vec![0.2, 0.2, 0.2, 0.2, 0.2],
                vec![0.8, 0.05, 0.05, 0.05, 0.05],
            ],
            vec![1, 0],
        )
        .unwrap()
    }

    #[test]
    fn accuracy_all_correct() {
        let ps = PredictionSet::from_probs(vec![vec![0.9, 0.1], vec![0.2, 0.8]], vec![0, 1]).unwrap();
        assert!(close(accuracy(&ps), 1.0, 1e-15));
    }

    #[test]
    fn accuracy_half_correct() {
        let ps = PredictionSet::from_probs(vec![vec![0.9, 0.1], vec![0.2, 0.8]], vec![0, 0]).unwrap();
        assert!(close(accuracy(&ps), 0.5, 1e-15));
    }

    #[test]
    fn accuracy_all_wrong() {
        let ps = PredictionSet::from_probs(vec![vec![0.9, 0.1], vec![0.2, 0.8]], vec![1, 0]).unwrap();
        assert!(close(accuracy(&ps), 0.0, 1e-15));
    }

    #[test]
    fn ece_zero_when_bins_match() {
        // Every bin has accuracy == confidence: two samples at 0.75,
        // exactly one correct, plus two at 0.5 with... simpler: a
        // single bin where A == C.
        let ps = PredictionSet::from_probs(
            vec![vec![0.75, 0.25], vec![0.75, 0.25], vec![0.75, 0.25], vec![0.75, 0.25]],
            vec![0, 0, 0, 1],
        )
        .unwrap();
        let t = reliability_table(&ps, &BinEdges::equal_width(1).unwrap()).unwrap();
        assert!(close(ece(&t), 0.0, 1e-15));
        assert!(close(mce(&t).unwrap(), 0.0, 1e-15));
    }

    #[test]
    fn ece_single_nonempty_bin() {
        let t = reliability_table(&two_sample_half_accurate(), &BinEdges::equal_width(2).unwrap())
            .unwrap();
        assert!(close(ece(&t), 0.25, 1e-15));
        assert!(close(mce(&t).unwrap(), 0.25, 1e-15));
    }

    #[test]
    fn ece_two_bins_by_hand() {
        let t =
            reliability_table(&low_and_high_conf(), &BinEdges::equal_width(2).unwrap()).unwrap();
        assert!(close(ece(&t), 0.2, 1e-15));
        assert!(close(mce(&t).unwrap(), 0.2, 1e-15));
    }

    #[test]
    fn cwece_by_hand() {
        let ps = PredictionSet::from_probs(vec![vec![0.8, 0.2], vec![0.6, 0.4]], vec![0, 1]).unwrap();
        let edges = BinEdges::equal_width(1).unwrap();
        assert!(close(cwece(&ps, &edges).unwrap(), 0.2, 1e-15));
    }

    #[test]
    fn cwece_zero_for_one_hot_correct() {
        let ps = PredictionSet::from_probs(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0, 1],
        )
        .unwrap();
        let edges = BinEdges::equal_width(4).unwrap();
        assert!(close(cwece(&ps, &edges).unwrap(), 0.0, 1e-15));
    }

    #[test]
    fn nll_zero_for_certain_truth() {
        let ps = PredictionSet::from_probs(vec![vec![1.0, 0.0]], vec![0]).unwrap();
        assert!(close(nll(&ps), 0.0, 1e-15));
    }

    #[test]
    fn nll_half_confidence_is_ln2() {
        let ps = PredictionSet::from_probs(vec![vec![0.5, 0.5]], vec![0]).unwrap();
        assert!(close(nll(&ps), std::f64::consts::LN_2, 1e-12));
    }

    #[test]
    fn nll_closed_form_pair() {
        let e_inv = (-1.0f64).exp();
        let ps = PredictionSet::from_probs(
            vec![vec![1.0, 0.0], vec![e_inv, 1.0 - e_inv]],
            vec![0, 0],
        )
        .unwrap();
        assert!(close(nll(&ps), 0.5, 1e-12));
    }

    #[test]
    fn brier_zero_for_one_hot_correct() {
        let ps = PredictionSet::from_probs(vec![vec![1.0, 0.0]], vec![0]).unwrap();
        assert!(close(brier(&ps), 0.0, 1e-15));
    }

    #[test]
    fn brier_uniform_binary() {
        let ps = PredictionSet::from_probs(vec![vec![0.5, 0.5]], vec![0]).unwrap();
        assert!(close(brier(&ps), 0.5, 1e-15));
    }

    #[test]
    fn brier_maximal_for_one_hot_wrong() {
        let ps = PredictionSet::from_probs(vec![vec![1.0, 0.0]], vec![1]).unwrap();
        assert!(close(brier(&ps), 2.0, 1e-15));
    }

    #[test]
    fn report_defaults_to_15_bins() {
        let ps = low_and_high_conf();
        let r = MetricsReport::with_defaults(&ps).unwrap();
        assert_eq!(r.bins, 15);
        assert_eq!(r.scheme, BinningScheme::EqualWidth);
    }

    #[test]
    fn report_perfect_set_is_all_zero() {
        let ps = PredictionSet::from_probs(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0, 1],
        )
        .unwrap();
        let r = MetricsReport::with_defaults(&ps).unwrap();
        assert!(close(r.accuracy, 1.0, 1e-15));
        assert!(close(r.ece, 0.0, 1e-15));
        assert!(close(r.mce, 0.0, 1e-15));
        assert!(close(r.cwece, 0.0, 1e-15));
        assert!(close(r.nll, 0.0, 1e-15));
        assert!(close(r.brier, 0.0, 1e-15));
    }

    #[test]
    fn report_matches_individual_ops() {
        let ps = low_and_high_conf();
        let r = MetricsReport::compute(&ps, 4, BinningScheme::EqualWidth).unwrap();
        let edges = BinEdges::equal_width(4).unwrap();
        let t = reliability_table(&ps, &edges).unwrap();
        assert_eq!(r.accuracy, accuracy(&ps));
        assert_eq!(r.ece, ece(&t));
        assert_eq!(r.mce, mce(&t).unwrap());
        assert_eq!(r.cwece, cwece(&ps, &edges).unwrap());
        assert_eq!(r.nll, nll(&ps));
        assert_eq!(r.brier, brier(&ps));
    }

    #[test]
    fn binary_cwece_is_mean_of_one_vs_rest_eces() {
        let ps = PredictionSet::from_probs(
            vec![
                vec![0.9, 0.1],
                vec![0.3, 0.7],
                vec![0.55, 0.45],
                vec![0.2, 0.8],
                vec![0.65, 0.35],
            ],
            vec![0, 1, 1, 1, 0],
        )
        .unwrap();
        let edges = BinEdges::equal_width(4).unwrap();
        let e0 = ece(&classwise_reliability_table(&ps, &edges, 0).unwrap());
        let e1 = ece(&classwise_reliability_table(&ps, &edges, 1).unwrap());
        assert!(close(cwece(&ps, &edges).unwrap(), (e0 + e1) / 2.0, 1e-15));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_prediction_set() -> impl Strategy<Value = PredictionSet> {
            (2usize..5, 1usize..12).prop_flat_map(|(k, n)| {
                let rows = proptest::collection::vec(
                    proptest::collection::vec(0.01f64..1.0, k..=k),
                    n..=n,
                );
                let labels = proptest::collection::vec(0usize..k, n..=n);
                (rows, labels).prop_map(|(raw, labels)| {
                    let probs: Vec<Vec<f64>> = raw
                        .into_iter()
                        .map(|row| {
                            let s: f64 = row.iter().sum();
                            row.into_iter().map(|v| v / s).collect()
                        })
                        .collect();
                    PredictionSet::from_probs(probs, labels).unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn ece_at_most_mce_and_both_bounded(ps in arb_prediction_set(), m in 1usize..8) {
                let edges = BinEdges::equal_width(m).unwrap();
                let t = reliability_table(&ps, &edges).unwrap();
                let e = ece(&t);
                let x = mce(&t).unwrap();
                prop_assert!(e <= x + 1e-12);
                prop_assert!((0.0..=1.0).contains(&e));
                prop_assert!((0.0..=1.0).contains(&x));
                let cw = cwece(&ps, &edges).unwrap();
                prop_assert!((0.0..=1.0).contains(&cw));
                let b = brier(&ps);
                prop_assert!((0.0..=2.0).contains(&b));
                prop_assert!(nll(&ps) >= 0.0);
            }

            #[test]
            fn binned_metrics_invariant_under_permutation(ps in arb_prediction_set(), m in 1usize..8) {
                let edges = BinEdges::equal_width(m).unwrap();
                let n = ps.n();
                let perm: Vec<usize> = (0..n).rev().collect();
                let probs: Vec<Vec<f64>> = perm.iter().map(|&i| ps.probs_row(i).to_vec()).collect();
                let labels: Vec<usize> = perm.iter().map(|&i| ps.labels()[i]).collect();
                let shuffled = PredictionSet::from_probs(probs, labels).unwrap();
                let (ta, tb) = (
                    reliability_table(&ps, &edges).unwrap(),
                    reliability_table(&shuffled, &edges).unwrap(),
                );
                prop_assert!((ece(&ta) - ece(&tb)).abs() < 1e-9);
                prop_assert!((mce(&ta).unwrap() - mce(&tb).unwrap()).abs() < 1e-9);
                prop_assert!((cwece(&ps, &edges).unwrap() - cwece(&shuffled, &edges).unwrap()).abs() < 1e-9);
            }
        }
    }
}
