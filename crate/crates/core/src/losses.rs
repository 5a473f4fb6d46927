//! Training-time calibration losses and the information-theoretic
//! quantities relating them: cross-entropy, label smoothing, focal
//! loss, entropy, and KL divergence.
//!
//! Everything is evaluation-only and uses natural logarithms (nats).

use crate::error::{CalibError, Result};
use crate::metrics::LOG_CLAMP;

fn clamped_ln(p: f64) -> f64 {
    p.max(LOG_CLAMP).ln()
}

/// Cross-entropy `-sum_j y_j ln a_j` between a (possibly soft) target
/// distribution and a predicted one.
pub fn cross_entropy(target: &[f64], predicted: &[f64]) -> Result<f64> {
    if target.len() != predicted.len() {
        return Err(CalibError::LengthMismatch {
            left: target.len(),
            right: predicted.len(),
        });
    }
    Ok(target
        .iter()
        .zip(predicted)
        .map(|(&y, &a)| if y == 0.0 { 0.0 } else { -y * clamped_ln(a) })
        .sum())
}

/// Replaces a one-hot target by `(1 - alpha) y + alpha / K`.
pub fn smooth_labels(one_hot: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(CalibError::AlphaOutOfRange(alpha));
    }
    let k = one_hot.len() as f64;
    Ok(one_hot.iter().map(|&y| (1.0 - alpha) * y + alpha / k).collect())
}

/// Focal loss `-(1 - a_j)^gamma ln a_j` for a sample of true class
/// `class` (0-based). Reduces to cross-entropy at `gamma = 0`.
pub fn focal_loss(predicted: &[f64], class: usize, gamma: f64) -> Result<f64> {
    if gamma < 0.0 {
        return Err(CalibError::NegativeGamma(gamma));
    }
    if class >= predicted.len() {
        return Err(CalibError::ClassOutOfRange {
            class,
            k: predicted.len(),
        });
    }
    let a = predicted[class];
    Ok(-(1.0 - a).powf(gamma) * clamped_ln(a))
}

/// Shannon entropy `-sum_j a_j ln a_j`, with `0 ln 0 = 0`.
pub fn entropy(dist: &[f64]) -> f64 {
    dist.iter()
        .map(|&a| if a == 0.0 { 0.0 } else { -a * clamped_ln(a) })
        .sum()
}

/// KL divergence `sum_j y_j ln(y_j / a_j)`, with `0 ln 0 = 0`.
pub fn kl_divergence(target: &[f64], predicted: &[f64]) -> Result<f64> {
    if target.len() != predicted.len() {
        return Err(CalibError::LengthMismatch {
            left: target.len(),
            right: predicted.len(),
        });
    }
    Ok(target
        .iter()
        .zip(predicted)
        .map(|(&y, &a)| {
            if y == 0.0 {
                0.0
            } else {
                y * (clamped_ln(y) - clamped_ln(a))
            }
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ce_zero_when_certain_and_right() {
        assert!(close(cross_entropy(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0, 1e-15));
    }

    #[test]
    fn ce_half_confidence_is_ln2() {
        assert!(close(cross_entropy(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), LN_2, 1e-15));
    }

    #[test]
    fn ce_of_uniform_with_itself_is_ln2() {
        assert!(close(cross_entropy(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), LN_2, 1e-15));
    }

    #[test]
    fn ce_length_mismatch() {
        assert!(matches!(
            cross_entropy(&[1.0], &[0.5, 0.5]),
            Err(CalibError::LengthMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn smoothing_at_zero_is_identity() {
        let y = [0.0, 1.0, 0.0];
        assert_eq!(smooth_labels(&y, 0.0).unwrap(), y.to_vec());
    }

    #[test]
    fn smoothing_at_one_is_uniform() {
        let s = smooth_labels(&[1.0, 0.0], 1.0).unwrap();
        assert_eq!(s, vec![0.5, 0.5]);
    }

    #[test]
    fn smoothing_by_hand() {
        let s = smooth_labels(&[1.0, 0.0], 0.1).unwrap();
        assert!(close(s[0], 0.95, 1e-15));
        assert!(close(s[1], 0.05, 1e-15));
    }

    #[test]
    fn smoothing_rejects_bad_alpha() {
        assert!(matches!(smooth_labels(&[1.0, 0.0], 1.5), Err(CalibError::AlphaOutOfRange(_))));
        assert!(matches!(smooth_labels(&[1.0, 0.0], -0.1), Err(CalibError::AlphaOutOfRange(_))));
    }

    #[test]
    fn focal_at_gamma_zero_is_cross_entropy() {
        let a = [0.3, 0.6, 0.1];
        let fl = focal_loss(&a, 1, 0.0).unwrap();
        let ce = cross_entropy(&[0.0, 1.0, 0.0], &a).unwrap();
        assert!(close(fl, ce, 1e-15));
    }

    #[test]
    fn focal_zero_when_certain() {
        for gamma in [0.0, 1.0, 2.0, 5.0] {
            assert!(close(focal_loss(&[1.0, 0.0], 0, gamma).unwrap(), 0.0, 1e-15));
        }
    }

    #[test]
    fn focal_by_hand() {
        let fl = focal_loss(&[0.5, 0.5], 0, 1.0).unwrap();
        assert!(close(fl, 0.5 * LN_2, 1e-15));
    }

    #[test]
    fn focal_rejects_negative_gamma() {
        assert!(matches!(focal_loss(&[0.5, 0.5], 0, -1.0), Err(CalibError::NegativeGamma(_))));
    }

    #[test]
    fn entropy_of_uniform_is_ln_k() {
        for k in 2..8usize {
            let u = vec![1.0 / k as f64; k];
            assert!(close(entropy(&u), (k as f64).ln(), 1e-12));
        }
    }

    #[test]
    fn kl_of_self_is_zero() {
        let y = [0.2, 0.5, 0.3];
        assert!(close(kl_divergence(&y, &y).unwrap(), 0.0, 1e-15));
    }

    #[test]
    fn kl_one_hot_vs_uniform_is_ln2() {
        assert!(close(kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), LN_2, 1e-15));
    }

    #[test]
    fn smoothing_entropy_nondecreasing_in_alpha() {
        let y = [0.0, 0.0, 1.0, 0.0];
        let mut last = -1.0;
        for step in 0..=10 {
            let alpha = step as f64 / 10.0;
            let h = entropy(&smooth_labels(&y, alpha).unwrap());
            assert!(h >= last - 1e-12, "entropy dropped at alpha={alpha}");
            last = h;
        }
    }

    #[test]
    fn focal_nonincreasing_in_gamma() {
        for &a in &[0.1, 0.35, 0.7, 0.95] {
            let row = [a, 1.0 - a];
            let mut last = f64::INFINITY;
            for step in 0..=20 {
                let gamma = step as f64 / 4.0;
                let fl = focal_loss(&row, 0, gamma).unwrap();
                assert!(fl <= last + 1e-12);
                last = fl;
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_dist(k: usize) -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(0.01f64..1.0, k..=k).prop_map(|raw| {
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / s).collect()
            })
        }

        proptest! {
            #[test]
            fn ce_equals_kl_plus_target_entropy(
                (y, a) in (2usize..8).prop_flat_map(|k| (arb_dist(k), arb_dist(k)))
            ) {
                let ce = cross_entropy(&y, &a).unwrap();
                let kl = kl_divergence(&y, &a).unwrap();
                let h = entropy(&y);
                prop_assert!((ce - (kl + h)).abs() < 1e-9);
                prop_assert!(ce >= kl - 1e-12);
            }

            #[test]
            fn focal_bound_holds(
                a in (2usize..8).prop_flat_map(arb_dist),
                class_pick in 0usize..8,
                gamma in 0.0f64..5.0,
            ) {
                let class = class_pick % a.len();
                let mut one_hot = vec![0.0; a.len()];
                one_hot[class] = 1.0;
                let fl = focal_loss(&a, class, gamma).unwrap();
                let kl = kl_divergence(&one_hot, &a).unwrap();
                prop_assert!(fl >= kl - gamma * entropy(&a) - 1e-9);
            }

            #[test]
            fn smoothed_labels_stay_normalized(alpha in 0.0f64..=1.0, k in 2usize..10) {
                let mut y = vec![0.0; k];
                y[k / 2] = 1.0;
                let s = smooth_labels(&y, alpha).unwrap();
                let sum: f64 = s.iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                prop_assert!(s.iter().all(|&v| v >= 0.0));
            }
        }
    }
}
