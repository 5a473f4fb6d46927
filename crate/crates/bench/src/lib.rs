//! Shared fixtures for the criterion benchmarks.

use calim_core::{generate, PredictionSet, SynthConfig};

/// An overconfident 10-class set of the given size.
pub fn overconfident_set(n: usize) -> PredictionSet {
    generate(&SynthConfig::distorted(n, 10, 2.0, 2.0, 12345)).expect("valid config")
}
