//! Control-filter estimation: multichannel regularized Wiener solves on
//! filtered references, spectrum shaping for externally produced filters,
//! and the pluggable estimator interface used by the evaluation harness.

mod estimator;
mod shape;
mod wiener;

pub use estimator::{EstimationContext, FilterEstimator, WienerOracleEstimator, ZeroEstimator};
pub use shape::{shape_filters, FreqFilterFrames};
pub use wiener::{
    empirical_cost, filtered_reference, wiener_solve, CorrelationKernels, SolveMethod,
    WienerConfig, WienerSolution,
};

use crate::{Error, Result};

/// One control filter per microphone, with the sample rate and the
/// regularization weight that produced it (zero for externally shaped sets).
#[derive(Debug, Clone, PartialEq)]
pub struct AncFilterSet {
    pub fs: u32,
    /// Channel-major taps: `w[m][k]` applies to microphone `m`.
    pub w: Vec<Vec<f64>>,
    pub beta: f64,
}

impl AncFilterSet {
    pub fn new(fs: u32, w: Vec<Vec<f64>>, beta: f64) -> Result<Self> {
        if fs == 0 {
            return Err(Error::config("sample rate must be positive"));
        }
        if w.is_empty() || w[0].is_empty() {
            return Err(Error::config("filter set must be non-empty"));
        }
        let taps = w[0].len();
        if w.iter().any(|ch| ch.len() != taps) {
            return Err(Error::config("all channels must have equal tap counts"));
        }
        if w.iter().flatten().any(|t| !t.is_finite()) {
            return Err(Error::config("filter taps must be finite"));
        }
        Ok(AncFilterSet { fs, w, beta })
    }

    /// All-zero filters (valid "do nothing" set).
    pub fn zeros(fs: u32, channels: usize, taps: usize) -> Self {
        AncFilterSet {
            fs,
            w: vec![vec![0.0; taps]; channels],
            beta: 0.0,
        }
    }

    pub fn num_channels(&self) -> usize {
        self.w.len()
    }

    pub fn taps_per_channel(&self) -> usize {
        self.w.first().map_or(0, |c| c.len())
    }

    /// Squared Euclidean norm over all taps.
    pub fn norm_sqr(&self) -> f64 {
        self.w.iter().flatten().map(|t| t * t).sum()
    }
}
