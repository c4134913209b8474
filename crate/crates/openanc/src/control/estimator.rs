//! Pluggable filter-estimation strategies used by the evaluation harness.

use crate::dsp::{FirFilter, MultiWaveform, Waveform};
use crate::{Error, Result};

use super::wiener::{filtered_reference, wiener_solve, SolveMethod, WienerConfig};
use super::AncFilterSet;

/// Everything an estimator may look at when producing control filters.
pub struct EstimationContext<'a> {
    /// Microphone context window.
    pub mics: &'a MultiWaveform,
    /// Modeled secondary path (driver to ear).
    pub s_hat: &'a FirFilter,
    /// Simulation-only ear reference over the same window. Real hardware
    /// has no such signal; estimators that use it are oracles by design.
    pub oracle_ear: Option<&'a Waveform>,
}

pub trait FilterEstimator {
    fn estimate(&self, ctx: &EstimationContext) -> Result<AncFilterSet>;
    fn name(&self) -> &str;
}

/// Regularized Wiener solve against the simulated ear signal. This is the
/// performance ceiling for a given scene, filter length, and path model.
#[derive(Debug, Clone)]
pub struct WienerOracleEstimator {
    pub l_c: usize,
    pub beta: Option<f64>,
    pub method: SolveMethod,
}

impl WienerOracleEstimator {
    pub fn new(l_c: usize) -> Self {
        WienerOracleEstimator {
            l_c,
            beta: None,
            method: SolveMethod::Auto,
        }
    }
}

impl FilterEstimator for WienerOracleEstimator {
    fn estimate(&self, ctx: &EstimationContext) -> Result<AncFilterSet> {
        let ear = ctx.oracle_ear.ok_or_else(|| {
            Error::config("the Wiener oracle estimator needs the simulated ear signal")
        })?;
        let refs = filtered_reference(ctx.mics, ctx.s_hat)?;
        let cfg = WienerConfig {
            l_c: self.l_c,
            beta: self.beta,
            method: self.method,
        };
        Ok(wiener_solve(&refs, ear, &cfg)?.filters)
    }

    fn name(&self) -> &str {
        "wiener_oracle"
    }
}

/// Produces all-zero filters: the do-nothing baseline that leaves the
/// scene unmodified.
#[derive(Debug, Clone)]
pub struct ZeroEstimator {
    pub l_c: usize,
}

impl FilterEstimator for ZeroEstimator {
    fn estimate(&self, ctx: &EstimationContext) -> Result<AncFilterSet> {
        Ok(AncFilterSet::zeros(
            ctx.mics.fs,
            ctx.mics.channels.len(),
            self.l_c,
        ))
    }

    fn name(&self) -> &str {
        "zero"
    }
}
