//! The noise-reduction metric and its measurement protocol.

use serde::{Deserialize, Serialize};

use crate::dsp::{design_butterworth_bandpass, SosFilter, Waveform};
use crate::{Error, Result};

/// How reductions are measured: the evaluation band, the filter chain that
/// isolates it, and the rhythm of the chunked offline protocol.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalProtocol {
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub butterworth_order: usize,
    /// Length of each evaluated chunk, which is also the hop between
    /// estimation contexts.
    pub chunk_s: f64,
    /// Trailing window the estimator sees before each chunk.
    pub context_s: f64,
    /// Gap between a context ending and its filters being applied,
    /// standing in for the solver's compute time.
    pub application_delay_s: f64,
}

impl Default for EvalProtocol {
    fn default() -> Self {
        EvalProtocol {
            band_low_hz: 100.0,
            band_high_hz: 1000.0,
            butterworth_order: 4,
            chunk_s: 0.5,
            context_s: 2.0,
            application_delay_s: 0.2,
        }
    }
}

impl EvalProtocol {
    pub fn validate(&self, fs: u32) -> Result<()> {
        let nyquist = fs as f64 / 2.0;
        if !(self.band_low_hz > 0.0
            && self.band_low_hz < self.band_high_hz
            && self.band_high_hz < nyquist)
        {
            return Err(Error::config(format!(
                "evaluation band {}-{} Hz must sit inside (0, {nyquist}) Hz",
                self.band_low_hz, self.band_high_hz
            )));
        }
        if !(self.chunk_s.is_finite() && self.chunk_s > 0.0) {
            return Err(Error::config("chunk length must be positive"));
        }
        if !(self.context_s.is_finite() && self.context_s > 0.0) {
            return Err(Error::config("context length must be positive"));
        }
        if !(self.application_delay_s.is_finite() && self.application_delay_s >= 0.0) {
            return Err(Error::config("application delay cannot be negative"));
        }
        Ok(())
    }

    /// The causal band-limiter applied to both signals of every ratio.
    /// Forward-only by design: its phase cancels out of the ratio because
    /// both signals pass through the identical chain.
    pub fn band_filter(&self, fs: u32) -> Result<SosFilter> {
        design_butterworth_bandpass(self.butterworth_order, self.band_low_hz, self.band_high_hz, fs)
    }
}

/// Band-limited reduction `10*log10(sum d~^2 / sum e~^2)` of a residual `e`
/// against the untouched disturbance `d`. An all-zero filtered residual
/// returns the `+inf` sentinel (nothing left to measure).
pub fn noise_reduction_db(d: &Waveform, e: &Waveform, protocol: &EvalProtocol) -> Result<f64> {
    if d.fs != e.fs {
        return Err(Error::config(format!(
            "signals must share a sample rate: {} vs {}",
            d.fs, e.fs
        )));
    }
    if d.len() != e.len() {
        return Err(Error::config(format!(
            "signals must share a length: {} vs {}",
            d.len(),
            e.len()
        )));
    }
    if d.samples.is_empty() {
        return Err(Error::config("cannot measure empty signals"));
    }
    protocol.validate(d.fs)?;
    let bp = protocol.band_filter(d.fs)?;
    Ok(band_ratio_db(&bp.apply(&d.samples), &bp.apply(&e.samples)))
}

/// dB energy ratio of two already band-limited signals. Written as a
/// difference of logs so that swapping the arguments negates the result
/// exactly.
pub(crate) fn band_ratio_db(d_tilde: &[f64], e_tilde: &[f64]) -> f64 {
    let pd: f64 = d_tilde.iter().map(|x| x * x).sum();
    let pe: f64 = e_tilde.iter().map(|x| x * x).sum();
    match (pd > 0.0, pe > 0.0) {
        (true, true) => 10.0 * (pd.log10() - pe.log10()),
        (true, false) => f64::INFINITY,
        (false, true) => f64::NEG_INFINITY,
        (false, false) => 0.0,
    }
}
