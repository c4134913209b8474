//! Inverse-filter deconvolution of a recorded sweep response.

use crate::dsp::{convolve, FirFilter, Waveform};
use crate::error::{Error, Result};

/// Fixed pre-peak guard: the extracted impulse response starts this many
/// samples before the located deconvolution peak, preserving the
/// fractional-delay precursor of band-limited paths.
pub const DECONV_PEAK_GUARD: usize = 16;

/// Minimum peak-to-median ratio of the deconvolved signal (20 dB) below
/// which the measurement is considered to have no usable linear response.
const MIN_PEAK_MEDIAN_RATIO: f64 = 10.0;

/// Recovers an impulse response from a recorded sweep playback.
///
/// Convolves `recorded` with the sweep's `inverse` filter, locates the
/// linear-response peak, and extracts `out_taps` samples starting
/// [`DECONV_PEAK_GUARD`] samples before the peak, so that tap index 16 of
/// the result corresponds to the peak reference. Zero-pads when the window
/// extends past either end of the deconvolved signal.
///
/// Fails when the recording is silent or the peak does not rise at least
/// 20 dB above the median magnitude — both signatures of a measurement
/// without a usable linear response.
pub fn deconvolve_ir(recorded: &Waveform, inverse: &Waveform, out_taps: usize) -> Result<FirFilter> {
    if recorded.fs != inverse.fs {
        return Err(Error::config(format!(
            "sample rate mismatch: recorded at {} Hz, inverse at {} Hz",
            recorded.fs, inverse.fs
        )));
    }
    if recorded.is_empty() || inverse.is_empty() {
        return Err(Error::config("deconvolution inputs must be non-empty"));
    }
    if out_taps == 0 {
        return Err(Error::config("out_taps must be positive"));
    }

    let dec = convolve(&recorded.samples, &inverse.samples);
    let (peak_idx, peak_mag) = find_peak(&dec)?;
    let median = median_magnitude(&dec);
    if peak_mag < MIN_PEAK_MEDIAN_RATIO * median {
        let ratio_db = 20.0 * (peak_mag / median).log10();
        return Err(Error::numerical(format!(
            "no deconvolution peak above the noise floor: peak/median is {ratio_db:.1} dB, \
             need at least 20 dB"
        )));
    }

    let start = peak_idx as isize - DECONV_PEAK_GUARD as isize;
    let mut taps = vec![0.0f64; out_taps];
    for (k, tap) in taps.iter_mut().enumerate() {
        let idx = start + k as isize;
        if idx >= 0 && (idx as usize) < dec.len() {
            *tap = dec[idx as usize];
        }
    }
    Ok(FirFilter::new(recorded.fs, taps))
}

/// Index and magnitude of the largest absolute sample; errors on silence or
/// non-finite samples.
pub(crate) fn find_peak(dec: &[f64]) -> Result<(usize, f64)> {
    let (mut idx, mut mag) = (0usize, 0.0f64);
    for (i, &v) in dec.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::numerical("deconvolved signal contains non-finite samples"));
        }
        if v.abs() > mag {
            mag = v.abs();
            idx = i;
        }
    }
    if mag == 0.0 {
        return Err(Error::numerical("recording is silent: no deconvolution peak"));
    }
    Ok((idx, mag))
}

pub(crate) fn median_magnitude(dec: &[f64]) -> f64 {
    let mut mags: Vec<f64> = dec.iter().map(|v| v.abs()).collect();
    let mid = mags.len() / 2;
    let (_, m, _) = mags.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    *m
}
