//! Welch power spectral density estimation.

use crate::dsp::fft::rfft;
use std::f64::consts::PI;

/// One-sided Welch PSD with a Hann window and 50 % overlap.
///
/// Returns `(freqs_hz, psd)` with `nfft/2 + 1` bins; `psd` is a density
/// (power per Hz). `nfft` must be a power of two and `x` at least one
/// segment long.
pub fn welch_psd(x: &[f64], nfft: usize, fs: u32) -> (Vec<f64>, Vec<f64>) {
    assert!(nfft.is_power_of_two(), "nfft must be a power of two");
    assert!(x.len() >= nfft, "signal shorter than one segment");
    let window: Vec<f64> = (0..nfft)
        .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / nfft as f64).cos()))
        .collect();
    let win_power: f64 = window.iter().map(|w| w * w).sum();
    let hop = nfft / 2;
    let mut psd = vec![0.0; nfft / 2 + 1];
    let mut segments = 0usize;
    let mut start = 0usize;
    while start + nfft <= x.len() {
        let seg: Vec<f64> = x[start..start + nfft]
            .iter()
            .zip(&window)
            .map(|(v, w)| v * w)
            .collect();
        let spec = rfft(&seg);
        for (k, c) in spec.iter().enumerate() {
            let scale = if k == 0 || k == nfft / 2 { 1.0 } else { 2.0 };
            psd[k] += scale * c.norm_sqr();
        }
        segments += 1;
        start += hop;
    }
    let norm = 1.0 / (segments as f64 * win_power * fs as f64);
    for v in &mut psd {
        *v *= norm;
    }
    let freqs = (0..=nfft / 2)
        .map(|k| k as f64 * fs as f64 / nfft as f64)
        .collect();
    (freqs, psd)
}

/// Integrated power of a one-sided PSD between `lo_hz` and `hi_hz`.
pub fn band_power(freqs: &[f64], psd: &[f64], lo_hz: f64, hi_hz: f64) -> f64 {
    assert_eq!(freqs.len(), psd.len());
    let df = if freqs.len() > 1 { freqs[1] - freqs[0] } else { 1.0 };
    freqs
        .iter()
        .zip(psd)
        .filter(|(f, _)| **f >= lo_hz && **f < hi_hz)
        .map(|(_, p)| p * df)
        .sum()
}
