//! Waveforms, FIR filters, convolution and correlation.

use crate::dsp::fft::{fft_inplace, ifft_inplace, next_pow2};
use crate::{Error, Result};
use num_complex::Complex;

/// A mono sampled signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub fs: u32,
    pub samples: Vec<f64>,
}

impl Waveform {
    pub fn new(fs: u32, samples: Vec<f64>) -> Self {
        assert!(fs > 0, "sample rate must be positive");
        Waveform { fs, samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs as f64
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|v| v * v).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }
}

/// A block of equally long channels sharing one sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiWaveform {
    pub fs: u32,
    pub channels: Vec<Vec<f64>>,
}

impl MultiWaveform {
    pub fn new(fs: u32, channels: Vec<Vec<f64>>) -> Result<Self> {
        if fs == 0 {
            return Err(Error::config("sample rate must be positive"));
        }
        if channels.is_empty() {
            return Err(Error::config("need at least one channel"));
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::config("all channels must have equal length"));
        }
        Ok(MultiWaveform { fs, channels })
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, |c| c.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Copy out `[start, start + len)` from every channel.
    pub fn slice(&self, start: usize, len: usize) -> Result<MultiWaveform> {
        if start + len > self.len() {
            return Err(Error::config(format!(
                "slice [{start}, {}) out of range for length {}",
                start + len,
                self.len()
            )));
        }
        MultiWaveform::new(
            self.fs,
            self.channels
                .iter()
                .map(|c| c[start..start + len].to_vec())
                .collect(),
        )
    }
}

/// A finite impulse response with an associated sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    pub fs: u32,
    pub taps: Vec<f64>,
}

impl FirFilter {
    pub fn new(fs: u32, taps: Vec<f64>) -> Self {
        assert!(fs > 0, "sample rate must be positive");
        assert!(!taps.is_empty(), "filter must have at least one tap");
        assert!(taps.iter().all(|t| t.is_finite()), "taps must be finite");
        FirFilter { fs, taps }
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|v| v * v).sum()
    }

    /// Zero-pad or truncate to exactly `n` taps.
    pub fn resized(&self, n: usize) -> FirFilter {
        let mut taps = self.taps.clone();
        taps.resize(n, 0.0);
        FirFilter::new(self.fs, taps)
    }
}

/// Full linear convolution, evaluated directly. Output length is
/// `x.len() + h.len() - 1`.
pub fn convolve_direct(x: &[f64], h: &[f64]) -> Vec<f64> {
    assert!(!x.is_empty() && !h.is_empty(), "convolution inputs must be non-empty");
    let n = x.len() + h.len() - 1;
    let mut y = vec![0.0; n];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        for (j, &hj) in h.iter().enumerate() {
            y[i + j] += xi * hj;
        }
    }
    y
}

/// Full linear convolution via zero-padded FFT. Identical (up to rounding)
/// to [`convolve_direct`].
pub fn convolve_fft(x: &[f64], h: &[f64]) -> Vec<f64> {
    assert!(!x.is_empty() && !h.is_empty(), "convolution inputs must be non-empty");
    let out_len = x.len() + h.len() - 1;
    let n = next_pow2(out_len);
    let mut a: Vec<Complex<f64>> = Vec::with_capacity(n);
    a.extend(x.iter().map(|&v| Complex::new(v, 0.0)));
    a.resize(n, Complex::new(0.0, 0.0));
    let mut b: Vec<Complex<f64>> = Vec::with_capacity(n);
    b.extend(h.iter().map(|&v| Complex::new(v, 0.0)));
    b.resize(n, Complex::new(0.0, 0.0));
    fft_inplace(&mut a);
    fft_inplace(&mut b);
    for (ai, bi) in a.iter_mut().zip(&b) {
        *ai *= bi;
    }
    ifft_inplace(&mut a);
    a[..out_len].iter().map(|c| c.re / n as f64).collect()
}

/// Full linear convolution, choosing the cheaper evaluation automatically.
pub fn convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    // Direct wins for short kernels; FFT wins once the tap count is large.
    let (short, long) = if x.len() < h.len() { (x, h) } else { (h, x) };
    if short.len() <= 64 || short.len() * long.len() <= 1 << 16 {
        convolve_direct(x, h)
    } else {
        convolve_fft(x, h)
    }
}

/// Full linear cross-correlation `c[k] = sum_n a[n] * b[n + k]`.
///
/// The returned vector covers lags `-(a.len()-1) ..= b.len()-1`; index `i`
/// corresponds to lag `i as isize - (a.len() as isize - 1)`.
pub fn cross_correlate(a: &[f64], b: &[f64]) -> Vec<f64> {
    let rev: Vec<f64> = a.iter().rev().copied().collect();
    convolve(&rev, b)
}

/// Delay of `b` relative to `a` in samples, from the cross-correlation peak
/// with parabolic sub-sample interpolation. Positive means `b` lags `a`.
pub fn measure_delay(a: &[f64], b: &[f64]) -> f64 {
    let c = cross_correlate(a, b);
    let (mut peak_i, mut peak_v) = (0usize, f64::MIN);
    for (i, &v) in c.iter().enumerate() {
        if v > peak_v {
            peak_v = v;
            peak_i = i;
        }
    }
    let mut lag = peak_i as f64 - (a.len() as f64 - 1.0);
    // Parabolic interpolation across the peak and its neighbors.
    if peak_i > 0 && peak_i + 1 < c.len() {
        let (y0, y1, y2) = (c[peak_i - 1], c[peak_i], c[peak_i + 1]);
        let denom = y0 - 2.0 * y1 + y2;
        if denom.abs() > 1e-30 {
            lag += 0.5 * (y0 - y2) / denom;
        }
    }
    lag
}
