//! Conversion of externally estimated frequency-domain filter frames into
//! time-domain control filters at the engine rate.
//!
//! Adaptive estimators that run at a reduced sample rate produce per-frame
//! one-sided filter spectra. `shape_filters` averages those frames, rolls
//! the top of the band off with a half-cosine so nothing is asked of the
//! filter above the low-rate Nyquist, resamples to the target rate by
//! zero-padding the spectrum, and fades the tail of the impulse response
//! so the finite filter ends cleanly.

use num_complex::Complex;

use crate::dsp::irfft;
use crate::{Error, Result};

use super::AncFilterSet;

/// A sequence of one-sided filter spectra produced at a reduced rate.
#[derive(Debug, Clone)]
pub struct FreqFilterFrames {
    /// Sample rate the frames were estimated at.
    pub fs_low: u32,
    /// FFT size at the low rate; each frame holds `n_fft / 2 + 1` bins.
    pub n_fft: usize,
    /// `frames[frame][channel][bin]`.
    pub frames: Vec<Vec<Vec<Complex<f64>>>>,
}

/// Average filter frames and reshape them into time-domain filters of
/// length `l_c` at `target_fs`. Requires `fs_low` to divide `target_fs`
/// and `l_c == n_fft * (target_fs / fs_low)` so the low-rate bins land
/// exactly on target-rate bins.
pub fn shape_filters(
    frames: &FreqFilterFrames,
    target_fs: u32,
    l_c: usize,
) -> Result<AncFilterSet> {
    if frames.fs_low == 0 || target_fs % frames.fs_low != 0 {
        return Err(Error::config(format!(
            "low rate {} Hz must divide target rate {} Hz",
            frames.fs_low, target_fs
        )));
    }
    let ratio = (target_fs / frames.fs_low) as usize;
    if frames.n_fft == 0 || !frames.n_fft.is_power_of_two() {
        return Err(Error::config("frame FFT size must be a power of two"));
    }
    if l_c != frames.n_fft * ratio {
        return Err(Error::config(format!(
            "filter length {} must equal n_fft * rate ratio = {}",
            l_c,
            frames.n_fft * ratio
        )));
    }
    if frames.frames.is_empty() {
        return Err(Error::config("no filter frames to shape"));
    }
    let channels = frames.frames[0].len();
    let bins = frames.n_fft / 2 + 1;
    if channels == 0 {
        return Err(Error::config("filter frames have no channels"));
    }
    for f in &frames.frames {
        if f.len() != channels || f.iter().any(|c| c.len() != bins) {
            return Err(Error::config("ragged filter frames"));
        }
    }

    let inv_count = 1.0 / frames.frames.len() as f64;
    let mut w = Vec::with_capacity(channels);
    for ch in 0..channels {
        let mut mean = vec![Complex::new(0.0, 0.0); bins];
        for frame in &frames.frames {
            for (m, v) in mean.iter_mut().zip(&frame[ch]) {
                *m += v * inv_count;
            }
        }
        apply_band_taper(&mut mean);
        // Zero-pad the one-sided spectrum up to the target-rate bin count;
        // the shared low bins are identical because the rates are integer
        // multiples of each other.
        let mut full = vec![Complex::new(0.0, 0.0); l_c / 2 + 1];
        full[..bins].copy_from_slice(&mean);
        let mut taps = irfft(&full, l_c);
        apply_tail_fade(&mut taps);
        w.push(taps);
    }
    AncFilterSet::new(target_fs, w, 0.0)
}

/// Half-cosine roll-off over the top 12.5% of the one-sided bins, ending
/// at exactly zero on the Nyquist bin.
fn apply_band_taper(spectrum: &mut [Complex<f64>]) {
    let bins = spectrum.len();
    let count = ((bins as f64 * 0.125).round() as usize).max(1);
    let start = bins - count;
    for i in 0..count {
        let u = (i + 1) as f64 / count as f64;
        spectrum[start + i] *= 0.5 * (1.0 + (std::f64::consts::PI * u).cos());
    }
}

/// Raised-cosine fade over the final 10% of the taps; the last tap becomes
/// exactly zero.
fn apply_tail_fade(taps: &mut [f64]) {
    let n = taps.len();
    let count = ((n as f64 * 0.1).round() as usize).max(1);
    for j in 1..=count {
        let g = 0.5 * (1.0 + (std::f64::consts::PI * j as f64 / count as f64).cos());
        taps[n - count + j - 1] *= g;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::rfft;

    /// One-sided spectrum of a short real filter at FFT size `n`.
    fn spectrum_of(taps: &[f64], n: usize) -> Vec<Complex<f64>> {
        let mut padded = vec![0.0; n];
        padded[..taps.len()].copy_from_slice(taps);
        rfft(&padded)
    }

    fn dtft(taps: &[f64], f_hz: f64, fs: f64) -> Complex<f64> {
        let w = 2.0 * std::f64::consts::PI * f_hz / fs;
        taps.iter()
            .enumerate()
            .map(|(n, &t)| Complex::from_polar(t, -w * n as f64))
            .sum()
    }

    /// A smooth band-limited prototype whose spectrum is negligible in the
    /// taper region (top 12.5% of the low-rate band).
    fn band_limited_prototype(fs_low: u32, n_fft: usize) -> Vec<f64> {
        let f0 = 0.15 * fs_low as f64;
        let sigma = 10.0;
        let center = 40.0;
        (0..n_fft)
            .map(|n| {
                let t = n as f64 - center;
                (-(t * t) / (2.0 * sigma * sigma)).exp()
                    * (2.0 * std::f64::consts::PI * f0 * n as f64 / fs_low as f64).cos()
            })
            .collect()
    }

    #[test]
    fn upsampled_filter_matches_prototype_in_band() {
        let fs_low = 11025;
        let target = 22050;
        let n_fft = 512;
        let l_c = 1024;
        let proto = band_limited_prototype(fs_low, n_fft);
        let frames = FreqFilterFrames {
            fs_low,
            n_fft,
            frames: vec![vec![spectrum_of(&proto, n_fft)]],
        };
        let set = shape_filters(&frames, target, l_c).unwrap();
        assert_eq!(set.fs, target);
        assert_eq!(set.taps_per_channel(), l_c);
        // The shaped filter's frequency response (as an operator on the
        // target-rate stream) must match the prototype's response on the
        // low-rate stream at the same physical frequencies. Deviations are
        // judged against the passband peak; between-bin interpolation noise
        // far down in the prototype's stopband tail is irrelevant.
        let peak = dtft(&proto, 0.15 * fs_low as f64, fs_low as f64).norm();
        for f_hz in [800.0, 1200.0, 1654.0, 2000.0, 2500.0] {
            let want = dtft(&proto, f_hz, fs_low as f64);
            let got = dtft(&set.w[0], f_hz, target as f64);
            assert!(
                (want - got).norm() < 1e-4 * peak,
                "response mismatch at {f_hz} Hz: {want} vs {got}"
            );
        }
        // Above the low-rate Nyquist the shaped filter must be silent.
        for f_hz in [6000.0, 8000.0, 10000.0] {
            let got = dtft(&set.w[0], f_hz, target as f64).norm();
            assert!(got < 1e-5 * peak, "leakage {got} at {f_hz} Hz");
        }
    }

    #[test]
    fn averaging_is_linear() {
        let fs_low = 11025;
        let n_fft = 128;
        let a = spectrum_of(&band_limited_prototype(fs_low, n_fft), n_fft);
        let b: Vec<Complex<f64>> = a.iter().map(|v| v * 3.0).collect();
        let mean: Vec<Complex<f64>> = a.iter().map(|v| v * 2.0).collect();
        let two = shape_filters(
            &FreqFilterFrames {
                fs_low,
                n_fft,
                frames: vec![vec![a.clone()], vec![b]],
            },
            22050,
            256,
        )
        .unwrap();
        let direct = shape_filters(
            &FreqFilterFrames {
                fs_low,
                n_fft,
                frames: vec![vec![mean]],
            },
            22050,
            256,
        )
        .unwrap();
        for (x, y) in two.w[0].iter().zip(&direct.w[0]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn taper_is_idempotent_on_band_limited_input() {
        let bins = 257;
        let mut spec: Vec<Complex<f64>> = (0..bins)
            .map(|i| {
                // Energy only in the lower 80% of the band.
                if i < 205 {
                    Complex::new(1.0 / (1.0 + i as f64), 0.2)
                } else {
                    Complex::new(0.0, 0.0)
                }
            })
            .collect();
        let before = spec.clone();
        apply_band_taper(&mut spec);
        let taper_count = ((bins as f64 * 0.125).round() as usize).max(1);
        for (i, (a, b)) in before.iter().zip(&spec).enumerate() {
            if i < bins - taper_count {
                assert_eq!(a, b, "bin {i} changed outside the taper region");
            }
        }
        let once = spec.clone();
        apply_band_taper(&mut spec);
        for (a, b) in once.iter().zip(&spec) {
            assert!((a - b).norm() < 1e-12);
        }
        assert_eq!(spec[bins - 1], Complex::new(0.0, 0.0));
    }

    #[test]
    fn tail_fade_ends_at_exact_zero() {
        let mut taps = vec![1.0; 200];
        apply_tail_fade(&mut taps);
        assert_eq!(taps[199], 0.0);
        assert_eq!(taps[179], 1.0); // untouched just before the fade
        for i in 180..199 {
            assert!(taps[i] < taps[i - 1] + 1e-15, "fade not monotone at {i}");
        }
    }

    #[test]
    fn inconsistent_shapes_are_rejected() {
        let fs_low = 11025;
        let n_fft = 128;
        let spec = spectrum_of(&[1.0, 0.5], n_fft);
        let good = FreqFilterFrames {
            fs_low,
            n_fft,
            frames: vec![vec![spec.clone()]],
        };
        assert!(shape_filters(&good, 22050, 256).is_ok());
        // Rate ratio not an integer.
        assert!(shape_filters(&good, 33000, 256).is_err());
        // Filter length inconsistent with n_fft * ratio.
        assert!(shape_filters(&good, 22050, 512).is_err());
        // Ragged frames.
        let ragged = FreqFilterFrames {
            fs_low,
            n_fft,
            frames: vec![vec![spec.clone()], vec![spec[..64].to_vec()]],
        };
        assert!(shape_filters(&ragged, 22050, 256).is_err());
        // No frames at all.
        let empty = FreqFilterFrames {
            fs_low,
            n_fft,
            frames: vec![],
        };
        assert!(shape_filters(&empty, 22050, 256).is_err());
    }
}
