//! Real-signal FFT helpers on top of rustfft.
//!
//! Transforms use the unnormalized-forward / `1/n`-inverse convention, so
//! `irfft(rfft(x), n)` reproduces `x` and Parseval reads
//! `sum(x^2) == sum(|X|^2) / n` over the full (two-sided) spectrum.
//!
//! A thread-local planner caches plans per size, so repeated transforms of
//! the same length are cheap and the helpers stay safe to call from worker
//! threads.

use num_complex::Complex;
use rustfft::FftPlanner;
use std::cell::RefCell;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Smallest power of two that is >= `n`.
pub fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

/// In-place complex forward FFT.
pub(crate) fn fft_inplace(buf: &mut [Complex<f64>]) {
    PLANNER.with(|p| {
        let fft = p.borrow_mut().plan_fft_forward(buf.len());
        fft.process(buf);
    });
}

/// In-place complex inverse FFT (unnormalized; caller divides by `n`).
pub(crate) fn ifft_inplace(buf: &mut [Complex<f64>]) {
    PLANNER.with(|p| {
        let fft = p.borrow_mut().plan_fft_inverse(buf.len());
        fft.process(buf);
    });
}

/// Forward FFT of a real signal; returns the one-sided spectrum with
/// `n/2 + 1` bins (DC through Nyquist).
///
/// `x.len()` must be a power of two.
pub fn rfft(x: &[f64]) -> Vec<Complex<f64>> {
    let n = x.len();
    assert!(n.is_power_of_two(), "rfft length must be a power of two, got {n}");
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_inplace(&mut buf);
    buf.truncate(n / 2 + 1);
    buf
}

/// Inverse of [`rfft`]: one-sided spectrum (`n/2 + 1` bins) to `n` real
/// samples. The imaginary parts of the DC and Nyquist bins are ignored, as
/// they must vanish for a real signal.
pub fn irfft(spec: &[Complex<f64>], n: usize) -> Vec<f64> {
    assert!(n.is_power_of_two(), "irfft length must be a power of two, got {n}");
    assert_eq!(spec.len(), n / 2 + 1, "one-sided spectrum must have n/2 + 1 bins");
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    buf[0] = Complex::new(spec[0].re, 0.0);
    buf[n / 2] = Complex::new(spec[n / 2].re, 0.0);
    for k in 1..n / 2 {
        buf[k] = spec[k];
        buf[n - k] = spec[k].conj();
    }
    ifft_inplace(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_recovers_signal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x: Vec<f64> = (0..1024).map(|_| rng.random::<f64>() - 0.5).collect();
        let y = irfft(&rfft(&x), 1024);
        let max_err = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_err < 1e-12, "roundtrip error {max_err}");
    }

    #[test]
    fn parseval_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 2048;
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let spec = rfft(&x);
        let time_energy: f64 = x.iter().map(|v| v * v).sum();
        // One-sided spectrum: interior bins appear twice in the full spectrum.
        let mut spec_energy = spec[0].norm_sqr() + spec[n / 2].norm_sqr();
        for c in &spec[1..n / 2] {
            spec_energy += 2.0 * c.norm_sqr();
        }
        spec_energy /= n as f64;
        assert!(
            (time_energy - spec_energy).abs() < 1e-10 * time_energy,
            "parseval mismatch: {time_energy} vs {spec_energy}"
        );
    }

    #[test]
    fn dc_bin_is_sum() {
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let spec = rfft(&x);
        assert!((spec[0].re - 10.0).abs() < 1e-12);
        assert!(spec[0].im.abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "power of two")]
    fn non_pow2_rejected() {
        rfft(&vec![0.0; 12]);
    }
}
