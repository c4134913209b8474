//! Exponential sine sweep (ESS) excitation and its deconvolution inverse.
//!
//! The sweep rises exponentially from `f1` to `f2`, spending equal time per
//! octave, which gives the classic −3 dB/octave amplitude spectrum. The
//! returned inverse filter is the time-reversed sweep with +6 dB/octave
//! amplitude compensation, refined by an exact equalization of the residual
//! sweep-times-inverse pulse: the known pulse spectrum is divided out with a
//! small regularizing floor, so that `sweep ⊛ inverse` collapses to a clean
//! unit impulse instead of one ringing at the band edges. The equalizer is
//! slightly non-causal, so the inverse carries a built-in pre-delay of
//! [`INVERSE_PRE_DELAY`] samples and the pulse peak lands at
//! `sweep.len() - 1 + INVERSE_PRE_DELAY`.

use crate::dsp::fft::{irfft, next_pow2, rfft};
use crate::dsp::Waveform;
use crate::error::{Error, Result};
use num_complex::Complex;
use std::f64::consts::PI;

/// Samples of headroom reserved in front of the deconvolution pulse for the
/// non-causal part of the pulse equalizer.
pub(crate) const INVERSE_PRE_DELAY: usize = 16384;

/// Raised-cosine fade-in applied to the start of the sweep, in seconds.
/// Long fades attenuate the spectral skirt below `f1` so far that the pulse
/// equalizer can no longer flatten it; 10 ms only removes the onset click.
const FADE_IN_S: f64 = 0.010;

/// Relative floor of the pulse equalizer, as a fraction of the peak squared
/// magnitude of the raw (unequalized) deconvolution pulse spectrum.
const EQUALIZER_FLOOR: f64 = 1e-8;

/// Upper bound on the sweep length, keeping the design FFT around 2^24.
const MAX_SWEEP_SAMPLES: usize = 4_000_000;

/// Generates an exponential sine sweep and its deconvolution inverse.
///
/// The sweep's instantaneous frequency rises exponentially from `f1_hz` to
/// `f2_hz` over `duration_s` seconds. Convolving the sweep with the inverse
/// yields an impulse at index `sweep.len() - 1 + INVERSE_PRE_DELAY` whose
/// main lobe holds ≥ 99% of the total energy and whose peak-to-sidelobe
/// ratio is at least 60 dB outside ±32 samples.
pub fn generate_ess(
    f1_hz: f64,
    f2_hz: f64,
    duration_s: f64,
    fs: u32,
) -> Result<(Waveform, Waveform)> {
    if fs == 0 {
        return Err(Error::config("sample rate must be positive"));
    }
    let nyq = fs as f64 / 2.0;
    if !(f1_hz > 0.0 && f1_hz < f2_hz && f2_hz <= nyq) || !f1_hz.is_finite() {
        return Err(Error::config(format!(
            "sweep band must satisfy 0 < f1 < f2 <= fs/2, got f1={f1_hz}, f2={f2_hz}, fs/2={nyq}"
        )));
    }
    if !(duration_s > 0.0) || !duration_s.is_finite() {
        return Err(Error::config(format!("sweep duration must be positive, got {duration_s}")));
    }
    let l = (duration_s * fs as f64).round() as usize;
    if l < 64 {
        return Err(Error::config("sweep too short: need at least 64 samples"));
    }
    if l > MAX_SWEEP_SAMPLES {
        return Err(Error::config(format!(
            "sweep too long: {l} samples exceeds the {MAX_SWEEP_SAMPLES}-sample limit"
        )));
    }

    // Sweep with exponentially rising instantaneous frequency:
    //   phase(t) = 2*pi*f1*T/k * (exp(k*t/T) - 1),  k = ln(f2/f1).
    let t_total = l as f64 / fs as f64;
    let k = (f2_hz / f1_hz).ln();
    let phase_scale = 2.0 * PI * f1_hz * t_total / k;
    let mut sweep = vec![0.0f64; l];
    for (n, s) in sweep.iter_mut().enumerate() {
        let t = n as f64 / fs as f64;
        *s = (phase_scale * ((k * t / t_total).exp() - 1.0)).sin();
    }
    let fade = ((FADE_IN_S * fs as f64).round() as usize).min(l / 4).max(1);
    for n in 0..fade {
        let w = 0.5 * (1.0 - (PI * n as f64 / fade as f64).cos());
        sweep[n] *= w;
    }

    // Time-reversed sweep with the +6 dB/octave amplitude envelope: sample n
    // of the reversal sits at instantaneous frequency f2*exp(-k*n/L), and the
    // exp(-k*n/L) gain makes the compensation proportional to frequency.
    let mut inv_raw = vec![0.0f64; l];
    for (n, v) in inv_raw.iter_mut().enumerate() {
        *v = sweep[l - 1 - n] * (-k * n as f64 / l as f64).exp();
    }

    // Equalize the residual pulse. The raw pulse s ⊛ inv_raw deviates from an
    // impulse near the band edges (the +6 dB/octave envelope is only the
    // stationary-phase approximation of the true inverse); dividing the known
    // pulse spectrum out, with a small floor where the sweep has no energy,
    // removes the deviation exactly. The correction needs a little non-causal
    // support, hence the pre-delay baked into the phase term below.
    let n_fft = next_pow2(4 * l + 4 * INVERSE_PRE_DELAY);
    let pad = |x: &[f64]| {
        let mut p = vec![0.0f64; n_fft];
        p[..x.len()].copy_from_slice(x);
        p
    };
    let spec_sweep = rfft(&pad(&sweep));
    let mut spec_inv = rfft(&pad(&inv_raw));
    let mut pulse_spec: Vec<Complex<f64>> =
        spec_sweep.iter().zip(&spec_inv).map(|(a, b)| a * b).collect();
    let pulse = irfft(&pulse_spec, n_fft);
    let peak = pulse[l - 1];
    if !peak.is_finite() || peak.abs() < 1e-12 {
        return Err(Error::numerical("degenerate sweep: deconvolution pulse has no peak"));
    }
    let scale = 1.0 / peak;
    let floor = EQUALIZER_FLOOR
        * pulse_spec.iter().map(|c| (scale * c).norm_sqr()).fold(0.0f64, f64::max);
    let shift = (l - 1 + INVERSE_PRE_DELAY) as u64;
    for (bin, (iv, ps)) in spec_inv.iter_mut().zip(&mut pulse_spec).enumerate() {
        let p = scale * *ps;
        let eq = p.conj() / (p.norm_sqr() + floor);
        // Exact phase of the pre-delay: bin*shift reduced mod n_fft in integer
        // arithmetic, so the angle never loses precision to a huge argument.
        let frac = (bin as u64 * shift % n_fft as u64) as f64 / n_fft as f64;
        let delay = Complex::from_polar(1.0, -2.0 * PI * frac);
        *iv *= scale * eq * delay;
    }
    let inv_full = irfft(&spec_inv, n_fft);
    let inverse = inv_full[..l + 2 * INVERSE_PRE_DELAY].to_vec();

    Ok((Waveform::new(fs, sweep), Waveform::new(fs, inverse)))
}
