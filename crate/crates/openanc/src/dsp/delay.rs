//! Fractional-delay FIR design.

use crate::dsp::FirFilter;
use crate::{Error, Result};
use std::f64::consts::PI;

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Hann-windowed-sinc fractional delay of `delay` samples.
///
/// The kernel is a sinc centered at `delay`, weighted by a Hann window that
/// is also centered at `delay`, with half-width `min(16, delay + 1,
/// num_taps - delay)` so the window always fits the tap range. Integer
/// delays reduce to an exact unit impulse; fractional delays give a
/// linear-phase interpolator accurate through most of the band.
///
/// Requires `0 <= delay <= num_taps - 1`.
pub fn fractional_delay_fir(delay: f64, num_taps: usize, fs: u32) -> Result<FirFilter> {
    if num_taps == 0 {
        return Err(Error::config("fractional delay needs at least one tap"));
    }
    if !delay.is_finite() || delay < 0.0 || delay > (num_taps - 1) as f64 {
        return Err(Error::config(format!(
            "delay {delay} outside representable range [0, {}]",
            num_taps - 1
        )));
    }
    let half_width = 16.0_f64
        .min(delay + 1.0)
        .min((num_taps - 1) as f64 - delay + 1.0);
    let lo = (delay - half_width).ceil().max(0.0) as usize;
    let hi = ((delay + half_width).floor() as usize).min(num_taps - 1);
    let mut taps = vec![0.0; num_taps];
    for (k, tap) in taps.iter_mut().enumerate().take(hi + 1).skip(lo) {
        let u = k as f64 - delay;
        if u.abs() < half_width {
            let w = 0.5 * (1.0 + (PI * u / half_width).cos());
            *tap = sinc(u) * w;
        }
    }
    Ok(FirFilter::new(fs, taps))
}
