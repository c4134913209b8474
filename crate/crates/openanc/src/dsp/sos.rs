//! IIR filtering in second-order sections, and Butterworth band-pass design.
//!
//! Sections are normalized (`a0 == 1`) and run in cascade as direct-form II
//! transposed, which keeps the recursion well conditioned at these orders.

use crate::{Error, Result};
use num_complex::Complex;
use std::f64::consts::PI;

/// One normalized biquad section: `y = (b0 + b1 z^-1 + b2 z^-2) /
/// (1 + a1 z^-1 + a2 z^-2) x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sos {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Sos {
    /// Both poles of this section, as roots of `z^2 + a1 z + a2`.
    pub fn poles(&self) -> [Complex<f64>; 2] {
        let half = Complex::new(-self.a1 / 2.0, 0.0);
        let disc = (Complex::new(self.a1 * self.a1 / 4.0 - self.a2, 0.0)).sqrt();
        [half + disc, half - disc]
    }
}

/// A cascade of second-order sections with an associated sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub fs: u32,
    pub sections: Vec<Sos>,
}

impl SosFilter {
    pub fn new(fs: u32, sections: Vec<Sos>) -> Result<Self> {
        if sections.is_empty() {
            return Err(Error::config("need at least one section"));
        }
        let f = SosFilter { fs, sections };
        if !f.is_stable() {
            return Err(Error::numerical("filter has poles on or outside the unit circle"));
        }
        Ok(f)
    }

    /// True when every pole is strictly inside the unit circle.
    pub fn is_stable(&self) -> bool {
        self.sections
            .iter()
            .flat_map(|s| s.poles())
            .all(|p| p.norm() < 1.0 - 1e-12)
    }

    /// Complex frequency response at `f_hz`.
    pub fn response(&self, f_hz: f64) -> Complex<f64> {
        let w = 2.0 * PI * f_hz / self.fs as f64;
        let z1 = Complex::from_polar(1.0, -w);
        let z2 = Complex::from_polar(1.0, -2.0 * w);
        let mut h = Complex::new(1.0, 0.0);
        for s in &self.sections {
            let num = Complex::new(s.b0, 0.0) + z1 * s.b1 + z2 * s.b2;
            let den = Complex::new(1.0, 0.0) + z1 * s.a1 + z2 * s.a2;
            h *= num / den;
        }
        h
    }

    /// Causal filtering with zero initial state (direct-form II transposed).
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = x.to_vec();
        for s in &self.sections {
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for v in y.iter_mut() {
                let xin = *v;
                let out = s.b0 * xin + s1;
                s1 = s.b1 * xin - s.a1 * out + s2;
                s2 = s.b2 * xin - s.a2 * out;
                *v = out;
            }
        }
        y
    }
}

/// Butterworth band-pass design via the bilinear transform with pre-warped
/// band edges.
///
/// `order` is the order of the low-pass prototype (must be even, >= 2); the
/// resulting band-pass has `order` biquad sections and -3 dB points at
/// `low_hz` and `high_hz`.
pub fn design_butterworth_bandpass(
    order: usize,
    low_hz: f64,
    high_hz: f64,
    fs: u32,
) -> Result<SosFilter> {
    if order < 2 || order % 2 != 0 {
        return Err(Error::config(format!("order must be even and >= 2, got {order}")));
    }
    let nyq = fs as f64 / 2.0;
    if !(0.0 < low_hz && low_hz < high_hz && high_hz < nyq) {
        return Err(Error::config(format!(
            "band edges must satisfy 0 < {low_hz} < {high_hz} < {nyq}"
        )));
    }
    let fs_f = fs as f64;
    let warp = |f: f64| 2.0 * fs_f * (PI * f / fs_f).tan();
    let w1 = warp(low_hz);
    let w2 = warp(high_hz);
    let w0 = (w1 * w2).sqrt();
    let bw = w2 - w1;

    // Analog low-pass prototype poles on the unit circle, left half-plane.
    let n = order;
    let mut z_poles: Vec<Complex<f64>> = Vec::with_capacity(2 * n);
    for k in 0..n {
        let theta = PI * (2.0 * k as f64 + 1.0) / (2.0 * n as f64) + PI / 2.0;
        let proto = Complex::from_polar(1.0, theta);
        // Low-pass to band-pass: each prototype pole becomes a pair.
        let q = proto * (bw / 2.0);
        let disc = (q * q - Complex::new(w0 * w0, 0.0)).sqrt();
        for s in [q + disc, q - disc] {
            // Bilinear transform to the z-plane.
            let two_fs = Complex::new(2.0 * fs_f, 0.0);
            z_poles.push((two_fs + s) / (two_fs - s));
        }
    }

    // Group the poles into conjugate pairs, one biquad per pair.
    let mut upper: Vec<Complex<f64>> = z_poles.iter().copied().filter(|p| p.im > 0.0).collect();
    let mut lower: Vec<Complex<f64>> = z_poles.iter().copied().filter(|p| p.im <= 0.0).collect();
    if upper.len() != lower.len() {
        return Err(Error::numerical("pole set is not conjugate-symmetric"));
    }
    let mut sections = Vec::with_capacity(n);
    upper.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    for p in upper.drain(..) {
        let conj = p.conj();
        let (idx, _) = lower
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (**a - conj).norm().partial_cmp(&(**b - conj).norm()).unwrap()
            })
            .ok_or_else(|| Error::numerical("unpaired pole"))?;
        let q = lower.swap_remove(idx);
        if (q - conj).norm() > 1e-6 * (1.0 + p.norm()) {
            return Err(Error::numerical("pole pairing failed"));
        }
        // Zeros at z = +1 and z = -1 in every section: numerator 1 - z^-2.
        sections.push(Sos {
            b0: 1.0,
            b1: 0.0,
            b2: -1.0,
            a1: -2.0 * p.re,
            a2: p.norm_sqr(),
        });
    }

    let mut filter = SosFilter::new(fs, sections)?;
    // Normalize to unit gain at the (warped) center frequency, spreading the
    // correction evenly across sections to keep coefficients balanced.
    let center_hz = (w0 / (2.0 * fs_f)).atan() * fs_f / PI;
    let gain = filter.response(center_hz).norm();
    if gain <= 0.0 || !gain.is_finite() {
        return Err(Error::numerical("degenerate passband gain"));
    }
    let per_section = (1.0 / gain).powf(1.0 / filter.sections.len() as f64);
    for s in &mut filter.sections {
        s.b0 *= per_section;
        s.b1 *= per_section;
        s.b2 *= per_section;
    }
    Ok(filter)
}

/// First-order low shelf: `gain_db` below the corner `f_c_hz`, unity above.
/// Available as an optional magnitude pre-shaping stage for sweep playback.
pub fn first_order_shelf(f_c_hz: f64, gain_db: f64, fs: u32) -> Result<SosFilter> {
    let nyq = fs as f64 / 2.0;
    if !(0.0 < f_c_hz && f_c_hz < nyq) {
        return Err(Error::config(format!("shelf corner must be in (0, {nyq})")));
    }
    let g = 10f64.powf(gain_db / 20.0);
    let fs_f = fs as f64;
    let w0 = 2.0 * fs_f * (PI * f_c_hz / fs_f).tan();
    // H(s) = (s + g*w0) / (s + w0), bilinear-transformed.
    let c = 2.0 * fs_f;
    let b0 = (c + g * w0) / (c + w0);
    let b1 = (g * w0 - c) / (c + w0);
    let a1 = (w0 - c) / (c + w0);
    SosFilter::new(
        fs,
        vec![Sos { b0, b1, b2: 0.0, a1, a2: 0.0 }],
    )
}
