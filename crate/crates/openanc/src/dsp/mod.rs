//! Shared signal-processing primitives.
//!
//! Everything here operates on plain `f64` buffers or the small wrapper
//! types [`Waveform`], [`MultiWaveform`] and [`FirFilter`]. Higher-level
//! modules (scene synthesis, system identification, the real-time engine)
//! are built exclusively on these primitives.

mod delay;
pub(crate) mod fft;
mod fir;
mod noise;
mod sos;
mod spectrum;

pub use delay::fractional_delay_fir;
pub use fft::{irfft, next_pow2, rfft};
pub use fir::{
    convolve, convolve_direct, convolve_fft, cross_correlate, measure_delay, FirFilter,
    MultiWaveform, Waveform,
};
pub use noise::{seeded_noise, NoiseKind};
pub use sos::{design_butterworth_bandpass, first_order_shelf, Sos, SosFilter};
pub use spectrum::{band_power, welch_psd};
