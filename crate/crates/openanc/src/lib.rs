//! Deterministic simulation and DSP toolkit for feedforward multichannel
//! active noise cancellation (ANC) on open-ear wearables.
//!
//! The crate models the complete pipeline of an error-microphone-free ANC
//! system at desk scale:
//!
//! * [`scene`] — seeded acoustic scene synthesis: noise sources, a microphone
//!   array on a glasses-like frame, fractional-delay propagation paths with
//!   optional diffuse reverberation, and speaker-to-microphone feedback paths.
//! * [`sysid`] — exponential sine sweep measurement of the speaker-to-ear
//!   (secondary) and speaker-to-microphone (feedback) paths.
//! * [`control`] — regularized multichannel Wiener filter estimation on
//!   filtered references, plus spectrum shaping utilities for externally
//!   produced frequency-domain filters.
//! * [`engine`] — a sample-synchronous real-time engine: hybrid partitioned
//!   convolution with a zero-latency head, acoustic feedback cancellation,
//!   and crossfaded filter updates; plus a closed-loop simulator.
//! * [`eval`] — the band-limited noise-reduction metric, the chunked
//!   evaluation protocol, a fixed twelve-scene suite, and parameter sweeps.
//! * [`dsp`] / [`io`] — shared primitives: FFT helpers, FIR/SOS filtering,
//!   seeded noise, WAV and raw path/filter file formats.
//!
//! Every operation is seeded and deterministic: the same configuration and
//! seed produce bit-identical outputs on every run.

pub mod cli;
pub mod control;
pub mod dsp;
pub mod engine;
mod error;
pub mod eval;
pub mod io;
pub mod scene;
pub mod sysid;

pub use error::{Error, Result};
