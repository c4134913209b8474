//! System identification: sweep excitation, deconvolution, and path
//! estimation.
//!
//! Measuring the driver-to-ear (secondary) and driver-to-microphone
//! (feedback) paths is the calibration step the rest of the pipeline stands
//! on: the control filter is computed against the estimated secondary path,
//! and feedback cancellation subtracts the driver signal seen through the
//! estimated feedback paths. The tools here implement that measurement for
//! rendered scenes:
//!
//! * [`generate_ess`] — an exponential sine sweep plus the inverse filter
//!   that collapses it to a clean unit impulse;
//! * [`deconvolve_ir`] — inverse-filter deconvolution with peak location and
//!   a fixed 16-sample pre-peak guard, for recordings with unknown timing;
//! * [`estimate_secondary_path`] / [`estimate_feedback_paths`] — the full
//!   measurement ritual against a scene's true paths: seeded measurement
//!   noise, repeated-playback averaging, deconvolution, and windowing, with
//!   the extraction anchored at the known playback position.

mod deconv;
mod ess;
mod estimate;

pub use deconv::{deconvolve_ir, DECONV_PEAK_GUARD};
pub use ess::generate_ess;
pub use estimate::{
    estimate_feedback_paths, estimate_secondary_path, ShelfPreFilter, SysIdConfig,
    SECONDARY_PATH_TAPS,
};

/// Normalized mean squared error between an estimate and a reference, in dB:
/// `10*log10(sum((est - truth)^2) / sum(truth^2))`. The shorter slice is
/// zero-extended to the longer one's length. An exact match gives −∞; a
/// silent reference gives +∞ (nothing to normalize against).
pub fn nmse_db(estimate: &[f64], truth: &[f64]) -> f64 {
    let n = estimate.len().max(truth.len());
    let at = |s: &[f64], i: usize| if i < s.len() { s[i] } else { 0.0 };
    let mut err = 0.0;
    let mut reference = 0.0;
    for i in 0..n {
        let t = at(truth, i);
        let d = at(estimate, i) - t;
        err += d * d;
        reference += t * t;
    }
    if reference == 0.0 {
        return if err == 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
    }
    10.0 * (err / reference).log10()
}
