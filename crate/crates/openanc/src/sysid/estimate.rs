//! Sweep-based estimation of the secondary and feedback paths of a rendered
//! scene.
//!
//! The estimators replay the measurement ritual of a real fitting session:
//! play an exponential sweep through the driver, record what arrives (here:
//! convolve with the scene's true path, optionally plus seeded measurement
//! noise), average the repeated recordings, deconvolve with the sweep's
//! inverse filter, and window the result to a fixed tap count. Playback and
//! recording share one clock, so the extraction window is anchored at the
//! known pulse position rather than at a detected peak.

use crate::dsp::{convolve, first_order_shelf, seeded_noise, FirFilter, NoiseKind};
use crate::error::{Error, Result};
use crate::scene::{RenderedScene, FEEDBACK_PATH_TAPS};
use crate::sysid::deconv::{find_peak, median_magnitude};
use crate::sysid::ess::{generate_ess, INVERSE_PRE_DELAY};
use serde::{Deserialize, Serialize};

/// Estimated secondary paths are truncated or zero-padded to this length.
pub const SECONDARY_PATH_TAPS: usize = 1024;

/// Optional first-order shelf applied to the excitation before playback, to
/// pre-compensate a known driver magnitude response. The simulation models
/// no driver coloration, so the default pipeline bypasses it; when enabled,
/// the shelf's response becomes part of the estimated path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShelfPreFilter {
    pub corner_hz: f64,
    pub gain_db: f64,
}

/// Measurement setup for the path estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SysIdConfig {
    /// Sweep start frequency in Hz.
    pub f1_hz: f64,
    /// Sweep end frequency in Hz; `None` means Nyquist.
    pub f2_hz: Option<f64>,
    /// Sweep duration in seconds.
    pub duration_s: f64,
    /// Number of sweep playbacks averaged into one recording.
    pub averages: usize,
    /// Measurement-noise level in dB relative to the clean recording RMS;
    /// `None` measures noiselessly.
    pub noise_db: Option<f64>,
    /// Seed for the measurement noise streams.
    pub noise_seed: u64,
    /// Optional excitation pre-filter; `None` bypasses.
    pub shelf: Option<ShelfPreFilter>,
}

impl Default for SysIdConfig {
    fn default() -> Self {
        SysIdConfig {
            f1_hz: 20.0,
            f2_hz: None,
            duration_s: 20.0,
            averages: 2,
            noise_db: None,
            noise_seed: 0x5eed,
            shelf: None,
        }
    }
}

impl SysIdConfig {
    fn validate(&self) -> Result<()> {
        if self.averages == 0 {
            return Err(Error::config("averages must be at least 1"));
        }
        if let Some(db) = self.noise_db {
            if !db.is_finite() {
                return Err(Error::config(format!("noise level must be finite, got {db} dB")));
            }
        }
        Ok(())
    }
}

/// Measures the driver-to-ear path of `scene`, returning a
/// [`SECONDARY_PATH_TAPS`]-tap estimate.
pub fn estimate_secondary_path(scene: &RenderedScene, cfg: &SysIdConfig) -> Result<FirFilter> {
    let exc = Excitation::prepare(cfg, scene.fs)?;
    exc.measure(&scene.secondary_path, cfg, SECONDARY_PATH_TAPS, 0, "secondary path")
}

/// Measures the driver-to-microphone feedback paths of `scene`, one
/// [`FEEDBACK_PATH_TAPS`]-tap estimate per microphone.
pub fn estimate_feedback_paths(scene: &RenderedScene, cfg: &SysIdConfig) -> Result<Vec<FirFilter>> {
    if scene.feedback_paths.is_empty() {
        return Err(Error::config("scene has no feedback paths to measure"));
    }
    let exc = Excitation::prepare(cfg, scene.fs)?;
    scene
        .feedback_paths
        .iter()
        .zip(&scene.geometry.mics)
        .enumerate()
        .map(|(m, (path, mic))| {
            let label = format!("feedback path to mic {}", mic.name);
            exc.measure(path, cfg, FEEDBACK_PATH_TAPS, 1 + m as u64, &label)
        })
        .collect()
}

/// A prepared sweep: the (possibly shelf-filtered) excitation, the inverse
/// filter, and the index where the deconvolution pulse peaks.
struct Excitation {
    fs: u32,
    excitation: Vec<f64>,
    inverse: Vec<f64>,
    pulse_peak: usize,
}

impl Excitation {
    fn prepare(cfg: &SysIdConfig, fs: u32) -> Result<Excitation> {
        cfg.validate()?;
        let f2 = cfg.f2_hz.unwrap_or(fs as f64 / 2.0);
        let (sweep, inverse) = generate_ess(cfg.f1_hz, f2, cfg.duration_s, fs)?;
        let excitation = match cfg.shelf {
            Some(sh) => first_order_shelf(sh.corner_hz, sh.gain_db, fs)?.apply(&sweep.samples),
            None => sweep.samples.clone(),
        };
        Ok(Excitation {
            fs,
            excitation,
            inverse: inverse.samples,
            pulse_peak: sweep.len() - 1 + INVERSE_PRE_DELAY,
        })
    }

    fn measure(
        &self,
        path: &FirFilter,
        cfg: &SysIdConfig,
        out_taps: usize,
        noise_stream: u64,
        label: &str,
    ) -> Result<FirFilter> {
        if path.fs != self.fs {
            return Err(Error::config(format!(
                "{label}: path sampled at {} Hz, measurement at {} Hz",
                path.fs, self.fs
            )));
        }
        let clean = if path.is_empty() {
            vec![0.0; self.excitation.len()]
        } else {
            convolve(&self.excitation, &path.taps)
        };

        let mut averaged = clean.clone();
        if let Some(level_db) = cfg.noise_db {
            let rms = (clean.iter().map(|v| v * v).sum::<f64>() / clean.len() as f64).sqrt();
            let sigma = rms * 10f64.powf(level_db / 20.0);
            let duration_s = clean.len() as f64 / self.fs as f64;
            for run in 0..cfg.averages {
                let seed = mix_seed(cfg.noise_seed, noise_stream * 64 + run as u64);
                let noise = seeded_noise(NoiseKind::White, seed, duration_s, self.fs)?;
                for (a, n) in averaged.iter_mut().zip(&noise.samples) {
                    *a += sigma * n / cfg.averages as f64;
                }
            }
        }

        let dec = convolve(&averaged, &self.inverse);
        let (_, peak_mag) = find_peak(&dec).map_err(|e| contextualize(e, label))?;
        let median = median_magnitude(&dec);
        if peak_mag < 10.0 * median {
            let ratio_db = 20.0 * (peak_mag / median).log10();
            return Err(Error::numerical(format!(
                "{label}: no deconvolution peak above the noise floor \
                 (peak/median {ratio_db:.1} dB, need 20 dB)"
            )));
        }

        // Playback and capture share one clock: the response to the path's
        // tap 0 lands exactly at the pulse peak.
        let mut taps = vec![0.0f64; out_taps];
        let end = (self.pulse_peak + out_taps).min(dec.len());
        taps[..end - self.pulse_peak].copy_from_slice(&dec[self.pulse_peak..end]);
        Ok(FirFilter::new(self.fs, taps))
    }
}

fn contextualize(e: Error, label: &str) -> Error {
    match e {
        Error::Numerical(msg) => Error::numerical(format!("{label}: {msg}")),
        other => other,
    }
}

/// SplitMix64 finalizer over the seed and stream id, giving independent
/// noise per playback and per measured channel.
fn mix_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
