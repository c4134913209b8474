//! Couples the engine back into a rendered scene.
//!
//! The simulator owns the physics the engine cannot see: the true
//! driver-to-microphone feedback paths (one-sample loop delay), the true
//! driver-to-ear path, and an injected output latency standing in for
//! compute and converter delay. A scheduled estimator refreshes the control
//! filters from the trailing context window, exactly as the deployed system
//! would, and estimator failures are logged rather than fatal.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::control::{AncFilterSet, EstimationContext, FilterEstimator};
use crate::dsp::{FirFilter, MultiWaveform, Waveform};
use crate::scene::RenderedScene;
use crate::sysid::SECONDARY_PATH_TAPS;
use crate::{Error, Result};

use super::{Engine, EngineConfig};

/// When and on how much data the filter estimator runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct UpdateSchedule {
    /// Trailing window handed to the estimator.
    pub context_s: f64,
    /// Interval between estimator invocations; the first fires once a full
    /// context exists.
    pub update_period_s: f64,
    /// Delay between an estimate finishing and its filters going live,
    /// standing in for the solver's compute time.
    pub application_delay_s: f64,
}

impl Default for UpdateSchedule {
    fn default() -> Self {
        UpdateSchedule {
            context_s: 2.0,
            update_period_s: 0.2,
            application_delay_s: 0.2,
        }
    }
}

impl UpdateSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.context_s.is_finite() && self.context_s > 0.0) {
            return Err(Error::config("estimation context must be positive"));
        }
        if !(self.update_period_s.is_finite() && self.update_period_s > 0.0) {
            return Err(Error::config("update period must be positive"));
        }
        if !(self.application_delay_s.is_finite() && self.application_delay_s >= 0.0) {
            return Err(Error::config("application delay cannot be negative"));
        }
        Ok(())
    }
}

/// Knobs for a closed-loop run.
#[derive(Debug, Clone)]
pub struct ClosedLoopOptions {
    /// Hand the estimator the simulated ear signal over its context window.
    /// Real hardware has no such channel; this is what makes oracle
    /// estimators possible.
    pub oracle_ear: bool,
    /// Run the feedback canceller. When off the engine gets zero feedback
    /// models while the true leak keeps contaminating the microphones.
    pub afc_enabled: bool,
    /// Secondary-path model used by the engine and estimator. `None` uses
    /// the true path truncated to the identification length.
    pub s_hat: Option<FirFilter>,
    /// Feedback-path models for the canceller. `None` uses the true paths.
    pub g_hat: Option<Vec<FirFilter>>,
}

impl Default for ClosedLoopOptions {
    fn default() -> Self {
        ClosedLoopOptions {
            oracle_ear: true,
            afc_enabled: true,
            s_hat: None,
            g_hat: None,
        }
    }
}

/// One line of the run log.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    /// Outcome of one scheduled estimator invocation.
    FilterUpdate {
        t_s: f64,
        ok: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
        /// When the filters start fading in; absent on failure.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        applied_at_s: Option<f64>,
    },
    /// Broadband disturbance-to-residual energy ratio over the update
    /// period ending at `t_s`.
    Chunk { t_s: f64, reduction_db: f64 },
}

pub struct ClosedLoopResult {
    /// What the ear hears: disturbance plus anti-noise through the true
    /// secondary path.
    pub residual: Waveform,
    /// Anti-noise emitted by the driver.
    pub drive: Waveform,
    pub events: Vec<LogEvent>,
}

/// Runs the engine against a rendered scene with true acoustic feedback and
/// scheduled filter updates.
pub fn simulate_closed_loop(
    scene: &RenderedScene,
    estimator: &dyn FilterEstimator,
    cfg: &EngineConfig,
    schedule: &UpdateSchedule,
    opts: &ClosedLoopOptions,
) -> Result<ClosedLoopResult> {
    cfg.validate()?;
    schedule.validate()?;
    if scene.fs != cfg.fs {
        return Err(Error::config(format!(
            "scene rate {} does not match the engine rate {}",
            scene.fs, cfg.fs
        )));
    }
    let fs = scene.fs as f64;
    let n_total = scene.ear_noise.len();
    let m = scene.mics.channels.len();
    let context = (schedule.context_s * fs).round() as usize;
    let period = (schedule.update_period_s * fs).round() as usize;
    let delay = (schedule.application_delay_s * fs).round() as usize;
    if n_total < context + period {
        return Err(Error::config(format!(
            "scene of {n_total} samples is too short for a {context}-sample context plus one update period"
        )));
    }

    let latency = cfg.injected_latency_samples;
    let s_hat = match &opts.s_hat {
        Some(f) => f.clone(),
        None => scene.secondary_path.resized(SECONDARY_PATH_TAPS),
    };
    if s_hat.fs != scene.fs {
        return Err(Error::config("secondary-path model rate mismatch"));
    }
    // Deployed anti-noise reaches the ear through the injected latency plus
    // the acoustic path, so the estimator must model that composition — a
    // hardware measurement would include the loop latency for free.
    let mut s_model_taps = vec![0.0; latency + s_hat.len()];
    s_model_taps[latency..].copy_from_slice(&s_hat.taps);
    let s_model = FirFilter::new(scene.fs, s_model_taps);
    let g_hat: Vec<FirFilter> = if opts.afc_enabled {
        match &opts.g_hat {
            Some(g) => g.clone(),
            None => scene.feedback_paths.clone(),
        }
    } else {
        (0..m).map(|_| FirFilter::new(scene.fs, vec![0.0])).collect()
    };

    let mut engine = Engine::new(&AncFilterSet::zeros(scene.fs, m, cfg.filter_taps), &g_hat, cfg)?;

    let s_true = &scene.secondary_path.taps;
    let max_g = scene.feedback_paths.iter().map(|g| g.len()).max().unwrap_or(0);
    let y_cap = (latency + s_true.len() + 2).max(max_g + 2).next_power_of_two();
    let y_mask = y_cap - 1;
    let mut y_ring = vec![0.0; y_cap];

    let mut clean_rec: Vec<Vec<f64>> = vec![vec![0.0; n_total]; m];
    let mut residual = vec![0.0; n_total];
    let mut drive = vec![0.0; n_total];
    let mut events = Vec::new();
    let mut pending: VecDeque<(usize, AncFilterSet)> = VecDeque::new();
    let mut raw = vec![0.0; m];
    let mut clean = vec![0.0; m];
    let mut next_update = context;

    for n in 0..n_total {
        while pending.front().is_some_and(|(at, _)| *at <= n) {
            let (_, w) = pending.pop_front().unwrap();
            engine.update_filters(&w)?;
        }
        if n == next_update {
            events.push(LogEvent::Chunk {
                t_s: n as f64 / fs,
                reduction_db: energy_ratio_db(
                    &scene.ear_noise.samples[n - period..n],
                    &residual[n - period..n],
                ),
            });
            let window = n - context..n;
            let mics = MultiWaveform::new(
                scene.fs,
                clean_rec.iter().map(|c| c[window.clone()].to_vec()).collect(),
            )?;
            let ear;
            let oracle_ear = if opts.oracle_ear {
                ear = Waveform::new(scene.fs, scene.ear_noise.samples[window].to_vec());
                Some(&ear)
            } else {
                None
            };
            let ctx = EstimationContext {
                mics: &mics,
                s_hat: &s_model,
                oracle_ear,
            };
            match estimator.estimate(&ctx) {
                Ok(w) => {
                    let at = n + delay;
                    events.push(LogEvent::FilterUpdate {
                        t_s: n as f64 / fs,
                        ok: true,
                        error: None,
                        applied_at_s: Some(at as f64 / fs),
                    });
                    pending.push_back((at, w));
                }
                Err(e) => events.push(LogEvent::FilterUpdate {
                    t_s: n as f64 / fs,
                    ok: false,
                    error: Some(e.to_string()),
                    applied_at_s: None,
                }),
            }
            next_update += period;
        }
        // True acoustic leak into the references, one sample behind the
        // driver.
        for ch in 0..m {
            let mut leak = 0.0;
            for (k, &g) in scene.feedback_paths[ch].taps.iter().enumerate() {
                if n < k + 1 {
                    break;
                }
                leak += g * y_ring[(n - 1 - k) & y_mask];
            }
            raw[ch] = scene.mics.channels[ch][n] + leak;
        }
        let y = engine.process_sample_recording(&raw, 0.0, &mut clean);
        y_ring[n & y_mask] = y;
        drive[n] = y;
        for ch in 0..m {
            clean_rec[ch][n] = clean[ch];
        }
        // The anti-noise reaches the ear through the true secondary path
        // after the injected output latency.
        let mut d_hat = 0.0;
        for (j, &s) in s_true.iter().enumerate() {
            if n < latency + j {
                break;
            }
            d_hat += s * y_ring[(n - latency - j) & y_mask];
        }
        residual[n] = scene.ear_noise.samples[n] + d_hat;
    }

    Ok(ClosedLoopResult {
        residual: Waveform::new(scene.fs, residual),
        drive: Waveform::new(scene.fs, drive),
        events,
    })
}

fn energy_ratio_db(reference: &[f64], residual: &[f64]) -> f64 {
    let er: f64 = reference.iter().map(|x| x * x).sum();
    let ee: f64 = residual.iter().map(|x| x * x).sum();
    if ee == 0.0 {
        if er == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else if er == 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * (er / ee).log10()
    }
}
