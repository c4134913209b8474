//! Full closed-loop simulation: the engine runs sample by sample with true
//! acoustic feedback from speaker to microphones, injected output latency,
//! and scheduled filter updates estimated from its own (feedback-cleaned)
//! reference recordings.
//!
//! Compares acoustic feedback cancellation on versus off under strong
//! speaker-to-mic coupling and prints the scheduled update events.
//!
//! Run with: `cargo run --release --example closed_loop`

use openanc::control::WienerOracleEstimator;
use openanc::engine::{
    simulate_closed_loop, ClosedLoopOptions, EngineConfig, LogEvent, UpdateSchedule,
};
use openanc::eval::{score_residual_chunks, EvalProtocol};
use openanc::scene::{render_scene, SceneConfig};

fn main() -> openanc::Result<()> {
    let scene = render_scene(&SceneConfig::from_toml_str(
        r#"
        fs = 22050
        duration_s = 4.5
        feedback_coupling_db = -5.0
        geometry = "default_left"

        [[sources]]
        azimuth_deg = 60.0
        distance_m = 2.0
        seed = 31
        kind = { type = "white" }
        "#,
    )?)?;
    let engine = EngineConfig {
        filter_taps: 512,
        ..EngineConfig::default()
    };
    let schedule = UpdateSchedule::default();
    let estimator = WienerOracleEstimator::new(engine.filter_taps);
    let protocol = EvalProtocol::default();

    for afc_enabled in [false, true] {
        let opts = ClosedLoopOptions {
            afc_enabled,
            ..ClosedLoopOptions::default()
        };
        let result = simulate_closed_loop(&scene, &estimator, &engine, &schedule, &opts)?;
        let chunks = score_residual_chunks(&scene.ear_noise, &result.residual, &protocol)?;
        let mean = chunks.iter().sum::<f64>() / chunks.len() as f64;
        println!(
            "afc {}  mean reduction {:5.2} dB over {} chunks, drive rms {:.4}",
            if afc_enabled { "on " } else { "off" },
            mean,
            chunks.len(),
            result.drive.rms()
        );
        if afc_enabled {
            for event in &result.events {
                if let LogEvent::FilterUpdate { t_s, ok, applied_at_s, .. } = event {
                    println!(
                        "  update at {t_s:.2} s: ok={ok} applied_at={:?}",
                        applied_at_s.map(|t| format!("{t:.2} s"))
                    );
                }
            }
        }
    }
    Ok(())
}
