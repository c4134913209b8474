//! The chunked offline protocol: estimate regularized Wiener filters on a
//! trailing context, apply them to the next chunk, advance, repeat.
//!
//! Compares the oracle Wiener estimator against the all-zero baseline on
//! one reverberant scene and prints per-chunk in-band reductions.
//!
//! Run with: `cargo run --release --example offline_wiener`

use openanc::control::{WienerOracleEstimator, ZeroEstimator};
use openanc::engine::EngineConfig;
use openanc::eval::{run_chunked_eval, EvalMode, EvalProtocol};
use openanc::scene::SceneConfig;

fn main() -> openanc::Result<()> {
    let scene = SceneConfig::from_toml_str(
        r#"
        fs = 22050
        duration_s = 6.0
        rt60_s = 0.25
        reflection_seed = 12
        geometry = "default_left"

        [[sources]]
        azimuth_deg = 135.0
        distance_m = 2.0
        seed = 100
        kind = { type = "pink" }
        "#,
    )?;
    let engine = EngineConfig {
        filter_taps: 1024,
        ..EngineConfig::default()
    };
    let protocol = EvalProtocol::default();

    for estimator_name in ["zero", "wiener-oracle"] {
        let report = match estimator_name {
            "zero" => run_chunked_eval(
                &scene,
                &ZeroEstimator { l_c: engine.filter_taps },
                &engine,
                &protocol,
                EvalMode::Offline,
            )?,
            _ => run_chunked_eval(
                &scene,
                &WienerOracleEstimator::new(engine.filter_taps),
                &engine,
                &protocol,
                EvalMode::Offline,
            )?,
        };
        print!("{estimator_name:<14}");
        for chunk in &report.chunks_db {
            print!(" {chunk:6.2}");
        }
        println!("  | mean {:.2} dB (std {:.2})", report.mean_db, report.std_db);
    }
    println!(
        "columns: {:.1} s chunks in the {:.0}-{:.0} Hz band",
        protocol.chunk_s, protocol.band_low_hz, protocol.band_high_hz
    );
    Ok(())
}
