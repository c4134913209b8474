//! How output latency erodes feedforward cancellation.
//!
//! Every sample of injected latency costs lead time: the anti-noise for
//! high frequencies arrives too late to line up, so reduction decays as
//! latency grows. This sweeps 1 to 16 samples over a two-scene mini suite
//! and prints the trend with per-point spread.
//!
//! Run with: `cargo run --release --example latency_sweep`

use openanc::engine::EngineConfig;
use openanc::eval::{sweep_latency, EvalProtocol, NamedScene};
use openanc::scene::SceneConfig;

fn main() -> openanc::Result<()> {
    let scene = |azimuth_deg: f64, seed: u64, kind: &str| -> openanc::Result<NamedScene> {
        Ok(NamedScene {
            name: format!("az{azimuth_deg:.0}"),
            config: SceneConfig::from_toml_str(&format!(
                r#"
                fs = 22050
                duration_s = 4.5
                geometry = "default_left"

                [[sources]]
                azimuth_deg = {azimuth_deg}
                distance_m = 2.0
                seed = {seed}
                kind = {{ type = "{kind}" }}
                "#
            ))?,
        })
    };
    let suite = [scene(30.0, 70, "white")?, scene(150.0, 71, "pink")?];
    let engine = EngineConfig {
        filter_taps: 1024,
        ..EngineConfig::default()
    };
    let points = sweep_latency(&suite, &[1, 2, 4, 8, 16], &engine, &EvalProtocol::default())?;

    println!("latency    mean reduction");
    for p in &points {
        let ms = 1000.0 * p.axis / engine.fs as f64;
        println!("{:>3.0} smp ({ms:4.2} ms)  {:6.2} dB (std {:.2})", p.axis, p.mean_db, p.std_db);
    }
    let drop = points.first().unwrap().mean_db - points.last().unwrap().mean_db;
    println!("1 -> 16 samples costs {drop:.2} dB on this suite");
    Ok(())
}
