//! Sweep the noise source's direction of arrival around the head and plot
//! cancellation against azimuth as an ASCII bar chart.
//!
//! The array sits on the left temple, so performance dips when the source
//! comes from the device side (around 270 degrees): the wavefront then
//! arrives broadside to the temple line, the references hear the noise at
//! essentially the same instant as the ear, and the causal filter runs out
//! of lead time. From the far side the front-rim microphone — mounted
//! inboard of the ear — keeps a small lead, so the dip is one-sided.
//!
//! Run with: `cargo run --release --example doa_sweep`

use openanc::engine::EngineConfig;
use openanc::eval::{sweep_doa, EvalProtocol};
use openanc::scene::SceneConfig;

fn main() -> openanc::Result<()> {
    let base = SceneConfig::from_toml_str(
        r#"
        fs = 22050
        duration_s = 4.5
        geometry = "default_left"

        [[sources]]
        azimuth_deg = 0.0
        distance_m = 2.0
        seed = 55
        kind = { type = "white" }
        "#,
    )?;
    let engine = EngineConfig {
        filter_taps: 1024,
        ..EngineConfig::default()
    };
    let points = sweep_doa(&base, 12, &engine, &EvalProtocol::default())?;

    let top = points.iter().map(|p| p.mean_db).fold(0.0f64, f64::max);
    println!("azimuth   reduction (left-temple array)");
    for p in &points {
        let bar = "#".repeat(((p.mean_db / top) * 40.0).round().max(0.0) as usize);
        println!("{:>5.0} deg  {:6.2} dB  {bar}", p.axis, p.mean_db);
    }
    let worst = points
        .iter()
        .min_by(|a, b| a.mean_db.total_cmp(&b.mean_db))
        .unwrap();
    println!("hardest direction: {:.0} deg at {:.2} dB", worst.axis, worst.mean_db);
    Ok(())
}
