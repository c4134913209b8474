//! Identify the speaker-to-ear path with exponential sine sweeps, the way
//! a fitting session would, and compare against the scene's ground truth.
//!
//! Shows the effect of measurement noise and of averaging repeated sweeps.
//!
//! Run with: `cargo run --release --example measure_paths`

use openanc::scene::{render_scene, SceneConfig};
use openanc::sysid::{estimate_feedback_paths, estimate_secondary_path, nmse_db, SysIdConfig};

fn main() -> openanc::Result<()> {
    let scene = render_scene(&SceneConfig::from_toml_str(
        r#"
        fs = 22050
        duration_s = 1.0
        feedback_coupling_db = -20.0
        geometry = "default_left"

        [[sources]]
        azimuth_deg = 90.0
        distance_m = 2.0
        seed = 3
        kind = { type = "white" }
        "#,
    )?)?;

    let setups = [
        ("noiseless, 1 sweep", None, 1),
        ("-30 dB noise, 1 sweep", Some(-30.0), 1),
        ("-30 dB noise, 4 sweeps", Some(-30.0), 4),
    ];
    println!("secondary path identification (truth: {} taps)", scene.secondary_path.len());
    for (label, noise_db, averages) in setups {
        let cfg = SysIdConfig {
            duration_s: 10.0,
            averages,
            noise_db,
            ..SysIdConfig::default()
        };
        let estimate = estimate_secondary_path(&scene, &cfg)?;
        let nmse = nmse_db(&estimate.taps, &scene.secondary_path.taps);
        println!("  {label:<24} NMSE {nmse:7.1} dB");
    }

    let cfg = SysIdConfig {
        duration_s: 10.0,
        ..SysIdConfig::default()
    };
    let feedback = estimate_feedback_paths(&scene, &cfg)?;
    println!("feedback path identification:");
    for (i, (est, truth)) in feedback.iter().zip(&scene.feedback_paths).enumerate() {
        println!("  mic {i}: NMSE {:7.1} dB", nmse_db(&est.taps, &truth.taps));
    }
    Ok(())
}
