//! Render an acoustic scene and write it to disk as a bundle.
//!
//! A scene is a seeded, fully deterministic recording session: noise
//! sources around a head, a microphone array on a glasses frame, the true
//! speaker-to-ear path, and speaker-to-mic feedback paths.
//!
//! Run with: `cargo run --release --example render_scene`

use openanc::cli::write_bundle;
use openanc::dsp::NoiseKind;
use openanc::scene::{render_scene, GeometrySpec, SceneConfig, SourceConfig};

fn main() -> openanc::Result<()> {
    let config = SceneConfig {
        fs: 22050,
        duration_s: 3.0,
        c: 343.0,
        rt60_s: 0.25,
        diffuse_level_db: -28.0,
        reflection_seed: 42,
        feedback_coupling_db: -20.0,
        geometry: GeometrySpec::Name("default_left".into()),
        sources: vec![
            SourceConfig {
                azimuth_deg: 45.0,
                distance_m: 2.0,
                level_db: 0.0,
                seed: 7,
                kind: NoiseKind::Pink,
            },
            SourceConfig {
                azimuth_deg: 200.0,
                distance_m: 3.0,
                level_db: -6.0,
                seed: 8,
                kind: NoiseKind::White,
            },
        ],
    };

    let scene = render_scene(&config)?;
    println!(
        "rendered {:.1} s at {} Hz, geometry `{}`",
        scene.ear_noise.duration_s(),
        scene.fs,
        scene.geometry.name
    );
    for (mic, channel) in scene.geometry.mics.iter().zip(&scene.mics.channels) {
        let rms = (channel.iter().map(|v| v * v).sum::<f64>() / channel.len() as f64).sqrt();
        println!("  mic {:<12} rms {:.4}", mic.name, rms);
    }
    println!("  ear          rms {:.4}", scene.ear_noise.rms());
    println!(
        "  secondary path {} taps, {} feedback paths of {} taps",
        scene.secondary_path.len(),
        scene.feedback_paths.len(),
        scene.feedback_paths[0].len()
    );

    let out = std::env::temp_dir().join("openanc_scene_bundle");
    write_bundle(&out, &config, &scene)?;
    println!("bundle written to {}", out.display());
    Ok(())
}
