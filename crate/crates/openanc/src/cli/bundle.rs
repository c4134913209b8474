//! On-disk scene bundles: everything a rendered scene produced, in open
//! formats, so identification and playback experiments can run without
//! re-rendering.
//!
//! Layout of a bundle directory:
//!
//! * `scene.toml` — the resolved scene configuration (re-runnable).
//! * `meta.json` — sample rate, geometry, geometry hash, and a content hash
//!   of the configuration that produced the bundle.
//! * `mics.wav` — reference microphones, one channel per mic (float WAV).
//! * `ear.wav` — open-ear disturbance (float WAV).
//! * `secondary.bin` — ground-truth speaker-to-ear path (raw float64 bank).
//! * `feedback.bin` — ground-truth speaker-to-mic paths, one per mic.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::{MultiWaveform, Waveform};
use crate::io::{read_path_bank, read_wav, write_path_bank, write_wav_f32};
use crate::scene::{Geometry, RenderedScene, SceneConfig};
use crate::{Error, Result};

use crate::eval::{content_hash, geometry_hash};

/// Everything in `meta.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleMeta {
    pub fs: u32,
    pub duration_s: f64,
    pub channels: usize,
    pub geometry: Geometry,
    pub geometry_hash: String,
    /// Hash of the `scene.toml` text written next to this file.
    pub config_hash: String,
}

/// Write a rendered scene and its resolved configuration as a bundle.
pub fn write_bundle(dir: &Path, config: &SceneConfig, scene: &RenderedScene) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let config_text = toml::to_string_pretty(config)
        .map_err(|e| Error::config(format!("cannot serialize scene config: {e}")))?;
    std::fs::write(dir.join("scene.toml"), &config_text)?;
    write_wav_f32(dir.join("mics.wav"), &scene.mics)?;
    let ear = MultiWaveform::new(scene.fs, vec![scene.ear_noise.samples.clone()])?;
    write_wav_f32(dir.join("ear.wav"), &ear)?;
    write_path_bank(dir.join("secondary.bin"), std::slice::from_ref(&scene.secondary_path))?;
    write_path_bank(dir.join("feedback.bin"), &scene.feedback_paths)?;
    let meta = BundleMeta {
        fs: scene.fs,
        duration_s: scene.ear_noise.len() as f64 / scene.fs as f64,
        channels: scene.mics.channels.len(),
        geometry: scene.geometry.clone(),
        geometry_hash: geometry_hash(&scene.geometry),
        config_hash: content_hash(&config_text),
    };
    std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// Read a bundle back into a rendered scene.
///
/// Microphone and ear audio come back at WAV float precision; the path
/// sidecars are bit-exact, which is what identification measures against.
pub fn read_bundle(dir: &Path) -> Result<(BundleMeta, RenderedScene)> {
    let meta: BundleMeta = serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json"))?)?;
    let mics = read_wav(dir.join("mics.wav"))?;
    let ear = read_wav(dir.join("ear.wav"))?;
    if ear.channels.len() != 1 {
        return Err(Error::format("ear.wav must be single-channel"));
    }
    let secondary = read_path_bank(dir.join("secondary.bin"))?;
    if secondary.len() != 1 {
        return Err(Error::format("secondary.bin must hold exactly one path"));
    }
    let feedback = read_path_bank(dir.join("feedback.bin"))?;
    if feedback.len() != mics.channels.len() {
        return Err(Error::format(format!(
            "feedback.bin holds {} paths for {} microphone channels",
            feedback.len(),
            mics.channels.len()
        )));
    }
    let fs = meta.fs;
    for (name, got) in [("mics.wav", mics.fs), ("ear.wav", ear.fs)] {
        if got != fs {
            return Err(Error::format(format!(
                "{name} is at {got} Hz but the bundle is declared at {fs} Hz"
            )));
        }
    }
    let scene = RenderedScene {
        fs,
        geometry: meta.geometry.clone(),
        mics,
        ear_noise: Waveform::new(fs, ear.channels.into_iter().next().unwrap()),
        secondary_path: secondary.into_iter().next().unwrap(),
        feedback_paths: feedback,
    };
    Ok((meta, scene))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::NoiseKind;
    use crate::scene::{render_scene, GeometrySpec, SourceConfig};

    fn small_config() -> SceneConfig {
        SceneConfig {
            fs: 22050,
            duration_s: 1.0,
            c: 343.0,
            rt60_s: 0.0,
            diffuse_level_db: -28.0,
            reflection_seed: 3,
            feedback_coupling_db: -20.0,
            geometry: GeometrySpec::Name("compact_left".into()),
            sources: vec![SourceConfig {
                azimuth_deg: 120.0,
                distance_m: 2.0,
                level_db: 0.0,
                seed: 17,
                kind: NoiseKind::Pink,
            }],
        }
    }

    #[test]
    fn bundle_roundtrips_paths_exactly_and_audio_closely() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config();
        let scene = render_scene(&cfg).unwrap();
        write_bundle(dir.path(), &cfg, &scene).unwrap();
        let (meta, back) = read_bundle(dir.path()).unwrap();

        assert_eq!(meta.fs, 22050);
        assert_eq!(meta.channels, 2);
        assert_eq!(meta.geometry_hash, geometry_hash(&scene.geometry));
        assert_eq!(back.secondary_path, scene.secondary_path);
        assert_eq!(back.feedback_paths, scene.feedback_paths);
        let worst = back
            .mics
            .channels
            .iter()
            .flatten()
            .zip(scene.mics.channels.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-6, "float WAV roundtrip error {worst}");
    }

    #[test]
    fn corrupt_sidecars_surface_as_format_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config();
        let scene = render_scene(&cfg).unwrap();
        write_bundle(dir.path(), &cfg, &scene).unwrap();
        let p = dir.path().join("secondary.bin");
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(read_bundle(dir.path()), Err(Error::Format(_))));
    }

    #[test]
    fn missing_files_surface_as_io_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_bundle(dir.path()), Err(Error::Io(_))));
    }
}
