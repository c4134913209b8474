//! The standard evaluation suite: twelve frozen scenes that every sweep
//! reports over, so trends compare like against like.

use serde::{Deserialize, Serialize};

use crate::dsp::MultiWaveform;
use crate::scene::{RenderedScene, SceneConfig};
use crate::{Error, Result};

const SUITE_TOML: &str = include_str!("../../configs/suite.toml");

/// A scene description with a stable name for reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedScene {
    pub name: String,
    #[serde(flatten)]
    pub config: SceneConfig,
}

#[derive(Deserialize)]
struct SuiteFile {
    scenes: Vec<NamedScene>,
}

/// Parse a suite description: a `[[scenes]]` array of named scene configs.
pub fn load_suite(text: &str) -> Result<Vec<NamedScene>> {
    let file: SuiteFile = toml::from_str(text)?;
    if file.scenes.is_empty() {
        return Err(Error::config("the suite defines no scenes"));
    }
    Ok(file.scenes)
}

/// The committed twelve-scene population (3 geometries, 2 reverberation
/// settings, 2 noise kinds).
pub fn standard_suite() -> Vec<NamedScene> {
    load_suite(SUITE_TOML).expect("the committed suite configuration must parse")
}

/// A rendered scene restricted to a subset of its reference microphones.
/// Channel order follows `channels`; the geometry shrinks to match so
/// hashes identify the subset.
pub fn mic_subset_scene(scene: &RenderedScene, channels: &[usize]) -> Result<RenderedScene> {
    let m = scene.mics.channels.len();
    if channels.is_empty() {
        return Err(Error::config("need at least one microphone in the subset"));
    }
    if let Some(&bad) = channels.iter().find(|&&c| c >= m) {
        return Err(Error::config(format!(
            "microphone index {bad} out of range for {m} channels"
        )));
    }
    let mut seen = vec![false; m];
    for &c in channels {
        if seen[c] {
            return Err(Error::config(format!("microphone index {c} repeated")));
        }
        seen[c] = true;
    }
    let mut geometry = scene.geometry.clone();
    geometry.mics = channels.iter().map(|&c| scene.geometry.mics[c].clone()).collect();
    Ok(RenderedScene {
        fs: scene.fs,
        geometry,
        mics: MultiWaveform::new(
            scene.fs,
            channels.iter().map(|&c| scene.mics.channels[c].clone()).collect(),
        )?,
        ear_noise: scene.ear_noise.clone(),
        secondary_path: scene.secondary_path.clone(),
        feedback_paths: channels.iter().map(|&c| scene.feedback_paths[c].clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::NoiseKind;
    use crate::scene::render_scene;
    use std::collections::BTreeSet;

    #[test]
    fn standard_suite_covers_the_grid() {
        let suite = standard_suite();
        assert_eq!(suite.len(), 12);
        let names: BTreeSet<&str> = suite.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names.len(), 12, "scene names must be unique");
        let mut anechoic = 0;
        let mut reverberant = 0;
        let mut white = 0;
        let mut pink = 0;
        for s in &suite {
            assert_eq!(s.config.fs, 22050);
            assert_eq!(s.config.duration_s, 6.0);
            assert_eq!(s.config.sources.len(), 1);
            if s.config.rt60_s == 0.0 {
                anechoic += 1;
            } else {
                reverberant += 1;
            }
            match s.config.sources[0].kind {
                NoiseKind::White => white += 1,
                NoiseKind::Pink => pink += 1,
                _ => panic!("unexpected noise kind in the suite"),
            }
        }
        assert_eq!((anechoic, reverberant), (6, 6));
        assert_eq!((white, pink), (6, 6));
        let seeds: BTreeSet<u64> = suite.iter().map(|s| s.config.sources[0].seed).collect();
        assert_eq!(seeds.len(), 12, "source seeds must be distinct");
    }

    #[test]
    fn every_suite_scene_renders() {
        for s in standard_suite() {
            let scene = render_scene(&s.config).unwrap_or_else(|e| {
                panic!("suite scene '{}' failed to render: {e}", s.name);
            });
            assert!(scene.ear_noise.rms() > 0.0, "{} is silent", s.name);
        }
    }

    #[test]
    fn mic_subsets_pick_matching_channels_and_geometry() {
        let suite = standard_suite();
        let scene = render_scene(&suite[0].config).unwrap();
        let sub = mic_subset_scene(&scene, &[2, 0]).unwrap();
        assert_eq!(sub.mics.channels.len(), 2);
        assert_eq!(sub.geometry.mics.len(), 2);
        assert_eq!(sub.geometry.mics[0].name, scene.geometry.mics[2].name);
        assert_eq!(sub.geometry.mics[1].name, scene.geometry.mics[0].name);
        assert_eq!(sub.mics.channels[0], scene.mics.channels[2]);
        assert_eq!(sub.feedback_paths.len(), 2);
        assert_eq!(sub.feedback_paths[0].taps, scene.feedback_paths[2].taps);

        assert!(mic_subset_scene(&scene, &[]).is_err());
        assert!(mic_subset_scene(&scene, &[4]).is_err());
        assert!(mic_subset_scene(&scene, &[1, 1]).is_err());
    }
}
