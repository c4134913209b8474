//! Scene description: geometry, acoustics, and noise sources.

use serde::{Deserialize, Serialize};

use crate::dsp::NoiseKind;
use crate::{Error, Result};

use super::geometry::Geometry;

/// A noise source on the horizontal plane. Azimuth is measured clockwise
/// from straight ahead (0 front, 90 right, 180 back, 270 left).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub azimuth_deg: f64,
    pub distance_m: f64,
    #[serde(default)]
    pub level_db: f64,
    pub seed: u64,
    pub kind: NoiseKind,
}

/// Geometry selection: either the name of a builtin or a full inline table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeometrySpec {
    Name(String),
    Inline(Geometry),
}

impl GeometrySpec {
    pub fn resolve(&self) -> Result<Geometry> {
        let g = match self {
            GeometrySpec::Name(n) => Geometry::builtin(n)?,
            GeometrySpec::Inline(g) => g.clone(),
        };
        g.validate()?;
        Ok(g)
    }
}

fn default_c() -> f64 {
    343.0
}

fn default_diffuse_level_db() -> f64 {
    -28.0
}

fn default_feedback_coupling_db() -> f64 {
    -20.0
}

/// Full scene description, loadable from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub fs: u32,
    pub duration_s: f64,
    /// Speed of sound in m/s.
    #[serde(default = "default_c")]
    pub c: f64,
    /// Reverberation time; zero renders an anechoic scene.
    #[serde(default)]
    pub rt60_s: f64,
    /// Total diffuse-tail energy in dB relative to the direct path at 1 m.
    #[serde(default = "default_diffuse_level_db")]
    pub diffuse_level_db: f64,
    /// Seeds the per-path diffuse tails.
    #[serde(default)]
    pub reflection_seed: u64,
    /// Driver-to-microphone leak strength: the strongest feedback path is
    /// scaled to this many dB of energy relative to the driver-to-ear path.
    #[serde(default = "default_feedback_coupling_db")]
    pub feedback_coupling_db: f64,
    pub geometry: GeometrySpec,
    pub sources: Vec<SourceConfig>,
}

impl SceneConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SceneConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::format(format!("TOML encode: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.fs == 0 {
            return Err(Error::config("sample rate must be positive"));
        }
        if !(self.duration_s > 0.0) || self.duration_s > 600.0 {
            return Err(Error::config("duration must be in (0, 600] seconds"));
        }
        if !(self.c > 0.0) {
            return Err(Error::config("speed of sound must be positive"));
        }
        if self.rt60_s < 0.0 || self.rt60_s > 10.0 {
            return Err(Error::config("rt60 must be in [0, 10] seconds"));
        }
        if self.sources.is_empty() {
            return Err(Error::config("scene needs at least one source"));
        }
        for (i, s) in self.sources.iter().enumerate() {
            if !(s.distance_m >= 0.1) {
                return Err(Error::config(format!(
                    "source {i}: distance must be at least 0.1 m"
                )));
            }
            if !s.azimuth_deg.is_finite() || !s.level_db.is_finite() {
                return Err(Error::config(format!("source {i}: non-finite parameter")));
            }
        }
        Ok(())
    }

    /// The same scene heard by the device on the other side of the head:
    /// geometry reflected across the median plane, every source azimuth
    /// mapped to its mirror angle.
    pub fn mirrored(&self) -> Result<SceneConfig> {
        let g = self.geometry.resolve()?.mirrored();
        let sources = self
            .sources
            .iter()
            .map(|s| SourceConfig {
                azimuth_deg: (360.0 - s.azimuth_deg).rem_euclid(360.0),
                ..s.clone()
            })
            .collect();
        Ok(SceneConfig {
            geometry: GeometrySpec::Inline(g),
            sources,
            ..self.clone()
        })
    }
}
