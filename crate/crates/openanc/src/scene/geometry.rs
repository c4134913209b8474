//! Device geometry: ear, driver, and microphone positions.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Position in meters. Origin at the head center; +x right, +y front,
/// +z up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dist(&self, other: &Vec3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Reflection across the median plane.
    pub fn mirrored(&self) -> Vec3 {
        Vec3::new(-self.x, self.y, self.z)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Vec3::new(v[0], v[1], v[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mic {
    pub name: String,
    pub pos: Vec3,
}

/// One device: the ear it serves, its driver, and its reference mics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub name: String,
    pub side: Side,
    pub ear: Vec3,
    pub speaker: Vec3,
    pub mics: Vec<Mic>,
}

impl Geometry {
    /// Load one of the geometries shipped with the crate:
    /// `default_left`, `default_right`, or `compact_left`.
    pub fn builtin(name: &str) -> Result<Geometry> {
        let text = match name {
            "default_left" => include_str!("../../configs/geometry/default_left.toml"),
            "default_right" => include_str!("../../configs/geometry/default_right.toml"),
            "compact_left" => include_str!("../../configs/geometry/compact_left.toml"),
            other => {
                return Err(Error::config(format!(
                    "unknown builtin geometry '{other}' \
                     (available: default_left, default_right, compact_left)"
                )))
            }
        };
        Ok(toml::from_str(text)?)
    }

    /// The same device mounted on the other side of the head: every
    /// position is reflected across the median plane and the side flips.
    /// The name gains or sheds a `_mirrored` suffix.
    pub fn mirrored(&self) -> Geometry {
        let name = match self.name.strip_suffix("_mirrored") {
            Some(base) => base.to_string(),
            None => format!("{}_mirrored", self.name),
        };
        Geometry {
            name,
            side: self.side.opposite(),
            ear: self.ear.mirrored(),
            speaker: self.speaker.mirrored(),
            mics: self
                .mics
                .iter()
                .map(|m| Mic {
                    name: m.name.clone(),
                    pos: m.pos.mirrored(),
                })
                .collect(),
        }
    }

    pub fn num_mics(&self) -> usize {
        self.mics.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mics.is_empty() {
            return Err(Error::config("geometry has no microphones"));
        }
        let all = self
            .mics
            .iter()
            .map(|m| m.pos)
            .chain([self.ear, self.speaker]);
        for p in all {
            for v in [p.x, p.y, p.z] {
                if !v.is_finite() || v.abs() > 1.0 {
                    return Err(Error::config(
                        "geometry positions must be finite and within 1 m of the head center",
                    ));
                }
            }
        }
        Ok(())
    }
}
