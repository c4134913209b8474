//! Deterministic acoustic scene synthesis: device geometry, noise
//! sources, propagation paths, and fully rendered microphone/ear signals.

mod config;
mod geometry;
mod render;

pub use config::{GeometrySpec, SceneConfig, SourceConfig};
pub use geometry::{Geometry, Mic, Side, Vec3};
pub use render::{
    path_seed, render_scene, source_position, synthesize_path, Acoustics, RenderedScene,
    FEEDBACK_PATH_TAPS,
};
