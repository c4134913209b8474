//! Implementations behind the subcommands. Everything here is a plain
//! function over parsed arguments so the pipelines are callable (and
//! testable) without spawning a process.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::{FilterEstimator, WienerOracleEstimator, ZeroEstimator};
use crate::dsp::MultiWaveform;
use crate::engine::{simulate_closed_loop, ClosedLoopOptions, EngineConfig, UpdateSchedule};
use crate::eval::{
    content_hash, load_suite, score_residual_chunks, standard_suite, sweep_csv, sweep_doa,
    sweep_latency, sweep_mics, sweep_sources, sweep_taps, plot_data, EvalMode, EvalProtocol,
    EvalReport, NamedScene, Provenance, SweepPoint,
};
use crate::eval::geometry_hash;
use crate::io::{write_path_bank, write_wav_f32};
use crate::scene::{render_scene, SceneConfig};
use crate::sysid::{estimate_feedback_paths, estimate_secondary_path, SysIdConfig};
use crate::{Error, Result};

use super::bundle::{read_bundle, write_bundle};
use super::{EstimatorKind, PathKind, SweepKind};

/// Engine and evaluation settings for runs and sweeps, loadable from TOML.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub engine: EngineConfig,
    pub protocol: EvalProtocol,
}

fn load_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(T, String)> {
    let text = std::fs::read_to_string(path)?;
    let value = toml::from_str(&text)?;
    Ok((value, text))
}

fn load_run_config(path: Option<&Path>) -> Result<(RunConfig, String)> {
    match path {
        Some(p) => load_toml(p),
        None => Ok((RunConfig::default(), String::new())),
    }
}

fn write_mono_wav(path: &Path, fs: u32, samples: &[f64]) -> Result<()> {
    write_wav_f32(path, &MultiWaveform::new(fs, vec![samples.to_vec()])?)
}

/// Render a scene configuration into a bundle directory.
pub fn cmd_scene(config: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let (mut cfg, _): (SceneConfig, _) = load_toml(config)?;
    if let Some(s) = seed {
        // One flag reseeds the whole scene deterministically: the diffuse
        // field gets the seed itself, source j gets s + 1 + j.
        cfg.reflection_seed = s;
        for (j, src) in cfg.sources.iter_mut().enumerate() {
            src.seed = s + 1 + j as u64;
        }
    }
    let scene = render_scene(&cfg)?;
    write_bundle(out, &cfg, &scene)?;
    println!(
        "scene: {} ch x {:.2} s at {} Hz -> {}",
        scene.mics.channels.len(),
        scene.ear_noise.duration_s(),
        scene.fs,
        out.display()
    );
    Ok(())
}

/// Measure a bundle's acoustic paths with exponential sweeps.
pub fn cmd_sysid(
    bundle: &Path,
    kind: PathKind,
    out: &Path,
    config: Option<&Path>,
    averages: Option<usize>,
    noise_db: Option<f64>,
) -> Result<()> {
    let (_, scene) = read_bundle(bundle)?;
    let mut cfg: SysIdConfig = match config {
        Some(p) => load_toml(p)?.0,
        None => SysIdConfig::default(),
    };
    if let Some(a) = averages {
        cfg.averages = a;
    }
    if let Some(n) = noise_db {
        cfg.noise_db = Some(n);
    }
    std::fs::create_dir_all(out)?;
    match kind {
        PathKind::Secondary => {
            let est = estimate_secondary_path(&scene, &cfg)?;
            let file = out.join("secondary_est.bin");
            write_path_bank(&file, std::slice::from_ref(&est))?;
            println!("sysid: secondary path ({} taps) -> {}", est.len(), file.display());
        }
        PathKind::Feedback => {
            let ests = estimate_feedback_paths(&scene, &cfg)?;
            for (i, est) in ests.iter().enumerate() {
                let file = out.join(format!("feedback_est_{i:02}.bin"));
                write_path_bank(&file, std::slice::from_ref(est))?;
                println!("sysid: feedback path {i} ({} taps) -> {}", est.len(), file.display());
            }
        }
    }
    Ok(())
}

/// What `run` writes as `report.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunArtifact {
    pub estimator: String,
    pub report: EvalReport,
    pub scene_config: SceneConfig,
    pub run_config: RunConfig,
    /// Content hashes of the input files, scene config then run config
    /// (empty hash slot when the run config came from defaults).
    pub scene_config_hash: String,
    pub run_config_hash: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct GoldenValue {
    mean_db: f64,
}

fn make_estimator(kind: EstimatorKind, l_c: usize) -> Box<dyn FilterEstimator> {
    match kind {
        EstimatorKind::WienerOracle => Box::new(WienerOracleEstimator::new(l_c)),
        EstimatorKind::Zero => Box::new(ZeroEstimator { l_c }),
    }
}

/// Closed-loop run on one scene: residual and drive audio, a JSONL event
/// log, and a report with the resolved configuration embedded.
pub fn cmd_run(
    scene_path: &Path,
    estimator: EstimatorKind,
    config: Option<&Path>,
    out: &Path,
    golden: Option<&Path>,
    bless: bool,
) -> Result<()> {
    let (scene_cfg, scene_text): (SceneConfig, _) = load_toml(scene_path)?;
    let (run_cfg, run_text) = load_run_config(config)?;
    let est = make_estimator(estimator, run_cfg.engine.filter_taps);
    let scene = render_scene(&scene_cfg)?;
    let schedule = UpdateSchedule {
        context_s: run_cfg.protocol.context_s,
        update_period_s: run_cfg.protocol.chunk_s,
        application_delay_s: run_cfg.protocol.application_delay_s,
    };
    let sim = simulate_closed_loop(
        &scene,
        est.as_ref(),
        &run_cfg.engine,
        &schedule,
        &ClosedLoopOptions::default(),
    )?;
    let chunks = score_residual_chunks(&scene.ear_noise, &sim.residual, &run_cfg.protocol)?;
    let provenance = Provenance {
        geometry_hash: geometry_hash(&scene.geometry),
        source_seeds: scene_cfg.sources.iter().map(|s| s.seed).collect(),
        reflection_seed: scene_cfg.reflection_seed,
        fs: scene.fs,
    };
    let report = EvalReport::from_chunks(EvalMode::ClosedLoop, chunks, provenance);

    std::fs::create_dir_all(out)?;
    write_mono_wav(&out.join("residual.wav"), scene.fs, &sim.residual.samples)?;
    write_mono_wav(&out.join("drive.wav"), scene.fs, &sim.drive.samples)?;
    let mut log = String::new();
    for event in &sim.events {
        log.push_str(&serde_json::to_string(event)?);
        log.push('\n');
    }
    std::fs::write(out.join("log.jsonl"), log)?;
    let artifact = RunArtifact {
        estimator: est.name().to_string(),
        report,
        scene_config: scene_cfg,
        run_config: run_cfg,
        scene_config_hash: content_hash(&scene_text),
        run_config_hash: content_hash(&run_text),
    };
    std::fs::write(out.join("report.json"), serde_json::to_string_pretty(&artifact)?)?;
    let mean = artifact.report.mean_db;
    println!(
        "run: {} chunks, mean reduction {:.2} dB -> {}",
        artifact.report.chunks_db.len(),
        mean,
        out.display()
    );

    match (golden, bless) {
        (Some(g), true) => {
            std::fs::write(g, serde_json::to_string_pretty(&GoldenValue { mean_db: mean })?)?;
            println!("golden: blessed {:.4} dB -> {}", mean, g.display());
        }
        (Some(g), false) => {
            let expected: GoldenValue = serde_json::from_str(&std::fs::read_to_string(g)?)?;
            let diff = (mean - expected.mean_db).abs();
            if diff > 0.5 {
                return Err(Error::numerical(format!(
                    "golden mismatch: measured {:.4} dB, expected {:.4} dB (|diff| {:.4} > 0.5)",
                    mean, expected.mean_db, diff
                )));
            }
            println!(
                "golden: measured {:.4} dB within 0.5 dB of {:.4} dB",
                mean, expected.mean_db
            );
        }
        (None, true) => {
            return Err(Error::config("--bless needs --golden to know where to write"));
        }
        (None, false) => {}
    }
    Ok(())
}

/// What `sweep` writes as `sweep_<kind>.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct SweepArtifact {
    pub kind: String,
    pub suite_hash: String,
    pub run_config: RunConfig,
    pub points: Vec<SweepPoint>,
}

/// One parameter sweep over a scene suite, written as CSV, JSON, and plain
/// plot data.
pub fn cmd_sweep(
    kind: SweepKind,
    suite_path: &Path,
    out: &Path,
    values: Option<&[usize]>,
    angles: Option<usize>,
    config: Option<&Path>,
) -> Result<()> {
    let suite_text = std::fs::read_to_string(suite_path)?;
    let suite = load_suite(&suite_text)?;
    let (run_cfg, _) = load_run_config(config)?;
    let engine = &run_cfg.engine;
    let protocol = &run_cfg.protocol;
    let points = match kind {
        SweepKind::Taps => {
            let default = [512, 1024, 2048, 4096];
            sweep_taps(&suite, values.unwrap_or(&default), engine, protocol)?
        }
        SweepKind::Latency => {
            let default = [1, 2, 4, 8, 16];
            sweep_latency(&suite, values.unwrap_or(&default), engine, protocol)?
        }
        SweepKind::Doa => sweep_doa(&suite[0].config, angles.unwrap_or(36), engine, protocol)?,
        SweepKind::Mics => {
            let default = [1, 2, 3, 4];
            sweep_mics(&suite, values.unwrap_or(&default), engine, protocol)?
        }
        SweepKind::Sources => {
            let default = [1, 2, 3];
            sweep_sources(&suite, values.unwrap_or(&default), engine, protocol)?
        }
    };
    let label = kind.label();
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join(format!("sweep_{label}.csv")), sweep_csv(&points)?)?;
    std::fs::write(out.join(format!("plot_{label}.txt")), plot_data(&points))?;
    let artifact = SweepArtifact {
        kind: label.to_string(),
        suite_hash: content_hash(&suite_text),
        run_config: run_cfg,
        points,
    };
    std::fs::write(
        out.join(format!("sweep_{label}.json")),
        serde_json::to_string_pretty(&artifact)?,
    )?;
    for p in &artifact.points {
        println!("sweep {label}: {} -> {:.2} dB (std {:.2})", p.label, p.mean_db, p.std_db);
    }
    Ok(())
}

/// The standard suite as a TOML string, for `sweep` users who want to start
/// from the committed population.
pub fn suite_template() -> String {
    let suite = standard_suite();
    #[derive(Serialize)]
    struct File {
        scenes: Vec<NamedScene>,
    }
    toml::to_string_pretty(&File { scenes: suite }).expect("suite serializes")
}
