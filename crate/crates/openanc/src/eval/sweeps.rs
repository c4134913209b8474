//! The sweep experiments: filter length, output latency, direction of
//! arrival, microphone count, and simultaneous sources.
//!
//! Every sweep evaluates the oracle Wiener estimator through the offline
//! chunked protocol and aggregates by the arithmetic mean of per-scene mean
//! reductions (dB). Scenes run in parallel; aggregation is positional, so
//! results do not depend on scheduling order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::WienerOracleEstimator;
use crate::engine::EngineConfig;
use crate::scene::{render_scene, SceneConfig};
use crate::{Error, Result};

use super::chunked::{
    run_chunked_eval, run_chunked_eval_rendered, EvalMode, EvalReport, Provenance,
};
use super::metric::EvalProtocol;
use super::report::geometry_hash;
use super::suite::{mic_subset_scene, NamedScene};

/// One axis value of a sweep with its per-scene evidence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis: f64,
    pub label: String,
    pub scene_names: Vec<String>,
    pub reports: Vec<EvalReport>,
    /// Mean over the per-scene mean reductions.
    pub mean_db: f64,
    /// Spread of the per-scene means.
    pub std_db: f64,
}

fn aggregate(axis: f64, label: String, scene_names: Vec<String>, reports: Vec<EvalReport>) -> SweepPoint {
    let n = reports.len() as f64;
    let mean_db = reports.iter().map(|r| r.mean_db).sum::<f64>() / n;
    let std_db = if reports.len() > 1 {
        (reports.iter().map(|r| (r.mean_db - mean_db).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    SweepPoint {
        axis,
        label,
        scene_names,
        reports,
        mean_db,
        std_db,
    }
}

fn oracle_over_suite(
    suite: &[NamedScene],
    engine: &EngineConfig,
    protocol: &EvalProtocol,
) -> Result<Vec<EvalReport>> {
    if suite.is_empty() {
        return Err(Error::config("the scene suite is empty"));
    }
    suite
        .par_iter()
        .map(|s| {
            run_chunked_eval(
                &s.config,
                &WienerOracleEstimator::new(engine.filter_taps),
                engine,
                protocol,
                EvalMode::Offline,
            )
        })
        .collect()
}

fn suite_names(suite: &[NamedScene]) -> Vec<String> {
    suite.iter().map(|s| s.name.clone()).collect()
}

/// Mean reduction per control-filter length.
pub fn sweep_taps(
    suite: &[NamedScene],
    taps: &[usize],
    engine: &EngineConfig,
    protocol: &EvalProtocol,
) -> Result<Vec<SweepPoint>> {
    taps.iter()
        .map(|&l| {
            let cfg = EngineConfig {
                filter_taps: l,
                ..engine.clone()
            };
            cfg.validate()?;
            let reports = oracle_over_suite(suite, &cfg, protocol)?;
            Ok(aggregate(l as f64, format!("taps_{l}"), suite_names(suite), reports))
        })
        .collect()
}

/// Mean reduction per injected output latency (in samples).
pub fn sweep_latency(
    suite: &[NamedScene],
    latency_samples: &[usize],
    engine: &EngineConfig,
    protocol: &EvalProtocol,
) -> Result<Vec<SweepPoint>> {
    latency_samples
        .iter()
        .map(|&lat| {
            let cfg = EngineConfig {
                injected_latency_samples: lat,
                ..engine.clone()
            };
            cfg.validate()?;
            let reports = oracle_over_suite(suite, &cfg, protocol)?;
            Ok(aggregate(lat as f64, format!("latency_{lat}"), suite_names(suite), reports))
        })
        .collect()
}

/// Mean reduction versus the first source's direction of arrival, sweeping
/// `n_angles` equally spaced azimuths around the full circle.
pub fn sweep_doa(
    base: &SceneConfig,
    n_angles: usize,
    engine: &EngineConfig,
    protocol: &EvalProtocol,
) -> Result<Vec<SweepPoint>> {
    if n_angles == 0 {
        return Err(Error::config("need at least one azimuth"));
    }
    if base.sources.is_empty() {
        return Err(Error::config("the base scene needs a source to rotate"));
    }
    engine.validate()?;
    (0..n_angles)
        .into_par_iter()
        .map(|i| {
            let angle = 360.0 * i as f64 / n_angles as f64;
            let mut cfg = base.clone();
            cfg.sources[0].azimuth_deg = angle;
            let report = run_chunked_eval(
                &cfg,
                &WienerOracleEstimator::new(engine.filter_taps),
                engine,
                protocol,
                EvalMode::Offline,
            )?;
            Ok(aggregate(
                angle,
                format!("doa_{angle}"),
                vec![format!("doa_{angle}")],
                vec![report],
            ))
        })
        .collect()
}

/// Best-subset reduction per microphone count: for every scene and count,
/// all subsets of that size are evaluated and the best per-scene mean is
/// kept (scenes with fewer microphones than the requested count use their
/// full set). The point mean averages those per-scene bests.
pub fn sweep_mics(
    suite: &[NamedScene],
    counts: &[usize],
    engine: &EngineConfig,
    protocol: &EvalProtocol,
) -> Result<Vec<SweepPoint>> {
    if suite.is_empty() {
        return Err(Error::config("the scene suite is empty"));
    }
    if counts.iter().any(|&c| c == 0) {
        return Err(Error::config("microphone counts start at 1"));
    }
    engine.validate()?;
    // One render per scene, sliced many ways.
    let per_scene: Vec<(String, Vec<(usize, String, EvalReport)>)> = suite
        .par_iter()
        .map(|s| {
            let scene = render_scene(&s.config)?;
            let m = scene.mics.channels.len();
            let mut best = Vec::new();
            for &count in counts {
                let k = count.min(m);
                let mut winner: Option<(String, EvalReport)> = None;
                for subset in combinations(m, k) {
                    let sub = mic_subset_scene(&scene, &subset)?;
                    let provenance = Provenance {
                        geometry_hash: geometry_hash(&sub.geometry),
                        source_seeds: s.config.sources.iter().map(|src| src.seed).collect(),
                        reflection_seed: s.config.reflection_seed,
                        fs: sub.fs,
                    };
                    let report = run_chunked_eval_rendered(
                        &sub,
                        provenance,
                        &WienerOracleEstimator::new(engine.filter_taps),
                        engine,
                        protocol,
                        EvalMode::Offline,
                    )?;
                    let names: Vec<&str> =
                        sub.geometry.mics.iter().map(|mic| mic.name.as_str()).collect();
                    let label = format!("{}[{}]", s.name, names.join("+"));
                    let better = winner
                        .as_ref()
                        .map_or(true, |(_, best)| report.mean_db > best.mean_db);
                    if better {
                        winner = Some((label, report));
                    }
                }
                let (label, report) = winner.expect("at least one subset per count");
                best.push((count, label, report));
            }
            Ok((s.name.clone(), best))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(counts
        .iter()
        .map(|&count| {
            let mut names = Vec::new();
            let mut reports = Vec::new();
            for (_, best) in &per_scene {
                let (_, label, report) = best
                    .iter()
                    .find(|(c, _, _)| *c == count)
                    .expect("every count evaluated per scene");
                names.push(label.clone());
                reports.push(report.clone());
            }
            aggregate(count as f64, format!("mics_{count}"), names, reports)
        })
        .collect())
}

/// Mean reduction per number of simultaneous sources. Extra sources derive
/// from each scene's first source: rotated by 120 degrees per step and
/// reseeded, same kind, level, and distance.
pub fn sweep_sources(
    suite: &[NamedScene],
    counts: &[usize],
    engine: &EngineConfig,
    protocol: &EvalProtocol,
) -> Result<Vec<SweepPoint>> {
    if counts.iter().any(|&c| c == 0) {
        return Err(Error::config("source counts start at 1"));
    }
    counts
        .iter()
        .map(|&count| {
            let variants: Vec<NamedScene> = suite
                .iter()
                .map(|s| {
                    let mut cfg = s.config.clone();
                    let first = cfg.sources[0].clone();
                    cfg.sources = (0..count)
                        .map(|j| {
                            let mut src = first.clone();
                            src.azimuth_deg = (first.azimuth_deg + 120.0 * j as f64) % 360.0;
                            src.seed = first.seed + 1000 * j as u64;
                            src
                        })
                        .collect();
                    NamedScene {
                        name: format!("{}_x{count}", s.name),
                        config: cfg,
                    }
                })
                .collect();
            let reports = oracle_over_suite(&variants, engine, protocol)?;
            Ok(aggregate(
                count as f64,
                format!("sources_{count}"),
                suite_names(&variants),
                reports,
            ))
        })
        .collect()
}

/// All `k`-element index subsets of `0..m`, in lexicographic order.
fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn recurse(m: usize, k: usize, next: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in next..m {
            if m - i < k - current.len() {
                break;
            }
            current.push(i);
            recurse(m, k, i + 1, current, out);
            current.pop();
        }
    }
    recurse(m, k, 0, &mut current, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::NoiseKind;
    use crate::eval::EvalMode;
    use crate::scene::{GeometrySpec, SourceConfig};

    fn mini_scene(azimuth_deg: f64, seed: u64) -> NamedScene {
        NamedScene {
            name: format!("mini_{seed}"),
            config: SceneConfig {
                fs: 22050,
                duration_s: 4.5,
                c: 343.0,
                rt60_s: 0.0,
                diffuse_level_db: -28.0,
                reflection_seed: seed,
                feedback_coupling_db: f64::NEG_INFINITY,
                geometry: GeometrySpec::Name("compact_left".into()),
                sources: vec![SourceConfig {
                    azimuth_deg,
                    distance_m: 2.0,
                    level_db: 0.0,
                    seed: seed + 50,
                    kind: NoiseKind::White,
                }],
            },
        }
    }

    fn small_engine() -> EngineConfig {
        EngineConfig {
            filter_taps: 256,
            ..EngineConfig::default()
        }
    }

    #[test]
    fn combinations_enumerate_subsets() {
        assert_eq!(combinations(4, 1).len(), 4);
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(4, 4), vec![vec![0, 1, 2, 3]]);
        assert_eq!(combinations(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
    }

    #[test]
    fn taps_sweep_reports_one_point_per_length_and_validates() {
        let suite = [mini_scene(60.0, 1)];
        let points = sweep_taps(&suite, &[256], &small_engine(), &EvalProtocol::default()).unwrap();
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].axis, 256.0);
        assert_eq!(points[0].reports.len(), 1);
        assert_eq!(points[0].reports[0].chunks_db.len(), 4);
        assert!(points[0].mean_db.is_finite());

        let err = sweep_taps(&suite, &[250], &small_engine(), &EvalProtocol::default());
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn doa_sweep_walks_the_circle() {
        let base = mini_scene(0.0, 2).config;
        let points = sweep_doa(&base, 4, &small_engine(), &EvalProtocol::default()).unwrap();
        let axes: Vec<f64> = points.iter().map(|p| p.axis).collect();
        assert_eq!(axes, vec![0.0, 90.0, 180.0, 270.0]);
        assert!(points.iter().all(|p| p.reports.len() == 1));
    }

    #[test]
    fn full_mic_set_equals_the_plain_evaluation() {
        let suite = [mini_scene(45.0, 3)];
        let points = sweep_mics(&suite, &[2], &small_engine(), &EvalProtocol::default()).unwrap();
        let direct = run_chunked_eval(
            &suite[0].config,
            &WienerOracleEstimator::new(256),
            &small_engine(),
            &EvalProtocol::default(),
            EvalMode::Offline,
        )
        .unwrap();
        assert_eq!(points[0].mean_db, direct.mean_db);
        assert!(points[0].scene_names[0].contains("temple_mid+temple_hinge"));
    }

    #[test]
    fn single_source_point_matches_the_base_scene() {
        let suite = [mini_scene(120.0, 4)];
        let points =
            sweep_sources(&suite, &[1, 2], &small_engine(), &EvalProtocol::default()).unwrap();
        let direct = run_chunked_eval(
            &suite[0].config,
            &WienerOracleEstimator::new(256),
            &small_engine(),
            &EvalProtocol::default(),
            EvalMode::Offline,
        )
        .unwrap();
        assert_eq!(points[0].mean_db, direct.mean_db);
        assert_ne!(points[1].mean_db, points[0].mean_db);
        assert_eq!(points[1].axis, 2.0);
    }

    #[test]
    fn sweeps_are_deterministic_across_runs() {
        let suite = [mini_scene(30.0, 5), mini_scene(200.0, 6)];
        let run = || {
            sweep_latency(&suite, &[1, 8], &small_engine(), &EvalProtocol::default()).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.len(), b.len());
        for (pa, pb) in a.iter().zip(&b) {
            assert_eq!(pa.mean_db, pb.mean_db);
            assert_eq!(pa.std_db, pb.std_db);
            for (ra, rb) in pa.reports.iter().zip(&pb.reports) {
                assert_eq!(ra.chunks_db, rb.chunks_db);
            }
        }
    }
}
