//! Per-sample cost of the hybrid partitioned engine versus plain
//! time-domain convolution, measured on the build machine.

use std::time::Instant;

use serde::Serialize;

use crate::control::AncFilterSet;
use crate::dsp::{seeded_noise, FirFilter, NoiseKind};
use crate::engine::{Engine, EngineConfig};
use crate::{Error, Result};

/// One measured configuration. Costs are nanoseconds per sample, averaged
/// over repeated runs, with the run-to-run standard deviation alongside.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub taps: usize,
    pub block: usize,
    pub direct_ns: f64,
    pub direct_std_ns: f64,
    pub hybrid_ns: f64,
    pub hybrid_std_ns: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Sample-by-sample ring-buffer convolution: the cost an engine without
/// partitioning would pay for the same filter.
fn direct_ns_per_sample(w: &[f64], x: &[f64]) -> f64 {
    let cap = w.len().next_power_of_two();
    let mask = cap - 1;
    let mut ring = vec![0.0; cap];
    let mut pos = 0usize;
    let mut sink = 0.0;
    let t = Instant::now();
    for &v in x {
        ring[pos & mask] = v;
        let mut acc = 0.0;
        for (k, &wk) in w.iter().enumerate() {
            acc += wk * ring[(pos + cap - k) & mask];
        }
        sink += acc;
        pos += 1;
    }
    let dt = t.elapsed().as_nanos() as f64;
    std::hint::black_box(sink);
    dt / x.len() as f64
}

fn hybrid_ns_per_sample(cfg: &EngineConfig, filters: &AncFilterSet, x: &[f64]) -> Result<f64> {
    let g = vec![FirFilter::new(cfg.fs, vec![0.0])];
    let mut engine = Engine::new(filters, &g, cfg)?;
    // Settle past any leading crossfade so only steady-state work is timed.
    let warmup = 2 * cfg.crossfade_len() + 2 * cfg.block_size;
    let mut sink = 0.0;
    for &v in &x[..warmup] {
        sink += engine.process_sample(&[v], 0.0);
    }
    let timed = &x[warmup..];
    let t = Instant::now();
    for &v in timed {
        sink += engine.process_sample(&[v], 0.0);
    }
    let dt = t.elapsed().as_nanos() as f64;
    std::hint::black_box(sink);
    Ok(dt / timed.len() as f64)
}

/// Measure one (taps, block) cell: `repeats` interleaved runs of the direct
/// and hybrid paths over `samples` timed samples each.
pub fn bench_convolution(
    taps: usize,
    block: usize,
    samples: usize,
    repeats: usize,
) -> Result<BenchRow> {
    let fs = 22050;
    let cfg = EngineConfig {
        block_size: block,
        filter_taps: taps,
        fs,
        injected_latency_samples: 1,
        crossfade_samples: None,
    };
    cfg.validate()?;
    if repeats < 2 {
        return Err(Error::config("need at least two repeats to report a spread"));
    }
    let warmup = 2 * cfg.crossfade_len() + 2 * cfg.block_size;
    if samples < 4 * block {
        return Err(Error::config("too few samples to amortize a block"));
    }
    let x = seeded_noise(
        NoiseKind::White,
        2024,
        (samples + warmup) as f64 / fs as f64 + 1.0 / fs as f64,
        fs,
    )?
    .samples;
    let w_taps = seeded_noise(NoiseKind::White, 77, taps as f64 / fs as f64 + 0.001, fs)?.samples
        [..taps]
        .to_vec();
    let filters = AncFilterSet::new(fs, vec![w_taps.clone()], 0.0)?;

    let mut direct = Vec::with_capacity(repeats);
    let mut hybrid = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        direct.push(direct_ns_per_sample(&w_taps, &x[..samples]));
        hybrid.push(hybrid_ns_per_sample(&cfg, &filters, &x)?);
    }
    let (direct_ns, direct_std_ns) = mean_std(&direct);
    let (hybrid_ns, hybrid_std_ns) = mean_std(&hybrid);
    Ok(BenchRow {
        taps,
        block,
        direct_ns,
        direct_std_ns,
        hybrid_ns,
        hybrid_std_ns,
    })
}

/// Render rows as an aligned text table.
pub fn bench_table(rows: &[BenchRow]) -> String {
    let mut out = String::from(
        "taps     block    direct_ns        hybrid_ns        speedup\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{:<8} {:<8} {:>8.1} ±{:<6.1} {:>8.1} ±{:<6.1} {:>6.2}x\n",
            r.taps,
            r.block,
            r.direct_ns,
            r.direct_std_ns,
            r.hybrid_ns,
            r.hybrid_std_ns,
            r.direct_ns / r.hybrid_ns,
        ));
    }
    out
}
