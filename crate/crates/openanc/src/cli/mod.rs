//! Command-line frontend: `scene`, `sysid`, `run`, `sweep`, and `bench`
//! subcommands over the library pipelines.
//!
//! Every command is driven by config files; flags only override. Exit
//! codes: 0 success, 2 configuration or usage error, 3 numerical failure,
//! 4 I/O or file-format error.

mod bench;
mod bundle;
mod commands;

pub use bench::{bench_convolution, bench_table, BenchRow};
pub use bundle::{read_bundle, write_bundle, BundleMeta};
pub use commands::{
    cmd_run, cmd_scene, cmd_sweep, cmd_sysid, suite_template, RunArtifact, RunConfig,
    SweepArtifact,
};

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::{Error, Result};

#[derive(Parser)]
#[command(
    name = "openanc",
    version,
    about = "Deterministic feedforward ANC simulation: scenes, path measurement, closed-loop runs, sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scene config into an on-disk bundle (audio + true paths)
    Scene {
        /// Scene configuration (TOML)
        config: PathBuf,
        /// Bundle directory to create
        #[arg(long)]
        out: PathBuf,
        /// Reseed the whole scene: diffuse field gets SEED, source j gets SEED+1+j
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Measure a bundle's acoustic paths with exponential sweeps
    Sysid {
        /// Bundle directory produced by `scene`
        bundle: PathBuf,
        /// Which path family to measure
        #[arg(long = "type", value_enum)]
        kind: PathKind,
        /// Directory for the estimated path files
        #[arg(long)]
        out: PathBuf,
        /// Measurement setup (TOML); defaults used when omitted
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the number of averaged sweep playbacks
        #[arg(long)]
        averages: Option<usize>,
        /// Override the measurement-noise level (dB re recording RMS)
        #[arg(long)]
        noise_db: Option<f64>,
    },
    /// Closed-loop run on one scene: residual audio, JSONL log, report
    Run {
        /// Scene configuration (TOML)
        scene: PathBuf,
        /// Filter estimator driving the loop
        #[arg(long, value_enum, default_value_t = EstimatorKind::WienerOracle)]
        estimator: EstimatorKind,
        /// Engine and protocol settings (TOML); defaults used when omitted
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Golden mean-reduction file to verify against (or bless)
        #[arg(long)]
        golden: Option<PathBuf>,
        /// Rewrite the golden file from this run instead of verifying
        #[arg(long)]
        bless: bool,
    },
    /// Parameter sweep over a scene suite
    Sweep {
        /// Which axis to sweep
        #[arg(value_enum)]
        kind: SweepKind,
        /// Suite description: a [[scenes]] array (TOML)
        suite: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Override the swept values (comma separated; not for doa)
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<usize>>,
        /// Number of equally spaced azimuths (doa only)
        #[arg(long)]
        angles: Option<usize>,
        /// Engine and protocol settings (TOML); defaults used when omitted
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Per-sample cost: hybrid partitioned engine vs direct convolution
    Bench {
        /// Filter lengths to measure
        #[arg(long, value_delimiter = ',', default_value = "256,1024,2048")]
        taps: Vec<usize>,
        /// Engine block size
        #[arg(long, default_value_t = 128)]
        block: usize,
        /// Timed samples per measurement
        #[arg(long, default_value_t = 30000)]
        samples: usize,
        /// Repeated measurements per cell (reported as mean and std)
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        /// Also write the table as CSV
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorKind {
    /// Regularized Wiener solution with oracle knowledge of the ear signal
    WienerOracle,
    /// All-zero filters (measures the untouched disturbance)
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathKind {
    /// Speaker to ear
    Secondary,
    /// Speaker to each reference microphone
    Feedback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Taps,
    Latency,
    Doa,
    Mics,
    Sources,
}

impl SweepKind {
    pub fn label(self) -> &'static str {
        match self {
            SweepKind::Taps => "taps",
            SweepKind::Latency => "latency",
            SweepKind::Doa => "doa",
            SweepKind::Mics => "mics",
            SweepKind::Sources => "sources",
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Scene { config, out, seed } => cmd_scene(&config, &out, seed),
        Command::Sysid {
            bundle,
            kind,
            out,
            config,
            averages,
            noise_db,
        } => cmd_sysid(&bundle, kind, &out, config.as_deref(), averages, noise_db),
        Command::Run {
            scene,
            estimator,
            config,
            out,
            golden,
            bless,
        } => cmd_run(&scene, estimator, config.as_deref(), &out, golden.as_deref(), bless),
        Command::Sweep {
            kind,
            suite,
            out,
            values,
            angles,
            config,
        } => cmd_sweep(kind, &suite, &out, values.as_deref(), angles, config.as_deref()),
        Command::Bench {
            taps,
            block,
            samples,
            repeats,
            out,
        } => cmd_bench(&taps, block, samples, repeats, out.as_deref()),
    }
}

fn cmd_bench(
    taps: &[usize],
    block: usize,
    samples: usize,
    repeats: usize,
    out: Option<&std::path::Path>,
) -> Result<()> {
    if taps.is_empty() {
        return Err(Error::config("need at least one filter length"));
    }
    let rows: Vec<BenchRow> = taps
        .iter()
        .map(|&l| bench_convolution(l, block, samples, repeats))
        .collect::<Result<_>>()?;
    print!("{}", bench_table(&rows));
    if let Some(path) = out {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        for row in &rows {
            wtr.serialize(row).map_err(|e| Error::format(e.to_string()))?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::format(e.to_string()))?;
        std::fs::write(path, bytes)?;
    }
    Ok(())
}

/// Map an error to its process exit code.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        Error::Numerical(_) => 3,
        Error::Io(_) | Error::Format(_) => 4,
    }
}

/// Entry point for the `openanc` binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("openanc: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_their_documented_exit_codes() {
        assert_eq!(exit_code(&Error::config("x")), 2);
        assert_eq!(exit_code(&Error::numerical("x")), 3);
        assert_eq!(exit_code(&Error::format("x")), 4);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 4);
    }

    #[test]
    fn estimator_names_parse_and_unknown_names_are_usage_errors() {
        let ok = Cli::try_parse_from([
            "openanc",
            "run",
            "scene.toml",
            "--estimator",
            "wiener-oracle",
            "--out",
            "o",
        ]);
        assert!(ok.is_ok());
        let bad = Cli::try_parse_from([
            "openanc",
            "run",
            "scene.toml",
            "--estimator",
            "magic",
            "--out",
            "o",
        ]);
        let err = bad.err().expect("unknown estimator must be rejected");
        assert!(err.use_stderr(), "usage errors exit nonzero");
    }

    #[test]
    fn sweep_kinds_and_value_lists_parse() {
        let cli = Cli::try_parse_from([
            "openanc",
            "sweep",
            "latency",
            "suite.toml",
            "--out",
            "o",
            "--values",
            "1,2,4",
        ])
        .unwrap();
        match cli.command {
            Command::Sweep { kind, values, .. } => {
                assert_eq!(kind, SweepKind::Latency);
                assert_eq!(values, Some(vec![1, 2, 4]));
            }
            _ => panic!("parsed into the wrong command"),
        }
    }

    #[test]
    fn bench_defaults_cover_the_documented_grid() {
        let cli = Cli::try_parse_from(["openanc", "bench"]).unwrap();
        match cli.command {
            Command::Bench { taps, block, repeats, .. } => {
                assert_eq!(taps, vec![256, 1024, 2048]);
                assert_eq!(block, 128);
                assert!(repeats >= 2);
            }
            _ => panic!("parsed into the wrong command"),
        }
    }
}
