//! Evaluation harness: the chunked noise-reduction metric, the standard
//! scene suite, parameter sweeps, and CSV/plot-data reporting.
//!
//! The central quantity is in-band noise reduction: the dB ratio of
//! disturbance energy to residual energy after both are band-pass filtered
//! (100–1000 Hz by default). Scenes are scored in short chunks on a fixed
//! grid so that offline and closed-loop runs of the same scene are directly
//! comparable, chunk by chunk.

mod chunked;
mod metric;
mod report;
mod suite;
mod sweeps;

pub use chunked::{
    run_chunked_eval, run_chunked_eval_rendered, score_residual_chunks, EvalMode, EvalReport,
    Provenance,
};
pub use metric::{noise_reduction_db, EvalProtocol};
pub use report::{chunks_csv, content_hash, geometry_hash, plot_data, sweep_csv};
pub use suite::{load_suite, mic_subset_scene, standard_suite, NamedScene};
pub use sweeps::{
    sweep_doa, sweep_latency, sweep_mics, sweep_sources, sweep_taps, SweepPoint,
};
