//! Real-time control engine.
//!
//! The engine consumes one multi-microphone input sample at a time and emits
//! one driver sample, convolving every reference channel with its control
//! filter at zero added latency: the first two blocks of each filter run as a
//! direct convolution (so tap 0 acts on the sample being processed), while
//! the remainder is partitioned, transformed once, and convolved against a
//! frequency delay line of input spectra. Filter swaps crossfade to stay
//! click-free, and a per-sample feedback canceller subtracts the predicted
//! driver leak from each microphone before the references are used.
//!
//! [`simulate_closed_loop`] couples the engine back into a rendered scene —
//! true driver-to-microphone feedback, injected output latency, and a
//! scheduled estimator — and records what an ear at the quiet-zone centre
//! would hear.

mod closed_loop;
mod hybrid;

pub use closed_loop::{
    simulate_closed_loop, ClosedLoopOptions, ClosedLoopResult, LogEvent, UpdateSchedule,
};
pub use hybrid::Engine;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Runtime geometry of the control engine.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// Samples per processing block. Must be a power of two.
    pub block_size: usize,
    /// Control-filter length per reference channel. Must be a multiple of
    /// `block_size` and span at least two blocks.
    pub filter_taps: usize,
    pub fs: u32,
    /// Extra output delay standing in for compute plus converter latency.
    /// The loop itself already costs one sample, so this is at least 1.
    pub injected_latency_samples: usize,
    /// Length of the linear crossfade used when filters are swapped;
    /// `None` fades over one block.
    pub crossfade_samples: Option<usize>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            block_size: 128,
            filter_taps: 2048,
            fs: 22050,
            injected_latency_samples: 1,
            crossfade_samples: None,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fs == 0 {
            return Err(Error::config("sample rate must be positive"));
        }
        if !self.block_size.is_power_of_two() {
            return Err(Error::config(format!(
                "block size must be a power of two, got {}",
                self.block_size
            )));
        }
        if self.filter_taps < 2 * self.block_size {
            return Err(Error::config(format!(
                "control filters must span at least two blocks ({} taps), got {}",
                2 * self.block_size,
                self.filter_taps
            )));
        }
        if self.filter_taps % self.block_size != 0 {
            return Err(Error::config(format!(
                "filter length {} is not a multiple of the block size {}",
                self.filter_taps, self.block_size
            )));
        }
        if self.injected_latency_samples == 0 {
            return Err(Error::config(
                "injected latency below one sample is not realizable",
            ));
        }
        if self.crossfade_samples == Some(0) {
            return Err(Error::config("crossfade must last at least one sample"));
        }
        Ok(())
    }

    /// Crossfade length in samples; defaults to one block.
    pub fn crossfade_len(&self) -> usize {
        self.crossfade_samples.unwrap_or(self.block_size)
    }

    /// Number of frequency-domain tail partitions per channel.
    pub fn tail_partitions(&self) -> usize {
        self.filter_taps / self.block_size - 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_invariants_are_enforced() {
        assert!(EngineConfig::default().validate().is_ok());
        let bad = [
            EngineConfig {
                block_size: 96,
                ..EngineConfig::default()
            },
            EngineConfig {
                filter_taps: 2049,
                ..EngineConfig::default()
            },
            EngineConfig {
                filter_taps: 128,
                ..EngineConfig::default()
            },
            EngineConfig {
                injected_latency_samples: 0,
                ..EngineConfig::default()
            },
            EngineConfig {
                crossfade_samples: Some(0),
                ..EngineConfig::default()
            },
            EngineConfig {
                fs: 0,
                ..EngineConfig::default()
            },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
        }
    }

    #[test]
    fn derived_sizes_match_the_partition_layout() {
        let cfg = EngineConfig::default();
        assert_eq!(cfg.tail_partitions(), 14);
        assert_eq!(cfg.crossfade_len(), 128);
        let small = EngineConfig {
            filter_taps: 256,
            crossfade_samples: Some(32),
            ..EngineConfig::default()
        };
        assert_eq!(small.tail_partitions(), 0);
        assert_eq!(small.crossfade_len(), 32);
    }
}
