//! Hybrid time/frequency-domain convolver with feedback cancellation and
//! click-free filter swaps.

use num_complex::Complex;

use crate::control::AncFilterSet;
use crate::dsp::{irfft, rfft, FirFilter};
use crate::{Error, Result};

use super::EngineConfig;

/// One control-filter set prepared for the hybrid split: the first two
/// blocks stay in the time domain, the rest becomes per-block spectra.
struct FilterBank {
    /// First `2B` taps per channel, applied directly so tap 0 acts on the
    /// sample being processed.
    head: Vec<Vec<f64>>,
    /// Remaining taps as `2B`-point spectra of zero-padded one-block
    /// partitions, per channel.
    partitions: Vec<Vec<Vec<Complex<f64>>>>,
    /// Tail contribution to the block currently being emitted, summed over
    /// channels and partitions.
    tail_block: Vec<f64>,
}

impl FilterBank {
    fn new(filters: &AncFilterSet, cfg: &EngineConfig) -> FilterBank {
        let b = cfg.block_size;
        let p = cfg.tail_partitions();
        let mut head = Vec::with_capacity(filters.num_channels());
        let mut partitions = Vec::with_capacity(filters.num_channels());
        let mut padded = vec![0.0; 2 * b];
        for w in &filters.w {
            head.push(w[..2 * b].to_vec());
            let mut parts = Vec::with_capacity(p);
            for j in 0..p {
                padded[..b].copy_from_slice(&w[2 * b + j * b..3 * b + j * b]);
                parts.push(rfft(&padded));
            }
            partitions.push(parts);
        }
        FilterBank {
            head,
            partitions,
            tail_block: vec![0.0; b],
        }
    }
}

struct Fading {
    bank: FilterBank,
    step: usize,
}

/// Streaming multi-reference convolver.
///
/// Swapped-in filters start crossfading at the next block boundary (so the
/// incoming tail can be built from the same input spectra as the outgoing
/// one) and blend linearly over [`EngineConfig::crossfade_len`] samples. A
/// swap requested while a fade is still running waits for it to finish;
/// among queued requests the latest wins.
pub struct Engine {
    cfg: EngineConfig,
    channels: usize,
    /// Feedback-path model per microphone; all-zero taps disable the
    /// canceller for that channel.
    g_hat: Vec<Vec<f64>>,
    /// Per-channel ring of cleaned reference samples, capacity `2B`.
    x_ring: Vec<Vec<f64>>,
    x_mask: usize,
    /// Slot of the most recent reference sample.
    x_pos: usize,
    /// Ring of emitted anti-noise samples feeding the feedback predictor.
    y_ring: Vec<f64>,
    y_mask: usize,
    y_pos: usize,
    /// Frequency delay line: per channel, spectra of the last `P` input
    /// blocks, newest at `fdl_head`.
    fdl: Vec<Vec<Vec<Complex<f64>>>>,
    fdl_head: usize,
    active: FilterBank,
    fading: Option<Fading>,
    requested: Option<FilterBank>,
    sample_index: u64,
    scratch: Vec<f64>,
    acc: Vec<Complex<f64>>,
}

impl Engine {
    /// Builds a ready-to-run engine. `g_hat` needs one feedback model per
    /// reference microphone; pass zero filters to run without cancellation.
    pub fn new(filters: &AncFilterSet, g_hat: &[FirFilter], cfg: &EngineConfig) -> Result<Engine> {
        cfg.validate()?;
        let m = filters.num_channels();
        if m == 0 {
            return Err(Error::config("need at least one reference channel"));
        }
        if filters.fs != cfg.fs {
            return Err(Error::config(format!(
                "filter rate {} does not match the engine rate {}",
                filters.fs, cfg.fs
            )));
        }
        if filters.taps_per_channel() != cfg.filter_taps {
            return Err(Error::config(format!(
                "expected {} taps per channel, got {}",
                cfg.filter_taps,
                filters.taps_per_channel()
            )));
        }
        if g_hat.len() != m {
            return Err(Error::config(format!(
                "need one feedback model per microphone: got {} for {m} channels",
                g_hat.len()
            )));
        }
        if let Some(g) = g_hat.iter().find(|g| g.fs != cfg.fs) {
            return Err(Error::config(format!(
                "feedback model rate {} does not match the engine rate {}",
                g.fs, cfg.fs
            )));
        }
        let b = cfg.block_size;
        let p = cfg.tail_partitions();
        let max_g = g_hat.iter().map(|g| g.len()).max().unwrap_or(0);
        let y_cap = (max_g + 2).next_power_of_two();
        Ok(Engine {
            active: FilterBank::new(filters, cfg),
            cfg: cfg.clone(),
            channels: m,
            g_hat: g_hat.iter().map(|g| g.taps.clone()).collect(),
            x_ring: vec![vec![0.0; 2 * b]; m],
            x_mask: 2 * b - 1,
            x_pos: 0,
            y_ring: vec![0.0; y_cap],
            y_mask: y_cap - 1,
            y_pos: 0,
            fdl: vec![vec![vec![Complex::new(0.0, 0.0); b + 1]; p]; m],
            fdl_head: 0,
            fading: None,
            requested: None,
            sample_index: 0,
            scratch: vec![0.0; 2 * b],
            acc: vec![Complex::new(0.0, 0.0); b + 1],
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn num_channels(&self) -> usize {
        self.channels
    }

    /// Consumes one raw sample per microphone plus a playback sample and
    /// returns the driver output `y[n] + playback`.
    pub fn process_sample(&mut self, raw_mics: &[f64], playback: f64) -> f64 {
        self.step(raw_mics, playback, None)
    }

    /// Same as [`Engine::process_sample`] but also writes the
    /// feedback-cleaned reference samples into `clean_out`.
    pub fn process_sample_recording(
        &mut self,
        raw_mics: &[f64],
        playback: f64,
        clean_out: &mut [f64],
    ) -> f64 {
        assert_eq!(
            clean_out.len(),
            self.channels,
            "one output slot per microphone"
        );
        self.step(raw_mics, playback, Some(clean_out))
    }

    /// Queues a new filter set. The crossfade starts at the next block
    /// boundary (after any fade already in progress completes); until then a
    /// newer request replaces this one.
    pub fn update_filters(&mut self, filters: &AncFilterSet) -> Result<()> {
        if filters.num_channels() != self.channels {
            return Err(Error::config(format!(
                "expected {} channels, got {}",
                self.channels,
                filters.num_channels()
            )));
        }
        if filters.taps_per_channel() != self.cfg.filter_taps {
            return Err(Error::config(format!(
                "expected {} taps per channel, got {}",
                self.cfg.filter_taps,
                filters.taps_per_channel()
            )));
        }
        if filters.fs != self.cfg.fs {
            return Err(Error::config(format!(
                "filter rate {} does not match the engine rate {}",
                filters.fs, self.cfg.fs
            )));
        }
        self.requested = Some(FilterBank::new(filters, &self.cfg));
        Ok(())
    }

    fn step(&mut self, raw_mics: &[f64], playback: f64, mut clean_out: Option<&mut [f64]>) -> f64 {
        assert_eq!(raw_mics.len(), self.channels, "one sample per microphone");
        let b = self.cfg.block_size;
        let t = (self.sample_index % b as u64) as usize;
        if t == 0 {
            self.block_boundary();
        }
        // Subtract the predicted driver leak, then push the cleaned
        // references. The predictor only sees y[n-1] and older.
        let y_cap = self.y_ring.len();
        self.x_pos = (self.x_pos + 1) & self.x_mask;
        for ch in 0..self.channels {
            let mut fb = 0.0;
            for (k, &gk) in self.g_hat[ch].iter().enumerate() {
                fb += gk * self.y_ring[(self.y_pos + y_cap - k) & self.y_mask];
            }
            let clean = raw_mics[ch] - fb;
            self.x_ring[ch][self.x_pos] = clean;
            if let Some(out) = clean_out.as_deref_mut() {
                out[ch] = clean;
            }
        }
        let y_active = self.bank_output(&self.active, t);
        let y = match &self.fading {
            Some(f) => {
                let y_new = self.bank_output(&f.bank, t);
                let alpha = (f.step + 1) as f64 / self.cfg.crossfade_len() as f64;
                y_active + alpha * (y_new - y_active)
            }
            None => y_active,
        };
        let mut fade_done = false;
        if let Some(f) = self.fading.as_mut() {
            f.step += 1;
            fade_done = f.step >= self.cfg.crossfade_len();
        }
        if fade_done {
            self.active = self.fading.take().unwrap().bank;
        }
        self.y_pos = (self.y_pos + 1) & self.y_mask;
        self.y_ring[self.y_pos] = y;
        self.sample_index += 1;
        y + playback
    }

    /// Direct head convolution plus the precomputed tail sample.
    fn bank_output(&self, bank: &FilterBank, t: usize) -> f64 {
        let cap = self.x_mask + 1;
        let mut acc = bank.tail_block[t];
        for (ch, head) in bank.head.iter().enumerate() {
            let ring = &self.x_ring[ch];
            let mut sum = 0.0;
            for (k, &w) in head.iter().enumerate() {
                sum += w * ring[(self.x_pos + cap - k) & self.x_mask];
            }
            acc += sum;
        }
        acc
    }

    /// Runs once per block, before the block's first sample is consumed:
    /// promotes a queued filter set, materializes each live bank's tail for
    /// the coming block, and appends the newest input spectrum to the delay
    /// line.
    fn block_boundary(&mut self) {
        if self.fading.is_none() {
            if let Some(bank) = self.requested.take() {
                self.fading = Some(Fading { bank, step: 0 });
            }
        }
        let p = self.cfg.tail_partitions();
        if p == 0 {
            return;
        }
        let b = self.cfg.block_size;
        Self::compute_tail(&self.fdl, self.fdl_head, &mut self.active, b, &mut self.acc);
        if let Some(f) = self.fading.as_mut() {
            Self::compute_tail(&self.fdl, self.fdl_head, &mut f.bank, b, &mut self.acc);
        }
        // The ring currently ends one sample before this block, so it holds
        // exactly the previous two blocks of references.
        let new_head = (self.fdl_head + p - 1) % p;
        for ch in 0..self.channels {
            for i in 0..2 * b {
                self.scratch[i] = self.x_ring[ch][(self.x_pos + 1 + i) & self.x_mask];
            }
            self.fdl[ch][new_head] = rfft(&self.scratch);
        }
        self.fdl_head = new_head;
    }

    /// Overlap-save tail: partition `j` of the filter meets the input
    /// spectrum recorded `j` boundaries ago; the last half of the inverse
    /// transform is the linear-convolution tail for the coming block.
    fn compute_tail(
        fdl: &[Vec<Vec<Complex<f64>>>],
        fdl_head: usize,
        bank: &mut FilterBank,
        b: usize,
        acc: &mut [Complex<f64>],
    ) {
        acc.fill(Complex::new(0.0, 0.0));
        let p = fdl[0].len();
        for (ch, parts) in bank.partitions.iter().enumerate() {
            for (j, w) in parts.iter().enumerate() {
                let x = &fdl[ch][(fdl_head + j) % p];
                for (a, (xi, wi)) in acc.iter_mut().zip(x.iter().zip(w)) {
                    *a += xi * wi;
                }
            }
        }
        let time = irfft(acc, 2 * b);
        bank.tail_block.copy_from_slice(&time[b..]);
    }
}
