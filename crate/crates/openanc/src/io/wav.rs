//! WAV read/write: 16-bit PCM and 32-bit float RIFF, mono or multichannel.

use crate::dsp::MultiWaveform;
use crate::{Error, Result};
use std::path::Path;

/// Sample encoding used when writing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    /// 16-bit signed PCM; samples are clamped to [-1, 1] and scaled.
    Pcm16,
    /// 32-bit IEEE float, stored as-is.
    Float32,
}

/// Write all channels interleaved as 32-bit float.
pub fn write_wav_f32(path: impl AsRef<Path>, audio: &MultiWaveform) -> Result<()> {
    write_wav(path, audio, WavEncoding::Float32)
}

/// Write all channels interleaved as 16-bit PCM.
pub fn write_wav_i16(path: impl AsRef<Path>, audio: &MultiWaveform) -> Result<()> {
    write_wav(path, audio, WavEncoding::Pcm16)
}

fn write_wav(path: impl AsRef<Path>, audio: &MultiWaveform, enc: WavEncoding) -> Result<()> {
    let channels = audio.num_channels();
    if channels == 0 || channels > u16::MAX as usize {
        return Err(Error::config(format!("unsupported channel count {channels}")));
    }
    let spec = hound::WavSpec {
        channels: channels as u16,
        sample_rate: audio.fs,
        bits_per_sample: match enc {
            WavEncoding::Pcm16 => 16,
            WavEncoding::Float32 => 32,
        },
        sample_format: match enc {
            WavEncoding::Pcm16 => hound::SampleFormat::Int,
            WavEncoding::Float32 => hound::SampleFormat::Float,
        },
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for i in 0..audio.len() {
        for ch in &audio.channels {
            match enc {
                WavEncoding::Pcm16 => {
                    let v = ch[i].clamp(-1.0, 1.0);
                    writer.write_sample((v * 32767.0).round() as i16)?;
                }
                WavEncoding::Float32 => writer.write_sample(ch[i] as f32)?,
            }
        }
    }
    writer.finalize()?;
    Ok(())
}

/// Read a 16-bit PCM or 32-bit float WAV into channel-separated `f64`
/// buffers. PCM samples are scaled to [-1, 1].
pub fn read_wav(path: impl AsRef<Path>) -> Result<MultiWaveform> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::format("wav has zero channels"));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32767.0))
            .collect::<std::result::Result<_, _>>()?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()?,
        (fmt, bits) => {
            return Err(Error::format(format!(
                "unsupported wav encoding: {fmt:?} at {bits} bits"
            )))
        }
    };
    if interleaved.len() % channels != 0 {
        return Err(Error::format("truncated wav: frame count not integral"));
    }
    let frames = interleaved.len() / channels;
    let mut chans = vec![Vec::with_capacity(frames); channels];
    for (i, v) in interleaved.into_iter().enumerate() {
        chans[i % channels].push(v);
    }
    MultiWaveform::new(spec.sample_rate, chans)
}
