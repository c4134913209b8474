//! Raw binary containers for impulse responses and ANC filter sets.
//!
//! Both formats are little-endian with a fixed header:
//!
//! Path bank (`OANCPATH`, version 1): `magic[8] | version u32 | fs u32 |
//! count u32 | len u32 * count | taps f64 * sum(len)`. Used for ground-truth
//! and estimated impulse-response collections of varying lengths.
//!
//! Filter set (`OANCFILT`, version 1): `magic[8] | version u32 | fs u32 |
//! channels u32 | taps_per_channel u32 | beta f64 | taps f64 *
//! channels*taps_per_channel` (channel-major). Used for estimated control
//! filters, with the regularization that produced them.

use crate::control::AncFilterSet;
use crate::dsp::FirFilter;
use crate::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

pub const PATH_MAGIC: &[u8; 8] = b"OANCPATH";
pub const FILTER_MAGIC: &[u8; 8] = b"OANCFILT";
const FORMAT_VERSION: u32 = 1;

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::format("truncated file"));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Write a collection of impulse responses sharing one sample rate.
pub fn write_path_bank(path: impl AsRef<Path>, filters: &[FirFilter]) -> Result<()> {
    if filters.is_empty() {
        return Err(Error::config("path bank needs at least one filter"));
    }
    let fs = filters[0].fs;
    if filters.iter().any(|f| f.fs != fs) {
        return Err(Error::config("all filters in a bank must share one sample rate"));
    }
    let mut buf = Vec::new();
    buf.extend_from_slice(PATH_MAGIC);
    put_u32(&mut buf, FORMAT_VERSION);
    put_u32(&mut buf, fs);
    put_u32(&mut buf, filters.len() as u32);
    for f in filters {
        put_u32(&mut buf, f.taps.len() as u32);
    }
    for f in filters {
        for &t in &f.taps {
            put_f64(&mut buf, t);
        }
    }
    std::fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

/// Read a path bank written by [`write_path_bank`].
pub fn read_path_bank(path: impl AsRef<Path>) -> Result<Vec<FirFilter>> {
    let mut data = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut data)?;
    let mut cur = Cursor { data: &data, pos: 0 };
    if cur.take(8)? != PATH_MAGIC {
        return Err(Error::format("bad magic: not a path bank"));
    }
    let version = cur.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::format(format!("unsupported path bank version {version}")));
    }
    let fs = cur.u32()?;
    if fs == 0 {
        return Err(Error::format("zero sample rate"));
    }
    let count = cur.u32()? as usize;
    let mut lens = Vec::with_capacity(count);
    for _ in 0..count {
        lens.push(cur.u32()? as usize);
    }
    let mut filters = Vec::with_capacity(count);
    for len in lens {
        if len == 0 {
            return Err(Error::format("zero-length impulse response"));
        }
        let mut taps = Vec::with_capacity(len);
        for _ in 0..len {
            taps.push(cur.f64()?);
        }
        filters.push(FirFilter::new(fs, taps));
    }
    if cur.pos != data.len() {
        return Err(Error::format("trailing bytes after path bank payload"));
    }
    Ok(filters)
}

/// Write an estimated filter set, preserving the regularization weight.
pub fn write_filter_set(path: impl AsRef<Path>, set: &AncFilterSet) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(FILTER_MAGIC);
    put_u32(&mut buf, FORMAT_VERSION);
    put_u32(&mut buf, set.fs);
    put_u32(&mut buf, set.num_channels() as u32);
    put_u32(&mut buf, set.taps_per_channel() as u32);
    put_f64(&mut buf, set.beta);
    for ch in &set.w {
        for &t in ch {
            put_f64(&mut buf, t);
        }
    }
    std::fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

/// Read a filter set written by [`write_filter_set`].
pub fn read_filter_set(path: impl AsRef<Path>) -> Result<AncFilterSet> {
    let mut data = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut data)?;
    let mut cur = Cursor { data: &data, pos: 0 };
    if cur.take(8)? != FILTER_MAGIC {
        return Err(Error::format("bad magic: not a filter set"));
    }
    let version = cur.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::format(format!("unsupported filter set version {version}")));
    }
    let fs = cur.u32()?;
    let channels = cur.u32()? as usize;
    let taps = cur.u32()? as usize;
    let beta = cur.f64()?;
    if channels == 0 || taps == 0 {
        return Err(Error::format("empty filter set"));
    }
    let mut w = Vec::with_capacity(channels);
    for _ in 0..channels {
        let mut ch = Vec::with_capacity(taps);
        for _ in 0..taps {
            ch.push(cur.f64()?);
        }
        w.push(ch);
    }
    if cur.pos != data.len() {
        return Err(Error::format("trailing bytes after filter set payload"));
    }
    AncFilterSet::new(fs, w, beta)
}
