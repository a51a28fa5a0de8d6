//! Dynamic-spectrum data model and file I/O.
//!
//! A [`DynamicSpectrum`] is a time-major grid of intensities: row `t` holds
//! every frequency channel of time bin `t`. Channel `i` is centered at
//! `f0_mhz + i * df_mhz` and the band is always stored ascending.
//!
//! The native on-disk format (DSF) is little-endian:
//!
//! | field    | type                    |
//! |----------|-------------------------|
//! | magic    | `b"DSPEC1"`             |
//! | n_time   | `u32`                   |
//! | n_freq   | `u32`                   |
//! | dt_s     | `f64`                   |
//! | f0_mhz   | `f64`                   |
//! | df_mhz   | `f64`                   |
//! | payload  | `n_time * n_freq` `f32` |
//! | crc      | `u32`, CRC-32 (IEEE) of the payload bytes |

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const DSF_MAGIC: &[u8; 6] = b"DSPEC1";
/// Bytes preceding the payload: magic, two dimensions and three axis values.
pub const DSF_HEADER_LEN: usize = 6 + 4 + 4 + 8 + 8 + 8;

/// A 2-D grid of intensity against time and frequency.
///
/// Values are held as `f64` so that every downstream accumulation runs in
/// double precision; the file format stores `f32`.
///
/// Besides the axis description a spectrum remembers where it sits in time
/// relative to the file it came from: bin `j` starts at absolute time
/// `t_origin_s + (t_offset_bins + j) * dt_s`. Slicing only moves the integer
/// offset, so nested slices compose exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicSpectrum {
    n_time: usize,
    n_freq: usize,
    dt_s: f64,
    f0_mhz: f64,
    df_mhz: f64,
    t_origin_s: f64,
    t_offset_bins: usize,
    data: Vec<f64>,
}

impl DynamicSpectrum {
    /// Builds a spectrum from a time-major value buffer.
    pub fn new(
        n_time: usize,
        n_freq: usize,
        dt_s: f64,
        f0_mhz: f64,
        df_mhz: f64,
        data: Vec<f64>,
    ) -> Result<Self> {
        if n_time == 0 || n_freq == 0 {
            return Err(Error::InvalidSpectrum(format!(
                "dimensions must be positive, got {n_time}x{n_freq}"
            )));
        }
        if !(dt_s.is_finite() && dt_s > 0.0) {
            return Err(Error::InvalidSpectrum(format!("dt_s must be positive, got {dt_s}")));
        }
        if !(df_mhz.is_finite() && df_mhz > 0.0) {
            return Err(Error::InvalidSpectrum(format!("df_mhz must be positive, got {df_mhz}")));
        }
        if !f0_mhz.is_finite() {
            return Err(Error::InvalidSpectrum(format!("f0_mhz must be finite, got {f0_mhz}")));
        }
        let expected = n_time
            .checked_mul(n_freq)
            .ok_or_else(|| Error::InvalidSpectrum("grid size overflows".into()))?;
        if data.len() != expected {
            return Err(Error::InvalidSpectrum(format!(
                "data holds {} values, expected {expected}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite value {} at time bin {}, channel {}",
                data[pos],
                pos / n_freq,
                pos % n_freq
            )));
        }
        Ok(Self { n_time, n_freq, dt_s, f0_mhz, df_mhz, t_origin_s: 0.0, t_offset_bins: 0, data })
    }

    /// Like [`DynamicSpectrum::new`] but accepts a descending band
    /// (`df_mhz < 0`) and flips it into ascending channel order.
    pub fn from_any_orientation(
        n_time: usize,
        n_freq: usize,
        dt_s: f64,
        f0_mhz: f64,
        df_mhz: f64,
        mut data: Vec<f64>,
    ) -> Result<Self> {
        if df_mhz < 0.0 && n_freq > 0 && data.len() == n_time * n_freq {
            for row in data.chunks_exact_mut(n_freq) {
                row.reverse();
            }
            let top = f0_mhz + (n_freq - 1) as f64 * df_mhz;
            return Self::new(n_time, n_freq, dt_s, top, -df_mhz, data);
        }
        Self::new(n_time, n_freq, dt_s, f0_mhz, df_mhz, data)
    }

    /// A spectrum filled with one value.
    pub fn constant(n_time: usize, n_freq: usize, dt_s: f64, f0_mhz: f64, df_mhz: f64, value: f64) -> Result<Self> {
        Self::new(n_time, n_freq, dt_s, f0_mhz, df_mhz, vec![value; n_time.saturating_mul(n_freq)])
    }

    pub fn n_time(&self) -> usize {
        self.n_time
    }

    pub fn n_freq(&self) -> usize {
        self.n_freq
    }

    pub fn dt_s(&self) -> f64 {
        self.dt_s
    }

    pub fn f0_mhz(&self) -> f64 {
        self.f0_mhz
    }

    pub fn df_mhz(&self) -> f64 {
        self.df_mhz
    }

    /// Time-major values, `n_time * n_freq` long.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, t_bin: usize, f_bin: usize) -> f64 {
        self.data[t_bin * self.n_freq + f_bin]
    }

    pub fn row(&self, t_bin: usize) -> &[f64] {
        &self.data[t_bin * self.n_freq..(t_bin + 1) * self.n_freq]
    }

    /// Center frequency of channel `f_bin`.
    #[inline]
    pub fn freq_mhz(&self, f_bin: usize) -> f64 {
        self.f0_mhz + f_bin as f64 * self.df_mhz
    }

    pub fn f_min_mhz(&self) -> f64 {
        self.f0_mhz
    }

    pub fn f_max_mhz(&self) -> f64 {
        self.freq_mhz(self.n_freq - 1)
    }

    /// Absolute time of local bin `t_bin`.
    #[inline]
    pub fn time_s(&self, t_bin: usize) -> f64 {
        self.t_origin_s + (self.t_offset_bins + t_bin) as f64 * self.dt_s
    }

    /// Absolute time of the file's bin 0 at this resolution.
    pub fn t_origin_s(&self) -> f64 {
        self.t_origin_s
    }

    /// Index of local bin 0 counted from the start of the originating file.
    pub fn t_offset_bins(&self) -> usize {
        self.t_offset_bins
    }

    /// Axis description shared by everything that maps bins to physical units.
    pub fn axes(&self) -> Axes {
        Axes {
            dt_s: self.dt_s,
            f0_mhz: self.f0_mhz,
            df_mhz: self.df_mhz,
            t_origin_s: self.t_origin_s,
            t_offset_bins: self.t_offset_bins,
        }
    }

    /// Replaces the time placement. Used by resampling, which changes `dt_s`.
    pub(crate) fn with_placement(mut self, t_origin_s: f64, t_offset_bins: usize) -> Self {
        self.t_origin_s = t_origin_s;
        self.t_offset_bins = t_offset_bins;
        self
    }

    /// Applies `f` to every value, keeping axes and placement.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let data: Vec<f64> = self.data.iter().map(|&v| f(v)).collect();
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!("mapping produced non-finite value {v}")));
        }
        Ok(Self {
            n_time: self.n_time,
            n_freq: self.n_freq,
            dt_s: self.dt_s,
            f0_mhz: self.f0_mhz,
            df_mhz: self.df_mhz,
            t_origin_s: self.t_origin_s,
            t_offset_bins: self.t_offset_bins,
            data,
        })
    }

    /// Mutable access for generators in this crate; invariants are the caller's job.
    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Time bins `[start_bin, end_bin)` as a new spectrum that keeps its
    /// absolute time placement.
    pub fn slice_time(&self, start_bin: usize, end_bin: usize) -> Result<Self> {
        if start_bin >= end_bin || end_bin > self.n_time {
            return Err(Error::Bounds { start: start_bin, end: end_bin, len: self.n_time });
        }
        Ok(Self {
            n_time: end_bin - start_bin,
            n_freq: self.n_freq,
            dt_s: self.dt_s,
            f0_mhz: self.f0_mhz,
            df_mhz: self.df_mhz,
            t_origin_s: self.t_origin_s,
            t_offset_bins: self.t_offset_bins + start_bin,
            data: self.data[start_bin * self.n_freq..end_bin * self.n_freq].to_vec(),
        })
    }
}

/// Bin-to-physical mapping of a spectrum, detached from its data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axes {
    pub dt_s: f64,
    pub f0_mhz: f64,
    pub df_mhz: f64,
    pub t_origin_s: f64,
    pub t_offset_bins: usize,
}

impl Axes {
    #[inline]
    pub fn freq_mhz(&self, f_bin: usize) -> f64 {
        self.f0_mhz + f_bin as f64 * self.df_mhz
    }

    #[inline]
    pub fn time_s(&self, t_bin: usize) -> f64 {
        self.t_origin_s + (self.t_offset_bins + t_bin) as f64 * self.dt_s
    }
}

/// Serializes a spectrum into DSF bytes.
pub fn encode_dsf(spectrum: &DynamicSpectrum) -> Vec<u8> {
    let payload_len = spectrum.data.len() * 4;
    let mut out = Vec::with_capacity(DSF_HEADER_LEN + payload_len + 4);
    out.extend_from_slice(DSF_MAGIC);
    out.extend_from_slice(&(spectrum.n_time as u32).to_le_bytes());
    out.extend_from_slice(&(spectrum.n_freq as u32).to_le_bytes());
    out.extend_from_slice(&spectrum.dt_s.to_le_bytes());
    out.extend_from_slice(&spectrum.f0_mhz.to_le_bytes());
    out.extend_from_slice(&spectrum.df_mhz.to_le_bytes());
    for &v in &spectrum.data {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    let crc = crc32fast::hash(&out[DSF_HEADER_LEN..]);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Header fields of a DSF file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsfHeader {
    pub n_time: usize,
    pub n_freq: usize,
    pub dt_s: f64,
    pub f0_mhz: f64,
    pub df_mhz: f64,
}

pub fn decode_dsf_header(bytes: &[u8]) -> Result<DsfHeader> {
    if bytes.len() < DSF_MAGIC.len() || &bytes[..DSF_MAGIC.len()] != DSF_MAGIC {
        return Err(Error::Format("missing DSPEC1 magic".into()));
    }
    if bytes.len() < DSF_HEADER_LEN {
        return Err(Error::Format(format!("header truncated at {} bytes", bytes.len())));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    Ok(DsfHeader {
        n_time: u32_at(6),
        n_freq: u32_at(10),
        dt_s: f64_at(14),
        f0_mhz: f64_at(22),
        df_mhz: f64_at(30),
    })
}

/// Parses DSF bytes. A descending band is flipped to ascending order.
pub fn decode_dsf(bytes: &[u8]) -> Result<DynamicSpectrum> {
    let h = decode_dsf_header(bytes)?;
    let n = h
        .n_time
        .checked_mul(h.n_freq)
        .ok_or_else(|| Error::Format("grid size overflows".into()))?;
    let expected = n * 4 + 4;
    let found = bytes.len() - DSF_HEADER_LEN;
    if found != expected {
        return Err(Error::Length { expected, found });
    }
    let payload = &bytes[DSF_HEADER_LEN..DSF_HEADER_LEN + n * 4];
    let stored = u32::from_le_bytes(bytes[DSF_HEADER_LEN + n * 4..].try_into().unwrap());
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(Error::Format(format!(
            "payload checksum mismatch: stored {stored:08x}, computed {computed:08x}"
        )));
    }
    let data: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    DynamicSpectrum::from_any_orientation(h.n_time, h.n_freq, h.dt_s, h.f0_mhz, h.df_mhz, data)
}

pub fn read_dsf(path: impl AsRef<Path>) -> Result<DynamicSpectrum> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dsf(&bytes)
}

/// Writes `spectrum` as DSF. Values are narrowed to `f32`.
pub fn write_dsf(spectrum: &DynamicSpectrum, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_dsf(spectrum)).map_err(|e| Error::io(path, e))
}

/// Reads the CSV test format: header `t,f,intensity`, one pixel per row.
/// Grid dimensions are one past the largest indices seen; absent pixels are 0.
pub fn read_csv(path: impl AsRef<Path>, dt_s: f64, f0_mhz: f64, df_mhz: f64) -> Result<DynamicSpectrum> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::io(path, e))?
        .ok_or_else(|| Error::Format("empty CSV".into()))?;
    if header.trim() != "t,f,intensity" {
        return Err(Error::Format(format!("unexpected CSV header {header:?}")));
    }
    let mut pixels = Vec::new();
    let (mut n_time, mut n_freq) = (0usize, 0usize);
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Format(format!("malformed CSV row {}: {line:?}", lineno + 2));
        let mut fields = line.split(',').map(str::trim);
        let t: usize = fields.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let f: usize = fields.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let v: f64 = fields.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        if fields.next().is_some() {
            return Err(bad());
        }
        n_time = n_time.max(t + 1);
        n_freq = n_freq.max(f + 1);
        pixels.push((t, f, v));
    }
    let mut data = vec![0.0; n_time * n_freq];
    for (t, f, v) in pixels {
        data[t * n_freq + f] = v;
    }
    DynamicSpectrum::from_any_orientation(n_time, n_freq, dt_s, f0_mhz, df_mhz, data)
}

pub fn write_csv(spectrum: &DynamicSpectrum, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "t,f,intensity")?;
        for t in 0..spectrum.n_time {
            for (f, v) in spectrum.row(t).iter().enumerate() {
                writeln!(w, "{t},{f},{v}")?;
            }
        }
        w.flush()
    };
    emit().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n_time: usize, n_freq: usize) -> DynamicSpectrum {
        let data = (0..n_time * n_freq).map(|i| i as f64).collect();
        DynamicSpectrum::new(n_time, n_freq, 0.001, 4000.0, 1.0, data).unwrap()
    }

    #[test]
    fn two_by_two_of_ones_round_trips() {
        let s = DynamicSpectrum::constant(2, 2, 0.001, 4000.0, 1.0, 1.0).unwrap();
        let bytes = encode_dsf(&s);
        let back = decode_dsf(&bytes).unwrap();
        assert_eq!(back.data(), &[1.0; 4]);
        assert_eq!(encode_dsf(&back), bytes);
    }

    #[test]
    fn single_pixel_file_is_46_bytes() {
        let s = DynamicSpectrum::new(1, 1, 0.001, 4000.0, 1.0, vec![42.0]).unwrap();
        assert_eq!(encode_dsf(&s).len(), 46);
    }

    #[test]
    fn short_payload_is_a_length_error() {
        let s = DynamicSpectrum::constant(10, 10, 0.001, 4000.0, 1.0, 0.5).unwrap();
        let mut bytes = encode_dsf(&s);
        // drop one f32 value but keep a trailing crc-sized tail
        bytes.drain(DSF_HEADER_LEN..DSF_HEADER_LEN + 4);
        assert!(matches!(decode_dsf(&bytes), Err(Error::Length { expected: 404, found: 400 })));
    }

    #[test]
    fn bad_magic_and_bad_values() {
        let s = grid(2, 3);
        let mut bytes = encode_dsf(&s);
        bytes[0] = b'X';
        assert!(matches!(decode_dsf(&bytes), Err(Error::Format(_))));

        let mut bytes = encode_dsf(&s);
        bytes[DSF_HEADER_LEN..DSF_HEADER_LEN + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        let crc = crc32fast::hash(&bytes[DSF_HEADER_LEN..bytes.len() - 4]);
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&crc.to_le_bytes());
        assert!(matches!(decode_dsf(&bytes), Err(Error::Data(_))));
    }

    #[test]
    fn corrupted_payload_fails_checksum() {
        let mut bytes = encode_dsf(&grid(3, 3));
        bytes[DSF_HEADER_LEN + 5] ^= 0x10;
        assert!(matches!(decode_dsf(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn descending_band_is_flipped() {
        let s = DynamicSpectrum::from_any_orientation(1, 3, 0.001, 4002.0, -1.0, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.f0_mhz(), 4000.0);
        assert_eq!(s.df_mhz(), 1.0);
        assert_eq!(s.data(), &[3.0, 2.0, 1.0]);
    }

    #[test]
    fn slicing() {
        let s = grid(10, 4);
        assert_eq!(s.slice_time(0, 10).unwrap(), s);
        let part = s.slice_time(2, 5).unwrap();
        assert_eq!(part.n_time(), 3);
        for j in 0..3 {
            assert_eq!(part.row(j), s.row(2 + j));
        }
        assert_eq!(part.time_s(0), s.time_s(2));
        assert!(matches!(s.slice_time(5, 5), Err(Error::Bounds { .. })));
        assert!(matches!(s.slice_time(3, 11), Err(Error::Bounds { .. })));
        assert_eq!(part.slice_time(1, 3).unwrap(), s.slice_time(3, 5).unwrap());
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(DynamicSpectrum::new(0, 1, 1.0, 1.0, 1.0, vec![]).is_err());
        assert!(DynamicSpectrum::new(1, 1, 0.0, 1.0, 1.0, vec![0.0]).is_err());
        assert!(DynamicSpectrum::new(1, 1, 1.0, 1.0, -1.0, vec![0.0]).is_err());
        assert!(DynamicSpectrum::new(1, 2, 1.0, 1.0, 1.0, vec![0.0]).is_err());
        assert!(matches!(
            DynamicSpectrum::new(1, 1, 1.0, 1.0, 1.0, vec![f64::INFINITY]),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn csv_round_trip_with_missing_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        fs::write(&path, "t,f,intensity\n0,0,1.5\n2,1,-3\n").unwrap();
        let s = read_csv(&path, 0.001, 4000.0, 1.0).unwrap();
        assert_eq!((s.n_time(), s.n_freq()), (3, 2));
        assert_eq!(s.data(), &[1.5, 0.0, 0.0, 0.0, 0.0, -3.0]);

        let out = dir.path().join("h.csv");
        write_csv(&s, &out).unwrap();
        assert_eq!(read_csv(&out, 0.001, 4000.0, 1.0).unwrap(), s);
    }
}
