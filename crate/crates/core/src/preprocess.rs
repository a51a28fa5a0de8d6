//! Data reduction ahead of clustering: block averaging, or Gaussian
//! smoothing followed by decimation.
//!
//! Both paths shrink the grid by `k = t_factor * f_factor` and lower the
//! pixel-to-pixel variance, which is what lets a fixed-gap clustering rule
//! follow a faint track without breaking it into specks.

use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::spectra::DynamicSpectrum;

/// Gaussian taps extend this many sigmas either side of the center.
pub const KERNEL_TRUNCATION_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothingMode {
    BlockAverage,
    GaussianDecimate,
}

impl FromStr for SmoothingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "block-average" => Ok(Self::BlockAverage),
            "gaussian-decimate" => Ok(Self::GaussianDecimate),
            other => Err(Error::Config(format!("unknown smoothing mode {other:?}"))),
        }
    }
}

impl SmoothingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::BlockAverage => "block-average",
            Self::GaussianDecimate => "gaussian-decimate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingSpec {
    pub mode: SmoothingMode,
    pub t_factor: usize,
    pub f_factor: usize,
    /// Kernel width in input time bins; only read in gaussian mode.
    pub sigma_t_bins: f64,
    /// Kernel width in input channels; only read in gaussian mode.
    pub sigma_f_bins: f64,
}

impl Default for SmoothingSpec {
    fn default() -> Self {
        Self { mode: SmoothingMode::BlockAverage, t_factor: 1, f_factor: 1, sigma_t_bins: 1.0, sigma_f_bins: 1.0 }
    }
}

impl SmoothingSpec {
    pub fn block(t_factor: usize, f_factor: usize) -> Self {
        Self { mode: SmoothingMode::BlockAverage, t_factor, f_factor, ..Self::default() }
    }

    pub fn gaussian(t_factor: usize, f_factor: usize, sigma_t_bins: f64, sigma_f_bins: f64) -> Self {
        Self { mode: SmoothingMode::GaussianDecimate, t_factor, f_factor, sigma_t_bins, sigma_f_bins }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_factor == 0 || self.f_factor == 0 {
            return Err(Error::Config("decimation factors must be at least 1".into()));
        }
        if self.mode == SmoothingMode::GaussianDecimate
            && !(self.sigma_t_bins > 0.0 && self.sigma_f_bins > 0.0)
        {
            return Err(Error::Config("gaussian sigmas must be positive".into()));
        }
        Ok(())
    }

    /// Pixels folded into one output pixel.
    pub fn reduction(&self) -> usize {
        self.t_factor * self.f_factor
    }
}

/// Runs whichever reduction `spec` selects.
pub fn preprocess(spectrum: &DynamicSpectrum, spec: &SmoothingSpec) -> Result<DynamicSpectrum> {
    spec.validate()?;
    match spec.mode {
        SmoothingMode::BlockAverage => block_average(spectrum, spec.t_factor, spec.f_factor),
        SmoothingMode::GaussianDecimate => gaussian_smooth_decimate(spectrum, spec),
    }
}

/// Placement of output bin 0 after keeping every `factor`-th bin, with
/// `center_shift_bins` the offset (in input bins) of the output sample
/// within its block.
fn resampled_placement(s: &DynamicSpectrum, factor: usize, center_shift_bins: f64) -> (f64, usize) {
    let off = s.t_offset_bins();
    let shift = center_shift_bins * s.dt_s();
    if off % factor == 0 {
        (s.t_origin_s() + shift, off / factor)
    } else {
        (s.t_origin_s() + off as f64 * s.dt_s() + shift, 0)
    }
}

/// Averages non-overlapping `t_factor x f_factor` blocks; trailing partial
/// blocks are dropped.
///
/// The new channel 0 sits at the mean of the first block's channel centers,
/// and time placement moves to the block center in the same way.
pub fn block_average(spectrum: &DynamicSpectrum, t_factor: usize, f_factor: usize) -> Result<DynamicSpectrum> {
    if t_factor == 0 || f_factor == 0 {
        return Err(Error::Config("decimation factors must be at least 1".into()));
    }
    let (n_time, n_freq) = (spectrum.n_time(), spectrum.n_freq());
    let out_t = n_time / t_factor;
    let out_f = n_freq / f_factor;
    if out_t == 0 || out_f == 0 {
        return Err(Error::EmptyOutput(format!(
            "factors ({t_factor}, {f_factor}) exceed the {n_time}x{n_freq} grid"
        )));
    }
    let norm = 1.0 / (t_factor * f_factor) as f64;
    let mut out = vec![0.0f64; out_t * out_f];
    for (ot, out_row) in out.chunks_exact_mut(out_f).enumerate() {
        for t in ot * t_factor..(ot + 1) * t_factor {
            let row = &spectrum.row(t)[..out_f * f_factor];
            for (acc, block) in out_row.iter_mut().zip(row.chunks_exact(f_factor)) {
                *acc += block.iter().sum::<f64>();
            }
        }
        for v in out_row.iter_mut() {
            *v *= norm;
        }
    }
    let f0 = spectrum.f0_mhz() + (f_factor - 1) as f64 * 0.5 * spectrum.df_mhz();
    let (origin, offset) = resampled_placement(spectrum, t_factor, (t_factor - 1) as f64 * 0.5);
    Ok(DynamicSpectrum::new(
        out_t,
        out_f,
        spectrum.dt_s() * t_factor as f64,
        f0,
        spectrum.df_mhz() * f_factor as f64,
        out,
    )?
    .with_placement(origin, offset))
}

/// Normalized Gaussian taps covering `[-r, r]` with `r = ceil(4 sigma)`.
pub fn gaussian_kernel(sigma_bins: f64) -> Vec<f64> {
    let radius = (KERNEL_TRUNCATION_SIGMAS * sigma_bins).ceil() as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-0.5 * (i as f64 / sigma_bins).powi(2)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Index into a line of length `n` under half-sample symmetric reflection:
/// `... c b a | a b c ... x y z | z y x ...`.
#[inline]
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// FFT convolution of many equal-length lines against one symmetric kernel,
/// with reflect-padded boundaries.
struct LineConvolver {
    len: usize,
    radius: usize,
    fft_len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernel_spectrum: Vec<Complex64>,
}

impl LineConvolver {
    fn new(len: usize, kernel: &[f64]) -> Self {
        let radius = kernel.len() / 2;
        // padded line of len + 2r convolved with 2r + 1 taps must not wrap
        let fft_len = (len + 4 * radius + 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let mut kernel_spectrum = vec![Complex64::new(0.0, 0.0); fft_len];
        for (slot, &k) in kernel_spectrum.iter_mut().zip(kernel) {
            slot.re = k;
        }
        forward.process(&mut kernel_spectrum);
        Self { len, radius, fft_len, forward, inverse, kernel_spectrum }
    }

    /// Smooths `a` and `b` in place with one complex transform: `a` rides the
    /// real part and `b` the imaginary part, which the real kernel keeps apart.
    fn convolve_pair(&self, a: &mut [f64], b: Option<&mut [f64]>, buf: &mut [Complex64]) {
        let (n, r) = (self.len, self.radius as isize);
        let b_ref = b.as_deref();
        for (j, slot) in buf.iter_mut().enumerate() {
            *slot = if j < n + 2 * self.radius {
                let src = reflect_index(j as isize - r, n);
                Complex64::new(a[src], b_ref.map_or(0.0, |b| b[src]))
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        self.forward.process(buf);
        for (x, k) in buf.iter_mut().zip(&self.kernel_spectrum) {
            *x *= k;
        }
        self.inverse.process(buf);
        let scale = 1.0 / self.fft_len as f64;
        let lag = 2 * self.radius;
        for (i, v) in a.iter_mut().enumerate() {
            *v = buf[i + lag].re * scale;
        }
        if let Some(b) = b {
            for (i, v) in b.iter_mut().enumerate() {
                *v = buf[i + lag].im * scale;
            }
        }
    }

    /// Convolves every line in `lines` (each `self.len` long).
    fn convolve_all(&self, lines: &mut [f64]) {
        lines.par_chunks_mut(2 * self.len).for_each_init(
            || vec![Complex64::new(0.0, 0.0); self.fft_len],
            |buf, pair| {
                let (a, b) = pair.split_at_mut(self.len.min(pair.len()));
                let b = if b.is_empty() { None } else { Some(b) };
                self.convolve_pair(a, b, buf);
            },
        );
    }
}

fn check_kernel_fits(kernel: &[f64], len: usize, axis: &str) -> Result<()> {
    if kernel.len() > len {
        return Err(Error::DegenerateInput(format!(
            "{axis} kernel spans {} bins but the grid has only {len}",
            kernel.len()
        )));
    }
    Ok(())
}

/// Smooths with a separable, unit-sum 2-D Gaussian (via FFT, reflect-padded)
/// and keeps every `t_factor`-th time bin and `f_factor`-th channel starting
/// at index 0. Sample 0 keeps its position, so `f0_mhz` is unchanged.
pub fn gaussian_smooth_decimate(spectrum: &DynamicSpectrum, spec: &SmoothingSpec) -> Result<DynamicSpectrum> {
    if spec.mode != SmoothingMode::GaussianDecimate {
        return Err(Error::Config("gaussian_smooth_decimate needs gaussian-decimate mode".into()));
    }
    spec.validate()?;
    let (n_time, n_freq) = (spectrum.n_time(), spectrum.n_freq());
    let k_t = gaussian_kernel(spec.sigma_t_bins);
    let k_f = gaussian_kernel(spec.sigma_f_bins);
    check_kernel_fits(&k_t, n_time, "time")?;
    check_kernel_fits(&k_f, n_freq, "frequency")?;

    // frequency axis: rows are contiguous
    let mut grid = spectrum.data().to_vec();
    LineConvolver::new(n_freq, &k_f).convolve_all(&mut grid);

    // time axis: transpose so columns become contiguous
    let mut cols = vec![0.0; n_time * n_freq];
    for t in 0..n_time {
        for f in 0..n_freq {
            cols[f * n_time + t] = grid[t * n_freq + f];
        }
    }
    LineConvolver::new(n_time, &k_t).convolve_all(&mut cols);

    let out_t = n_time.div_ceil(spec.t_factor);
    let out_f = n_freq.div_ceil(spec.f_factor);
    let mut out = Vec::with_capacity(out_t * out_f);
    for ot in 0..out_t {
        let t = ot * spec.t_factor;
        out.extend((0..out_f).map(|of| cols[of * spec.f_factor * n_time + t]));
    }
    let (origin, offset) = resampled_placement(spectrum, spec.t_factor, 0.0);
    Ok(DynamicSpectrum::new(
        out_t,
        out_f,
        spectrum.dt_s() * spec.t_factor as f64,
        spectrum.f0_mhz(),
        spectrum.df_mhz() * spec.f_factor as f64,
        out,
    )?
    .with_placement(origin, offset))
}
