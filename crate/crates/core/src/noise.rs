//! Background statistics by iterative sigma clipping.

use crate::error::{Error, Result};
use crate::spectra::DynamicSpectrum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipConfig {
    /// Samples further than `clip_factor * rms` from the mean are discarded.
    pub clip_factor: f64,
    /// Stop once the RMS moves by less than this fraction between passes.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for ClipConfig {
    fn default() -> Self {
        Self { clip_factor: 3.0, rel_tol: 0.01, max_iter: 20 }
    }
}

impl ClipConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip_factor > 0.0) || !(self.rel_tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config(format!(
                "clip config needs clip_factor > 0, rel_tol > 0, max_iter >= 1; got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Converged background level and spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseEstimate {
    pub mean: f64,
    /// Standard deviation of the surviving samples about their mean.
    pub rms: f64,
    pub iterations: usize,
    pub kept_fraction: f64,
    pub converged: bool,
}

/// Per-pass record, exposed so callers can inspect the clipping history.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipTrace {
    pub estimate: NoiseEstimate,
    /// RMS after each pass, first pass first.
    pub rms_history: Vec<f64>,
    /// Which input samples survived the final pass.
    pub kept: Vec<bool>,
}

fn mean_and_rms(samples: &[f64], kept: &[bool]) -> (f64, f64, usize) {
    let (mut sum, mut n) = (0.0f64, 0usize);
    for (&x, _) in samples.iter().zip(kept).filter(|(_, &k)| k) {
        sum += x;
        n += 1;
    }
    let mean = sum / n as f64;
    let ss: f64 = samples
        .iter()
        .zip(kept)
        .filter(|(_, &k)| k)
        .map(|(&x, _)| (x - mean) * (x - mean))
        .sum();
    (mean, (ss / n as f64).sqrt(), n)
}

/// Sigma-clipped mean and RMS of an arbitrary sample set, with the full
/// pass history.
///
/// Each pass computes mean and RMS over the surviving samples, then drops
/// survivors beyond `clip_factor * rms`. Dropped samples stay dropped, which
/// makes the RMS sequence non-increasing.
pub fn sigma_clip(samples: &[f64], cfg: &ClipConfig) -> Result<ClipTrace> {
    cfg.validate()?;
    let total = samples.len();
    if total < 2 {
        return Err(Error::DegenerateNoise { surviving: total });
    }
    let mut kept = vec![true; total];
    let mut history = Vec::new();
    let mut converged = false;
    let (mut mean, mut rms, mut n_kept);
    loop {
        (mean, rms, n_kept) = mean_and_rms(samples, &kept);
        if n_kept < 2 {
            return Err(Error::DegenerateNoise { surviving: n_kept });
        }
        let prev = history.last().copied();
        history.push(rms);
        if rms == 0.0 {
            converged = true;
            break;
        }
        if let Some(prev) = prev {
            if (prev - rms).abs() < cfg.rel_tol * prev {
                converged = true;
                break;
            }
        }
        if history.len() >= cfg.max_iter {
            break;
        }
        let limit = cfg.clip_factor * rms;
        let mut dropped = 0usize;
        for (k, &x) in kept.iter_mut().zip(samples) {
            if *k && (x - mean).abs() > limit {
                *k = false;
                dropped += 1;
            }
        }
        if dropped == 0 {
            converged = true;
            break;
        }
    }
    Ok(ClipTrace {
        estimate: NoiseEstimate {
            mean,
            rms,
            iterations: history.len(),
            kept_fraction: n_kept as f64 / total as f64,
            converged,
        },
        rms_history: history,
        kept,
    })
}

/// Sigma-clipped background of every pixel in the spectrum. Clipping only
/// affects the statistics; the spectrum is untouched.
pub fn estimate_background(spectrum: &DynamicSpectrum, cfg: &ClipConfig) -> Result<NoiseEstimate> {
    estimate_samples(spectrum.data(), cfg)
}

pub fn estimate_samples(samples: &[f64], cfg: &ClipConfig) -> Result<NoiseEstimate> {
    sigma_clip(samples, cfg).map(|t| t.estimate)
}

/// Mean-subtracted signal in units of the background RMS.
pub fn pixel_snr(value: f64, noise: &NoiseEstimate) -> Result<f64> {
    if noise.rms == 0.0 {
        return Err(Error::UndefinedSnr);
    }
    Ok((value - noise.mean) / noise.rms)
}
