//! Cold-plasma dispersion, incoherent dedispersion, and the boxcar
//! matched-filter baseline. Also the synthetic-data generators that the
//! rest of the crate is tested against.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::noise::{estimate_samples, ClipConfig};
use crate::spectra::DynamicSpectrum;

/// Dispersion constant in s MHz^2 / (pc cm^-3).
pub const DEFAULT_K_DM: f64 = 4.148808e3;

/// Proportionality between DM / f^2 and arrival delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionConstant {
    k_dm: f64,
}

impl Default for DispersionConstant {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl DispersionConstant {
    pub const DEFAULT: Self = Self { k_dm: DEFAULT_K_DM };

    pub fn new(k_dm: f64) -> Result<Self> {
        if !(k_dm.is_finite() && k_dm > 0.0) {
            return Err(Error::Config(format!("k_dm must be positive, got {k_dm}")));
        }
        Ok(Self { k_dm })
    }

    pub fn k_dm(&self) -> f64 {
        self.k_dm
    }
}

/// Arrival delay, relative to infinite frequency, of a pulse with the given
/// DM observed at `f_mhz`.
pub fn dispersion_delay(dm: f64, f_mhz: f64, k: DispersionConstant) -> Result<f64> {
    if !(f_mhz > 0.0) {
        return Err(Error::Domain(format!("frequency must be positive, got {f_mhz} MHz")));
    }
    if !(dm >= 0.0) {
        return Err(Error::Domain(format!("DM must be non-negative, got {dm}")));
    }
    Ok(k.k_dm * dm / (f_mhz * f_mhz))
}

/// Per-channel shifts, in bins, that align a DM track to the top channel.
pub fn channel_shifts(spectrum: &DynamicSpectrum, dm: f64, k: DispersionConstant) -> Result<Vec<usize>> {
    let top = dispersion_delay(dm, spectrum.f_max_mhz(), k)?;
    (0..spectrum.n_freq())
        .map(|i| {
            let d = dispersion_delay(dm, spectrum.freq_mhz(i), k)? - top;
            Ok((d / spectrum.dt_s()).round() as usize)
        })
        .collect()
}

/// Shifts every channel earlier by its nearest-bin delay relative to the
/// highest channel and sums across frequency.
///
/// The result has `n_time - max_shift` samples; sample `j` is the sum over
/// channels of `data[j + shift_i][i]`.
pub fn dedisperse(spectrum: &DynamicSpectrum, dm: f64, k: DispersionConstant) -> Result<Vec<f64>> {
    let shifts = channel_shifts(spectrum, dm, k)?;
    let max_shift = shifts.iter().copied().max().unwrap_or(0);
    let n_time = spectrum.n_time();
    if max_shift >= n_time {
        return Err(Error::InsufficientSpan { max_shift, n_time });
    }
    let len = n_time - max_shift;
    let n_freq = spectrum.n_freq();
    let data = spectrum.data();
    let mut series = vec![0.0f64; len];
    for (i, &shift) in shifts.iter().enumerate() {
        for (j, acc) in series.iter_mut().enumerate() {
            *acc += data[(j + shift) * n_freq + i];
        }
    }
    Ok(series)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxcarPeak {
    pub snr: f64,
    /// Start of the best window in the input series.
    pub index: usize,
}

/// Boxcar matched filter with unit-energy taps (`1/sqrt(width)`).
///
/// The filtered series is sigma-clipped to estimate its own background, and
/// the peak is reported in units of that RMS.
pub fn boxcar_snr(series: &[f64], width_bins: usize) -> Result<BoxcarPeak> {
    boxcar_snr_with(series, width_bins, &ClipConfig::default())
}

pub fn boxcar_snr_with(series: &[f64], width_bins: usize, clip: &ClipConfig) -> Result<BoxcarPeak> {
    if width_bins == 0 || width_bins > series.len() {
        return Err(Error::Domain(format!(
            "boxcar width {width_bins} outside 1..={}",
            series.len()
        )));
    }
    let tap = 1.0 / (width_bins as f64).sqrt();
    let mut filtered = Vec::with_capacity(series.len() - width_bins + 1);
    let mut window: f64 = series[..width_bins].iter().sum();
    filtered.push(window * tap);
    for j in width_bins..series.len() {
        window += series[j] - series[j - width_bins];
        filtered.push(window * tap);
    }
    let noise = match estimate_samples(&filtered, clip) {
        Ok(n) if n.rms > 0.0 => n,
        Ok(_) | Err(Error::DegenerateNoise { .. }) => return Err(Error::UndefinedSnr),
        Err(e) => return Err(e),
    };
    let (index, peak) = filtered
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    Ok(BoxcarPeak { snr: (peak - noise.mean) / noise.rms, index })
}

/// Best boxcar response at one trial DM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub dm: f64,
    pub width_bins: usize,
    pub peak: BoxcarPeak,
}

/// Classical search: dedisperse at every trial DM, matched-filter with every
/// width, keep the best width per DM. Trials run in parallel; the output
/// order follows `trial_dms`.
pub fn dm_sweep(
    spectrum: &DynamicSpectrum,
    trial_dms: &[f64],
    widths: &[usize],
    k: DispersionConstant,
) -> Result<Vec<TrialResult>> {
    trial_dms
        .par_iter()
        .map(|&dm| {
            let series = dedisperse(spectrum, dm, k)?;
            let mut best: Option<TrialResult> = None;
            for &w in widths {
                let peak = boxcar_snr(&series, w)?;
                if best.is_none_or(|b| peak.snr > b.peak.snr) {
                    best = Some(TrialResult { dm, width_bins: w, peak });
                }
            }
            best.ok_or_else(|| Error::Domain("no boxcar widths given".into()))
        })
        .collect()
}

/// A synthetic dispersed pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub dm: f64,
    /// Arrival time at infinite frequency.
    pub t0_s: f64,
    /// Full width at half maximum of the Gaussian time profile.
    pub width_s: f64,
    /// Peak height in units of the background RMS.
    pub amplitude_snr: f64,
    /// Seed for the background when the pulse is synthesized from scratch.
    pub seed: u64,
}

const FWHM_TO_SIGMA: f64 = 0.424_660_900_144_009_5; // 1 / (2 sqrt(2 ln 2))

/// Adds a Gaussian-in-time, flat-in-frequency pulse following the DM track.
///
/// Channel `i` gets a profile centered at `t0_s + delay(dm, f_i)` with peak
/// `amplitude_snr * noise_rms`. Every track center must fall inside the
/// spectrum's time span.
pub fn inject_pulse(
    spectrum: &DynamicSpectrum,
    pulse: &PulseSpec,
    noise_rms: f64,
    k: DispersionConstant,
) -> Result<DynamicSpectrum> {
    if !(pulse.width_s > 0.0) {
        return Err(Error::Domain(format!("pulse width must be positive, got {}", pulse.width_s)));
    }
    let amplitude = pulse.amplitude_snr * noise_rms;
    let mut out = spectrum.clone();
    if amplitude == 0.0 {
        return Ok(out);
    }
    let (t_lo, t_hi) = (spectrum.time_s(0), spectrum.time_s(spectrum.n_time() - 1));
    let sigma = pulse.width_s * FWHM_TO_SIGMA;
    let reach = 12.0 * sigma;
    let (n_time, n_freq, dt) = (spectrum.n_time(), spectrum.n_freq(), spectrum.dt_s());
    let data = out.data_mut();
    for i in 0..n_freq {
        let center = pulse.t0_s + dispersion_delay(pulse.dm, spectrum.freq_mhz(i), k)?;
        if center < t_lo || center > t_hi {
            return Err(Error::Span(format!(
                "track center {center:.6} s in channel {i} is outside [{t_lo:.6}, {t_hi:.6}] s"
            )));
        }
        let first = ((center - reach - t_lo) / dt).floor().max(0.0) as usize;
        let last = (((center + reach - t_lo) / dt).ceil() as usize).min(n_time - 1);
        for j in first..=last {
            let x = (spectrum.time_s(j) - center) / sigma;
            data[j * n_freq + i] += amplitude * (-0.5 * x * x).exp();
        }
    }
    Ok(out)
}

/// Gaussian white noise from ChaCha8 seeded with `seed` via
/// `SeedableRng::seed_from_u64`, drawn in time-major order.
#[allow(clippy::too_many_arguments)]
pub fn generate_noise_spectrum(
    n_time: usize,
    n_freq: usize,
    dt_s: f64,
    f0_mhz: f64,
    df_mhz: f64,
    mean: f64,
    sigma: f64,
    seed: u64,
) -> Result<DynamicSpectrum> {
    if !(sigma >= 0.0) {
        return Err(Error::Domain(format!("sigma must be non-negative, got {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n_time * n_freq)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            mean + sigma * z
        })
        .collect();
    DynamicSpectrum::new(n_time, n_freq, dt_s, f0_mhz, df_mhz, data)
}
