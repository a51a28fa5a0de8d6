use crate::dispersion::DispersionConstant;
use crate::noise::NoiseEstimate;
use crate::spectra::Axes;

use super::fit::{linear_odr, quadratic_dm_fit, DmFit, LineFit};
use super::Pixel;

/// Per-cluster summary statistics. Bin extents are local to the spectrum
/// the cluster was found in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterMetrics {
    pub n_pixels: usize,
    /// Mean pixel SNR times the pixel count.
    pub cluster_snr: f64,
    /// Mean of the background-subtracted pixel intensities.
    pub signal_mean: f64,
    pub signal_max: f64,
    pub snr_mean: f64,
    pub snr_max: f64,
    pub t_start_bin: usize,
    pub t_end_bin: usize,
    pub f_start_bin: usize,
    pub f_end_bin: usize,
    /// Linear ODR slope of arrival time against frequency, s/MHz.
    pub slope: Option<f64>,
    /// Dispersion measure from the inverse-square ODR fit, pc cm^-3.
    pub dm: Option<f64>,
}

/// Geometry kept alongside the metrics for track extrapolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackFit {
    /// SNR-weighted centroid frequency.
    pub centroid_f_mhz: f64,
    /// SNR-weighted centroid time.
    pub centroid_t_s: f64,
    pub line: Option<LineFit>,
    pub dispersion: Option<DmFit>,
}

/// `(f_mhz, t_s)` points and SNR weights of a pixel set.
pub(crate) fn fit_inputs(pixels: &[Pixel], axes: &Axes) -> (Vec<(f64, f64)>, Vec<f64>) {
    pixels
        .iter()
        .map(|p| ((axes.freq_mhz(p.f_bin), axes.time_s(p.t_bin)), p.snr))
        .unzip()
}

/// Fits a pixel set. Single pixels and sets confined to one channel or one
/// time bin get no line and no DM.
pub fn fit_track(pixels: &[Pixel], axes: &Axes, k: DispersionConstant) -> TrackFit {
    let (points, weights) = fit_inputs(pixels, axes);
    let total: f64 = weights.iter().sum();
    let (cf, ct) = if total > 0.0 {
        let cf = points.iter().zip(&weights).map(|(p, w)| p.0 * w).sum::<f64>() / total;
        let ct = points.iter().zip(&weights).map(|(p, w)| p.1 * w).sum::<f64>() / total;
        (cf, ct)
    } else {
        let n = points.len().max(1) as f64;
        (points.iter().map(|p| p.0).sum::<f64>() / n, points.iter().map(|p| p.1).sum::<f64>() / n)
    };
    let first = pixels[0];
    let one_channel = pixels.iter().all(|p| p.f_bin == first.f_bin);
    let one_time = pixels.iter().all(|p| p.t_bin == first.t_bin);
    let (line, dispersion) = if one_channel || one_time {
        (None, None)
    } else {
        (linear_odr(&points, &weights), quadratic_dm_fit(&points, &weights, k))
    };
    TrackFit { centroid_f_mhz: cf, centroid_t_s: ct, line, dispersion }
}

/// Metrics and track fit of one cluster. `pixels` must be non-empty.
pub fn characterize(
    pixels: &[Pixel],
    noise: &NoiseEstimate,
    axes: &Axes,
    k: DispersionConstant,
) -> (ClusterMetrics, TrackFit) {
    assert!(!pixels.is_empty(), "cannot characterize an empty cluster");
    let n = pixels.len();
    let mut signal_sum = 0.0;
    let mut snr_sum = 0.0;
    let mut signal_max = f64::NEG_INFINITY;
    let mut snr_max = f64::NEG_INFINITY;
    let (mut t0, mut t1, mut f0, mut f1) = (usize::MAX, 0, usize::MAX, 0);
    for p in pixels {
        let signal = p.intensity - noise.mean;
        signal_sum += signal;
        snr_sum += p.snr;
        signal_max = signal_max.max(signal);
        snr_max = snr_max.max(p.snr);
        t0 = t0.min(p.t_bin);
        t1 = t1.max(p.t_bin);
        f0 = f0.min(p.f_bin);
        f1 = f1.max(p.f_bin);
    }
    let snr_mean = snr_sum / n as f64;
    let fit = fit_track(pixels, axes, k);
    let metrics = ClusterMetrics {
        n_pixels: n,
        cluster_snr: snr_mean * n as f64,
        signal_mean: signal_sum / n as f64,
        signal_max,
        snr_mean,
        snr_max,
        t_start_bin: t0,
        t_end_bin: t1,
        f_start_bin: f0,
        f_end_bin: f1,
        slope: fit.line.map(|l| l.slope),
        dm: fit.dispersion.map(|d| d.dm),
    };
    (metrics, fit)
}

/// Metrics of one cluster; see [`characterize`].
pub fn compute_metrics(
    pixels: &[Pixel],
    noise: &NoiseEstimate,
    axes: &Axes,
    k: DispersionConstant,
) -> ClusterMetrics {
    characterize(pixels, noise, axes, k).0
}
