//! Friends-of-friends candidate search.
//!
//! The search runs in four steps over a preprocessed spectrum and its
//! background estimate:
//!
//! 1. [`threshold_pixels`] marks every pixel at or above `m1` sigma.
//! 2. [`cluster_pixels`] links marked pixels within `t_gap` time bins and
//!    `f_gap` channels of each other and takes the transitive closure.
//! 3. [`characterize`] computes per-cluster metrics, including an
//!    orthogonal-distance slope and a DM from an inverse-square fit;
//!    [`filter_clusters`] then keeps clusters whose summed pixel SNR reaches `m2`.
//! 4. [`form_superclusters`] joins clusters whose extrapolated tracks agree.
//!
//! [`run_fof`] chains them.

mod cluster;
pub mod fit;
mod metrics;
mod supercluster;

pub use cluster::{cluster_pixels, UnionFind};
pub use fit::{linear_odr, orthogonal_residual, quadratic_dm_fit, DmFit, LineFit};
pub use metrics::{characterize, compute_metrics, fit_track, ClusterMetrics, TrackFit};
pub use supercluster::{form_superclusters, Supercluster, SuperclusterSpec, Track, TrackMode};

use crate::dispersion::DispersionConstant;
use crate::error::{Error, Result};
use crate::noise::NoiseEstimate;
use crate::spectra::DynamicSpectrum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FofParams {
    /// Pixel threshold in units of the background RMS.
    pub m1: f64,
    /// Cluster threshold on summed pixel SNR.
    pub m2: f64,
    pub t_gap: usize,
    pub f_gap: usize,
}

impl Default for FofParams {
    fn default() -> Self {
        Self { m1: 5.0, m2: 0.0, t_gap: 1, f_gap: 1 }
    }
}

impl FofParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.m1 > 0.0) {
            return Err(Error::Config(format!("m1 must be positive, got {}", self.m1)));
        }
        if !(self.m2 >= 0.0) {
            return Err(Error::Config(format!("m2 must be non-negative, got {}", self.m2)));
        }
        if self.t_gap == 0 || self.f_gap == 0 {
            return Err(Error::Config("t_gap and f_gap must be at least 1".into()));
        }
        Ok(())
    }
}

/// A marked pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pixel {
    pub t_bin: usize,
    pub f_bin: usize,
    pub intensity: f64,
    pub snr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Position in the unfiltered clustering order; survives `m2` filtering.
    pub id: usize,
    /// Member pixels in row-major order.
    pub pixels: Vec<Pixel>,
    pub metrics: ClusterMetrics,
    pub fit: TrackFit,
}

/// Pixels whose SNR is at least `m1`, in row-major order.
pub fn threshold_pixels(spectrum: &DynamicSpectrum, noise: &NoiseEstimate, m1: f64) -> Result<Vec<Pixel>> {
    if noise.rms == 0.0 {
        return Err(Error::UndefinedSnr);
    }
    let n_freq = spectrum.n_freq();
    let inv = 1.0 / noise.rms;
    Ok(spectrum
        .data()
        .iter()
        .enumerate()
        .filter_map(|(i, &v)| {
            let snr = (v - noise.mean) * inv;
            (snr >= m1).then_some(Pixel { t_bin: i / n_freq, f_bin: i % n_freq, intensity: v, snr })
        })
        .collect())
}

/// Clusters with metrics, ids numbered in clustering order.
pub fn build_clusters(
    groups: Vec<Vec<Pixel>>,
    noise: &NoiseEstimate,
    spectrum: &DynamicSpectrum,
    k: DispersionConstant,
) -> Vec<Cluster> {
    let axes = spectrum.axes();
    groups
        .into_iter()
        .enumerate()
        .map(|(id, pixels)| {
            let (metrics, fit) = characterize(&pixels, noise, &axes, k);
            Cluster { id, pixels, metrics, fit }
        })
        .collect()
}

/// Keeps clusters with `cluster_snr >= m2`, preserving order.
pub fn filter_clusters(clusters: Vec<Cluster>, m2: f64) -> Vec<Cluster> {
    clusters.into_iter().filter(|c| c.metrics.cluster_snr >= m2).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FofResult {
    pub clusters: Vec<Cluster>,
    pub superclusters: Vec<Supercluster>,
}

impl FofResult {
    /// Supercluster id of every cluster, indexed like `clusters`.
    pub fn supercluster_of(&self) -> Vec<usize> {
        let mut by_cluster = std::collections::HashMap::new();
        for sc in &self.superclusters {
            for &m in &sc.member_ids {
                by_cluster.insert(m, sc.id);
            }
        }
        self.clusters.iter().map(|c| by_cluster[&c.id]).collect()
    }
}

/// Threshold, cluster, characterize, filter on `m2`, then supercluster.
pub fn run_fof(
    spectrum: &DynamicSpectrum,
    noise: &NoiseEstimate,
    params: &FofParams,
    supercluster: &SuperclusterSpec,
    k: DispersionConstant,
) -> Result<FofResult> {
    params.validate()?;
    let marked = threshold_pixels(spectrum, noise, params.m1)?;
    let groups = cluster_pixels(&marked, params.t_gap, params.f_gap);
    let clusters = filter_clusters(build_clusters(groups, noise, spectrum, k), params.m2);
    let superclusters = form_superclusters(&clusters, supercluster, &spectrum.axes(), k);
    Ok(FofResult { clusters, superclusters })
}
