//! Grouping clusters that lie on one extrapolated track.

use std::str::FromStr;

use crate::dispersion::DispersionConstant;
use crate::error::{Error, Result};
use crate::spectra::Axes;

use super::cluster::UnionFind;
use super::fit::{linear_odr, quadratic_dm_fit, DmFit, LineFit};
use super::metrics::fit_inputs;
use super::Cluster;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackMode {
    /// Straight line in (frequency, time).
    Linear,
    /// Inverse-square dispersion sweep.
    Quadratic,
}

impl FromStr for TrackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "quadratic" => Ok(Self::Quadratic),
            other => Err(Error::Config(format!("unknown supercluster mode {other:?}"))),
        }
    }
}

impl TrackMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Quadratic => "quadratic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Track {
    Linear(LineFit),
    Quadratic(DmFit),
}

impl Track {
    /// Predicted arrival time at `f_mhz`.
    pub fn eval(&self, f_mhz: f64, k: DispersionConstant) -> f64 {
        match self {
            Track::Linear(l) => l.eval(f_mhz),
            Track::Quadratic(d) => d.eval(f_mhz, k),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Supercluster {
    pub id: usize,
    /// Ascending cluster ids.
    pub member_ids: Vec<usize>,
    /// Fit over the union of member pixels; `None` when no member has a fit.
    pub track: Option<Track>,
    pub combined_snr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperclusterSpec {
    pub mode: TrackMode,
    /// Allowed miss between a predicted track and a centroid, in time bins.
    pub tol_bins: f64,
}

impl Default for SuperclusterSpec {
    fn default() -> Self {
        Self { mode: TrackMode::Quadratic, tol_bins: 5.0 }
    }
}

fn cluster_track(c: &Cluster, mode: TrackMode) -> Option<Track> {
    match mode {
        TrackMode::Linear => c.fit.line.map(Track::Linear),
        TrackMode::Quadratic => c.fit.dispersion.map(Track::Quadratic),
    }
}

/// Links clusters whose tracks pass through each other's centroids and
/// returns the transitive closures.
///
/// Clusters A and B are linked when A's track, evaluated at B's centroid
/// frequency, lands within `tol_bins * dt` of B's centroid time, and the same
/// holds from B to A. Clusters without a fit for the chosen mode stay alone.
/// Superclusters are ordered by their smallest member id.
pub fn form_superclusters(
    clusters: &[Cluster],
    spec: &SuperclusterSpec,
    axes: &Axes,
    k: DispersionConstant,
) -> Vec<Supercluster> {
    let tol_s = spec.tol_bins * axes.dt_s;
    let tracks: Vec<Option<Track>> = clusters.iter().map(|c| cluster_track(c, spec.mode)).collect();
    let hits = |a: usize, b: usize| -> bool {
        let Some(track) = tracks[a] else { return false };
        let target = &clusters[b].fit;
        (track.eval(target.centroid_f_mhz, k) - target.centroid_t_s).abs() <= tol_s
    };
    let mut sets = UnionFind::new(clusters.len());
    for a in 0..clusters.len() {
        for b in a + 1..clusters.len() {
            if hits(a, b) && hits(b, a) {
                sets.union(a, b);
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; clusters.len()];
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by_key(|&i| clusters[i].id);
    for i in order {
        let root = sets.find(i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }

    groups
        .into_iter()
        .enumerate()
        .map(|(id, members)| {
            let combined_snr = members.iter().map(|&i| clusters[i].metrics.cluster_snr).sum();
            let track = if members.len() == 1 {
                tracks[members[0]]
            } else {
                refit(clusters, &members, spec.mode, axes, k).or_else(|| {
                    members
                        .iter()
                        .filter_map(|&i| tracks[i].map(|t| (clusters[i].metrics.cluster_snr, t)))
                        .max_by(|a, b| a.0.total_cmp(&b.0))
                        .map(|(_, t)| t)
                })
            };
            Supercluster {
                id,
                member_ids: members.iter().map(|&i| clusters[i].id).collect(),
                track,
                combined_snr,
            }
        })
        .collect()
}

fn refit(clusters: &[Cluster], members: &[usize], mode: TrackMode, axes: &Axes, k: DispersionConstant) -> Option<Track> {
    let pixels: Vec<_> = members.iter().flat_map(|&i| clusters[i].pixels.iter().copied()).collect();
    let (points, weights) = fit_inputs(&pixels, axes);
    match mode {
        TrackMode::Linear => linear_odr(&points, &weights).map(Track::Linear),
        TrackMode::Quadratic => quadratic_dm_fit(&points, &weights, k).map(Track::Quadratic),
    }
}
