use std::cmp::Ordering;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fof::ClusterMetrics;

/// Column order of the candidates file.
pub const CANDIDATE_COLUMNS: [&str; 15] = [
    "id",
    "chunk",
    "t_start_s",
    "t_end_s",
    "f_start_mhz",
    "f_end_mhz",
    "n_pixels",
    "cluster_snr",
    "signal_mean",
    "signal_max",
    "snr_mean",
    "snr_max",
    "slope_s_per_mhz",
    "dm_pc_cm3",
    "supercluster_id",
];

/// One emitted candidate. Bin extents in `metrics` are absolute: counted
/// from the start of the file at the preprocessed resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRecord {
    pub id: usize,
    pub chunk: usize,
    pub t_start_s: f64,
    pub t_end_s: f64,
    pub f_start_mhz: f64,
    pub f_end_mhz: f64,
    pub metrics: ClusterMetrics,
    pub supercluster_id: usize,
}

/// A `ClusterMetrics` field to order candidates by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortKey {
    NPixels,
    ClusterSnr,
    SignalMean,
    SignalMax,
    SnrMean,
    SnrMax,
    TStartBin,
    TEndBin,
    FStartBin,
    FEndBin,
    Slope,
    Dm,
}

impl SortKey {
    pub const ALL: [SortKey; 12] = [
        SortKey::NPixels,
        SortKey::ClusterSnr,
        SortKey::SignalMean,
        SortKey::SignalMax,
        SortKey::SnrMean,
        SortKey::SnrMax,
        SortKey::TStartBin,
        SortKey::TEndBin,
        SortKey::FStartBin,
        SortKey::FEndBin,
        SortKey::Slope,
        SortKey::Dm,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SortKey::NPixels => "n_pixels",
            SortKey::ClusterSnr => "cluster_snr",
            SortKey::SignalMean => "signal_mean",
            SortKey::SignalMax => "signal_max",
            SortKey::SnrMean => "snr_mean",
            SortKey::SnrMax => "snr_max",
            SortKey::TStartBin => "t_start_bin",
            SortKey::TEndBin => "t_end_bin",
            SortKey::FStartBin => "f_start_bin",
            SortKey::FEndBin => "f_end_bin",
            SortKey::Slope => "slope",
            SortKey::Dm => "dm",
        }
    }

    /// The metric's value; `None` for an absent fit.
    pub fn value(&self, m: &ClusterMetrics) -> Option<f64> {
        Some(match self {
            SortKey::NPixels => m.n_pixels as f64,
            SortKey::ClusterSnr => m.cluster_snr,
            SortKey::SignalMean => m.signal_mean,
            SortKey::SignalMax => m.signal_max,
            SortKey::SnrMean => m.snr_mean,
            SortKey::SnrMax => m.snr_max,
            SortKey::TStartBin => m.t_start_bin as f64,
            SortKey::TEndBin => m.t_end_bin as f64,
            SortKey::FStartBin => m.f_start_bin as f64,
            SortKey::FEndBin => m.f_end_bin as f64,
            SortKey::Slope => return m.slope,
            SortKey::Dm => return m.dm,
        })
    }
}

impl FromStr for SortKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SortKey::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("sort_key {s:?} is not a cluster metric")))
    }
}

/// Descending by `key`, absent values last, ascending id on ties.
pub fn sort_candidates(records: &mut [CandidateRecord], key: SortKey) {
    records.sort_by(|a, b| {
        let order = match (key.value(&a.metrics), key.value(&b.metrics)) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        };
        order.then(a.id.cmp(&b.id))
    });
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Tab-separated text: one header line, then one line per record.
pub fn format_candidates(records: &[CandidateRecord]) -> String {
    let mut out = CANDIDATE_COLUMNS.join("\t");
    out.push('\n');
    for r in records {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.id,
            r.chunk,
            r.t_start_s,
            r.t_end_s,
            r.f_start_mhz,
            r.f_end_mhz,
            m.n_pixels,
            m.cluster_snr,
            m.signal_mean,
            m.signal_max,
            m.snr_mean,
            m.snr_max,
            opt(m.slope),
            opt(m.dm),
            r.supercluster_id,
        );
    }
    out
}

/// Sorts a copy of `records` by `key` and writes the candidates file.
pub fn write_candidates(records: &[CandidateRecord], key: SortKey, path: impl AsRef<Path>) -> Result<()> {
    let mut sorted = records.to_vec();
    sort_candidates(&mut sorted, key);
    let path = path.as_ref();
    fs::write(path, format_candidates(&sorted)).map_err(|e| Error::io(path, e))
}
