//! End-to-end search over a file: chunking, per-chunk preprocessing, noise
//! estimation and friends-of-friends, then a deterministic merge into one
//! candidate list.
//!
//! Chunks overlap by the sweep time of the largest DM of interest at the
//! bottom of the band, so any pulse up to `dm_max` lies whole inside at
//! least one chunk. Chunks share no mutable state and run on a pool of
//! `workers` threads; everything after the per-chunk stage is sequential,
//! which keeps the output byte-identical for any worker count.

mod candidates;
mod config;

pub use candidates::{format_candidates, sort_candidates, write_candidates, CandidateRecord, SortKey, CANDIDATE_COLUMNS};
pub use config::{NoiseScope, PipelineConfig, SynthesisConfig};

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::dispersion::{dispersion_delay, generate_noise_spectrum, inject_pulse, DispersionConstant};
use crate::error::{Error, Result};
use crate::fof::{run_fof, ClusterMetrics, FofResult};
use crate::noise::{estimate_background, NoiseEstimate};
use crate::preprocess::preprocess;
use crate::render::{candidate_window, render_candidate, render_heatmap, sidecar_text};
use crate::spectra::{read_dsf, DynamicSpectrum};

pub const CANDIDATES_FILE: &str = "candidates.tsv";
pub const PLOTS_DIR: &str = "plots";

/// A contiguous range of raw time bins, `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chunk {
    pub index: usize,
    pub start: usize,
    pub end: usize,
}

/// Splits `n_time` bins into chunks of `chunk_bins` advancing by
/// `chunk_bins - overlap_bins`. The last chunk may be short. `chunk_bins = 0`
/// yields a single chunk.
pub fn plan_chunks(n_time: usize, chunk_bins: usize, overlap_bins: usize) -> Result<Vec<Chunk>> {
    if chunk_bins == 0 || chunk_bins >= n_time {
        return Ok(vec![Chunk { index: 0, start: 0, end: n_time }]);
    }
    if overlap_bins >= chunk_bins {
        return Err(Error::Config(format!(
            "chunk overlap of {overlap_bins} bins leaves no stride in chunks of {chunk_bins}"
        )));
    }
    let stride = chunk_bins - overlap_bins;
    let mut chunks = Vec::new();
    let mut start = 0;
    loop {
        let end = (start + chunk_bins).min(n_time);
        chunks.push(Chunk { index: chunks.len(), start, end });
        if end == n_time {
            return Ok(chunks);
        }
        start += stride;
    }
}

/// Bins needed to hold the whole sweep of a `dm_max` pulse at `f_min_mhz`.
pub fn overlap_bins(dm_max: f64, f_min_mhz: f64, dt_s: f64, k: DispersionConstant) -> Result<usize> {
    let delay = dispersion_delay(dm_max, f_min_mhz, k)?;
    Ok((delay / dt_s).ceil() as usize)
}

/// Chunk plan for a file under `cfg`. The overlap is rounded up to a
/// multiple of `t_factor` so that every chunk starts on a decimation
/// boundary and chunked pixels coincide with unchunked ones.
pub fn plan_for(cfg: &PipelineConfig, spectrum: &DynamicSpectrum) -> Result<Vec<Chunk>> {
    let tf = cfg.smoothing.t_factor;
    let overlap = overlap_bins(cfg.dm_max, spectrum.f_min_mhz(), spectrum.dt_s(), cfg.k_dm)?.next_multiple_of(tf);
    plan_chunks(spectrum.n_time(), cfg.chunk_bins, overlap)
}

/// Everything one chunk produced.
#[derive(Debug, Clone)]
pub struct ChunkResult {
    pub chunk: Chunk,
    /// The chunk after preprocessing; cluster bins index into this.
    pub spectrum: DynamicSpectrum,
    pub noise: NoiseEstimate,
    pub fof: FofResult,
}

/// A merged candidate and where its pixels live.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub record: CandidateRecord,
    /// Index into [`SearchOutput::chunks`].
    pub chunk: usize,
    /// Index into that chunk's `fof.clusters`.
    pub cluster: usize,
}

#[derive(Debug, Clone)]
pub struct SearchOutput {
    pub chunks: Vec<ChunkResult>,
    /// Sorted by the configured key.
    pub candidates: Vec<Candidate>,
}

impl SearchOutput {
    pub fn records(&self) -> Vec<CandidateRecord> {
        self.candidates.iter().map(|c| c.record.clone()).collect()
    }
}

fn stage<T>(chunk: usize, stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage { chunk, stage, source: Box::new(e) })
}

fn process_chunk(
    spectrum: &DynamicSpectrum,
    chunk: Chunk,
    cfg: &PipelineConfig,
    global_noise: Option<NoiseEstimate>,
) -> Result<ChunkResult> {
    let i = chunk.index;
    let raw = stage(i, "slice", spectrum.slice_time(chunk.start, chunk.end))?;
    let reduced = stage(i, "preprocess", preprocess(&raw, &cfg.smoothing))?;
    let noise = match global_noise {
        Some(n) => n,
        None => stage(i, "noise", estimate_background(&reduced, &cfg.clip))?,
    };
    let fof = stage(i, "fof", run_fof(&reduced, &noise, &cfg.fof, &cfg.supercluster, cfg.k_dm))?;
    Ok(ChunkResult { chunk, spectrum: reduced, noise, fof })
}

/// Inclusive `(t0, t1, f0, f1)` in preprocessed bins.
type BinBox = (usize, usize, usize, usize);

/// Absolute extent of a cluster.
fn absolute_box(result: &ChunkResult, m: &ClusterMetrics) -> BinBox {
    let off = result.spectrum.t_offset_bins();
    (off + m.t_start_bin, off + m.t_end_bin, m.f_start_bin, m.f_end_bin)
}

fn boxes_overlap(a: BinBox, b: BinBox) -> bool {
    a.0 <= b.1 && b.0 <= a.1 && a.2 <= b.3 && b.2 <= a.3
}

/// Runs the search on an in-memory spectrum. No files are touched.
pub fn search(spectrum: &DynamicSpectrum, cfg: &PipelineConfig) -> Result<SearchOutput> {
    cfg.validate()?;
    let plan = plan_for(cfg, spectrum)?;
    let global_noise = match cfg.noise_scope {
        NoiseScope::Chunk => None,
        NoiseScope::Global => {
            let reduced = stage(0, "preprocess", preprocess(spectrum, &cfg.smoothing))?;
            Some(stage(0, "noise", estimate_background(&reduced, &cfg.clip))?)
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let results: Vec<Result<ChunkResult>> =
        pool.install(|| plan.par_iter().map(|&c| process_chunk(spectrum, c, cfg, global_noise)).collect());
    let chunks = results.into_iter().collect::<Result<Vec<_>>>()?;

    // Overlap de-duplication: strongest first, a candidate is dropped when its
    // box meets an already accepted candidate from another chunk.
    let mut order: Vec<(usize, usize)> = chunks
        .iter()
        .enumerate()
        .flat_map(|(ci, r)| (0..r.fof.clusters.len()).map(move |k| (ci, k)))
        .collect();
    let snr = |&(ci, k): &(usize, usize)| chunks[ci].fof.clusters[k].metrics.cluster_snr;
    order.sort_by(|a, b| snr(b).total_cmp(&snr(a)).then(a.cmp(b)));
    let mut accepted: Vec<(usize, usize, BinBox)> = Vec::new();
    for (ci, k) in order {
        let bx = absolute_box(&chunks[ci], &chunks[ci].fof.clusters[k].metrics);
        if !accepted.iter().any(|&(cj, _, other)| cj != ci && boxes_overlap(bx, other)) {
            accepted.push((ci, k, bx));
        }
    }
    accepted.sort_by_key(|&(ci, k, bx)| (bx.0, bx.2, ci, chunks[ci].fof.clusters[k].id));

    let membership: Vec<Vec<usize>> = chunks.iter().map(|r| r.fof.supercluster_of()).collect();
    let mut sc_ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut candidates: Vec<Candidate> = accepted
        .iter()
        .enumerate()
        .map(|(id, &(ci, k, bx))| {
            let r = &chunks[ci];
            let cluster = &r.fof.clusters[k];
            let next = sc_ids.len();
            let supercluster_id = *sc_ids.entry((ci, membership[ci][k])).or_insert(next);
            let m = &cluster.metrics;
            let metrics = ClusterMetrics { t_start_bin: bx.0, t_end_bin: bx.1, ..*m };
            Candidate {
                record: CandidateRecord {
                    id,
                    chunk: r.chunk.index,
                    t_start_s: r.spectrum.time_s(m.t_start_bin),
                    t_end_s: r.spectrum.time_s(m.t_end_bin),
                    f_start_mhz: r.spectrum.freq_mhz(m.f_start_bin),
                    f_end_mhz: r.spectrum.freq_mhz(m.f_end_bin),
                    metrics,
                    supercluster_id,
                },
                chunk: ci,
                cluster: k,
            }
        })
        .collect();
    let mut records: Vec<CandidateRecord> = candidates.iter().map(|c| c.record.clone()).collect();
    sort_candidates(&mut records, cfg.sort_key);
    let rank: HashMap<usize, usize> = records.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
    candidates.sort_by_key(|c| rank[&c.record.id]);
    Ok(SearchOutput { chunks, candidates })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub n_time: usize,
    pub n_freq: usize,
    pub n_chunks: usize,
    pub n_candidates: usize,
    pub candidates_path: PathBuf,
    pub plot_paths: Vec<PathBuf>,
}

/// Reads the input, searches it, and writes the candidates file and plots
/// into `output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let spectrum = read_dsf(&cfg.input_path)?;
    let out = search(&spectrum, cfg)?;

    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let candidates_path = cfg.output_dir.join(CANDIDATES_FILE);
    fs::write(&candidates_path, format_candidates(&out.records())).map_err(|e| Error::io(&candidates_path, e))?;

    let mut plot_paths = Vec::new();
    let plots = cfg.output_dir.join(PLOTS_DIR);
    if cfg.top_k_plots > 0 || cfg.chunk_plots {
        fs::create_dir_all(&plots).map_err(|e| Error::io(&plots, e))?;
    }
    for (rank, cand) in out.candidates.iter().take(cfg.top_k_plots).enumerate() {
        let r = &out.chunks[cand.chunk];
        let cluster = &r.fof.clusters[cand.cluster];
        let path = plots.join(format!("candidate_{rank:03}.ppm"));
        let image = stage(
            r.chunk.index,
            "render",
            render_candidate(&r.spectrum, &r.noise, cluster, cfg.plot_margin_bins, &cfg.render, &path),
        )?;
        let (t_range, f_range) = stage(r.chunk.index, "render", candidate_window(&r.spectrum, cluster, cfg.plot_margin_bins))?;
        write_sidecar(&path, &sidecar_text(&r.spectrum, &image, &t_range, &f_range))?;
        plot_paths.push(path);
    }
    if cfg.chunk_plots {
        for r in &out.chunks {
            let path = plots.join(format!("chunk_{:04}.ppm", r.chunk.index));
            let image = stage(r.chunk.index, "render", render_heatmap(&r.spectrum, &r.noise, &r.fof.clusters, &cfg.render, &path))?;
            write_sidecar(&path, &sidecar_text(&r.spectrum, &image, &(0..r.spectrum.n_time()), &(0..r.spectrum.n_freq())))?;
            plot_paths.push(path);
        }
    }

    Ok(RunSummary {
        n_time: spectrum.n_time(),
        n_freq: spectrum.n_freq(),
        n_chunks: out.chunks.len(),
        n_candidates: out.candidates.len(),
        candidates_path,
        plot_paths,
    })
}

fn write_sidecar(image_path: &std::path::Path, text: &str) -> Result<()> {
    let path = image_path.with_extension("txt");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Builds the spectrum a [`SynthesisConfig`] describes. Pulse amplitudes
/// are in units of `noise_sigma`.
pub fn synthesize(cfg: &SynthesisConfig) -> Result<DynamicSpectrum> {
    let mut s = generate_noise_spectrum(
        cfg.n_time,
        cfg.n_freq,
        cfg.dt_s,
        cfg.f0_mhz,
        cfg.df_mhz,
        cfg.noise_mean,
        cfg.noise_sigma,
        cfg.seed,
    )?;
    for pulse in &cfg.pulses {
        s = inject_pulse(&s, pulse, cfg.noise_sigma, cfg.k_dm)?;
    }
    Ok(s)
}
