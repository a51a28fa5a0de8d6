//! Flat `key = value` configuration files.
//!
//! Blank lines and anything after `#` are ignored. Keys may appear once,
//! except `pulse` in synthesis configs. Relative paths are resolved against
//! the directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dispersion::{DispersionConstant, PulseSpec, DEFAULT_K_DM};
use crate::error::{Error, Result};
use crate::fof::{FofParams, SuperclusterSpec, TrackMode};
use crate::noise::ClipConfig;
use crate::preprocess::{SmoothingMode, SmoothingSpec};
use crate::render::{Colormap, RenderSpec};

use super::candidates::SortKey;

/// Which pixels the background statistics are computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseScope {
    /// Each chunk estimates its own background.
    Chunk,
    /// One estimate over the whole preprocessed file, shared by all chunks.
    Global,
}

impl FromStr for NoiseScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chunk" => Ok(Self::Chunk),
            "global" => Ok(Self::Global),
            other => Err(Error::Config(format!("unknown noise_scope {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input_path: PathBuf,
    pub output_dir: PathBuf,
    pub smoothing: SmoothingSpec,
    pub clip: ClipConfig,
    pub fof: FofParams,
    pub supercluster: SuperclusterSpec,
    /// Largest DM whose track must fit whole inside some chunk.
    pub dm_max: f64,
    /// Raw time bins per chunk; 0 processes the file in one piece.
    pub chunk_bins: usize,
    pub workers: usize,
    pub noise_scope: NoiseScope,
    pub sort_key: SortKey,
    pub top_k_plots: usize,
    pub plot_margin_bins: usize,
    /// Also draw one heatmap per chunk with all of its clusters.
    pub chunk_plots: bool,
    pub render: RenderSpec,
    pub k_dm: DispersionConstant,
}

impl PipelineConfig {
    /// Defaults for everything except the two paths.
    pub fn new(input_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            input_path: input_path.into(),
            output_dir: output_dir.into(),
            smoothing: SmoothingSpec::default(),
            clip: ClipConfig::default(),
            fof: FofParams::default(),
            supercluster: SuperclusterSpec::default(),
            dm_max: 0.0,
            chunk_bins: 0,
            workers: 1,
            noise_scope: NoiseScope::Chunk,
            sort_key: SortKey::ClusterSnr,
            top_k_plots: 0,
            plot_margin_bins: 8,
            chunk_plots: false,
            render: RenderSpec::default(),
            k_dm: DispersionConstant::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.smoothing.validate()?;
        self.clip.validate()?;
        self.fof.validate()?;
        self.render.validate()?;
        if !(self.dm_max >= 0.0) {
            return Err(Error::Config(format!("dm_max must be non-negative, got {}", self.dm_max)));
        }
        if !(self.supercluster.tol_bins >= 0.0) {
            return Err(Error::Config("supercluster_tol_bins must be non-negative".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.chunk_bins != 0 && self.chunk_bins % self.smoothing.t_factor != 0 {
            return Err(Error::Config(format!(
                "chunk_bins ({}) must be a multiple of t_factor ({})",
                self.chunk_bins, self.smoothing.t_factor
            )));
        }
        Ok(())
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let entries = parse_entries(text)?;
        let mut input = None;
        let mut output = None;
        let mut cfg = Self::new("", "");
        for Entry { key, value, line } in entries {
            let ctx = |e: Error| match e {
                Error::Config(msg) => Error::Config(format!("line {line}: {key}: {msg}")),
                other => other,
            };
            let v = value.as_str();
            match key.as_str() {
                "input_path" => input = Some(base_dir.join(v)),
                "output_dir" => output = Some(base_dir.join(v)),
                "smoothing_mode" => cfg.smoothing.mode = v.parse::<SmoothingMode>().map_err(ctx)?,
                "t_factor" => cfg.smoothing.t_factor = num(v).map_err(ctx)?,
                "f_factor" => cfg.smoothing.f_factor = num(v).map_err(ctx)?,
                "sigma_t_bins" => cfg.smoothing.sigma_t_bins = num(v).map_err(ctx)?,
                "sigma_f_bins" => cfg.smoothing.sigma_f_bins = num(v).map_err(ctx)?,
                "clip_factor" => cfg.clip.clip_factor = num(v).map_err(ctx)?,
                "clip_rel_tol" => cfg.clip.rel_tol = num(v).map_err(ctx)?,
                "clip_max_iter" => cfg.clip.max_iter = num(v).map_err(ctx)?,
                "m1" => cfg.fof.m1 = num(v).map_err(ctx)?,
                "m2" => cfg.fof.m2 = num(v).map_err(ctx)?,
                "t_gap" => cfg.fof.t_gap = num(v).map_err(ctx)?,
                "f_gap" => cfg.fof.f_gap = num(v).map_err(ctx)?,
                "supercluster_mode" => cfg.supercluster.mode = v.parse::<TrackMode>().map_err(ctx)?,
                "supercluster_tol_bins" => cfg.supercluster.tol_bins = num(v).map_err(ctx)?,
                "dm_max" => cfg.dm_max = num(v).map_err(ctx)?,
                "chunk_bins" => cfg.chunk_bins = num(v).map_err(ctx)?,
                "workers" => cfg.workers = num(v).map_err(ctx)?,
                "noise_scope" => cfg.noise_scope = v.parse().map_err(ctx)?,
                "sort_key" => cfg.sort_key = v.parse().map_err(ctx)?,
                "top_k_plots" => cfg.top_k_plots = num(v).map_err(ctx)?,
                "plot_margin_bins" => cfg.plot_margin_bins = num(v).map_err(ctx)?,
                "chunk_plots" => cfg.chunk_plots = num(v).map_err(ctx)?,
                "colormap" => cfg.render.colormap = v.parse::<Colormap>().map_err(ctx)?,
                "highlight" => cfg.render.highlight = rgb(v).map_err(ctx)?,
                "max_px" => cfg.render.max_px = num(v).map_err(ctx)?,
                "snr_floor" => cfg.render.snr_floor = num(v).map_err(ctx)?,
                "snr_ceil" => cfg.render.snr_ceil = num(v).map_err(ctx)?,
                "k_dm" => cfg.k_dm = DispersionConstant::new(num(v).map_err(ctx)?).map_err(ctx)?,
                _ => return Err(Error::Config(format!("line {line}: unknown key {key:?}"))),
            }
        }
        cfg.input_path = input.ok_or_else(|| Error::Config("missing input_path".into()))?;
        cfg.output_dir = output.ok_or_else(|| Error::Config("missing output_dir".into()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Renders the config back into file syntax, paths as given.
    pub fn to_text(&self) -> String {
        let s = &self.smoothing;
        let r = &self.render;
        format!(
            "input_path = {}\noutput_dir = {}\nsmoothing_mode = {}\nt_factor = {}\nf_factor = {}\nsigma_t_bins = {}\nsigma_f_bins = {}\n\
             clip_factor = {}\nclip_rel_tol = {}\nclip_max_iter = {}\nm1 = {}\nm2 = {}\nt_gap = {}\nf_gap = {}\n\
             supercluster_mode = {}\nsupercluster_tol_bins = {}\ndm_max = {}\nchunk_bins = {}\nworkers = {}\nnoise_scope = {}\n\
             sort_key = {}\ntop_k_plots = {}\nplot_margin_bins = {}\nchunk_plots = {}\ncolormap = {}\nhighlight = {},{},{}\n\
             max_px = {}\nsnr_floor = {}\nsnr_ceil = {}\nk_dm = {}\n",
            self.input_path.display(),
            self.output_dir.display(),
            s.mode.as_str(),
            s.t_factor,
            s.f_factor,
            s.sigma_t_bins,
            s.sigma_f_bins,
            self.clip.clip_factor,
            self.clip.rel_tol,
            self.clip.max_iter,
            self.fof.m1,
            self.fof.m2,
            self.fof.t_gap,
            self.fof.f_gap,
            self.supercluster.mode.as_str(),
            self.supercluster.tol_bins,
            self.dm_max,
            self.chunk_bins,
            self.workers,
            match self.noise_scope {
                NoiseScope::Chunk => "chunk",
                NoiseScope::Global => "global",
            },
            self.sort_key.as_str(),
            self.top_k_plots,
            self.plot_margin_bins,
            self.chunk_plots,
            r.colormap.as_str(),
            r.highlight[0],
            r.highlight[1],
            r.highlight[2],
            r.max_px,
            r.snr_floor,
            r.snr_ceil,
            self.k_dm.k_dm(),
        )
    }
}

/// Description of a synthetic test file: Gaussian background plus pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisConfig {
    pub output_path: PathBuf,
    pub n_time: usize,
    pub n_freq: usize,
    pub dt_s: f64,
    pub f0_mhz: f64,
    pub df_mhz: f64,
    pub noise_mean: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    /// `pulse = dm t0_s width_s amplitude_snr`, repeatable.
    pub pulses: Vec<PulseSpec>,
    pub k_dm: DispersionConstant,
}

impl SynthesisConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut output = None;
        let mut dims: [Option<usize>; 2] = [None, None];
        let mut axes: [Option<f64>; 3] = [None, None, None];
        let mut cfg = Self {
            output_path: PathBuf::new(),
            n_time: 0,
            n_freq: 0,
            dt_s: 0.0,
            f0_mhz: 0.0,
            df_mhz: 0.0,
            noise_mean: 0.0,
            noise_sigma: 1.0,
            seed: 0,
            pulses: Vec::new(),
            k_dm: DispersionConstant::new(DEFAULT_K_DM)?,
        };
        for Entry { key, value, line } in parse_entries_with_repeats(text, &["pulse"])? {
            let ctx = |e: Error| match e {
                Error::Config(msg) => Error::Config(format!("line {line}: {key}: {msg}")),
                other => other,
            };
            let v = value.as_str();
            match key.as_str() {
                "output_path" => output = Some(base_dir.join(v)),
                "n_time" => dims[0] = Some(num(v).map_err(ctx)?),
                "n_freq" => dims[1] = Some(num(v).map_err(ctx)?),
                "dt_s" => axes[0] = Some(num(v).map_err(ctx)?),
                "f0_mhz" => axes[1] = Some(num(v).map_err(ctx)?),
                "df_mhz" => axes[2] = Some(num(v).map_err(ctx)?),
                "noise_mean" => cfg.noise_mean = num(v).map_err(ctx)?,
                "noise_sigma" => cfg.noise_sigma = num(v).map_err(ctx)?,
                "seed" => cfg.seed = num(v).map_err(ctx)?,
                "k_dm" => cfg.k_dm = DispersionConstant::new(num(v).map_err(ctx)?).map_err(ctx)?,
                "pulse" => {
                    let parts: Vec<f64> = v
                        .split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|s| !s.is_empty())
                        .map(num)
                        .collect::<Result<_>>()
                        .map_err(ctx)?;
                    let [dm, t0_s, width_s, amplitude_snr] = parts[..] else {
                        return Err(ctx(Error::Config("expected `dm t0_s width_s amplitude_snr`".into())));
                    };
                    let seed = cfg.seed.wrapping_add(cfg.pulses.len() as u64 + 1);
                    cfg.pulses.push(PulseSpec { dm, t0_s, width_s, amplitude_snr, seed });
                }
                _ => return Err(Error::Config(format!("line {line}: unknown key {key:?}"))),
            }
        }
        let missing = |name: &str| Error::Config(format!("missing {name}"));
        cfg.output_path = output.ok_or_else(|| missing("output_path"))?;
        cfg.n_time = dims[0].ok_or_else(|| missing("n_time"))?;
        cfg.n_freq = dims[1].ok_or_else(|| missing("n_freq"))?;
        cfg.dt_s = axes[0].ok_or_else(|| missing("dt_s"))?;
        cfg.f0_mhz = axes[1].ok_or_else(|| missing("f0_mhz"))?;
        cfg.df_mhz = axes[2].ok_or_else(|| missing("df_mhz"))?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

struct Entry {
    key: String,
    value: String,
    line: usize,
}

fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    parse_entries_with_repeats(text, &[])
}

fn parse_entries_with_repeats(text: &str, repeatable: &[&str]) -> Result<Vec<Entry>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", i + 1)));
        }
        if !repeatable.contains(&key) && !seen.insert(key.to_string()) {
            return Err(Error::Config(format!("line {}: duplicate key {key:?}", i + 1)));
        }
        out.push(Entry { key: key.to_string(), value: value.to_string(), line: i + 1 });
    }
    Ok(out)
}

fn num<T: FromStr>(v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("cannot parse {v:?}")))
}

fn rgb(v: &str) -> Result<[u8; 3]> {
    let parts: Vec<u8> = v.split(',').map(|s| num(s.trim())).collect::<Result<_>>()?;
    parts.try_into().map_err(|_| Error::Config(format!("expected r,g,b, got {v:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = PipelineConfig::parse("input_path = in.dsf\noutput_dir = out\n", Path::new("/data")).unwrap();
        assert_eq!(cfg.input_path, PathBuf::from("/data/in.dsf"));
        assert_eq!(cfg.output_dir, PathBuf::from("/data/out"));
        assert_eq!(cfg.clip, ClipConfig::default());
        assert_eq!(cfg.sort_key, SortKey::ClusterSnr);
        assert_eq!(cfg.k_dm.k_dm(), DEFAULT_K_DM);
    }

    #[test]
    fn comments_and_overrides() {
        let text = "# search\ninput_path = a.dsf # trailing\noutput_dir = /abs/out\n\nm1 = 4.5\nt_gap = 6\nsmoothing_mode = gaussian-decimate\nsort_key = dm\nhighlight = 0, 255, 0\n";
        let cfg = PipelineConfig::parse(text, Path::new("base")).unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("/abs/out"));
        assert_eq!(cfg.fof.m1, 4.5);
        assert_eq!(cfg.fof.t_gap, 6);
        assert_eq!(cfg.smoothing.mode, SmoothingMode::GaussianDecimate);
        assert_eq!(cfg.sort_key, SortKey::Dm);
        assert_eq!(cfg.render.highlight, [0, 255, 0]);
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = PipelineConfig::new("/x/in.dsf", "/x/out");
        cfg.fof.m2 = 12.5;
        cfg.chunk_bins = 512;
        cfg.noise_scope = NoiseScope::Global;
        cfg.smoothing = SmoothingSpec::gaussian(2, 2, 1.5, 0.75);
        let back = PipelineConfig::parse(&cfg.to_text(), Path::new("/")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn config_errors() {
        let base = Path::new(".");
        let cases = [
            "output_dir = o\n",
            "input_path = i\n",
            "input_path = i\noutput_dir = o\nbogus = 1\n",
            "input_path = i\noutput_dir = o\nm1 = abc\n",
            "input_path = i\noutput_dir = o\nm1 = 0\n",
            "input_path = i\noutput_dir = o\nworkers = 0\n",
            "input_path = i\noutput_dir = o\nsort_key = nope\n",
            "input_path = i\noutput_dir = o\nm1 = 1\nm1 = 2\n",
            "input_path = i\noutput_dir = o\nt_factor = 3\nchunk_bins = 100\n",
            "input_path i\n",
        ];
        for text in cases {
            assert!(matches!(PipelineConfig::parse(text, base), Err(Error::Config(_))), "{text:?}");
        }
    }

    #[test]
    fn synthesis_config() {
        let text = "output_path = s.dsf\nn_time = 100\nn_freq = 8\ndt_s = 0.001\nf0_mhz = 4000\ndf_mhz = 500\nseed = 7\npulse = 100 0.02 0.003 8\npulse = 0, 0.05, 0.002, 6\n";
        let cfg = SynthesisConfig::parse(text, Path::new("d")).unwrap();
        assert_eq!(cfg.output_path, PathBuf::from("d/s.dsf"));
        assert_eq!(cfg.pulses.len(), 2);
        assert_eq!(cfg.pulses[1].dm, 0.0);
        assert_eq!(cfg.pulses[0].amplitude_snr, 8.0);
        assert!(SynthesisConfig::parse("output_path = s\n", Path::new(".")).is_err());
        assert!(SynthesisConfig::parse(&format!("{text}pulse = 1 2 3\n"), Path::new(".")).is_err());
    }
}
