//! Binary PPM (P6) heatmaps of dynamic spectra with cluster overlays.
//!
//! Time runs left to right and frequency bottom to top. Pixel color is a
//! function of the pixel SNR clamped to `[snr_floor, snr_ceil]`; cluster
//! members are painted in the highlight color. Grids larger than `max_px`
//! on either axis are reduced by integer block-maxing.

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fof::{Cluster, Pixel};
use crate::noise::NoiseEstimate;
use crate::spectra::DynamicSpectrum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Colormap {
    Grayscale,
    Viridis,
}

impl FromStr for Colormap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grayscale" => Ok(Self::Grayscale),
            "viridis" => Ok(Self::Viridis),
            other => Err(Error::Config(format!("unknown colormap {other:?}"))),
        }
    }
}

// Nine evenly spaced samples of matplotlib's viridis.
const VIRIDIS: [[u8; 3]; 9] = [
    [68, 1, 84],
    [71, 44, 122],
    [59, 81, 139],
    [44, 113, 142],
    [33, 144, 141],
    [39, 173, 129],
    [92, 200, 99],
    [170, 220, 50],
    [253, 231, 37],
];

impl Colormap {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Grayscale => "grayscale",
            Self::Viridis => "viridis",
        }
    }

    /// Color at position `u` in `[0, 1]`.
    pub fn color(&self, u: f64) -> [u8; 3] {
        let u = u.clamp(0.0, 1.0);
        match self {
            Colormap::Grayscale => {
                let v = (255.0 * u).round() as u8;
                [v, v, v]
            }
            Colormap::Viridis => {
                let pos = u * (VIRIDIS.len() - 1) as f64;
                let i = (pos.floor() as usize).min(VIRIDIS.len() - 2);
                let frac = pos - i as f64;
                let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
                std::array::from_fn(|c| (a[c] as f64 + frac * (b[c] as f64 - a[c] as f64)).round() as u8)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderSpec {
    pub colormap: Colormap,
    pub highlight: [u8; 3],
    /// Largest allowed image width or height.
    pub max_px: usize,
    pub snr_floor: f64,
    pub snr_ceil: f64,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self { colormap: Colormap::Viridis, highlight: [255, 0, 0], max_px: 1024, snr_floor: -3.0, snr_ceil: 10.0 }
    }
}

impl RenderSpec {
    pub fn validate(&self) -> Result<()> {
        if self.max_px < 16 {
            return Err(Error::Config(format!("max_px must be at least 16, got {}", self.max_px)));
        }
        if !(self.snr_ceil > self.snr_floor) {
            return Err(Error::Config("snr_ceil must exceed snr_floor".into()));
        }
        Ok(())
    }

    pub fn color_of(&self, snr: f64) -> [u8; 3] {
        self.colormap.color((snr - self.snr_floor) / (self.snr_ceil - self.snr_floor))
    }
}

/// An RGB raster, rows top to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
    /// Grid bins folded into one image pixel along time and frequency.
    pub bins_per_px: (usize, usize),
}

impl Image {
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.rgb);
        out
    }

    pub fn write_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_ppm()).map_err(|e| Error::io(path, e))
    }
}

/// Renders time bins `t_range` and channels `f_range` of `spectrum`.
pub fn render_region(
    spectrum: &DynamicSpectrum,
    noise: &NoiseEstimate,
    highlighted: &[Pixel],
    t_range: std::ops::Range<usize>,
    f_range: std::ops::Range<usize>,
    spec: &RenderSpec,
) -> Result<Image> {
    spec.validate()?;
    if t_range.is_empty() || f_range.is_empty() || t_range.end > spectrum.n_time() || f_range.end > spectrum.n_freq() {
        return Err(Error::Render(format!(
            "region t {t_range:?} x f {f_range:?} is empty or outside the {}x{} grid",
            spectrum.n_time(),
            spectrum.n_freq()
        )));
    }
    if noise.rms == 0.0 {
        return Err(Error::UndefinedSnr);
    }
    let marks: HashSet<(usize, usize)> = highlighted.iter().map(|p| (p.t_bin, p.f_bin)).collect();
    let (n_t, n_f) = (t_range.len(), f_range.len());
    let bx = n_t.div_ceil(spec.max_px);
    let by = n_f.div_ceil(spec.max_px);
    let (width, height) = (n_t.div_ceil(bx), n_f.div_ceil(by));
    let mut rgb = Vec::with_capacity(3 * width * height);
    for y in 0..height {
        // top image row holds the highest channels
        let fy = height - 1 - y;
        let f_lo = f_range.start + fy * by;
        let f_hi = (f_lo + by).min(f_range.end);
        for x in 0..width {
            let t_lo = t_range.start + x * bx;
            let t_hi = (t_lo + bx).min(t_range.end);
            let mut peak = f64::NEG_INFINITY;
            let mut marked = false;
            for t in t_lo..t_hi {
                for f in f_lo..f_hi {
                    peak = peak.max(spectrum.get(t, f));
                    marked |= marks.contains(&(t, f));
                }
            }
            let color = if marked { spec.highlight } else { spec.color_of((peak - noise.mean) / noise.rms) };
            rgb.extend_from_slice(&color);
        }
    }
    Ok(Image { width, height, rgb, bins_per_px: (bx, by) })
}

/// Full-spectrum heatmap with every cluster highlighted.
pub fn render_heatmap(
    spectrum: &DynamicSpectrum,
    noise: &NoiseEstimate,
    clusters: &[Cluster],
    spec: &RenderSpec,
    path: impl AsRef<Path>,
) -> Result<Image> {
    let pixels: Vec<Pixel> = clusters.iter().flat_map(|c| c.pixels.iter().copied()).collect();
    let image = render_region(spectrum, noise, &pixels, 0..spectrum.n_time(), 0..spectrum.n_freq(), spec)?;
    image.write_ppm(path)?;
    Ok(image)
}

/// Cutout around one cluster's bounding box, grown by `margin_bins` on each
/// side and clamped to the grid. Only this cluster is highlighted.
pub fn render_candidate(
    spectrum: &DynamicSpectrum,
    noise: &NoiseEstimate,
    cluster: &Cluster,
    margin_bins: usize,
    spec: &RenderSpec,
    path: impl AsRef<Path>,
) -> Result<Image> {
    let (t_range, f_range) = candidate_window(spectrum, cluster, margin_bins)?;
    let image = render_region(spectrum, noise, &cluster.pixels, t_range, f_range, spec)?;
    image.write_ppm(path)?;
    Ok(image)
}

/// Grid window drawn by [`render_candidate`].
pub fn candidate_window(
    spectrum: &DynamicSpectrum,
    cluster: &Cluster,
    margin_bins: usize,
) -> Result<(std::ops::Range<usize>, std::ops::Range<usize>)> {
    let m = &cluster.metrics;
    if m.t_start_bin > m.t_end_bin
        || m.f_start_bin > m.f_end_bin
        || m.t_end_bin >= spectrum.n_time()
        || m.f_end_bin >= spectrum.n_freq()
    {
        return Err(Error::Render(format!(
            "cluster {} extent t [{}, {}] f [{}, {}] does not fit the {}x{} grid",
            cluster.id,
            m.t_start_bin,
            m.t_end_bin,
            m.f_start_bin,
            m.f_end_bin,
            spectrum.n_time(),
            spectrum.n_freq()
        )));
    }
    let t0 = m.t_start_bin.saturating_sub(margin_bins);
    let t1 = (m.t_end_bin + 1 + margin_bins).min(spectrum.n_time());
    let f0 = m.f_start_bin.saturating_sub(margin_bins);
    let f1 = (m.f_end_bin + 1 + margin_bins).min(spectrum.n_freq());
    Ok((t0..t1, f0..f1))
}

/// Axis description written next to a rendered image.
pub fn sidecar_text(spectrum: &DynamicSpectrum, image: &Image, t_range: &std::ops::Range<usize>, f_range: &std::ops::Range<usize>) -> String {
    format!(
        "width = {}\nheight = {}\nt_start_s = {}\ndt_s = {}\nt_bins_per_px = {}\nf_start_mhz = {}\ndf_mhz = {}\nf_bins_per_px = {}\nx_axis = time\ny_axis = frequency_ascending_upward\n",
        image.width,
        image.height,
        spectrum.time_s(t_range.start),
        spectrum.dt_s(),
        image.bins_per_px.0,
        spectrum.freq_mhz(f_range.start),
        spectrum.df_mhz(),
        image.bins_per_px.1,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::DispersionConstant;
    use crate::fof::build_clusters;

    fn noise() -> NoiseEstimate {
        NoiseEstimate { mean: 0.0, rms: 1.0, iterations: 1, kept_fraction: 1.0, converged: true }
    }

    fn gray() -> RenderSpec {
        RenderSpec { colormap: Colormap::Grayscale, snr_floor: 0.0, snr_ceil: 4.0, ..RenderSpec::default() }
    }

    #[test]
    fn two_by_two_grayscale() {
        // t-major: (t0,f0)=1 (t0,f1)=2 (t1,f0)=3 (t1,f1)=4
        let s = DynamicSpectrum::new(2, 2, 0.001, 4000.0, 1.0, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let img = render_region(&s, &noise(), &[], 0..2, 0..2, &gray()).unwrap();
        assert_eq!((img.width, img.height), (2, 2));
        // bottom row is channel 0
        assert_eq!(img.pixel(0, 1), [64; 3]);
        assert_eq!(img.pixel(1, 1), [191; 3]);
        assert_eq!(img.pixel(0, 0), [128; 3]);
        assert_eq!(img.pixel(1, 0), [255; 3]);
        let ppm = img.to_ppm();
        assert!(ppm.starts_with(b"P6\n2 2\n255\n"));
        assert_eq!(ppm.len(), 11 + 12);
    }

    #[test]
    fn highlight_overrides() {
        let s = DynamicSpectrum::new(2, 2, 0.001, 4000.0, 1.0, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = Pixel { t_bin: 0, f_bin: 0, intensity: 1.0, snr: 1.0 };
        let spec = RenderSpec { highlight: [1, 2, 3], ..gray() };
        let img = render_region(&s, &noise(), &[p], 0..2, 0..2, &spec).unwrap();
        assert_eq!(img.pixel(0, 1), [1, 2, 3]);
    }

    #[test]
    fn clamped_ceiling_is_uniform() {
        let s = DynamicSpectrum::constant(5, 3, 0.001, 4000.0, 1.0, 9.0).unwrap();
        let spec = RenderSpec { snr_ceil: 9.0, ..RenderSpec::default() };
        let img = render_region(&s, &noise(), &[], 0..5, 0..3, &spec).unwrap();
        let top = Colormap::Viridis.color(1.0);
        assert!(img.rgb.chunks(3).all(|c| c == top));
        assert_eq!(top, [253, 231, 37]);
    }

    #[test]
    fn block_max_downscaling() {
        let mut data = vec![0.0; 40 * 20];
        data[33 * 20 + 17] = 4.0;
        let s = DynamicSpectrum::new(40, 20, 0.001, 4000.0, 1.0, data).unwrap();
        let spec = RenderSpec { max_px: 16, ..gray() };
        let img = render_region(&s, &noise(), &[], 0..40, 0..20, &spec).unwrap();
        assert_eq!(img.bins_per_px, (3, 2));
        assert_eq!((img.width, img.height), (14, 10));
        // t 33 -> x 11, f 17 -> block 8 -> y 1
        assert_eq!(img.pixel(11, 1), [255; 3]);
        assert_eq!(img.rgb.iter().filter(|&&v| v == 255).count(), 3);
    }

    #[test]
    fn candidate_cutout_clamps() {
        let s = DynamicSpectrum::constant(30, 20, 0.001, 4000.0, 1.0, 0.0).unwrap();
        let pixels = vec![Pixel { t_bin: 0, f_bin: 1, intensity: 5.0, snr: 5.0 }, Pixel { t_bin: 2, f_bin: 2, intensity: 5.0, snr: 5.0 }];
        let c = build_clusters(vec![pixels], &noise(), &s, DispersionConstant::default()).remove(0);
        assert_eq!(candidate_window(&s, &c, 0).unwrap(), (0..3, 1..3));
        assert_eq!(candidate_window(&s, &c, 10).unwrap(), (0..13, 0..13));
    }

    #[test]
    fn bad_specs() {
        assert!(RenderSpec { max_px: 15, ..RenderSpec::default() }.validate().is_err());
        assert!(RenderSpec { snr_ceil: -3.0, ..RenderSpec::default() }.validate().is_err());
    }
}
