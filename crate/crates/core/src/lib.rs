//! Friends-of-friends search for dispersed radio transients in dynamic
//! spectra.
//!
//! The crate is organized by pipeline stage:
//!
//! - [`spectra`]: the [`DynamicSpectrum`] grid and its file formats.
//! - [`preprocess`]: block averaging or Gaussian smoothing with decimation.
//! - [`noise`]: sigma-clipped background mean and RMS.
//! - [`fof`]: thresholding, clustering, cluster metrics and superclusters.
//! - [`dispersion`]: dispersion delays, incoherent dedispersion, the boxcar
//!   matched filter, and synthetic pulses.
//! - [`pipeline`]: configuration, chunked parallel execution and the
//!   candidates file.
//! - [`render`]: PPM heatmaps with clusters highlighted.
//!
//! ```
//! use fofscope::dispersion::{generate_noise_spectrum, inject_pulse, DispersionConstant, PulseSpec};
//! use fofscope::fof::{run_fof, FofParams, SuperclusterSpec};
//! use fofscope::noise::{estimate_background, ClipConfig};
//!
//! let k = DispersionConstant::default();
//! let noise = generate_noise_spectrum(512, 64, 0.001, 4000.0, 62.5, 0.0, 1.0, 7)?;
//! let pulse = PulseSpec { dm: 300.0, t0_s: 0.2, width_s: 0.004, amplitude_snr: 8.0, seed: 0 };
//! let spectrum = inject_pulse(&noise, &pulse, 1.0, k)?;
//!
//! let background = estimate_background(&spectrum, &ClipConfig::default())?;
//! let params = FofParams { m1: 3.0, m2: 50.0, t_gap: 3, f_gap: 2 };
//! let found = run_fof(&spectrum, &background, &params, &SuperclusterSpec::default(), k)?;
//! let best = found.clusters.iter().max_by(|a, b| a.metrics.cluster_snr.total_cmp(&b.metrics.cluster_snr)).unwrap();
//! assert!((best.metrics.dm.unwrap() - 300.0).abs() < 30.0);
//! # Ok::<(), fofscope::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dispersion;
mod error;
pub mod fof;
pub mod noise;
pub mod pipeline;
pub mod preprocess;
pub mod render;
pub mod spectra;

pub use error::{Error, Result};
pub use spectra::DynamicSpectrum;

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/preprocessing.md")]
    mod preprocessing {}
    #[doc = include_str!("../../../book/src/noise.md")]
    mod noise {}
    #[doc = include_str!("../../../book/src/fof.md")]
    mod fof {}
    #[doc = include_str!("../../../book/src/superclusters.md")]
    mod superclusters {}
    #[doc = include_str!("../../../book/src/dispersion.md")]
    mod dispersion {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/rendering.md")]
    mod rendering {}
}
