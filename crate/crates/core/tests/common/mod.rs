#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use fofscope::dispersion::{dispersion_delay, generate_noise_spectrum, inject_pulse, DispersionConstant, PulseSpec};
use fofscope::fof::Pixel;
use fofscope::pipeline::PipelineConfig;
use fofscope::DynamicSpectrum;

pub const N_TIME: usize = 2048;
pub const N_FREQ: usize = 256;
pub const DT_S: f64 = 0.0005;
pub const F_LO: f64 = 4000.0;
pub const F_HI: f64 = 8000.0;

pub fn df_mhz() -> f64 {
    (F_HI - F_LO) / (N_FREQ - 1) as f64
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Infinite-frequency arrival time that centres the track in a grid of `duration_s`.
pub fn centred_t0(dm: f64, duration_s: f64, k: DispersionConstant) -> f64 {
    let lo = dispersion_delay(dm, F_LO, k).unwrap();
    let hi = dispersion_delay(dm, F_HI, k).unwrap();
    duration_s / 2.0 - 0.5 * (lo + hi)
}

/// Unit-variance noise over 4-8 GHz with one pulse of `amplitude_snr`, 5 bins wide.
pub fn injected(dm: f64, t0_s: f64, amplitude_snr: f64, n_time: usize, seed: u64) -> (DynamicSpectrum, PulseSpec) {
    let k = DispersionConstant::default();
    let noise = generate_noise_spectrum(n_time, N_FREQ, DT_S, F_LO, df_mhz(), 0.0, 1.0, seed).unwrap();
    let pulse = PulseSpec { dm, t0_s, width_s: 5.0 * DT_S, amplitude_snr, seed };
    (inject_pulse(&noise, &pulse, 1.0, k).unwrap(), pulse)
}

pub fn injected_centred(dm: f64, seed: u64) -> (DynamicSpectrum, PulseSpec) {
    let t0 = centred_t0(dm, N_TIME as f64 * DT_S, DispersionConstant::default());
    injected(dm, t0, 10.0, N_TIME, seed)
}

/// One configuration for every DM in the injection corpus.
pub fn search_config() -> PipelineConfig {
    let mut cfg = PipelineConfig::new("input.dsf", "out");
    cfg.fof.m1 = 3.0;
    cfg.fof.m2 = 30.0;
    cfg.fof.t_gap = 8;
    cfg.fof.f_gap = 2;
    cfg
}

/// True when any channel of the bounding box sees the pulse peak inside the
/// box's time extent, widened by `slack_s`.
pub fn overlaps_track(
    t_start_s: f64,
    t_end_s: f64,
    f_start_mhz: f64,
    f_end_mhz: f64,
    pulse: &PulseSpec,
    slack_s: f64,
) -> bool {
    let k = DispersionConstant::default();
    let steps = 64;
    (0..=steps).any(|i| {
        let f = f_start_mhz + (f_end_mhz - f_start_mhz) * i as f64 / steps as f64;
        let t = pulse.t0_s + dispersion_delay(pulse.dm, f, k).unwrap();
        t >= t_start_s - slack_s && t <= t_end_s + slack_s
    })
}

/// Connected components of the friendship graph by breadth-first search over
/// all pixel pairs, as sets of (t, f).
pub fn bfs_components(pixels: &[(usize, usize)], t_gap: usize, f_gap: usize) -> BTreeSet<BTreeSet<(usize, usize)>> {
    let n = pixels.len();
    let mut seen = vec![false; n];
    let mut out = BTreeSet::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = BTreeSet::new();
        let mut queue = VecDeque::from([s]);
        while let Some(i) = queue.pop_front() {
            comp.insert(pixels[i]);
            for j in 0..n {
                if !seen[j]
                    && pixels[i].0.abs_diff(pixels[j].0) <= t_gap
                    && pixels[i].1.abs_diff(pixels[j].1) <= f_gap
                {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        out.insert(comp);
    }
    out
}

pub fn partition_of(groups: &[Vec<Pixel>]) -> BTreeSet<BTreeSet<(usize, usize)>> {
    groups.iter().map(|g| g.iter().map(|p| (p.t_bin, p.f_bin)).collect()).collect()
}

pub fn pixels_from(coords: &[(usize, usize)]) -> Vec<Pixel> {
    coords.iter().map(|&(t_bin, f_bin)| Pixel { t_bin, f_bin, intensity: 1.0, snr: 1.0 }).collect()
}

/// Direct 2-D convolution with a truncated Gaussian and half-sample
/// reflected borders, with no FFT.
pub fn direct_gaussian(data: &[f64], n_time: usize, n_freq: usize, sigma_t: f64, sigma_f: f64) -> Vec<f64> {
    fn kernel(sigma: f64) -> Vec<f64> {
        let r = (4.0 * sigma).ceil() as isize;
        let w: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    }
    fn reflect(i: isize, n: usize) -> usize {
        let n = n as isize;
        let mut i = i;
        loop {
            if i < 0 {
                i = -i - 1;
            } else if i >= n {
                i = 2 * n - i - 1;
            } else {
                return i as usize;
            }
        }
    }
    let (kt, kf) = (kernel(sigma_t), kernel(sigma_f));
    let (rt, rf) = ((kt.len() / 2) as isize, (kf.len() / 2) as isize);
    let mut out = vec![0.0; n_time * n_freq];
    for t in 0..n_time {
        for f in 0..n_freq {
            let mut acc = 0.0;
            for (a, wt) in kt.iter().enumerate() {
                let tt = reflect(t as isize + a as isize - rt, n_time);
                for (b, wf) in kf.iter().enumerate() {
                    let ff = reflect(f as isize + b as isize - rf, n_freq);
                    acc += wt * wf * data[tt * n_freq + ff];
                }
            }
            out[t * n_freq + f] = acc;
        }
    }
    out
}

/// Largest absolute difference scaled by the largest reference magnitude.
pub fn max_rel_error(got: &[f64], want: &[f64]) -> f64 {
    assert_eq!(got.len(), want.len());
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = got.iter().zip(want).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    diff / scale
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}
