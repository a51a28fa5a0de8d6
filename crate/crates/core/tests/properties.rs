mod common;

use common::*;
use fofscope::dispersion::{dispersion_delay, generate_noise_spectrum, inject_pulse, DispersionConstant, PulseSpec};
use fofscope::fof::{
    build_clusters, cluster_pixels, filter_clusters, linear_odr, quadratic_dm_fit, threshold_pixels, Pixel,
};
use fofscope::noise::{estimate_background, estimate_samples, pixel_snr, sigma_clip, ClipConfig};
use fofscope::spectra::{decode_dsf, encode_dsf};
use fofscope::DynamicSpectrum;
use proptest::prelude::*;

fn grid(max_t: usize, max_f: usize) -> impl Strategy<Value = DynamicSpectrum> {
    (1..=max_t, 1..=max_f).prop_flat_map(|(nt, nf)| {
        (
            prop::collection::vec(-1e3f32..1e3f32, nt * nf),
            1e-5f64..1.0,
            100.0f64..8000.0,
            0.01f64..10.0,
        )
            .prop_map(move |(v, dt, f0, df)| {
                DynamicSpectrum::new(nt, nf, dt, f0, df, v.into_iter().map(f64::from).collect()).unwrap()
            })
    })
}

fn coords() -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::btree_set((0usize..40, 0usize..40), 0..200).prop_map(|s| s.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dsf_round_trip_is_byte_exact(s in grid(20, 20)) {
        let bytes = encode_dsf(&s);
        let back = decode_dsf(&bytes).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(encode_dsf(&back), bytes);
    }

    #[test]
    fn slices_compose(s in grid(30, 4), a in 0usize..30, b in 0usize..30, c in 0usize..30, d in 0usize..30) {
        let n = s.n_time();
        let (a, b) = (a % n, b % n);
        prop_assume!(a < b);
        let inner = b - a;
        let (c, d) = (c % inner, d % (inner + 1));
        prop_assume!(c < d);
        let twice = s.slice_time(a, b).unwrap().slice_time(c, d).unwrap();
        prop_assert_eq!(twice, s.slice_time(a + c, a + d).unwrap());
    }

    #[test]
    fn clustering_ignores_input_order(cs in coords(), tg in 1usize..4, fg in 1usize..4, seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = cs.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let a = cluster_pixels(&pixels_from(&cs), tg, fg);
        let b = cluster_pixels(&pixels_from(&shuffled), tg, fg);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn clustering_equals_bfs(cs in coords(), tg in 1usize..4, fg in 1usize..4) {
        let got = partition_of(&cluster_pixels(&pixels_from(&cs), tg, fg));
        prop_assert_eq!(got, bfs_components(&cs, tg, fg));
    }

    #[test]
    fn thresholds_are_monotone(seed in any::<u64>(), m1 in 0.5f64..4.0, dm1 in 0.0f64..2.0, m2 in 0.0f64..30.0, dm2 in 0.0f64..30.0) {
        let s = generate_noise_spectrum(48, 48, 0.001, 1400.0, 1.0, 0.0, 1.0, seed).unwrap();
        let noise = estimate_background(&s, &ClipConfig::default()).unwrap();
        let lo = threshold_pixels(&s, &noise, m1).unwrap();
        let hi = threshold_pixels(&s, &noise, m1 + dm1).unwrap();
        prop_assert!(hi.len() <= lo.len());

        let k = DispersionConstant::default();
        let clusters = build_clusters(cluster_pixels(&lo, 1, 1), &noise, &s, k);
        for c in &clusters {
            prop_assert!(rel(c.metrics.cluster_snr, c.metrics.snr_mean * c.metrics.n_pixels as f64) <= 1e-9);
        }
        let a = filter_clusters(clusters.clone(), m2).len();
        let b = filter_clusters(clusters, m2 + dm2).len();
        prop_assert!(b <= a);
    }

    #[test]
    fn noise_is_scale_equivariant(seed in any::<u64>(), exp in -3i32..4) {
        // powers of two keep every product exact
        let c = 2f64.powi(exp);
        let s = generate_noise_spectrum(40, 25, 0.001, 1400.0, 1.0, 5.0, 2.0, seed).unwrap();
        let scaled = s.map_values(|v| v * c).unwrap();
        let cfg = ClipConfig::default();
        let (a, b) = (estimate_background(&s, &cfg).unwrap(), estimate_background(&scaled, &cfg).unwrap());
        prop_assert!(rel(b.mean, a.mean * c) <= 1e-12);
        prop_assert!(rel(b.rms, a.rms * c) <= 1e-12);
        for (x, y) in s.data().iter().zip(scaled.data()) {
            let (p, q) = (pixel_snr(*x, &a).unwrap(), pixel_snr(*y, &b).unwrap());
            prop_assert!((p - q).abs() <= 1e-12 * p.abs().max(1.0));
        }
    }

    #[test]
    fn clipped_rms_never_increases(seed in any::<u64>(), frac in 0.0f64..0.2, level in 5.0f64..100.0) {
        let s = generate_noise_spectrum(30, 30, 0.001, 1400.0, 1.0, 0.0, 1.0, seed).unwrap();
        let mut v = s.into_data();
        let n = (v.len() as f64 * frac) as usize;
        for x in v.iter_mut().take(n) {
            *x += level;
        }
        let trace = sigma_clip(&v, &ClipConfig { clip_factor: 2.5, rel_tol: 1e-6, max_iter: 50 }).unwrap();
        for w in trace.rms_history.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn reclipping_survivors_is_a_fixpoint(seed in any::<u64>()) {
        let s = generate_noise_spectrum(50, 40, 0.001, 1400.0, 1.0, 1.0, 3.0, seed).unwrap();
        let cfg = ClipConfig::default();
        let trace = sigma_clip(s.data(), &cfg).unwrap();
        let kept: Vec<f64> = s.data().iter().zip(&trace.kept).filter(|(_, k)| **k).map(|(v, _)| *v).collect();
        let again = estimate_samples(&kept, &cfg).unwrap();
        prop_assert!(rel(again.rms, trace.estimate.rms) < cfg.rel_tol);
    }

    #[test]
    fn odr_is_symmetric_under_axis_swap(
        pts in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
        ws in prop::collection::vec(0.1f64..10.0, 40),
    ) {
        let w = &ws[..pts.len()];
        let swapped: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (y, x)).collect();
        if let (Some(a), Some(b)) = (linear_odr(&pts, w), linear_odr(&swapped, w)) {
            prop_assume!(a.slope.abs() > 1e-6 && b.slope.abs() > 1e-6);
            prop_assert!(rel(a.slope * b.slope, 1.0) <= 1e-9, "{} vs {}", a.slope, b.slope);
        }
    }

    #[test]
    fn delay_follows_inverse_square(dm in 0.0f64..5000.0, f in 10.0f64..10_000.0, g in 10.0f64..10_000.0) {
        let k = DispersionConstant::default();
        let a = dispersion_delay(dm, f, k).unwrap() * f * f;
        let b = dispersion_delay(dm, g, k).unwrap() * g * g;
        prop_assert!(rel(a, b) <= 1e-12);
    }

    #[test]
    fn dm_fit_inverts_delays(dm in 1.0f64..3000.0, t0 in -1.0f64..1.0) {
        let k = DispersionConstant::default();
        let pts: Vec<(f64, f64)> = (0..64)
            .map(|i| {
                let f = 4000.0 + 4000.0 * i as f64 / 63.0;
                (f, t0 + dispersion_delay(dm, f, k).unwrap())
            })
            .collect();
        let fit = quadratic_dm_fit(&pts, &[1.0; 64], k).unwrap();
        prop_assert!(rel(fit.dm, dm) <= 1e-6);
    }

    #[test]
    fn injections_commute(seed in any::<u64>(), dm_a in 0.0f64..300.0, dm_b in 0.0f64..300.0) {
        let k = DispersionConstant::default();
        let s = generate_noise_spectrum(400, 16, 0.001, 4000.0, 100.0, 0.0, 1.0, seed).unwrap();
        let a = PulseSpec { dm: dm_a, t0_s: 0.05, width_s: 0.003, amplitude_snr: 8.0, seed: 1 };
        let b = PulseSpec { dm: dm_b, t0_s: 0.1, width_s: 0.005, amplitude_snr: 4.0, seed: 2 };
        let ab = inject_pulse(&inject_pulse(&s, &a, 1.0, k).unwrap(), &b, 1.0, k).unwrap();
        let ba = inject_pulse(&inject_pulse(&s, &b, 1.0, k).unwrap(), &a, 1.0, k).unwrap();
        for (x, y) in ab.data().iter().zip(ba.data()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}

#[test]
fn metric_identity_holds_on_random_clusters() {
    let k = DispersionConstant::default();
    for seed in 0..20 {
        let s = generate_noise_spectrum(64, 64, 0.001, 1400.0, 1.0, 0.0, 1.0, seed).unwrap();
        let noise = estimate_background(&s, &ClipConfig::default()).unwrap();
        let marked: Vec<Pixel> = threshold_pixels(&s, &noise, 1.0).unwrap();
        for c in build_clusters(cluster_pixels(&marked, 2, 2), &noise, &s, k) {
            assert!(rel(c.metrics.cluster_snr, c.metrics.snr_mean * c.metrics.n_pixels as f64) <= 1e-9);
        }
    }
}
