use arches_core::expert::{DmrsEstimate, Stage};
use arches_core::perturb::*;
use arches_core::rng::{Purpose, Stream};
use arches_core::scene::ChannelTensor;
use std::time::Instant;

fn estimate(n_sc: usize, n_t: usize, seed: u64) -> DmrsEstimate {
    let mut v = ChannelTensor::zeros(1, 1, n_sc, n_t);
    let mut s = Stream::new(seed, Purpose::ChannelTaps, 0);
    for x in v.values_mut() {
        *x = s.complex_gaussian(1.0);
    }
    DmrsEstimate {
        values: v,
        stage: Stage::Interpolated,
    }
}

#[test]
fn injected_noise_has_calibrated_variance() {
    let t0 = Instant::now();
    let h = estimate(1000, 1000, 1);
    let m = h.values.mean_magnitude();
    for rho in [0.5, 1.0, 2.0] {
        let out = inject_noise(&h, rho, 9, 0).unwrap();
        let n = h.values.values().len() as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (a, b) in out.values.values().iter().zip(h.values.values()) {
            let d = a - b;
            re += d.re * d.re;
            im += d.im * d.im;
        }
        let target = (rho * m) * (rho * m);
        assert!(((re + im) / n / target - 1.0).abs() < 0.02, "rho {rho}");
        assert!((re / n / (target / 2.0) - 1.0).abs() < 0.03);
        assert!((im / n / (target / 2.0) - 1.0).abs() < 0.03);
    }
    let same = inject_noise(&h, 0.0, 9, 0).unwrap();
    assert_eq!(same, h);
    assert!(t0.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn injection_rejects_raw_estimates() {
    let mut h = estimate(8, 1, 2);
    h.stage = Stage::RawLs;
    assert!(inject_noise(&h, 1.0, 0, 0).is_err());
    let h = estimate(8, 1, 2);
    assert!(inject_noise(&h, 2.5, 0, 0).is_err());
    assert!(inject_noise(&h, -0.1, 0, 0).is_err());
}

#[test]
fn shuffled_series_is_rejected() {
    let rho = default_rho_grid();
    let mut means: Vec<f64> = (0..rho.len()).map(|i| 100.0 - i as f64).collect();
    let mut s = Stream::new(4, Purpose::Shuffle, 0);
    for i in (1..means.len()).rev() {
        let j = s.below(i as u64 + 1) as usize;
        means.swap(i, j);
    }
    let sp = spearman(&rho, &means).unwrap();
    let table = DegradationTable::from_means(&[("x", &means)], &rho).unwrap();
    let scores = monotonicity_filter(&table, DEFAULT_TAU).unwrap();
    assert_eq!(scores[0].spearman, Some(sp));
    assert!(sp.abs() < 0.9);
    assert!(!scores[0].retained);
}

#[test]
fn default_grid_shape() {
    let g = default_rho_grid();
    assert_eq!(g.len(), 21);
    assert_eq!(g[0], 0.0);
    assert_eq!(g[20], 2.0);
    assert!(g.windows(2).all(|w| w[0] < w[1]));
    let bad = PerturbationConfig {
        rho_values: vec![0.5, 0.1],
        ..Default::default()
    };
    assert!(bad.validate().is_err());
}
