use arches_core::expert::*;
use arches_core::rng::{Purpose, Stream};
use arches_core::scene::*;
use arches_core::C64;

fn c0() -> C64 {
    C64::new(0.0, 0.0)
}

/// Dense complex solve with partial pivoting, `a` row-major n×n, `b` n×m.
fn solve(mut a: Vec<C64>, mut b: Vec<C64>, n: usize, m: usize) -> Vec<C64> {
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
            .unwrap();
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            for k in 0..m {
                b.swap(col * m + k, piv * m + k);
            }
        }
        let d = a[col * n + col];
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row * n + col] / d;
            if f == c0() {
                continue;
            }
            for k in 0..n {
                let v = a[col * n + k];
                a[row * n + k] -= f * v;
            }
            for k in 0..m {
                let v = b[col * m + k];
                b[row * m + k] -= f * v;
            }
        }
    }
    for row in 0..n {
        let d = a[row * n + row];
        for k in 0..m {
            b[row * m + k] /= d;
        }
    }
    b
}

fn tw(k: usize, n: usize) -> C64 {
    let ang = -2.0 * std::f64::consts::PI * (k % n) as f64 / n as f64;
    C64::new(ang.cos(), ang.sin())
}

/// Raw LS estimate on a single row whose comb values are given.
fn raw_row(comb: &[C64]) -> DmrsEstimate {
    let n_sc = comb.len() * 2;
    let mut v = ChannelTensor::zeros(1, 1, n_sc, 1);
    for (i, &c) in comb.iter().enumerate() {
        v.set(0, 0, 2 * i, 0, c);
        v.set(0, 0, 2 * i + 1, 0, c);
    }
    DmrsEstimate {
        values: v,
        stage: Stage::RawLs,
    }
}

fn frequency_response(g: &[C64], n_sc: usize) -> Vec<C64> {
    (0..n_sc)
        .map(|f| g.iter().enumerate().map(|(l, &x)| x * tw(f * l, n_sc)).sum())
        .collect()
}

#[test]
fn wiener_matches_delay_domain_lmmse() {
    // ĝ = (F_cᴴF_c/σ² + P⁻¹)⁻¹ F_cᴴ y / σ², Ĥ = F ĝ: the same estimator written
    // in the tap domain via the matrix inversion lemma.
    let n_sc = 48;
    let n_comb = n_sc / 2;
    let pdp = PowerDelayProfile::exponential(1.5, n_comb);
    let p = pdp.powers().to_vec();
    let l = p.len();
    let sigma2 = 0.05;
    let w = WienerInterpolator::new(n_sc, &pdp, sigma2).unwrap();

    let mut rng = Stream::new(99, Purpose::Noise, 0);
    let y: Vec<C64> = (0..n_comb).map(|_| rng.complex_gaussian(1.0)).collect();

    let mut a = vec![c0(); l * l];
    for r in 0..l {
        for c in 0..l {
            let v: C64 = (0..n_comb)
                .map(|i| tw(2 * i * r, n_sc).conj() * tw(2 * i * c, n_sc))
                .sum();
            a[r * l + c] = v / sigma2;
        }
        a[r * l + r] += C64::new(1.0 / p[r], 0.0);
    }
    let b: Vec<C64> = (0..l)
        .map(|r| {
            (0..n_comb)
                .map(|i| tw(2 * i * r, n_sc).conj() * y[i])
                .sum::<C64>()
                / sigma2
        })
        .collect();
    let g = solve(a, b, l, 1);
    let oracle = frequency_response(&g, n_sc);

    let got = w.apply(&raw_row(&y)).unwrap();
    for (f, want) in oracle.iter().enumerate() {
        let d = (got.values.get(0, 0, f, 0) - want).norm();
        assert!(d < 1e-9, "subcarrier {f}: {d}");
    }
}

#[test]
fn wiener_noiseless_reproduces_model_channel() {
    let n_sc = 96;
    let pdp = PowerDelayProfile::exponential(1.5, n_sc / 2);
    let w = WienerInterpolator::new(n_sc, &pdp, 0.0).unwrap();
    let mut rng = Stream::new(5, Purpose::ChannelTaps, 0);
    let g: Vec<C64> = pdp
        .powers()
        .iter()
        .map(|&pw| rng.complex_gaussian(pw))
        .collect();
    let h = frequency_response(&g, n_sc);
    let comb: Vec<C64> = h.iter().step_by(2).copied().collect();
    let out = w.apply(&raw_row(&comb)).unwrap();
    for f in (0..n_sc).step_by(2) {
        let d = (out.values.get(0, 0, f, 0) - h[f]).norm();
        assert!(d < 1e-9, "comb subcarrier {f}: {d}");
    }
}

#[test]
fn wiener_infinite_noise_gives_zero() {
    let pdp = PowerDelayProfile::exponential(1.5, 24);
    let w = WienerInterpolator::new(48, &pdp, f64::INFINITY).unwrap();
    let y: Vec<C64> = (0..24).map(|i| C64::new(i as f64, 1.0)).collect();
    let out = w.apply(&raw_row(&y)).unwrap();
    assert!(out.values.values().iter().all(|v| *v == c0()));
    assert_eq!(out.stage, Stage::Interpolated);
}

#[test]
fn wiener_rejects_wrong_stage() {
    let pdp = PowerDelayProfile::exponential(1.5, 24);
    let w = WienerInterpolator::new(48, &pdp, 0.1).unwrap();
    let mut e = raw_row(&vec![c0(); 24]);
    e.stage = Stage::Interpolated;
    assert!(w.apply(&e).is_err());
}

#[test]
fn analytic_wiener_mse_matches_monte_carlo() {
    // Comb-point MSE = σ² tr((R + σ²I)⁻¹ R) / n.
    let n_sc = 48;
    let n = n_sc / 2;
    let pdp = PowerDelayProfile::exponential(1.5, n);
    let sigma2 = 0.1;
    let mut r = vec![c0(); n * n];
    for i in 0..n {
        for j in 0..n {
            r[i * n + j] = pdp.correlation(2 * (i as i64 - j as i64), n_sc);
        }
    }
    let mut a = r.clone();
    for i in 0..n {
        a[i * n + i] += C64::new(sigma2, 0.0);
    }
    let x = solve(a, r, n, n);
    let trace: f64 = (0..n).map(|i| x[i * n + i].re).sum();
    let analytic = sigma2 * trace / n as f64;

    let w = WienerInterpolator::new(n_sc, &pdp, sigma2).unwrap();
    let mut rng = Stream::new(17, Purpose::Noise, 1);
    let trials = 4000;
    let mut err = 0.0;
    for _ in 0..trials {
        let g: Vec<C64> = pdp
            .powers()
            .iter()
            .map(|&pw| rng.complex_gaussian(pw))
            .collect();
        let h = frequency_response(&g, n_sc);
        let y: Vec<C64> = (0..n)
            .map(|i| h[2 * i] + rng.complex_gaussian(sigma2))
            .collect();
        let out = w.apply(&raw_row(&y)).unwrap();
        for i in 0..n {
            err += (out.values.get(0, 0, 2 * i, 0) - h[2 * i]).norm_sqr();
        }
    }
    let mc = err / (trials * n) as f64;
    assert!((mc / analytic - 1.0).abs() < 0.05, "mc {mc} analytic {analytic}");
}

fn estimate_mse(est: &DmrsEstimate, h: &ChannelTensor, g: &SlotGeometry, comb_only: bool) -> (f64, usize) {
    let mut err = 0.0;
    let mut n = 0;
    for a in 0..g.n_ant {
        for (d, &t) in g.dmrs_symbols.iter().enumerate() {
            for f in 0..g.n_sc() {
                if comb_only && f % 2 == 1 {
                    continue;
                }
                err += (est.values.get(a, 0, f, d) - h.get(a, 0, f, t)).norm_sqr();
                n += 1;
            }
        }
    }
    (err, n)
}

#[test]
fn ls_noiseless_samples_channel_exactly() {
    let g = SlotGeometry::new(2, 4);
    let mut s = ScenarioConfig::good(3);
    s.base_snr_db = f64::INFINITY;
    let h = generate_channel(&g, &s, 7).unwrap();
    let rx = synthesize_uplink_slot(&g, &h, &s, 7).unwrap();
    let ls = ls_estimate(&rx, &g).unwrap();
    assert_eq!(ls.stage, Stage::RawLs);
    let (err, _) = estimate_mse(&ls, &h, &g, true);
    assert!(err < 1e-24);
    for f in (1..g.n_sc()).step_by(2) {
        assert_eq!(ls.values.get(0, 0, f, 0), ls.values.get(0, 0, f - 1, 0));
        assert!(!ls.is_measured(f));
    }
}

#[test]
fn ls_mse_equals_noise_variance() {
    let g = SlotGeometry::new(1, 10);
    let mut s = ScenarioConfig::good(4);
    s.base_snr_db = 10.0;
    s.delay_spread = 0.0;
    s.temporal_correlation = 0.0;
    let mut err = 0.0;
    let mut n = 0;
    for slot in 0..60 {
        let h = generate_channel(&g, &s, slot).unwrap();
        let rx = synthesize_uplink_slot(&g, &h, &s, slot).unwrap();
        let ls = ls_estimate(&rx, &g).unwrap();
        let (e, k) = estimate_mse(&ls, &h, &g, true);
        err += e;
        n += k;
    }
    assert!(n >= 10_000);
    let mse = err / n as f64;
    assert!((mse / s.noise_var() - 1.0).abs() < 0.05, "mse {mse}");
}

#[test]
fn mmse_beats_ls_at_every_snr() {
    let g = SlotGeometry::new(1, 8);
    for snr in [0.0, 5.0, 10.0, 20.0] {
        let mut s = ScenarioConfig::good(8);
        s.base_snr_db = snr;
        let pdp = PowerDelayProfile::exponential(s.delay_spread, g.n_comb());
        let w = WienerInterpolator::new(g.n_sc(), &pdp, s.noise_var()).unwrap();
        let (mut e_ls, mut e_mmse) = (0.0, 0.0);
        for slot in 0..300 {
            let h = generate_channel(&g, &s, slot).unwrap();
            let rx = synthesize_uplink_slot(&g, &h, &s, slot).unwrap();
            let ls = ls_estimate(&rx, &g).unwrap();
            e_ls += estimate_mse(&ls, &h, &g, false).0;
            e_mmse += estimate_mse(&w.apply(&ls).unwrap(), &h, &g, false).0;
        }
        assert!(e_mmse <= e_ls, "snr {snr}: mmse {e_mmse} ls {e_ls}");
    }
}

#[test]
fn mmse_estimate_uses_scenario_pdp() {
    let g = SlotGeometry::new(1, 4);
    let s = ScenarioConfig::good(2);
    let h = generate_channel(&g, &s, 0).unwrap();
    let rx = synthesize_uplink_slot(&g, &h, &s, 0).unwrap();
    let ls = ls_estimate(&rx, &g).unwrap();
    let pdp = PowerDelayProfile::exponential(s.delay_spread, g.n_comb());
    let direct = WienerInterpolator::new(g.n_sc(), &pdp, s.noise_var())
        .unwrap()
        .apply(&ls)
        .unwrap();
    assert_eq!(mmse_estimate(&ls, s.noise_var(), &s).unwrap(), direct);
}

#[test]
fn denoiser_full_truncation_is_identity_on_comb() {
    let g = SlotGeometry::new(1, 4);
    let mut rng = Stream::new(1, Purpose::Noise, 0);
    let y: Vec<C64> = (0..g.n_comb()).map(|_| rng.complex_gaussian(1.0)).collect();
    let out = denoiser_estimate(&raw_row(&y), &g, g.n_sc()).unwrap();
    for (i, want) in y.iter().enumerate() {
        assert!((out.values.get(0, 0, 2 * i, 0) - want).norm() < 1e-9);
    }
}

#[test]
fn denoiser_recovers_flat_channel() {
    let g = SlotGeometry::new(1, 4);
    let h = C64::new(0.3, -0.8);
    let out = denoiser_estimate(&raw_row(&vec![h; g.n_comb()]), &g, 1).unwrap();
    assert_eq!(out.stage, Stage::Interpolated);
    for f in 0..g.n_sc() {
        assert!((out.values.get(0, 0, f, 0) - h).norm() < 1e-9);
    }
}

#[test]
fn denoiser_truncation_range() {
    let g = SlotGeometry::new(1, 4);
    let e = raw_row(&vec![c0(); g.n_comb()]);
    assert!(denoiser_estimate(&e, &g, 0).is_err());
    assert!(denoiser_estimate(&e, &g, g.n_sc() + 1).is_err());
}

#[test]
fn denoiser_beats_mismatched_mmse_under_interference() {
    let g = SlotGeometry::default();
    let s = ScenarioConfig::poor(12, g.n_prb);
    let pdp = PowerDelayProfile::exponential(s.delay_spread, g.n_comb());
    let w = WienerInterpolator::new(g.n_sc(), &pdp, s.noise_var()).unwrap();
    let d = DelayDenoiser::new(&g, DEFAULT_TRUNCATION).unwrap();
    let (mut e_mmse, mut e_ai) = (0.0, 0.0);
    for slot in 0..150 {
        let h = generate_channel(&g, &s, slot).unwrap();
        let rx = synthesize_uplink_slot(&g, &h, &s, slot).unwrap();
        let ls = ls_estimate(&rx, &g).unwrap();
        e_mmse += estimate_mse(&w.apply(&ls).unwrap(), &h, &g, false).0;
        e_ai += estimate_mse(&d.apply(&ls).unwrap(), &h, &g, false).0;
    }
    assert!(e_ai < e_mmse, "ai {e_ai} mmse {e_mmse}");
}

#[test]
fn default_cost_constants() {
    let t = CostTable::default();
    let ai = cost_of(ExpertId::Ai, &t).unwrap();
    let mmse = cost_of(ExpertId::Mmse, &t).unwrap();
    assert_eq!(ai.exec_time_us, 432.33);
    assert_eq!(mmse.exec_time_us, 5.04);
    assert_eq!((ai.gpu_power_w, ai.gpu_utilization_pct), (164.2, 67.0));
    assert_eq!((mmse.gpu_power_w, mmse.gpu_utilization_pct), (148.4, 50.0));
    let ratio = ai.exec_time_us / mmse.exec_time_us;
    assert!((ratio - 85.78).abs() < 0.01);
    let empty = CostTable {
        profiles: Vec::new(),
        ..CostTable::zero()
    };
    assert!(matches!(
        cost_of(ExpertId::Ai, &empty),
        Err(arches_core::Error::Lookup(_))
    ));
}
