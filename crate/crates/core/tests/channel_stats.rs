use arches_core::scene::*;

// Slots this far apart are practically independent at a = 0.9.
const STRIDE: u64 = 50;

#[test]
fn unit_average_power() {
    let g = SlotGeometry::new(2, 2);
    let s = ScenarioConfig::good(31);
    let mut sum = 0.0;
    let mut n = 0;
    for k in 0..10_000u64 {
        let h = generate_channel(&g, &s, k * STRIDE).unwrap();
        for a in 0..g.n_ant {
            for f in 0..g.n_sc() {
                sum += h.get(a, 0, f, 0).norm_sqr();
                n += 1;
            }
        }
    }
    let mean = sum / n as f64;
    assert!((mean - 1.0).abs() < 0.02, "E|H|^2 = {mean}");
}

#[test]
fn lag_one_correlation_matches_ar_coefficient() {
    let g = SlotGeometry::new(1, 1);
    let s = ScenarioConfig::good(32);
    let (mut cross, mut power) = (0.0, 0.0);
    for k in 0..10_000u64 {
        let n = k * STRIDE;
        let h0 = generate_channel(&g, &s, n).unwrap();
        let h1 = generate_channel(&g, &s, n + 1).unwrap();
        for f in 0..g.n_sc() {
            let (x, y) = (h0.get(0, 0, f, 0), h1.get(0, 0, f, 0));
            cross += (x * y.conj()).re;
            power += 0.5 * (x.norm_sqr() + y.norm_sqr());
        }
    }
    let rho = cross / power;
    let a = s.temporal_correlation;
    assert!((rho / a - 1.0).abs() < 0.05, "lag-1 correlation {rho}");
}

#[test]
fn independent_slots_without_memory() {
    let g = SlotGeometry::new(1, 1);
    let mut s = ScenarioConfig::good(33);
    s.temporal_correlation = 0.0;
    let (mut cross, mut power) = (0.0, 0.0);
    for n in 0..5_000u64 {
        let h0 = generate_channel(&g, &s, 2 * n).unwrap();
        let h1 = generate_channel(&g, &s, 2 * n + 1).unwrap();
        let (x, y) = (h0.get(0, 0, 0, 0), h1.get(0, 0, 0, 0));
        cross += (x * y.conj()).re;
        power += x.norm_sqr();
    }
    assert!((cross / power).abs() < 0.05);
}

#[test]
fn interference_is_confined_to_masked_prbs() {
    let g = SlotGeometry::new(1, 20);
    let base = ScenarioConfig::good(34);
    let mask: Vec<bool> = (0..g.n_prb).map(|p| p < 10).collect();
    let s = base.as_poor(mask);
    let slots = 400;
    let mut power = vec![0.0; g.n_sc()];
    for slot in 0..slots {
        let h = generate_channel(&g, &s, slot).unwrap();
        let rx = synthesize_uplink_slot(&g, &h, &s, slot).unwrap();
        for t in 0..g.n_sym {
            for f in 0..g.n_sc() {
                let e = rx.rx(0, f, t) - h.get(0, 0, f, t) * rx.tx(f, t);
                power[f] += e.norm_sqr();
            }
        }
    }
    let n = (slots as usize * g.n_sym) as f64;
    let nv = s.noise_var();
    // Per-subcarrier |W|² is Exp(nv): standard error nv / sqrt(n).
    let bound = 3.0 * nv / n.sqrt();
    let noise_floor = nv + s.interference_power() * 0.2;
    for (f, p) in power.iter().enumerate() {
        let p = p / n;
        if f < 120 {
            assert!(p > noise_floor, "subcarrier {f} not elevated: {p}");
        } else {
            assert!((p - nv).abs() < bound, "subcarrier {f} leaked: {p} vs {nv}");
        }
    }
}
