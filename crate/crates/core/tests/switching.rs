use arches_core::control::*;
use arches_core::expert::*;
use arches_core::pipeline::*;
use arches_core::scene::*;
use proptest::prelude::*;

fn tiny() -> PipelineConfig {
    PipelineConfig {
        geometry: SlotGeometry::new(1, 2),
        truncation: 4,
        ..Default::default()
    }
}

fn scenario(seed: u64, poor: bool) -> ScenarioConfig {
    let mut s = ScenarioConfig::good(seed);
    s.temporal_correlation = 0.0;
    if poor {
        s = s.as_poor(vec![true, false]);
    }
    s
}

/// Expert outputs recomputed from scratch for one slot.
fn reference(cfg: &PipelineConfig, s: &ScenarioConfig, slot: u64) -> (DmrsEstimate, DmrsEstimate) {
    let g = &cfg.geometry;
    let h = generate_channel(g, s, slot).unwrap();
    let rx = synthesize_uplink_slot(g, &h, s, slot).unwrap();
    let ls = ls_estimate(&rx, g).unwrap();
    let pdp = PowerDelayProfile::exponential(s.delay_spread, g.n_comb());
    let mmse = WienerInterpolator::new(g.n_sc(), &pdp, s.noise_var()).unwrap().apply(&ls).unwrap();
    let ai = DelayDenoiser::new(g, cfg.truncation).unwrap().apply(&ls).unwrap();
    (mmse, ai)
}

struct Run {
    outcomes: Vec<SlotOutcome>,
    downstream: Vec<DmrsEstimate>,
    decoded: u64,
}

/// Message for `modes[n]` lands at fraction `frac[n]` of slot n-1.
fn run(exec: ExecutionMode, modes: &[Mode], frac: &[f64], s: &ScenarioConfig) -> Run {
    let cfg = tiny();
    let slot_ns = cfg.geometry.slot_duration_ns();
    let mut p = Pipeline::new(cfg, exec).unwrap();
    let mut outcomes = Vec::new();
    let mut downstream = Vec::new();
    for n in 0..modes.len() as u64 {
        if let Some(&m) = modes.get(n as usize + 1) {
            let at = n * slot_ns + (frac[n as usize + 1] * slot_ns as f64) as u64;
            p.deliver(ControlMessage {
                mode: m,
                decided_at: at,
                deliverable_at: at,
                trigger: Trigger::Policy,
            });
        }
        outcomes.push(p.run_slot(s, n).unwrap());
        downstream.push(p.buffers().downstream().unwrap().clone());
    }
    Run {
        outcomes,
        downstream,
        decoded: p.decoded_bytes(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn aliasing_and_activation_delay(
        bits in proptest::collection::vec(0u8..2, 40),
        frac in proptest::collection::vec(0.0f64..1.0, 40),
        seed in 0u64..1000,
        poor in any::<bool>(),
    ) {
        let s = scenario(seed, poor);
        // Slot 0 has nothing before it to carry a message.
        let mut modes: Vec<Mode> = bits.iter().map(|&b| Mode::from_bit(b).unwrap()).collect();
        modes[0] = Mode::Mmse;
        let conc = run(ExecutionMode::Concurrent, &modes, &frac, &s);
        let sel = run(ExecutionMode::SelectedOnly, &modes, &frac, &s);
        prop_assert_eq!(conc.outcomes.len(), modes.len());
        let cfg = tiny();
        for n in 0..modes.len() {
            let (mmse, ai) = reference(&cfg, &s, n as u64);
            let pick = |e: ExpertId| if e == ExpertId::Mmse { &mmse } else { &ai };

            // Decision from slot n-1 is in force at n.
            prop_assert_eq!(conc.outcomes[n].mode, modes[n]);
            prop_assert_eq!(conc.outcomes[n].active_expert, modes[n].expert());
            prop_assert!(conc.outcomes[n].mmse_executed && conc.outcomes[n].ai_executed);
            prop_assert_eq!(&conc.downstream[n], pick(modes[n].expert()));

            let lagged = if n == 0 { Mode::Mmse } else { modes[n - 1] };
            let o = &sel.outcomes[n];
            prop_assert_eq!(o.active_expert, lagged.expert());
            prop_assert!(o.mmse_executed ^ o.ai_executed);
            prop_assert_eq!(&sel.downstream[n], pick(lagged.expert()));
            if lagged == modes[n] {
                prop_assert_eq!(&sel.downstream[n], &conc.downstream[n]);
                prop_assert_eq!(o.post_eq_sinr_db, conc.outcomes[n].post_eq_sinr_db);
            }
            prop_assert!(o.downstream_finite && conc.outcomes[n].downstream_finite);
        }
        for r in [&conc, &sel] {
            let passed: u64 = r.outcomes.iter().filter(|o| o.crc_pass).map(|o| o.tb_bytes).sum();
            prop_assert_eq!(passed, r.decoded);
            for o in &r.outcomes {
                prop_assert!(o.crc_pass || o.kpm.pdu_length == 0);
            }
        }
    }
}

#[test]
fn no_control_channel_runs_mmse() {
    for exec in [ExecutionMode::Concurrent, ExecutionMode::SelectedOnly] {
        for poor in [false, true] {
            let s = scenario(3, poor);
            let mut p = Pipeline::new(tiny(), exec).unwrap();
            for n in 0..100 {
                let o = p.run_slot(&s, n).unwrap();
                assert_eq!(o.active_expert, ExpertId::Mmse);
                assert_eq!(o.mode, Mode::Mmse);
            }
        }
    }
}

#[test]
fn mid_slot_message_waits_for_next_boundary() {
    let cfg = tiny();
    let slot_ns = cfg.geometry.slot_duration_ns();
    let s = scenario(4, true);
    for offset in [0, 1, slot_ns / 2, slot_ns - 1] {
        let mut p = Pipeline::new(cfg.clone(), ExecutionMode::Concurrent).unwrap();
        p.run_slot(&s, 0).unwrap();
        let at = slot_ns + offset;
        p.deliver(ControlMessage {
            mode: Mode::Ai,
            decided_at: at,
            deliverable_at: at,
            trigger: Trigger::Policy,
        });
        assert_eq!(p.run_slot(&s, 1).unwrap().active_expert, ExpertId::Mmse, "offset {offset}");
        assert_eq!(p.run_slot(&s, 2).unwrap().active_expert, ExpertId::Ai);
    }
}

#[test]
fn slot_costs_by_execution_mode() {
    let s = scenario(5, false);
    let c = CostTable::default();
    let mut conc = Pipeline::new(tiny(), ExecutionMode::Concurrent).unwrap();
    let mut sel = Pipeline::new(tiny(), ExecutionMode::SelectedOnly).unwrap();
    let a = conc.run_slot(&s, 0).unwrap();
    let b = sel.run_slot(&s, 0).unwrap();
    assert!((a.slot_cost.exec_time_us - (432.33 + 5.04 + c.switch_mmse_us)).abs() < 1e-9);
    assert!((b.slot_cost.exec_time_us - (5.04 + c.switch_mmse_us)).abs() < 1e-9);
    assert_eq!(a.switch_us, 4.89);
    assert_eq!(a.slot_cost.gpu_power_w, 164.2);
    assert_eq!(b.slot_cost.gpu_power_w, 148.4);
}

#[test]
fn failsafe_reverts_after_timeout() {
    let cfg = tiny();
    let slot_ns = cfg.geometry.slot_duration_ns();
    let timeout = 3 * slot_ns + slot_ns / 3;
    let mut p = Pipeline::new(cfg, ExecutionMode::Concurrent)
        .unwrap()
        .with_failsafe(FailsafeMonitor::new(Some(timeout)));
    let s = scenario(6, true);
    let sent = ControlMessage::for_slot(Mode::Ai, 2, slot_ns);
    p.deliver(sent);
    let expiry = sent.deliverable_at + timeout;
    let first_boundary = expiry.div_ceil(slot_ns);
    for n in 0..12 {
        let o = p.run_slot(&s, n).unwrap();
        let want = if (2..first_boundary).contains(&n) { ExpertId::Ai } else { ExpertId::Mmse };
        assert_eq!(o.active_expert, want, "slot {n}");
        assert_eq!(o.failsafe_forced, n == first_boundary);
    }
    assert_eq!(p.failsafe().unwrap().events(), &[first_boundary * slot_ns]);
}

#[test]
fn dead_dapp_from_start_never_flags() {
    let cfg = tiny();
    let slot_ns = cfg.geometry.slot_duration_ns();
    let mut p = Pipeline::new(cfg, ExecutionMode::Concurrent)
        .unwrap()
        .with_failsafe(FailsafeMonitor::new(Some(2 * slot_ns)));
    let s = scenario(7, true);
    for n in 0..20 {
        let o = p.run_slot(&s, n).unwrap();
        assert_eq!(o.active_expert, ExpertId::Mmse);
        assert!(!o.failsafe_forced);
    }
}

#[test]
fn infinite_timeout_keeps_last_mode() {
    let cfg = tiny();
    let slot_ns = cfg.geometry.slot_duration_ns();
    let mut p = Pipeline::new(cfg, ExecutionMode::Concurrent)
        .unwrap()
        .with_failsafe(FailsafeMonitor::new(None));
    p.deliver(ControlMessage::for_slot(Mode::Ai, 1, slot_ns));
    let s = scenario(8, true);
    for n in 0..30 {
        let o = p.run_slot(&s, n).unwrap();
        assert_eq!(o.active_expert, if n == 0 { ExpertId::Mmse } else { ExpertId::Ai });
    }
}
