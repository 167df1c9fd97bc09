use arches::config::Settings;
use arches::experiment::timeline;
use arches::threaded::run_two_context;
use arches_core::control::*;
use arches_core::pipeline::*;
use arches_core::policy::{Node, TreeModel, FEATURES};
use arches_core::scene::Regime;

fn small(seed: u64) -> Settings {
    let mut s = Settings::defaults(seed);
    s.pipeline.geometry.n_prb = 4;
    s.pipeline.window_slots = 10;
    s.poor_mask = vec![true, true, false, false];
    s.scenario.interference_prb_mask = vec![false; 4];
    s
}

/// Splits on windowed MAC throughput at the given level.
fn tree(threshold: f64) -> TreeModel {
    TreeModel {
        feature_names: FEATURES.iter().map(|k| k.name().to_string()).collect(),
        nodes: vec![
            Node::Split { feature: 6, threshold, left: 1, right: 2, counts: [1, 1] },
            Node::Leaf { label: 0, counts: [1, 0] },
            Node::Leaf { label: 1, counts: [0, 1] },
        ],
    }
}

fn both(s: &Settings, exec: ExecutionMode, period: u64, threshold: f64, dies_after: Option<u64>) -> (RunLog, RunLog) {
    let t = timeline(s, vec![(Regime::Good, 60), (Regime::Poor, 80), (Regime::Good, 60)]).unwrap();
    let slot_ns = s.pipeline.geometry.slot_duration_ns();
    let cfg = DappConfig::with_period(period, slot_ns);
    let fresh = || {
        Pipeline::new(s.pipeline.clone(), exec)
            .unwrap()
            .with_failsafe(FailsafeMonitor::new(cfg.failsafe_timeout_ns))
    };
    let dapp = Dapp::new(tree(threshold), cfg, s.latency).unwrap();
    let mut a = fresh();
    let single = run_closed_loop(&mut a, &t, &mut Controller::Dapp { dapp: dapp.clone(), dies_after }).unwrap();
    let mut b = fresh();
    let threaded = run_two_context(&mut b, &t, dapp, dies_after).unwrap();
    (single, threaded)
}

#[test]
fn threaded_loop_matches_single_context() {
    let mut switched = 0;
    for seed in 0..6 {
        let s = small(seed);
        for exec in [ExecutionMode::Concurrent, ExecutionMode::SelectedOnly] {
            for period in [1, 3, 10] {
                let (a, b) = both(&s, exec, period, 2.0, None);
                assert_eq!(a, b, "seed {seed} {exec:?} period {period}");
                switched += a.outcomes.iter().filter(|o| o.mode == Mode::Ai).count();
            }
        }
    }
    assert!(switched > 0, "policy never selected the AI expert");
}

#[test]
fn threaded_loop_matches_with_dead_dapp() {
    let s = small(9);
    // Threshold above any throughput: the policy always asks for AI.
    let (a, b) = both(&s, ExecutionMode::Concurrent, 2, 1e9, Some(50));
    assert_eq!(a, b);
    assert!(a.trace.iter().any(|m| m.trigger == Trigger::Failsafe));
    assert_eq!(a.outcomes.last().unwrap().mode, Mode::Mmse);
}
