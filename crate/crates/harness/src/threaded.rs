//! Closed loop with the pipeline and the control application on separate
//! threads, exchanging indications and decisions over ordered channels.
//!
//! A decision computed from slot `n` cannot be deliverable before slot
//! `n + 1` starts, so it only matters from slot `n + 2` on. The pipeline
//! therefore runs one slot ahead and waits for the reply to indication `n`
//! before starting slot `n + 2`. The result is identical to the
//! single-context scheduler.

use anyhow::{anyhow, Result};
use arches_core::control::{ControlMessage, Dapp, E3Indication, RunLog, Timeline, Trigger};
use arches_core::pipeline::{KpmRecord, Mode, Pipeline};
use std::collections::VecDeque;
use std::sync::mpsc;
use std::thread;

pub fn run_two_context(
    pipeline: &mut Pipeline,
    timeline: &Timeline,
    mut dapp: Dapp,
    dies_after: Option<u64>,
) -> Result<RunLog> {
    let n_slots = timeline.total_slots();
    let slot_ns = pipeline.config().geometry.slot_duration_ns();
    let window_len = dapp.config.window_length;
    let (ind_tx, ind_rx) = mpsc::channel::<(u64, E3Indication)>();
    let (ctl_tx, ctl_rx) = mpsc::channel::<Option<ControlMessage>>();

    thread::scope(|scope| {
        scope.spawn(move || {
            for (slot, ind) in ind_rx {
                if dies_after.is_some_and(|d| slot > d) {
                    dapp.kill();
                }
                if ctl_tx.send(dapp.on_indication(&ind)).is_err() {
                    break;
                }
            }
        });

        let mut window: VecDeque<KpmRecord> = VecDeque::with_capacity(window_len);
        let mut outcomes = Vec::with_capacity(n_slots as usize);
        let mut trace = Vec::new();
        let mut awaiting = 0u64;
        for n in 0..n_slots {
            // Replies to indications up to n - 2 must be in before slot n.
            while awaiting + 2 <= n {
                let reply = ctl_rx.recv().map_err(|_| anyhow!("control context stopped"))?;
                if let Some(msg) = reply {
                    trace.push(msg);
                    pipeline.deliver(msg);
                }
                awaiting += 1;
            }
            let start = n * slot_ns;
            let outcome = pipeline.run_slot(timeline.scenario_at(n), n)?;
            if outcome.failsafe_forced {
                trace.push(ControlMessage {
                    mode: Mode::Mmse,
                    decided_at: start,
                    deliverable_at: start,
                    trigger: Trigger::Failsafe,
                });
            }
            if window.len() == window_len {
                window.pop_front();
            }
            window.push_back(outcome.kpm);
            let ind = E3Indication {
                kpm_window: window.iter().copied().collect(),
                emitted_at: start + slot_ns,
            };
            ind_tx.send((n, ind)).map_err(|_| anyhow!("control context stopped"))?;
            outcomes.push(outcome);
        }
        drop(ind_tx);
        // Decisions after the last slot never take effect but are traced.
        trace.extend(ctl_rx.iter().flatten());
        trace.sort_by_key(|m| (m.decided_at, m.trigger == Trigger::Policy));
        Ok(RunLog { outcomes, trace })
    })
}
