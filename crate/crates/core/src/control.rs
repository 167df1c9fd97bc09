//! External control plane: telemetry indications, the policy-driven control
//! application, latency-modeled control messages and the fail-safe monitor.
//!
//! Virtual time is integer nanoseconds from the start of slot 0. Slot `n`
//! spans `[n·T, (n+1)·T)`; its indication is emitted at `(n+1)·T`.

use crate::error::{Error, Result};
use crate::math;
use crate::pipeline::{Mode, Pipeline, SlotOutcome};
use crate::pipeline::KpmRecord;
use crate::policy::{predict, window_mean, TreeModel};
use crate::scene::{Regime, ScenarioConfig};
use alloc::collections::VecDeque;
use alloc::vec::Vec;

pub type Nanos = u64;

/// Microseconds to nanoseconds, rounded to nearest.
pub fn us_to_ns(us: f64) -> Nanos {
    math::floor(us * 1000.0 + 0.5) as Nanos
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyModel {
    pub framework_overhead_us: f64,
    pub policy_inference_us: f64,
    pub switch_exec_us: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel {
            framework_overhead_us: 135.0,
            policy_inference_us: 0.41,
            switch_exec_us: 4.5,
        }
    }
}

impl LatencyModel {
    pub fn total(&self) -> f64 {
        self.framework_overhead_us + self.policy_inference_us + self.switch_exec_us
    }

    /// Indication-to-decision delay (the switch itself is charged in the pipeline).
    pub fn decision_ns(&self) -> Nanos {
        us_to_ns(self.framework_overhead_us + self.policy_inference_us)
    }

    pub fn validate(&self) -> Result<()> {
        let v = [
            self.framework_overhead_us,
            self.policy_inference_us,
            self.switch_exec_us,
        ];
        if v.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::config("latency components must be finite and non-negative"));
        }
        Ok(())
    }
}

/// End-to-end control-loop latency in µs.
pub fn loop_latency(lat: &LatencyModel) -> f64 {
    lat.total()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    Policy,
    Failsafe,
}

impl Trigger {
    pub fn name(self) -> &'static str {
        match self {
            Trigger::Policy => "policy",
            Trigger::Failsafe => "failsafe",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlMessage {
    pub mode: Mode,
    pub decided_at: Nanos,
    pub deliverable_at: Nanos,
    pub trigger: Trigger,
}

#[derive(Debug, Clone, PartialEq)]
pub struct E3Indication {
    /// Most recent records, in slot order.
    pub kpm_window: Vec<KpmRecord>,
    pub emitted_at: Nanos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DappConfig {
    /// Indications between decisions.
    pub decision_period: u64,
    /// `None` disables the fail-safe timeout (treated as infinite).
    pub failsafe_timeout_ns: Option<Nanos>,
    /// Records carried per indication.
    pub window_length: usize,
}

impl DappConfig {
    /// Period and window of `period` slots; timeout of ten periods.
    pub fn with_period(period: u64, slot_ns: Nanos) -> Self {
        DappConfig {
            decision_period: period,
            failsafe_timeout_ns: Some(10 * period * slot_ns),
            window_length: period as usize,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.decision_period == 0 || self.window_length == 0 {
            return Err(Error::config("decision_period and window_length must be positive"));
        }
        if self.failsafe_timeout_ns == Some(0) {
            return Err(Error::config("failsafe_timeout must be positive"));
        }
        Ok(())
    }
}

impl Default for DappConfig {
    fn default() -> Self {
        Self::with_period(10, 500_000)
    }
}

/// Control application: window aggregation plus tree inference.
#[derive(Debug, Clone)]
pub struct Dapp {
    pub config: DappConfig,
    pub latency: LatencyModel,
    tree: TreeModel,
    received: u64,
    alive: bool,
}

impl Dapp {
    pub fn new(tree: TreeModel, config: DappConfig, latency: LatencyModel) -> Result<Self> {
        config.validate()?;
        latency.validate()?;
        Ok(Dapp {
            config,
            latency,
            tree,
            received: 0,
            alive: true,
        })
    }

    /// Stop responding (simulated crash).
    pub fn kill(&mut self) {
        self.alive = false;
    }

    pub fn is_alive(&self) -> bool {
        self.alive
    }

    pub fn on_indication(&mut self, ind: &E3Indication) -> Option<ControlMessage> {
        if !self.alive {
            return None;
        }
        self.received += 1;
        if !self.received.is_multiple_of(self.config.decision_period) {
            return None;
        }
        let x = window_mean(&ind.kpm_window)?;
        let mode = if predict(&self.tree, &x) == 0 { Mode::Ai } else { Mode::Mmse };
        let decided_at = ind.emitted_at + self.latency.decision_ns();
        Some(ControlMessage {
            mode,
            decided_at,
            deliverable_at: decided_at,
            trigger: Trigger::Policy,
        })
    }
}

/// Forces MMSE when no control message has been delivered for `timeout`.
#[derive(Debug, Clone, PartialEq)]
pub struct FailsafeMonitor {
    timeout: Option<Nanos>,
    last_delivery: Nanos,
    events: Vec<Nanos>,
}

impl FailsafeMonitor {
    pub fn new(timeout: Option<Nanos>) -> Self {
        FailsafeMonitor {
            timeout,
            last_delivery: 0,
            events: Vec::new(),
        }
    }

    pub fn record_delivery(&mut self, at: Nanos) {
        self.last_delivery = self.last_delivery.max(at);
    }

    pub fn last_delivery(&self) -> Nanos {
        self.last_delivery
    }

    /// Slot boundaries at which the monitor forced MMSE.
    pub fn events(&self) -> &[Nanos] {
        &self.events
    }

    /// Called at each slot boundary; true when MMSE must be forced now.
    pub fn check(&mut self, boundary: Nanos, mode: Mode) -> bool {
        let Some(timeout) = self.timeout else { return false };
        let expired = boundary >= self.last_delivery.saturating_add(timeout);
        if expired && mode != Mode::Mmse {
            self.events.push(boundary);
            return true;
        }
        false
    }
}

/// Forced mode at `now`, if any (free-function form of [`FailsafeMonitor::check`]).
pub fn failsafe_check(monitor: &mut FailsafeMonitor, now: Nanos, mode: Mode) -> Option<Mode> {
    monitor.check(now, mode).then_some(Mode::Mmse)
}

/// Regime schedule over slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    pub good: ScenarioConfig,
    pub poor: ScenarioConfig,
    pub segments: Vec<(Regime, u64)>,
}

impl Timeline {
    pub fn new(good: ScenarioConfig, poor: ScenarioConfig, segments: Vec<(Regime, u64)>) -> Result<Self> {
        if segments.is_empty() || segments.iter().any(|s| s.1 == 0) {
            return Err(Error::config("timeline segments must be non-empty with positive durations"));
        }
        if good.regime != Regime::Good || poor.regime != Regime::Poor {
            return Err(Error::config("timeline scenarios have the wrong regimes"));
        }
        Ok(Timeline { good, poor, segments })
    }

    pub fn total_slots(&self) -> u64 {
        self.segments.iter().map(|s| s.1).sum()
    }

    pub fn regime_at(&self, slot: u64) -> Regime {
        let mut end = 0;
        for &(r, n) in &self.segments {
            end += n;
            if slot < end {
                return r;
            }
        }
        self.segments.last().map_or(Regime::Good, |s| s.0)
    }

    pub fn scenario_at(&self, slot: u64) -> &ScenarioConfig {
        match self.regime_at(slot) {
            Regime::Good => &self.good,
            Regime::Poor => &self.poor,
        }
    }

    /// First slot of every segment after the first.
    pub fn boundaries(&self) -> Vec<u64> {
        let mut out = Vec::new();
        let mut at = 0;
        for (i, &(_, n)) in self.segments.iter().enumerate() {
            if i > 0 {
                out.push(at);
            }
            at += n;
        }
        out
    }
}

/// Where mode decisions come from.
#[derive(Debug, Clone)]
pub enum Controller {
    /// No control plane: the pipeline keeps its initial mode.
    None,
    /// Ground-truth regime sampled at each slot start, delayed by the
    /// decision latency (effective from the next slot).
    Oracle(LatencyModel),
    /// Closed loop through the control application.
    Dapp {
        dapp: Dapp,
        /// Slot after which the application stops responding.
        dies_after: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub outcomes: Vec<SlotOutcome>,
    /// Every control message sent plus every fail-safe event, in time order.
    pub trace: Vec<ControlMessage>,
}

/// Deterministic single-context scheduler interleaving the pipeline and the
/// controller by virtual time.
pub fn run_closed_loop(pipeline: &mut Pipeline, timeline: &Timeline, controller: &mut Controller) -> Result<RunLog> {
    let n_slots = timeline.total_slots();
    let slot_ns = pipeline.config().geometry.slot_duration_ns();
    let window_len = match controller {
        Controller::Dapp { dapp, .. } => dapp.config.window_length,
        _ => 1,
    };
    let mut window: VecDeque<KpmRecord> = VecDeque::with_capacity(window_len);
    let mut outcomes = Vec::with_capacity(n_slots as usize);
    let mut trace = Vec::new();
    for n in 0..n_slots {
        let start = n * slot_ns;
        if let Controller::Oracle(lat) = controller {
            let at = start + lat.decision_ns();
            let msg = ControlMessage {
                mode: Mode::for_regime(timeline.regime_at(n)),
                decided_at: at,
                deliverable_at: at,
                trigger: Trigger::Policy,
            };
            trace.push(msg);
            pipeline.deliver(msg);
        }
        let outcome = pipeline.run_slot(timeline.scenario_at(n), n)?;
        if outcome.failsafe_forced {
            trace.push(ControlMessage {
                mode: Mode::Mmse,
                decided_at: start,
                deliverable_at: start,
                trigger: Trigger::Failsafe,
            });
        }
        if let Controller::Dapp { dapp, dies_after } = controller {
            if window.len() == window_len {
                window.pop_front();
            }
            window.push_back(outcome.kpm);
            if dies_after.is_some_and(|d| n > d) {
                dapp.kill();
            }
            let ind = E3Indication {
                kpm_window: window.iter().copied().collect(),
                emitted_at: start + slot_ns,
            };
            if let Some(msg) = dapp.on_indication(&ind) {
                trace.push(msg);
                pipeline.deliver(msg);
            }
        }
        outcomes.push(outcome);
    }
    trace.sort_by_key(|m| (m.decided_at, m.trigger == Trigger::Policy));
    Ok(RunLog { outcomes, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_loop_latency() {
        assert!((loop_latency(&LatencyModel::default()) - 139.91).abs() < 1e-9);
        assert_eq!(LatencyModel::default().decision_ns(), 135_410);
        let zero = LatencyModel {
            framework_overhead_us: 0.0,
            policy_inference_us: 0.0,
            switch_exec_us: 0.0,
        };
        assert_eq!(loop_latency(&zero), 0.0);
        let custom = LatencyModel {
            framework_overhead_us: 100.0,
            policy_inference_us: 1.0,
            switch_exec_us: 5.0,
        };
        assert_eq!(loop_latency(&custom), 106.0);
    }

    #[test]
    fn failsafe_rules() {
        let mut fs = FailsafeMonitor::new(Some(1000));
        assert!(!fs.check(5000, Mode::Mmse));
        assert!(fs.events().is_empty());
        fs.record_delivery(2000);
        assert!(!fs.check(2999, Mode::Ai));
        assert!(fs.check(3000, Mode::Ai));
        assert_eq!(fs.events(), &[3000]);
        let mut never = FailsafeMonitor::new(None);
        assert!(!never.check(u64::MAX, Mode::Ai));
    }

    #[test]
    fn timeline_lookup() {
        let t = Timeline::new(
            ScenarioConfig::good(1),
            ScenarioConfig::poor(1, 4),
            alloc::vec![(Regime::Good, 3), (Regime::Poor, 2), (Regime::Good, 1)],
        )
        .unwrap();
        assert_eq!(t.total_slots(), 6);
        assert_eq!(t.regime_at(2), Regime::Good);
        assert_eq!(t.regime_at(3), Regime::Poor);
        assert_eq!(t.regime_at(5), Regime::Good);
        assert_eq!(t.boundaries(), alloc::vec![3, 5]);
    }
}
