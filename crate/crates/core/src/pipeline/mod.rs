//! Per-slot PUSCH chain with the expert switch.
//!
//! Each slot: pending control messages are applied at the slot boundary, the
//! experts run according to the [`ExecutionMode`], the switch kernel makes
//! the AI buffer hold the selected output, and everything downstream
//! (equalization, link adaptation, CRC, KPMs) reads that buffer only.
//!
//! In [`ExecutionMode::SelectedOnly`] the expert launched for slot `n` is the
//! one selected at slot `n - 1`, so a switch becomes effective one slot after
//! the mode variable changes. [`ExecutionMode::Concurrent`] has no such gap.

pub mod equalizer;
pub mod kpm;
pub mod mcs;

pub use equalizer::{equalize, Equalized, SINR_CEILING_DB};
pub use kpm::{Kpm, KpmRecord, ThroughputWindow};
pub use mcs::{crc_outcome, link_adapt, transport_block, McsEntry, McsTable, TransportBlock};

use crate::control::{ControlMessage, FailsafeMonitor, Nanos, Trigger};
use crate::error::{Error, Result};
use crate::expert::{
    cost_of, ls_estimate, CostTable, DelayDenoiser, DmrsEstimate, ExpertCostProfile, ExpertId,
    Stage, WienerInterpolator, DEFAULT_TRUNCATION,
};
use crate::math;
use crate::perturb;
use crate::scene::{
    generate_channel, synthesize_uplink_slot, ChannelTensor, PowerDelayProfile, Regime,
    ScenarioConfig, SlotGeometry,
};
use alloc::format;
use alloc::vec::Vec;

/// Binary mode value carried by control messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Ai = 0,
    Mmse = 1,
}

impl Mode {
    pub fn from_bit(bit: u8) -> Result<Mode> {
        match bit {
            0 => Ok(Mode::Ai),
            1 => Ok(Mode::Mmse),
            b => Err(Error::contract(format!("mode must be 0 or 1, got {b}"))),
        }
    }

    pub fn bit(self) -> u8 {
        self as u8
    }

    pub fn expert(self) -> ExpertId {
        match self {
            Mode::Ai => ExpertId::Ai,
            Mode::Mmse => ExpertId::Mmse,
        }
    }

    pub fn of(expert: ExpertId) -> Mode {
        match expert {
            ExpertId::Ai => Mode::Ai,
            ExpertId::Mmse => Mode::Mmse,
        }
    }

    /// Mode a regime-aware oracle would pick.
    pub fn for_regime(regime: Regime) -> Mode {
        match regime {
            Regime::Good => Mode::Mmse,
            Regime::Poor => Mode::Ai,
        }
    }
}

/// The selector. Starts at MMSE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeVar {
    pub mode: Mode,
}

impl Default for ModeVar {
    fn default() -> Self {
        ModeVar { mode: Mode::Mmse }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecutionMode {
    Concurrent,
    SelectedOnly,
}

impl ExecutionMode {
    pub fn name(self) -> &'static str {
        match self {
            ExecutionMode::Concurrent => "concurrent",
            ExecutionMode::SelectedOnly => "selected",
        }
    }
}

/// Per-expert output buffers. Downstream reads the AI buffer only.
#[derive(Debug, Clone, Default)]
pub struct ExpertBuffers {
    pub buffer_mmse: Option<DmrsEstimate>,
    pub buffer_ai: Option<DmrsEstimate>,
}

impl ExpertBuffers {
    pub fn clear(&mut self) {
        self.buffer_mmse = None;
        self.buffer_ai = None;
    }

    pub fn get(&self, expert: ExpertId) -> Option<&DmrsEstimate> {
        match expert {
            ExpertId::Mmse => self.buffer_mmse.as_ref(),
            ExpertId::Ai => self.buffer_ai.as_ref(),
        }
    }

    pub fn set(&mut self, expert: ExpertId, estimate: DmrsEstimate) {
        match expert {
            ExpertId::Mmse => self.buffer_mmse = Some(estimate),
            ExpertId::Ai => self.buffer_ai = Some(estimate),
        }
    }

    /// The aliased read location for every downstream stage.
    pub fn downstream(&self) -> Result<&DmrsEstimate> {
        self.buffer_ai
            .as_ref()
            .ok_or_else(|| Error::PipelineState("downstream buffer is empty".into()))
    }
}

/// Switch kernel. Returns the charged time in µs.
pub fn switch_select(buffers: &mut ExpertBuffers, mode: ModeVar, costs: &CostTable) -> Result<f64> {
    match mode.mode {
        Mode::Ai => {
            if buffers.buffer_ai.is_none() {
                return Err(Error::PipelineState(
                    "AI selected but the AI buffer was not populated".into(),
                ));
            }
        }
        Mode::Mmse => {
            let src = buffers.buffer_mmse.as_ref().ok_or_else(|| {
                Error::PipelineState("MMSE selected but the MMSE buffer was not populated".into())
            })?;
            match buffers.buffer_ai.as_mut() {
                Some(dst) if dst.values.dims() == src.values.dims() => {
                    dst.values.values_mut().copy_from_slice(src.values.values());
                    dst.stage = src.stage;
                }
                _ => buffers.buffer_ai = Some(src.clone()),
            }
        }
    }
    Ok(costs.switch_us(mode.mode.expert()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub geometry: SlotGeometry,
    pub mcs: McsTable,
    pub costs: CostTable,
    /// Delay taps kept by the denoiser.
    pub truncation: usize,
    /// Sliding throughput window in slots.
    pub window_slots: usize,
    pub mac_header_bytes: u64,
    /// Share of the MAC payload on logical channel 4.
    pub lcid4_fraction: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            geometry: SlotGeometry::default(),
            mcs: McsTable::default(),
            costs: CostTable::default(),
            truncation: DEFAULT_TRUNCATION,
            window_slots: 100,
            mac_header_bytes: 3,
            lcid4_fraction: 0.85,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.mcs.validate()?;
        self.costs.validate()?;
        if self.window_slots == 0 {
            return Err(Error::config("window_slots must be positive"));
        }
        if !(0.0..=1.0).contains(&self.lcid4_fraction) {
            return Err(Error::config("lcid4_fraction must lie in [0, 1]"));
        }
        if self.truncation == 0 || self.truncation > self.geometry.n_sc() {
            return Err(Error::config(format!(
                "truncation {} outside 1..={}",
                self.truncation,
                self.geometry.n_sc()
            )));
        }
        Ok(())
    }
}

/// Noise injected into the MMSE output before the switch (sweep only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub rho: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub slot_index: u64,
    pub regime: Regime,
    /// Mode variable after boundary updates.
    pub mode: Mode,
    /// Expert whose output reached the downstream buffer.
    pub active_expert: ExpertId,
    pub mmse_executed: bool,
    pub ai_executed: bool,
    pub post_eq_sinr_db: f64,
    pub mcs: u8,
    pub tb_bytes: u64,
    pub crc_pass: bool,
    pub kpm: KpmRecord,
    /// `exec_time_us` is the slot's total modeled compute (experts + switch);
    /// power and utilization come from the governing expert profile.
    pub slot_cost: ExpertCostProfile,
    pub switch_us: f64,
    pub downstream_finite: bool,
    /// Control messages applied at this slot's boundary.
    pub applied: Vec<ControlMessage>,
    pub failsafe_forced: bool,
}

#[derive(Debug, Clone)]
struct WienerCache {
    n_sc: usize,
    delay_spread: u64,
    noise_var: u64,
    filter: WienerInterpolator,
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    config: PipelineConfig,
    exec: ExecutionMode,
    mode: ModeVar,
    /// Expert that will execute next slot under `SelectedOnly`.
    launched: ExpertId,
    pending: Vec<ControlMessage>,
    failsafe: Option<FailsafeMonitor>,
    perturbation: Option<Perturbation>,
    wiener: Option<WienerCache>,
    denoiser: DelayDenoiser,
    buffers: ExpertBuffers,
    phy: ThroughputWindow,
    mac: ThroughputWindow,
    lcid4: ThroughputWindow,
    ndi: u8,
    slots_run: u64,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, exec: ExecutionMode) -> Result<Self> {
        config.validate()?;
        let denoiser = DelayDenoiser::new(&config.geometry, config.truncation)?;
        let slot_us = config.geometry.slot_duration_us;
        let w = config.window_slots;
        Ok(Pipeline {
            exec,
            mode: ModeVar::default(),
            launched: ExpertId::Mmse,
            pending: Vec::new(),
            failsafe: None,
            perturbation: None,
            wiener: None,
            denoiser,
            buffers: ExpertBuffers::default(),
            phy: ThroughputWindow::cumulative(slot_us),
            mac: ThroughputWindow::new(w, slot_us),
            lcid4: ThroughputWindow::new(w, slot_us),
            ndi: 0,
            slots_run: 0,
            config,
        })
    }

    /// Pipeline whose mode starts (and, absent messages, stays) at `mode`.
    pub fn pinned(config: PipelineConfig, exec: ExecutionMode, mode: Mode) -> Result<Self> {
        let mut p = Self::new(config, exec)?;
        p.mode.mode = mode;
        p.launched = mode.expert();
        Ok(p)
    }

    pub fn with_failsafe(mut self, monitor: FailsafeMonitor) -> Self {
        self.failsafe = Some(monitor);
        self
    }

    pub fn set_perturbation(&mut self, perturbation: Option<Perturbation>) -> Result<()> {
        if let Some(p) = perturbation {
            perturb::check_rho(p.rho)?;
        }
        self.perturbation = perturbation;
        Ok(())
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn exec(&self) -> ExecutionMode {
        self.exec
    }

    pub fn mode(&self) -> ModeVar {
        self.mode
    }

    pub fn buffers(&self) -> &ExpertBuffers {
        &self.buffers
    }

    pub fn failsafe(&self) -> Option<&FailsafeMonitor> {
        self.failsafe.as_ref()
    }

    pub fn slots_run(&self) -> u64 {
        self.slots_run
    }

    /// Bytes decoded since the run started (sum over CRC-passing slots).
    pub fn decoded_bytes(&self) -> u64 {
        self.phy.total_bytes()
    }

    pub fn slot_start(&self, slot_index: u64) -> Nanos {
        slot_index * self.config.geometry.slot_duration_ns()
    }

    /// Queue a control message; it applies at the first slot starting after
    /// `deliverable_at`.
    pub fn deliver(&mut self, msg: ControlMessage) {
        let at = self
            .pending
            .iter()
            .position(|m| m.deliverable_at > msg.deliverable_at)
            .unwrap_or(self.pending.len());
        self.pending.insert(at, msg);
    }

    fn apply_boundary(&mut self, start: Nanos) -> (Vec<ControlMessage>, bool) {
        let due = self
            .pending
            .iter()
            .take_while(|m| m.deliverable_at < start)
            .count();
        let applied: Vec<ControlMessage> = self.pending.drain(..due).collect();
        for m in &applied {
            self.mode.mode = m.mode;
            if let Some(fs) = self.failsafe.as_mut() {
                fs.record_delivery(m.deliverable_at);
            }
        }
        let mut forced = false;
        if let Some(fs) = self.failsafe.as_mut() {
            if fs.check(start, self.mode.mode) {
                self.mode.mode = Mode::Mmse;
                forced = true;
            }
        }
        (applied, forced)
    }

    fn wiener(&mut self, scenario: &ScenarioConfig) -> Result<&WienerInterpolator> {
        let n_sc = self.config.geometry.n_sc();
        let ds = scenario.delay_spread.to_bits();
        let nv = scenario.noise_var().to_bits();
        let hit = matches!(&self.wiener, Some(c) if c.n_sc == n_sc && c.delay_spread == ds && c.noise_var == nv);
        if !hit {
            let pdp = PowerDelayProfile::exponential(scenario.delay_spread, n_sc / 2);
            let filter = WienerInterpolator::new(n_sc, &pdp, scenario.noise_var())?;
            self.wiener = Some(WienerCache {
                n_sc,
                delay_spread: ds,
                noise_var: nv,
                filter,
            });
        }
        Ok(&self.wiener.as_ref().expect("cache filled above").filter)
    }

    /// Advance one slot.
    pub fn run_slot(&mut self, scenario: &ScenarioConfig, slot_index: u64) -> Result<SlotOutcome> {
        let geometry = self.config.geometry.clone();
        let start = self.slot_start(slot_index);
        let (applied, failsafe_forced) = self.apply_boundary(start);

        let (run_mmse, run_ai, switch_mode) = match self.exec {
            ExecutionMode::Concurrent => (true, true, self.mode),
            ExecutionMode::SelectedOnly => {
                let e = self.launched;
                (
                    e == ExpertId::Mmse,
                    e == ExpertId::Ai,
                    ModeVar { mode: Mode::of(e) },
                )
            }
        };

        let channel = generate_channel(&geometry, scenario, slot_index)?;
        let rx = synthesize_uplink_slot(&geometry, &channel, scenario, slot_index)?;
        let ls = ls_estimate(&rx, &geometry)?;

        self.buffers.clear();
        if run_mmse {
            let mut est = self.wiener(scenario)?.apply(&ls)?;
            if let Some(p) = self.perturbation {
                est = perturb::inject_noise(&est, p.rho, p.seed, slot_index)?;
            }
            self.buffers.set(ExpertId::Mmse, est);
        }
        if run_ai {
            let est = self.denoiser.apply(&ls)?;
            self.buffers.set(ExpertId::Ai, est);
        }
        let switch_us = switch_select(&mut self.buffers, switch_mode, &self.config.costs)?;
        let active_expert = switch_mode.mode.expert();

        let downstream = self.buffers.downstream()?;
        let downstream_finite = downstream.values.is_finite();
        let rsrp = downstream.values.mean_power();
        let snr_db = dmrs_snr_db(&ls, downstream);
        let eq = equalize(&rx, downstream, &geometry, scenario.noise_var())?;

        let sinr = eq.post_eq_sinr_db;
        let mcs_index = link_adapt(sinr, &self.config.mcs);
        let tb = transport_block(
            mcs_index,
            geometry.n_prb,
            geometry.n_data_sym(),
            &self.config.mcs,
        )?;
        let crc_pass = crc_outcome(sinr, mcs_index, slot_index, scenario.seed, &self.config.mcs)?;

        let pdu_length = if crc_pass { tb.tb_bytes } else { 0 };
        let mac_rx_bytes = pdu_length.saturating_sub(self.config.mac_header_bytes);
        let lcid4_rx_bytes = math::floor(mac_rx_bytes as f64 * self.config.lcid4_fraction) as u64;
        self.phy.push(pdu_length);
        self.mac.push(mac_rx_bytes);
        self.lcid4.push(lcid4_rx_bytes);
        let ndi = self.ndi;
        if crc_pass {
            self.ndi ^= 1;
        }

        let kpm = KpmRecord {
            slot_index,
            phy_throughput: self.phy.rate_mbps(),
            mcs_index,
            pdu_length,
            ndi,
            rsrp,
            code_rate: tb.code_rate,
            qam_order: tb.qam_order,
            num_cb: tb.num_cb,
            tb_size: tb.tb_bytes,
            sinr_db: sinr,
            snr_db,
            mac_throughput: self.mac.rate_mbps(),
            lcid4_throughput: self.lcid4.rate_mbps(),
            mac_rx_bytes,
            lcid4_rx_bytes,
        };

        let costs = &self.config.costs;
        let mut exec_us = switch_us;
        if run_mmse {
            exec_us += cost_of(ExpertId::Mmse, costs)?.exec_time_us;
        }
        if run_ai {
            exec_us += cost_of(ExpertId::Ai, costs)?.exec_time_us;
        }
        let governing = match self.exec {
            ExecutionMode::Concurrent => cost_of(ExpertId::Ai, costs)?,
            ExecutionMode::SelectedOnly => cost_of(active_expert, costs)?,
        };
        let slot_cost = ExpertCostProfile {
            exec_time_us: exec_us,
            ..governing
        };

        self.launched = self.mode.mode.expert();
        self.slots_run += 1;

        Ok(SlotOutcome {
            slot_index,
            regime: scenario.regime,
            mode: self.mode.mode,
            active_expert,
            mmse_executed: run_mmse,
            ai_executed: run_ai,
            post_eq_sinr_db: sinr,
            mcs: mcs_index,
            tb_bytes: tb.tb_bytes,
            crc_pass,
            kpm,
            slot_cost,
            switch_us,
            downstream_finite,
            applied,
            failsafe_forced,
        })
    }
}

/// SNR from the DMRS residual between the raw LS values and the estimate.
fn dmrs_snr_db(ls: &DmrsEstimate, est: &DmrsEstimate) -> f64 {
    debug_assert_eq!(ls.stage, Stage::RawLs);
    let mut signal = 0.0;
    let mut residual = 0.0;
    let (n_ant, n_layers, n_sc, n_t) = est.values.dims();
    for a in 0..n_ant {
        for l in 0..n_layers {
            for t in 0..n_t {
                let e = est.values.row(a, l, t);
                let r = ls.values.row(a, l, t);
                for f in (0..n_sc).step_by(2) {
                    signal += e[f].norm_sqr();
                    residual += (r[f] - e[f]).norm_sqr();
                }
            }
        }
    }
    if residual <= 0.0 {
        return SINR_CEILING_DB;
    }
    if signal <= 0.0 {
        return -SINR_CEILING_DB;
    }
    math::linear_to_db(signal / residual).clamp(-SINR_CEILING_DB, SINR_CEILING_DB)
}

/// True channel on the DMRS symbols, as an interpolated estimate.
pub fn true_dmrs_channel(channel: &ChannelTensor, geometry: &SlotGeometry) -> DmrsEstimate {
    DmrsEstimate {
        values: channel.select_symbols(&geometry.dmrs_symbols),
        stage: Stage::Interpolated,
    }
}

impl ControlMessage {
    /// Message that takes effect at the boundary of `slot` on a pipeline.
    pub fn for_slot(mode: Mode, slot: u64, slot_ns: Nanos) -> Self {
        let at = (slot * slot_ns).saturating_sub(1);
        ControlMessage {
            mode,
            decided_at: at,
            deliverable_at: at,
            trigger: Trigger::Policy,
        }
    }
}
