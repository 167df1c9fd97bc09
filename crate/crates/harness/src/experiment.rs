//! Experiment orchestration: closed-loop runs with matching fixed-mode
//! baselines, resource accounting and policy training.

use crate::config::Settings;
use anyhow::{bail, Context, Result};
use arches_core::control::{run_closed_loop, Controller, Dapp, FailsafeMonitor, RunLog, Timeline};
use arches_core::math::{mean, median};
use arches_core::perturb::sweep_records;
use arches_core::pipeline::{ExecutionMode, KpmRecord, Mode, Pipeline, SlotOutcome, ThroughputWindow};
use arches_core::policy::{
    confusion, feature_importance, parse, train, ConfusionMatrix, Dataset, FeatureImportance,
    PolicyMetrics, TreeModel,
};
use arches_core::scene::Regime;
use std::path::Path;

/// Where the ARCHES run takes its mode decisions from.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySource {
    Tree(TreeModel),
    Fixed(Mode),
    Oracle,
}

impl PolicySource {
    /// `tree:<path>`, `fixed:<0|1>` or `oracle`.
    pub fn parse(spec: &str) -> Result<Self> {
        if spec == "oracle" {
            return Ok(PolicySource::Oracle);
        }
        if let Some(bit) = spec.strip_prefix("fixed:") {
            let b: u8 = bit.parse().with_context(|| format!("bad fixed mode '{bit}'"))?;
            return Ok(PolicySource::Fixed(Mode::from_bit(b)?));
        }
        if let Some(path) = spec.strip_prefix("tree:") {
            return Ok(PolicySource::Tree(load_tree(Path::new(path))?));
        }
        bail!("unknown policy '{spec}' (expected tree:<path>, fixed:<0|1> or oracle)")
    }
}

pub fn load_tree(path: &Path) -> Result<TreeModel> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading tree {}", path.display()))?;
    parse(&text).with_context(|| format!("parsing tree {}", path.display()))
}

pub fn parse_exec(s: &str) -> Result<ExecutionMode> {
    match s {
        "concurrent" => Ok(ExecutionMode::Concurrent),
        "selected" => Ok(ExecutionMode::SelectedOnly),
        _ => bail!("unknown execution mode '{s}' (expected concurrent or selected)"),
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub settings: Settings,
    pub exec: ExecutionMode,
    pub policy: PolicySource,
}

impl ExperimentSpec {
    pub fn timeline(&self) -> Result<Timeline> {
        timeline(&self.settings, self.settings.segments.clone())
    }

    pub fn validate(&self) -> Result<()> {
        let total: u64 = self.settings.segments.iter().map(|s| s.1).sum();
        if total < self.settings.dapp.window_length as u64 {
            bail!("timeline has {total} slots, shorter than the {}-slot window", self.settings.dapp.window_length);
        }
        Ok(())
    }
}

pub fn timeline(s: &Settings, segments: Vec<(Regime, u64)>) -> Result<Timeline> {
    Ok(Timeline::new(s.good(), s.poor(), segments)?)
}

/// Which run a report row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    AlwaysMmse,
    AlwaysAi,
    Arches,
}

impl RunKind {
    pub const ALL: [RunKind; 3] = [RunKind::AlwaysMmse, RunKind::AlwaysAi, RunKind::Arches];

    pub fn name(self) -> &'static str {
        match self {
            RunKind::AlwaysMmse => "always_mmse",
            RunKind::AlwaysAi => "always_ai",
            RunKind::Arches => "arches",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResourceReport {
    pub exec: ExecutionMode,
    pub slots: usize,
    pub median_power_w: f64,
    pub mean_power_w: f64,
    pub median_utilization_pct: f64,
    pub mean_utilization_pct: f64,
    pub median_compute_us: f64,
    pub mean_compute_us: f64,
    /// Σ power × modeled compute time.
    pub energy_j: f64,
    pub decoded_bytes: u64,
}

pub fn resource_account(outcomes: &[SlotOutcome], exec: ExecutionMode) -> ResourceReport {
    let col = |f: fn(&SlotOutcome) -> f64| -> Vec<f64> { outcomes.iter().map(f).collect() };
    let power = col(|o| o.slot_cost.gpu_power_w);
    let util = col(|o| o.slot_cost.gpu_utilization_pct);
    let compute = col(|o| o.slot_cost.exec_time_us);
    let stat = |v: &[f64], f: fn(&[f64]) -> Option<f64>| f(v).unwrap_or(0.0);
    ResourceReport {
        exec,
        slots: outcomes.len(),
        median_power_w: stat(&power, median),
        mean_power_w: stat(&power, mean),
        median_utilization_pct: stat(&util, median),
        mean_utilization_pct: stat(&util, mean),
        median_compute_us: stat(&compute, median),
        mean_compute_us: stat(&compute, mean),
        energy_j: power.iter().zip(&compute).map(|(p, t)| p * t * 1e-6).sum(),
        decoded_bytes: decoded_bytes(outcomes),
    }
}

pub fn decoded_bytes(outcomes: &[SlotOutcome]) -> u64 {
    outcomes.iter().filter(|o| o.crc_pass).map(|o| o.tb_bytes).sum()
}

/// Sliding-window PHY throughput in Mbps, one value per slot.
pub fn throughput_series(outcomes: &[SlotOutcome], window: usize, slot_us: f64) -> Vec<f64> {
    let mut w = ThroughputWindow::new(window, slot_us);
    outcomes
        .iter()
        .map(|o| {
            w.push(if o.crc_pass { o.tb_bytes } else { 0 });
            w.rate_mbps()
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub arches: RunLog,
    pub always_mmse: Vec<SlotOutcome>,
    pub always_ai: Vec<SlotOutcome>,
    pub exec: ExecutionMode,
}

impl ExperimentResult {
    pub fn outcomes(&self, run: RunKind) -> &[SlotOutcome] {
        match run {
            RunKind::AlwaysMmse => &self.always_mmse,
            RunKind::AlwaysAi => &self.always_ai,
            RunKind::Arches => &self.arches.outcomes,
        }
    }

    pub fn resources(&self, run: RunKind) -> ResourceReport {
        resource_account(self.outcomes(run), self.exec)
    }
}

/// Controller and pipeline for the ARCHES run.
pub fn arches_setup(spec: &ExperimentSpec) -> Result<(Pipeline, Controller)> {
    let s = &spec.settings;
    let cfg = s.pipeline.clone();
    Ok(match &spec.policy {
        PolicySource::Fixed(m) => (Pipeline::pinned(cfg, spec.exec, *m)?, Controller::None),
        PolicySource::Oracle => (Pipeline::new(cfg, spec.exec)?, Controller::Oracle(s.latency)),
        PolicySource::Tree(tree) => {
            let p = Pipeline::new(cfg, spec.exec)?
                .with_failsafe(FailsafeMonitor::new(s.dapp.failsafe_timeout_ns));
            let dapp = Dapp::new(tree.clone(), s.dapp, s.latency)?;
            (p, Controller::Dapp { dapp, dies_after: None })
        }
    })
}

pub fn run_baseline(spec: &ExperimentSpec, timeline: &Timeline, mode: Mode) -> Result<Vec<SlotOutcome>> {
    let mut p = Pipeline::pinned(spec.settings.pipeline.clone(), spec.exec, mode)?;
    Ok(run_closed_loop(&mut p, timeline, &mut Controller::None)?.outcomes)
}

/// ARCHES run plus always-MMSE and always-AI baselines on identical seeds.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let timeline = spec.timeline()?;
    let (mut p, mut ctl) = arches_setup(spec)?;
    let arches = run_closed_loop(&mut p, &timeline, &mut ctl)?;
    Ok(ExperimentResult {
        arches,
        always_mmse: run_baseline(spec, &timeline, Mode::Mmse)?,
        always_ai: run_baseline(spec, &timeline, Mode::Ai)?,
        exec: spec.exec,
    })
}

/// Labeled slots from an alternating Good/Poor timeline under the oracle.
pub fn training_outcomes(s: &Settings, exec: ExecutionMode) -> Result<Vec<SlotOutcome>> {
    let segments = (0..s.train_segments)
        .map(|i| (if i % 2 == 0 { Regime::Good } else { Regime::Poor }, s.train_segment_slots))
        .collect();
    let t = timeline(s, segments)?;
    let mut p = Pipeline::new(s.pipeline.clone(), exec)?;
    Ok(run_closed_loop(&mut p, &t, &mut Controller::Oracle(s.latency))?.outcomes)
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub tree: TreeModel,
    pub dataset: Dataset,
    pub train: Dataset,
    pub test: Dataset,
    pub confusion: ConfusionMatrix,
    pub metrics: PolicyMetrics,
    pub importance: FeatureImportance,
}

pub fn train_policy(s: &Settings, exec: ExecutionMode) -> Result<TrainResult> {
    let outcomes = training_outcomes(s, exec)?;
    let dataset = Dataset::from_outcomes(&outcomes, s.guard_slots)?;
    let (train_set, test) = dataset.split(s.train_fraction, s.seed)?;
    let tree = train(&train_set, 2)?;
    let cm = confusion(&tree, &test);
    Ok(TrainResult {
        importance: feature_importance(&tree),
        metrics: cm.metrics(),
        confusion: cm,
        tree,
        dataset,
        train: train_set,
        test,
    })
}

/// All sweep records, per ρ point, under the configured regime.
pub fn sweep_points(s: &Settings) -> Result<Vec<(f64, Vec<KpmRecord>)>> {
    Ok(sweep_records(&s.scenario, &s.pipeline, &s.perturbation)?)
}
