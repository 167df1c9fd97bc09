//! TOML experiment configuration.
//!
//! Every section and key is optional; omitted values take the simulator
//! defaults. See the README for the full schema.

use anyhow::{bail, Context, Result};
use arches_core::control::{us_to_ns, DappConfig, LatencyModel};
use arches_core::expert::{CostTable, ExpertCostProfile, ExpertId};
use arches_core::perturb::{default_rho_grid, PerturbationConfig};
use arches_core::pipeline::PipelineConfig;
use arches_core::scene::{Regime, ScenarioConfig, SlotGeometry};
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub costs: CostsSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub timeline: TimelineSection,
    #[serde(default)]
    pub dapp: DappSection,
    #[serde(default)]
    pub latency: LatencySection,
    #[serde(default)]
    pub train: TrainSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub regime: Option<String>,
    pub snr_db: Option<f64>,
    pub delay_spread: Option<f64>,
    pub temporal_correlation: Option<f64>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub interference: InterferenceSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferenceSection {
    /// Interfered PRB indices. Defaults to the lower half of the allocation.
    pub prbs: Option<Vec<usize>>,
    pub power_db: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub n_ant: Option<usize>,
    pub n_prb: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub exec_time_us: Option<f64>,
    pub gpu_power_w: Option<f64>,
    pub gpu_utilization_pct: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostsSection {
    #[serde(default)]
    pub mmse: ProfileSection,
    #[serde(default)]
    pub ai: ProfileSection,
    pub switch_ai_us: Option<f64>,
    pub switch_mmse_us: Option<f64>,
    pub dt_us: Option<f64>,
    pub framework_us: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub rho: Option<Vec<f64>>,
    pub slots_per_point: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub regime: String,
    pub slots: u64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineSection {
    pub segments: Option<Vec<Segment>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DappSection {
    pub decision_period: Option<u64>,
    pub window_length: Option<usize>,
    /// Omit for ten decision periods; a negative value disables the timeout.
    pub failsafe_timeout_us: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencySection {
    pub framework_overhead_us: Option<f64>,
    pub policy_inference_us: Option<f64>,
    pub switch_exec_us: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    /// Slots per regime segment of the alternating training timeline.
    pub segment_slots: Option<u64>,
    pub segments: Option<usize>,
    /// Slots skipped after each regime change.
    pub guard_slots: Option<usize>,
    pub train_fraction: Option<f64>,
}

/// Resolved settings used by every subcommand.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    pub regime: Regime,
    /// Channel, noise and interference parameters (regime as configured).
    pub scenario: ScenarioConfig,
    /// Mask applied when a timeline segment is poor.
    pub poor_mask: Vec<bool>,
    pub pipeline: PipelineConfig,
    pub perturbation: PerturbationConfig,
    pub segments: Vec<(Regime, u64)>,
    pub dapp: DappConfig,
    pub latency: LatencyModel,
    pub train_segment_slots: u64,
    pub train_segments: usize,
    pub guard_slots: usize,
    pub train_fraction: f64,
}

pub fn parse_regime(s: &str) -> Result<Regime> {
    match s {
        "good" => Ok(Regime::Good),
        "poor" => Ok(Regime::Poor),
        _ => bail!("unknown regime '{s}' (expected good or poor)"),
    }
}

fn apply_profile(p: &mut ExpertCostProfile, s: &ProfileSection) {
    if let Some(v) = s.exec_time_us {
        p.exec_time_us = v;
    }
    if let Some(v) = s.gpu_power_w {
        p.gpu_power_w = v;
    }
    if let Some(v) = s.gpu_utilization_pct {
        p.gpu_utilization_pct = v;
    }
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Resolve against defaults. `seed_override` (from the command line)
    /// wins over both seed keys.
    pub fn resolve(&self, seed_override: Option<u64>) -> Result<Settings> {
        let seed = seed_override
            .or(self.scenario.seed)
            .or(self.seed)
            .unwrap_or(1);

        let mut geometry = SlotGeometry::default();
        if let Some(n) = self.geometry.n_ant {
            geometry.n_ant = n;
        }
        if let Some(n) = self.geometry.n_prb {
            geometry.n_prb = n;
        }
        geometry.validate()?;

        let regime = match &self.scenario.regime {
            Some(r) => parse_regime(r)?,
            None => Regime::Good,
        };
        let mut base = ScenarioConfig::good(seed);
        let sc = &self.scenario;
        if let Some(v) = sc.snr_db {
            base.base_snr_db = v;
        }
        if let Some(v) = sc.delay_spread {
            base.delay_spread = v;
        }
        if let Some(v) = sc.temporal_correlation {
            base.temporal_correlation = v;
        }
        if let Some(v) = sc.interference.power_db {
            base.interference_power_db = v;
        }
        let poor_mask: Vec<bool> = match &sc.interference.prbs {
            Some(prbs) => {
                if let Some(&p) = prbs.iter().find(|&&p| p >= geometry.n_prb) {
                    bail!("interference PRB {p} outside the {}-PRB allocation", geometry.n_prb);
                }
                (0..geometry.n_prb).map(|p| prbs.contains(&p)).collect()
            }
            None => ScenarioConfig::poor(seed, geometry.n_prb).interference_prb_mask,
        };
        if !poor_mask.iter().any(|&m| m) {
            bail!("interference.prbs selects no PRB");
        }
        let scenario = match regime {
            Regime::Good => base.clone(),
            Regime::Poor => base.as_poor(poor_mask.clone()),
        };
        scenario.validate(&geometry)?;

        let mut costs = CostTable::default();
        let c = &self.costs;
        for (id, s) in [(ExpertId::Mmse, &c.mmse), (ExpertId::Ai, &c.ai)] {
            if let Some(p) = costs.profile_mut(id) {
                apply_profile(p, s);
            }
        }
        if let Some(v) = c.switch_ai_us {
            costs.switch_ai_us = v;
        }
        if let Some(v) = c.switch_mmse_us {
            costs.switch_mmse_us = v;
        }
        if let Some(v) = c.dt_us {
            costs.dt_us = v;
        }
        if let Some(v) = c.framework_us {
            costs.framework_us = v;
        }
        let pipeline = PipelineConfig {
            geometry,
            costs,
            ..Default::default()
        };
        pipeline.validate()?;

        let perturbation = PerturbationConfig {
            rho_values: self.sweep.rho.clone().unwrap_or_else(default_rho_grid),
            slots_per_point: self.sweep.slots_per_point.unwrap_or(500),
            seed,
        };
        perturbation.validate()?;

        let segments = match &self.timeline.segments {
            Some(s) => s
                .iter()
                .map(|seg| Ok((parse_regime(&seg.regime)?, seg.slots)))
                .collect::<Result<Vec<_>>>()?,
            None => vec![(Regime::Good, 1000), (Regime::Poor, 1000), (Regime::Good, 1000)],
        };
        if segments.is_empty() || segments.iter().any(|s| s.1 == 0) {
            bail!("timeline segments must be non-empty with positive slot counts");
        }

        // Decisions come from the optional [latency] overrides, with the DT
        // and framework costs as their defaults.
        let lat = &self.latency;
        let latency = LatencyModel {
            framework_overhead_us: lat.framework_overhead_us.unwrap_or(pipeline.costs.framework_us),
            policy_inference_us: lat.policy_inference_us.unwrap_or(pipeline.costs.dt_us),
            switch_exec_us: lat.switch_exec_us.unwrap_or(LatencyModel::default().switch_exec_us),
        };
        latency.validate()?;

        let slot_ns = pipeline.geometry.slot_duration_ns();
        let period = self.dapp.decision_period.unwrap_or(10);
        let mut dapp = DappConfig::with_period(period, slot_ns);
        if let Some(w) = self.dapp.window_length {
            dapp.window_length = w;
        }
        match self.dapp.failsafe_timeout_us {
            Some(t) if t < 0.0 => dapp.failsafe_timeout_ns = None,
            Some(t) => dapp.failsafe_timeout_ns = Some(us_to_ns(t)),
            None => {}
        }
        dapp.validate()?;

        let t = &self.train;
        let train_fraction = t.train_fraction.unwrap_or(0.8);
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            bail!("train_fraction must lie in (0, 1)");
        }
        Ok(Settings {
            seed,
            regime,
            scenario,
            poor_mask,
            pipeline,
            perturbation,
            segments,
            dapp,
            latency,
            train_segment_slots: t.segment_slots.unwrap_or(500),
            train_segments: t.segments.unwrap_or(12),
            guard_slots: t.guard_slots.unwrap_or(100),
            train_fraction,
        })
    }
}

impl Settings {
    /// Defaults with the given seed.
    pub fn defaults(seed: u64) -> Self {
        ConfigFile::default()
            .resolve(Some(seed))
            .expect("default configuration is valid")
    }

    pub fn good(&self) -> ScenarioConfig {
        self.scenario.as_good()
    }

    pub fn poor(&self) -> ScenarioConfig {
        self.scenario.as_poor(self.poor_mask.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let s = ConfigFile::parse("").unwrap().resolve(None).unwrap();
        assert_eq!(s.seed, 1);
        assert_eq!(s.regime, Regime::Good);
        assert_eq!(s.pipeline.costs, CostTable::default());
        assert_eq!(s.perturbation.rho_values.len(), 21);
        assert_eq!(s.latency, LatencyModel::default());
        assert_eq!(s.poor_mask.iter().filter(|&&m| m).count(), 12);
    }

    #[test]
    fn documented_keys() {
        let text = r#"
            seed = 9
            [scenario]
            regime = "poor"
            snr_db = 18.0
            delay_spread = 2.0
            temporal_correlation = 0.5
            [scenario.interference]
            prbs = [0, 1, 2]
            power_db = 6.0
            [costs]
            switch_ai_us = 1.0
            [costs.ai]
            exec_time_us = 100.0
        "#;
        let s = ConfigFile::parse(text).unwrap().resolve(Some(4)).unwrap();
        assert_eq!(s.seed, 4);
        assert_eq!(s.scenario.regime, Regime::Poor);
        assert_eq!(s.scenario.base_snr_db, 18.0);
        assert_eq!(s.scenario.interference_prb_mask[..4], [true, true, true, false]);
        assert_eq!(s.scenario.interference_power_db, 6.0);
        assert_eq!(s.pipeline.costs.switch_ai_us, 1.0);
        let ai = arches_core::expert::cost_of(ExpertId::Ai, &s.pipeline.costs).unwrap();
        assert_eq!(ai.exec_time_us, 100.0);
        assert_eq!(ai.gpu_power_w, 164.2);
    }

    #[test]
    fn bad_values_are_rejected() {
        for text in [
            "[scenario]\nregime = \"fair\"",
            "[scenario]\ntemporal_correlation = 1.0",
            "[scenario.interference]\nprbs = [99]",
            "[costs.mmse]\nexec_time_us = -1.0",
            "[sweep]\nrho = [0.0, 3.0]",
            "unknown = 1",
        ] {
            let r = ConfigFile::parse(text).and_then(|c| c.resolve(None));
            assert!(r.is_err(), "{text}");
        }
    }
}
