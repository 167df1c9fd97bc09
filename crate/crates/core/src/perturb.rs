//! Calibrated noise injection into channel estimates, the ρ sweep and the
//! monotonicity filter over the resulting degradation table.

use crate::error::{Error, Result};
use crate::expert::{DmrsEstimate, Stage};
use crate::math;
use crate::pipeline::{ExecutionMode, Kpm, KpmRecord, Mode, Perturbation, Pipeline, PipelineConfig};
use crate::rng::{Purpose, Stream};
use crate::scene::ScenarioConfig;
use crate::selection::pearson;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

pub const MAX_RHO: f64 = 2.0;
/// Default monotonicity threshold on |Spearman|.
pub const DEFAULT_TAU: f64 = 0.9;

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..=MAX_RHO).contains(&rho) {
        return Err(Error::config(format!("rho {rho} outside [0, {MAX_RHO}]")));
    }
    Ok(())
}

/// `Ĥ + ρ · mean|Ĥ| · Z` with `Z ~ CN(0, 1)` drawn from `(seed, index)`.
///
/// The draw depends on `index` but not on `rho`, so sweeps at different ρ
/// share their noise realizations.
pub fn inject_noise(h: &DmrsEstimate, rho: f64, seed: u64, index: u64) -> Result<DmrsEstimate> {
    check_rho(rho)?;
    if h.stage != Stage::Interpolated {
        return Err(Error::contract("noise injection expects an interpolated estimate"));
    }
    let mut out = h.clone();
    if rho == 0.0 {
        return Ok(out);
    }
    let sigma = rho * h.values.mean_magnitude();
    let mut z = Stream::new(seed, Purpose::Perturbation, index);
    for v in out.values.values_mut() {
        *v += z.complex_gaussian(1.0) * sigma;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationConfig {
    pub rho_values: Vec<f64>,
    pub slots_per_point: usize,
    pub seed: u64,
}

/// `0.0, 0.1, …, 2.0`.
pub fn default_rho_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 10.0).collect()
}

/// The ρ points plotted in the reference degradation figure.
pub const FIGURE_RHO_POINTS: [f64; 12] = [0.0, 0.1, 0.2, 0.3, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.5, 2.0];

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig {
            rho_values: default_rho_grid(),
            slots_per_point: 500,
            seed: 0x5eed,
        }
    }
}

impl PerturbationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rho_values.is_empty() {
            return Err(Error::config("rho_values is empty"));
        }
        for &r in &self.rho_values {
            check_rho(r)?;
        }
        if self.rho_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("rho_values must be strictly ascending"));
        }
        if self.slots_per_point == 0 {
            return Err(Error::config("slots_per_point must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegradationRow {
    pub kpm: String,
    pub rho: f64,
    pub mean: f64,
    pub ci95: f64,
    pub n: usize,
}

/// Per-(KPM, ρ) summary. Rows are grouped by KPM, ρ ascending within a KPM.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DegradationTable {
    pub rows: Vec<DegradationRow>,
}

/// Mean and 95% CI half-width (1.96 × standard error).
pub fn mean_ci95(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let mean = math::mean(xs).unwrap_or(f64::NAN);
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * math::sqrt(var / n as f64))
}

impl DegradationTable {
    /// Summarize per-ρ record batches over the given KPMs.
    pub fn from_records(points: &[(f64, Vec<KpmRecord>)], kpms: &[Kpm]) -> Self {
        let mut rows = Vec::with_capacity(points.len() * kpms.len());
        for &k in kpms {
            for (rho, recs) in points {
                let xs: Vec<f64> = recs.iter().map(|r| k.value(r)).collect();
                let (mean, ci95) = mean_ci95(&xs);
                rows.push(DegradationRow {
                    kpm: k.name().to_string(),
                    rho: *rho,
                    mean,
                    ci95,
                    n: xs.len(),
                });
            }
        }
        DegradationTable { rows }
    }

    /// Table from already-aggregated means (ci and n unknown).
    pub fn from_means(series: &[(&str, &[f64])], rho: &[f64]) -> Result<Self> {
        let mut rows = Vec::new();
        for (name, means) in series {
            if means.len() != rho.len() {
                return Err(Error::contract(format!(
                    "series {name} has {} points for {} rho values",
                    means.len(),
                    rho.len()
                )));
            }
            for (r, m) in rho.iter().zip(means.iter()) {
                rows.push(DegradationRow {
                    kpm: (*name).to_string(),
                    rho: *r,
                    mean: *m,
                    ci95: 0.0,
                    n: 0,
                });
            }
        }
        Ok(DegradationTable { rows })
    }

    /// KPM names in first-appearance order.
    pub fn kpms(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !names.contains(&r.kpm.as_str()) {
                names.push(&r.kpm);
            }
        }
        names
    }

    /// `(rho, mean)` for one KPM in ρ order.
    pub fn series(&self, kpm: &str) -> Vec<(f64, f64)> {
        let mut s: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.kpm == kpm)
            .map(|r| (r.rho, r.mean))
            .collect();
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
        s
    }

    pub fn row(&self, kpm: &str, rho: f64) -> Option<&DegradationRow> {
        self.rows.iter().find(|r| r.kpm == kpm && r.rho == rho)
    }
}

/// Run one ρ point: MMSE pinned, SelectedOnly, noise injected before the switch.
pub fn sweep_point(
    scenario: &ScenarioConfig,
    pipeline: &PipelineConfig,
    rho: f64,
    slots: usize,
    seed: u64,
) -> Result<Vec<KpmRecord>> {
    check_rho(rho)?;
    let mut p = Pipeline::pinned(pipeline.clone(), ExecutionMode::SelectedOnly, Mode::Mmse)?;
    p.set_perturbation(Some(Perturbation { rho, seed }))?;
    (0..slots as u64)
        .map(|n| p.run_slot(scenario, n).map(|o| o.kpm))
        .collect()
}

/// All ρ points of a sweep, with their raw records.
pub fn sweep_records(
    scenario: &ScenarioConfig,
    pipeline: &PipelineConfig,
    pert: &PerturbationConfig,
) -> Result<Vec<(f64, Vec<KpmRecord>)>> {
    pert.validate()?;
    pert.rho_values
        .iter()
        .map(|&rho| {
            sweep_point(scenario, pipeline, rho, pert.slots_per_point, pert.seed).map(|r| (rho, r))
        })
        .collect()
}

/// Degradation of every KPM across the ρ grid.
pub fn sweep(
    scenario: &ScenarioConfig,
    pipeline: &PipelineConfig,
    pert: &PerturbationConfig,
) -> Result<DegradationTable> {
    let points = sweep_records(scenario, pipeline, pert)?;
    Ok(DegradationTable::from_records(&points, &Kpm::ALL))
}

/// Ranks starting at 1, ties receive their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = alloc::vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendScore {
    pub kpm: String,
    /// `None` when the series is constant.
    pub spearman: Option<f64>,
    pub retained: bool,
    pub degenerate: bool,
}

/// Keep KPMs whose mean series has `|spearman(ρ, mean)| ≥ tau`.
pub fn monotonicity_filter(table: &DegradationTable, tau: f64) -> Result<Vec<TrendScore>> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::config("tau must lie in (0, 1]"));
    }
    let mut out = Vec::new();
    for name in table.kpms() {
        let s = table.series(name);
        if s.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "{name} has {} rho points, need at least 3",
                s.len()
            )));
        }
        let rho: Vec<f64> = s.iter().map(|p| p.0).collect();
        let means: Vec<f64> = s.iter().map(|p| p.1).collect();
        let score = spearman(&rho, &means);
        out.push(TrendScore {
            kpm: name.to_string(),
            spearman: score,
            // Small tolerance so an exact ±1 is not lost to rounding.
            retained: score.is_some_and(|r| r.abs() >= tau - 1e-12),
            degenerate: score.is_none(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::ChannelTensor;
    use crate::C64;

    fn est(n: usize) -> DmrsEstimate {
        let mut values = ChannelTensor::zeros(1, 1, n, 1);
        for (i, v) in values.values_mut().iter_mut().enumerate() {
            *v = C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos());
        }
        DmrsEstimate {
            values,
            stage: Stage::Interpolated,
        }
    }

    #[test]
    fn rho_zero_is_identity() {
        let h = est(64);
        assert_eq!(inject_noise(&h, 0.0, 1, 2).unwrap(), h);
    }

    #[test]
    fn rho_out_of_range() {
        assert!(matches!(inject_noise(&est(4), 2.5, 1, 0), Err(Error::Config(_))));
        assert!(inject_noise(&est(4), -0.1, 1, 0).is_err());
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), alloc::vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn strict_decrease_is_minus_one() {
        let rho: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let m: Vec<f64> = rho.iter().map(|r| 10.0 - r * r).collect();
        assert!((spearman(&rho, &m).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let t = DegradationTable::from_means(&[("flat", &[1.0, 1.0, 1.0])], &[0.0, 0.5, 1.0])
            .unwrap();
        let s = monotonicity_filter(&t, 0.9).unwrap();
        assert!(s[0].degenerate && !s[0].retained);
    }

    #[test]
    fn too_few_points() {
        let t = DegradationTable::from_means(&[("a", &[1.0, 0.0])], &[0.0, 1.0]).unwrap();
        assert!(matches!(monotonicity_filter(&t, 0.9), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn ci_formula() {
        let (m, ci) = mean_ci95(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((ci - 1.96 * sd / 2.0).abs() < 1e-12);
    }
}
