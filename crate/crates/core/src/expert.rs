//! Channel-estimation experts and their configured cost model.
//!
//! Both experts consume the same raw LS estimate at the DMRS comb:
//!
//! * [`WienerInterpolator`] (expert `Mmse`) applies `R_hp (R_pp + σ²I)⁻¹` with
//!   correlations taken from the assumed exponential PDP.
//! * [`DelayDenoiser`] (expert `Ai`) fits the first `truncation` delay taps
//!   to the comb samples and evaluates them on every subcarrier. The fit is
//!   weighted per PRB by the inverse of the residual power left by a plain
//!   truncation pass, so PRBs hit by interference barely steer the estimate.
//!   It stands in for a learned estimator: it adapts to the noise actually
//!   present instead of an assumed variance.

use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::math::{self, C64};
use crate::scene::{ChannelTensor, PowerDelayProfile, ResourceGrid, ScenarioConfig, SlotGeometry};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Default number of delay taps the denoiser may keep.
pub const DEFAULT_TRUNCATION: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Values measured on comb subcarriers only; gaps hold nearest-neighbor copies.
    RawLs,
    /// Values defined on every subcarrier.
    Interpolated,
}

/// Estimate on the DMRS symbols (fourth dimension = number of DMRS symbols).
#[derive(Debug, Clone, PartialEq)]
pub struct DmrsEstimate {
    pub values: ChannelTensor,
    pub stage: Stage,
}

impl DmrsEstimate {
    /// True where the value was measured rather than filled.
    #[inline]
    pub fn is_measured(&self, sc: usize) -> bool {
        self.stage == Stage::Interpolated || sc.is_multiple_of(2)
    }

    fn require(&self, stage: Stage) -> Result<()> {
        if self.stage != stage {
            return Err(Error::contract(format!(
                "estimate stage is {:?}, expected {:?}",
                self.stage, stage
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExpertId {
    Mmse,
    Ai,
}

impl ExpertId {
    pub const ALL: [ExpertId; 2] = [ExpertId::Mmse, ExpertId::Ai];

    pub fn name(self) -> &'static str {
        match self {
            ExpertId::Mmse => "mmse",
            ExpertId::Ai => "ai",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExpertCostProfile {
    pub exec_time_us: f64,
    pub gpu_power_w: f64,
    pub gpu_utilization_pct: f64,
}

/// Configured execution-cost constants. Not a measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    pub profiles: Vec<(ExpertId, ExpertCostProfile)>,
    /// Switch kernel time when the AI output is selected (no copy).
    pub switch_ai_us: f64,
    /// Switch kernel time when the MMSE output is copied into the AI buffer.
    pub switch_mmse_us: f64,
    /// Decision-tree inference time.
    pub dt_us: f64,
    /// Control-path framework overhead before the policy runs.
    pub framework_us: f64,
}

impl Default for CostTable {
    fn default() -> Self {
        CostTable {
            profiles: vec![
                (
                    ExpertId::Mmse,
                    ExpertCostProfile {
                        exec_time_us: 5.04,
                        gpu_power_w: 148.4,
                        gpu_utilization_pct: 50.0,
                    },
                ),
                (
                    ExpertId::Ai,
                    ExpertCostProfile {
                        exec_time_us: 432.33,
                        gpu_power_w: 164.2,
                        gpu_utilization_pct: 67.0,
                    },
                ),
            ],
            switch_ai_us: 3.36,
            switch_mmse_us: 4.89,
            dt_us: 0.41,
            framework_us: 135.0,
        }
    }
}

impl CostTable {
    /// All-zero table with both experts present.
    pub fn zero() -> Self {
        CostTable {
            profiles: ExpertId::ALL
                .iter()
                .map(|&e| (e, ExpertCostProfile::default()))
                .collect(),
            switch_ai_us: 0.0,
            switch_mmse_us: 0.0,
            dt_us: 0.0,
            framework_us: 0.0,
        }
    }

    pub fn profile_mut(&mut self, expert: ExpertId) -> Option<&mut ExpertCostProfile> {
        self.profiles
            .iter_mut()
            .find(|(e, _)| *e == expert)
            .map(|(_, p)| p)
    }

    /// Switch kernel time for the expert being selected.
    pub fn switch_us(&self, selected: ExpertId) -> f64 {
        match selected {
            ExpertId::Ai => self.switch_ai_us,
            ExpertId::Mmse => self.switch_mmse_us,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let scalars = [self.switch_ai_us, self.switch_mmse_us, self.dt_us, self.framework_us];
        let profile_ok = self.profiles.iter().all(|(_, p)| {
            [p.exec_time_us, p.gpu_power_w, p.gpu_utilization_pct]
                .iter()
                .all(|v| *v >= 0.0 && v.is_finite())
        });
        if !profile_ok || scalars.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::config("cost constants must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Cost profile of `expert` from the table.
pub fn cost_of(expert: ExpertId, constants: &CostTable) -> Result<ExpertCostProfile> {
    constants
        .profiles
        .iter()
        .find(|(e, _)| *e == expert)
        .map(|(_, p)| *p)
        .ok_or_else(|| Error::Lookup(format!("no cost profile for expert {}", expert.name())))
}

/// Least-squares estimate `Y / X` at the DMRS comb of every DMRS symbol.
pub fn ls_estimate(rx: &ResourceGrid, geometry: &SlotGeometry) -> Result<DmrsEstimate> {
    let (n_ant, n_sc, n_sym) = rx.dims();
    if n_ant != geometry.n_ant || n_sc != geometry.n_sc() || n_sym != geometry.n_sym {
        return Err(Error::contract("resource grid does not match the slot geometry"));
    }
    let mut values = ChannelTensor::zeros(n_ant, 1, n_sc, geometry.n_dmrs());
    for a in 0..n_ant {
        for (d, &t) in geometry.dmrs_symbols.iter().enumerate() {
            let y = rx.rx_row(a, t);
            let out = values.row_mut(a, 0, d);
            for i in 0..n_sc / 2 {
                let x = rx.pilot(d, i);
                let p = x.norm_sqr();
                if p == 0.0 {
                    return Err(Error::contract("zero-magnitude pilot"));
                }
                let h = y[2 * i] * x.conj() / p;
                out[2 * i] = h;
                // Comb gap: nearest neighbor, lower index on ties.
                if 2 * i + 1 < n_sc {
                    out[2 * i + 1] = h;
                }
            }
        }
    }
    Ok(DmrsEstimate {
        values,
        stage: Stage::RawLs,
    })
}

/// Interchangeable channel-estimation expert.
pub trait ChannelEstimator {
    fn id(&self) -> ExpertId;
    fn estimate(&self, ls: &DmrsEstimate) -> Result<DmrsEstimate>;
}

/// Frequency-domain Wiener interpolator built from an assumed PDP.
#[derive(Debug, Clone)]
pub struct WienerInterpolator {
    n_sc: usize,
    n_comb: usize,
    noise_var: f64,
    /// `W = R_hp (R_pp + (σ² + ridge) I)⁻¹`, row-major `n_sc × n_comb`.
    weights: Vec<C64>,
}

impl WienerInterpolator {
    /// Diagonal loading added to the noise variance.
    pub const RIDGE: f64 = 1e-12;

    pub fn new(n_sc: usize, pdp: &PowerDelayProfile, noise_var: f64) -> Result<Self> {
        if n_sc < 2 || !n_sc.is_multiple_of(2) {
            return Err(Error::config("Wiener interpolator needs an even subcarrier count"));
        }
        if noise_var.is_nan() || noise_var < 0.0 {
            return Err(Error::config("noise variance must be non-negative"));
        }
        let n_comb = n_sc / 2;
        if noise_var == f64::INFINITY {
            return Ok(WienerInterpolator {
                n_sc,
                n_comb,
                noise_var,
                weights: vec![C64::new(0.0, 0.0); n_sc * n_comb],
            });
        }
        let mut a = vec![C64::new(0.0, 0.0); n_comb * n_comb];
        for i in 0..n_comb {
            for j in 0..n_comb {
                a[i * n_comb + j] = pdp.correlation(2 * (i as i64 - j as i64), n_sc);
            }
            a[i * n_comb + i] += C64::new(noise_var + Self::RIDGE, 0.0);
        }
        let chol = Cholesky::factor(&a, n_comb)?;
        let mut weights = vec![C64::new(0.0, 0.0); n_sc * n_comb];
        let mut rhs = vec![C64::new(0.0, 0.0); n_comb];
        for f in 0..n_sc {
            // Row f of W solves conj(A) wᵀ = r, i.e. A conj(w) = conj(r).
            for (j, r) in rhs.iter_mut().enumerate() {
                *r = pdp.correlation(f as i64 - 2 * j as i64, n_sc).conj();
            }
            chol.solve_in_place(&mut rhs);
            for (j, r) in rhs.iter().enumerate() {
                weights[f * n_comb + j] = r.conj();
            }
        }
        if weights.iter().any(|w| !w.re.is_finite() || !w.im.is_finite()) {
            return Err(Error::SingularMatrix {
                condition: f64::INFINITY,
            });
        }
        Ok(WienerInterpolator {
            n_sc,
            n_comb,
            noise_var,
            weights,
        })
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// Interpolation weight from comb pilot `j` to subcarrier `f`.
    pub fn weight(&self, f: usize, j: usize) -> C64 {
        self.weights[f * self.n_comb + j]
    }

    pub fn apply(&self, ls: &DmrsEstimate) -> Result<DmrsEstimate> {
        ls.require(Stage::RawLs)?;
        let (n_ant, n_layers, n_sc, n_t) = ls.values.dims();
        if n_sc != self.n_sc {
            return Err(Error::contract("estimate width does not match the interpolator"));
        }
        // All (antenna, layer, symbol) rows share W: keep rows innermost so the
        // accumulation runs across independent rows.
        let rows = n_ant * n_layers * n_t;
        let np = self.n_comb;
        let mut pr = vec![0.0; np * rows];
        let mut pi = vec![0.0; np * rows];
        for a in 0..n_ant {
            for l in 0..n_layers {
                for t in 0..n_t {
                    let r = (a * n_layers + l) * n_t + t;
                    let src = ls.values.row(a, l, t);
                    for j in 0..np {
                        pr[j * rows + r] = src[2 * j].re;
                        pi[j * rows + r] = src[2 * j].im;
                    }
                }
            }
        }
        let mut out = ChannelTensor::zeros(n_ant, n_layers, n_sc, n_t);
        let mut acc_re = vec![0.0; rows];
        let mut acc_im = vec![0.0; rows];
        for f in 0..n_sc {
            acc_re.iter_mut().for_each(|x| *x = 0.0);
            acc_im.iter_mut().for_each(|x| *x = 0.0);
            for (j, w) in self.weights[f * np..(f + 1) * np].iter().enumerate() {
                let (wr, wi) = (w.re, w.im);
                let xr = &pr[j * rows..(j + 1) * rows];
                let xi = &pi[j * rows..(j + 1) * rows];
                for r in 0..rows {
                    acc_re[r] += wr * xr[r] - wi * xi[r];
                    acc_im[r] += wr * xi[r] + wi * xr[r];
                }
            }
            for a in 0..n_ant {
                for l in 0..n_layers {
                    for t in 0..n_t {
                        let r = (a * n_layers + l) * n_t + t;
                        out.set(a, l, f, t, C64::new(acc_re[r], acc_im[r]));
                    }
                }
            }
        }
        Ok(DmrsEstimate {
            values: out,
            stage: Stage::Interpolated,
        })
    }
}

impl ChannelEstimator for WienerInterpolator {
    fn id(&self) -> ExpertId {
        ExpertId::Mmse
    }

    fn estimate(&self, ls: &DmrsEstimate) -> Result<DmrsEstimate> {
        self.apply(ls)
    }
}

/// MMSE estimate with correlations from the scenario's exponential PDP.
pub fn mmse_estimate(
    ls: &DmrsEstimate,
    noise_var: f64,
    scenario: &ScenarioConfig,
) -> Result<DmrsEstimate> {
    ls.require(Stage::RawLs)?;
    let n_sc = ls.values.dims().2;
    let pdp = PowerDelayProfile::exponential(scenario.delay_spread, n_sc / 2);
    WienerInterpolator::new(n_sc, &pdp, noise_var)?.apply(ls)
}

/// Delay-domain truncation denoiser with per-PRB residual weighting.
#[derive(Debug, Clone)]
pub struct DelayDenoiser {
    n_sc: usize,
    n_comb: usize,
    /// Taps kept after clamping to the comb length.
    taps: usize,
    /// `exp(-j2π m / n_sc)`.
    tw_full: Vec<C64>,
    /// `exp(-j2π m / n_comb)`.
    tw_comb: Vec<C64>,
}

/// Weight regularizer relative to the mean residual.
const WEIGHT_FLOOR: f64 = 1e-3;

impl DelayDenoiser {
    pub fn new(geometry: &SlotGeometry, truncation: usize) -> Result<Self> {
        let n_sc = geometry.n_sc();
        if truncation == 0 || truncation > n_sc {
            return Err(Error::config(format!(
                "truncation {truncation} outside 1..={n_sc}"
            )));
        }
        let n_comb = geometry.n_comb();
        Ok(DelayDenoiser {
            n_sc,
            n_comb,
            taps: truncation.min(n_comb),
            tw_full: math::twiddle_table(n_sc),
            tw_comb: math::twiddle_table(n_comb),
        })
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    /// `Σ_i w_i p_i exp(+j2π ik/Np)` for `k < taps`.
    fn project(&self, pilots: &[C64], weights: Option<&[f64]>, out: &mut [C64]) {
        let np = self.n_comb;
        for (k, c) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            let mut m = 0;
            for (i, p) in pilots.iter().enumerate() {
                let w = weights.map_or(1.0, |w| w[i]);
                acc += p * self.tw_comb[m].conj() * w;
                m += k;
                if m >= np {
                    m -= np;
                }
            }
            *c = acc;
        }
    }

    pub fn apply(&self, ls: &DmrsEstimate) -> Result<DmrsEstimate> {
        ls.require(Stage::RawLs)?;
        let (n_ant, n_layers, n_sc, n_t) = ls.values.dims();
        if n_sc != self.n_sc {
            return Err(Error::contract("estimate width does not match the denoiser"));
        }
        let np = self.n_comb;
        let kept = self.taps;
        let rows = n_ant * n_layers * n_t;
        let mut pilots = vec![C64::new(0.0, 0.0); rows * np];
        for a in 0..n_ant {
            for l in 0..n_layers {
                for t in 0..n_t {
                    let r = (a * n_layers + l) * n_t + t;
                    let src = ls.values.row(a, l, t);
                    for i in 0..np {
                        pilots[r * np + i] = src[2 * i];
                    }
                }
            }
        }

        // Pass 1: unweighted truncation; residual power per PRB over all rows.
        let comb_per_prb = crate::scene::SC_PER_PRB / 2;
        let n_prb = np.div_ceil(comb_per_prb);
        let mut resid = vec![0.0; n_prb];
        let mut taps = vec![C64::new(0.0, 0.0); kept];
        for r in 0..rows {
            let p = &pilots[r * np..(r + 1) * np];
            self.project(p, None, &mut taps);
            for (i, pv) in p.iter().enumerate() {
                let fit: C64 = taps
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * self.tw_comb[(i * k) % np])
                    .sum::<C64>()
                    / np as f64;
                resid[i / comb_per_prb] += (pv - fit).norm_sqr();
            }
        }
        let mean_resid = resid.iter().sum::<f64>() / n_prb as f64;
        let weights: Vec<f64> = if mean_resid > 0.0 {
            let raw: Vec<f64> = (0..np)
                .map(|i| 1.0 / (resid[i / comb_per_prb] + WEIGHT_FLOOR * mean_resid))
                .collect();
            let mean_w = raw.iter().sum::<f64>() / np as f64;
            raw.iter().map(|w| w / mean_w).collect()
        } else {
            vec![1.0; np]
        };

        // Pass 2: weighted least squares, (Fᴴ W F) c = Fᴴ W p.
        let mut s = vec![C64::new(0.0, 0.0); kept];
        for (m, sm) in s.iter_mut().enumerate() {
            *sm = weights
                .iter()
                .enumerate()
                .map(|(i, w)| self.tw_comb[(i * m) % np] * *w)
                .sum();
        }
        let mut gram = vec![C64::new(0.0, 0.0); kept * kept];
        for k in 0..kept {
            for l in 0..kept {
                gram[k * kept + l] = if l >= k { s[l - k] } else { s[k - l].conj() };
            }
        }
        let chol = Cholesky::factor(&gram, kept)?;

        let mut out = ChannelTensor::zeros(n_ant, n_layers, n_sc, n_t);
        for a in 0..n_ant {
            for l in 0..n_layers {
                for t in 0..n_t {
                    let r = (a * n_layers + l) * n_t + t;
                    self.project(&pilots[r * np..(r + 1) * np], Some(&weights), &mut taps);
                    chol.solve_in_place(&mut taps);
                    let dst = out.row_mut(a, l, t);
                    for (f, h) in dst.iter_mut().enumerate() {
                        *h = taps
                            .iter()
                            .enumerate()
                            .map(|(k, c)| c * self.tw_full[(f * k) % n_sc])
                            .sum();
                    }
                }
            }
        }
        Ok(DmrsEstimate {
            values: out,
            stage: Stage::Interpolated,
        })
    }
}

impl ChannelEstimator for DelayDenoiser {
    fn id(&self) -> ExpertId {
        ExpertId::Ai
    }

    fn estimate(&self, ls: &DmrsEstimate) -> Result<DmrsEstimate> {
        self.apply(ls)
    }
}

/// Denoiser expert output for `ls`.
pub fn denoiser_estimate(
    ls: &DmrsEstimate,
    geometry: &SlotGeometry,
    truncation: usize,
) -> Result<DmrsEstimate> {
    DelayDenoiser::new(geometry, truncation)?.apply(ls)
}
