//! Synthetic radio environment: slot geometry, fading channel, DMRS/data
//! transmission, AWGN and PRB-localized interference.
//!
//! The channel is a tapped delay line with an exponential power-delay profile
//! whose taps sit on the subcarrier grid's delay bins, so each frequency
//! response is `H[f] = Σ_l g_l · exp(-j2π f l / n_sc)`. Taps evolve across
//! slots as a stationary AR(1) process, evaluated directly from the slot index
//! as a truncated moving-average so any slot can be generated in isolation.

use crate::error::{Error, Result};
use crate::math::{self, C64};
use crate::rng::{Purpose, Stream};
use alloc::vec;
use alloc::vec::Vec;

/// Subcarriers per PRB.
pub const SC_PER_PRB: usize = 12;
/// Default PRB allocation. Configurable; no claim of matching any deployment.
pub const DEFAULT_N_PRB: usize = 24;
/// PDP taps below this fraction of the first tap's power are dropped.
pub const PDP_FLOOR: f64 = 1e-4;
/// AR(1) moving-average terms are kept until their power weight falls below this.
const AR_TRUNCATION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SlotGeometry {
    pub n_ant: usize,
    pub n_layers: usize,
    pub n_prb: usize,
    pub n_sym: usize,
    /// Strictly increasing DMRS symbol indices within the slot.
    pub dmrs_symbols: Vec<usize>,
    pub slot_duration_us: f64,
}

impl Default for SlotGeometry {
    fn default() -> Self {
        SlotGeometry {
            n_ant: 4,
            n_layers: 1,
            n_prb: DEFAULT_N_PRB,
            n_sym: 14,
            dmrs_symbols: vec![0, 5, 10],
            slot_duration_us: 500.0,
        }
    }
}

impl SlotGeometry {
    pub fn new(n_ant: usize, n_prb: usize) -> Self {
        SlotGeometry {
            n_ant,
            n_prb,
            ..Default::default()
        }
    }

    #[inline]
    pub fn n_sc(&self) -> usize {
        SC_PER_PRB * self.n_prb
    }

    /// Number of DMRS comb positions (even subcarriers) per DMRS symbol.
    #[inline]
    pub fn n_comb(&self) -> usize {
        self.n_sc() / 2
    }

    #[inline]
    pub fn n_dmrs(&self) -> usize {
        self.dmrs_symbols.len()
    }

    /// OFDM symbols without DMRS, as used by the transport-block size formula.
    #[inline]
    pub fn n_data_sym(&self) -> usize {
        self.n_sym - self.n_dmrs()
    }

    #[inline]
    pub fn dmrs_index(&self, sym: usize) -> Option<usize> {
        self.dmrs_symbols.iter().position(|&d| d == sym)
    }

    /// Pilot resource element: even subcarrier of a DMRS symbol (Type-1 comb).
    #[inline]
    pub fn is_pilot(&self, sc: usize, sym: usize) -> bool {
        sc.is_multiple_of(2) && self.dmrs_index(sym).is_some()
    }

    pub fn slot_duration_ns(&self) -> u64 {
        math::floor(self.slot_duration_us * 1000.0 + 0.5) as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ant == 0 || self.n_layers == 0 || self.n_prb == 0 || self.n_sym == 0 {
            return Err(Error::config("slot geometry has a zero dimension"));
        }
        if self.dmrs_symbols.is_empty() {
            return Err(Error::config("at least one DMRS symbol is required"));
        }
        if self.dmrs_symbols.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("dmrs_symbols must be strictly increasing"));
        }
        if self.dmrs_symbols.iter().any(|&d| d >= self.n_sym) {
            return Err(Error::config("dmrs symbol index beyond the slot"));
        }
        if self.dmrs_symbols.len() >= self.n_sym {
            return Err(Error::config("slot has no data symbols"));
        }
        if !(self.slot_duration_us > 0.0) || !self.slot_duration_us.is_finite() {
            return Err(Error::config("slot_duration must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    Good,
    Poor,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Good => "good",
            Regime::Poor => "poor",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub regime: Regime,
    /// Per-antenna SNR of the unit-power signal; `+inf` disables AWGN.
    pub base_snr_db: f64,
    pub interference_prb_mask: Vec<bool>,
    /// Mean interference power relative to the signal. The interferer is
    /// Rayleigh faded, so its per-slot power is this mean times an Exp(1) gain.
    pub interference_power_db: f64,
    /// Exponential PDP decay constant in delay bins; 0 gives a single tap.
    pub delay_spread: f64,
    /// AR(1) slot-to-slot coefficient of every tap, in `[0, 1)`.
    pub temporal_correlation: f64,
    pub seed: u64,
}

pub const DEFAULT_SNR_DB: f64 = 22.0;
pub const DEFAULT_DELAY_SPREAD: f64 = 1.5;
pub const DEFAULT_TEMPORAL_CORRELATION: f64 = 0.9;
pub const DEFAULT_INTERFERENCE_DB: f64 = 3.0;

impl ScenarioConfig {
    /// Interference-free scenario with default channel statistics.
    pub fn good(seed: u64) -> Self {
        ScenarioConfig {
            regime: Regime::Good,
            base_snr_db: DEFAULT_SNR_DB,
            interference_prb_mask: Vec::new(),
            interference_power_db: DEFAULT_INTERFERENCE_DB,
            delay_spread: DEFAULT_DELAY_SPREAD,
            temporal_correlation: DEFAULT_TEMPORAL_CORRELATION,
            seed,
        }
    }

    /// Default interference scenario: the lower half of the PRBs is hit.
    pub fn poor(seed: u64, n_prb: usize) -> Self {
        let mask = (0..n_prb).map(|p| p < n_prb / 2).collect();
        ScenarioConfig {
            regime: Regime::Poor,
            interference_prb_mask: mask,
            ..Self::good(seed)
        }
    }

    /// Same channel and seed with interference removed.
    pub fn as_good(&self) -> Self {
        ScenarioConfig {
            regime: Regime::Good,
            interference_prb_mask: vec![false; self.interference_prb_mask.len()],
            ..self.clone()
        }
    }

    /// Same channel and seed with the given interference mask.
    pub fn as_poor(&self, mask: Vec<bool>) -> Self {
        ScenarioConfig {
            regime: Regime::Poor,
            interference_prb_mask: mask,
            ..self.clone()
        }
    }

    /// Clean AWGN variance per antenna (excludes interference).
    pub fn noise_var(&self) -> f64 {
        if self.base_snr_db == f64::INFINITY {
            0.0
        } else {
            math::db_to_linear(-self.base_snr_db)
        }
    }

    pub fn interference_power(&self) -> f64 {
        math::db_to_linear(self.interference_power_db)
    }

    pub fn has_interference(&self) -> bool {
        self.interference_prb_mask.iter().any(|&m| m)
    }

    #[inline]
    pub fn is_interfered_sc(&self, sc: usize) -> bool {
        self.interference_prb_mask
            .get(sc / crate::scene::SC_PER_PRB)
            .copied()
            .unwrap_or(false)
    }

    pub fn validate(&self, geometry: &SlotGeometry) -> Result<()> {
        if !(0.0..1.0).contains(&self.temporal_correlation) {
            return Err(Error::config("temporal_correlation must lie in [0, 1)"));
        }
        if !(self.delay_spread >= 0.0) || !self.delay_spread.is_finite() {
            return Err(Error::config("delay_spread must be finite and non-negative"));
        }
        if self.base_snr_db.is_nan() || self.base_snr_db == f64::NEG_INFINITY {
            return Err(Error::config("base_snr_db must be a number or +inf"));
        }
        if self.interference_prb_mask.len() > geometry.n_prb {
            return Err(Error::config("interference mask longer than the PRB allocation"));
        }
        if self.regime == Regime::Good && self.has_interference() {
            return Err(Error::config("good regime cannot carry an interference mask"));
        }
        if self.has_interference() && !self.interference_power_db.is_finite() {
            return Err(Error::config("interference_power_db must be finite"));
        }
        Ok(())
    }
}

/// Exponential power-delay profile on integer delay bins, normalized to unit power.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    powers: Vec<f64>,
}

impl PowerDelayProfile {
    /// `max_taps` caps the support (the comb length keeps taps alias-free).
    pub fn exponential(delay_spread: f64, max_taps: usize) -> Self {
        let max_taps = max_taps.max(1);
        let n_taps = if delay_spread <= 0.0 {
            1
        } else {
            let last = math::ceil(delay_spread * math::ln(1.0 / PDP_FLOOR)) as usize;
            (last + 1).min(max_taps)
        };
        let mut powers: Vec<f64> = (0..n_taps)
            .map(|l| {
                if delay_spread <= 0.0 {
                    1.0
                } else {
                    math::exp(-(l as f64) / delay_spread)
                }
            })
            .collect();
        let total: f64 = powers.iter().sum();
        powers.iter_mut().for_each(|p| *p /= total);
        PowerDelayProfile { powers }
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn n_taps(&self) -> usize {
        self.powers.len()
    }

    /// Frequency correlation `E[H(f + lag) H*(f)]` on an `n_sc` grid.
    pub fn correlation(&self, lag: i64, n_sc: usize) -> C64 {
        let n = n_sc as i64;
        self.powers
            .iter()
            .enumerate()
            .map(|(l, &p)| {
                let k = (lag * l as i64).rem_euclid(n) as usize;
                math::twiddle(k, n_sc) * p
            })
            .sum()
    }
}

/// Complex grid over antennas × layers × subcarriers × symbols.
///
/// The fourth dimension is either the full slot (true channel) or the DMRS
/// symbols (estimates). Storage is row-major with subcarriers innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor {
    n_ant: usize,
    n_layers: usize,
    n_sc: usize,
    n_t: usize,
    values: Vec<C64>,
}

impl ChannelTensor {
    pub fn zeros(n_ant: usize, n_layers: usize, n_sc: usize, n_t: usize) -> Self {
        ChannelTensor {
            n_ant,
            n_layers,
            n_sc,
            n_t,
            values: vec![C64::new(0.0, 0.0); n_ant * n_layers * n_sc * n_t],
        }
    }

    /// `(n_ant, n_layers, n_sc, n_t)`.
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.n_ant, self.n_layers, self.n_sc, self.n_t)
    }

    #[inline]
    fn offset(&self, ant: usize, layer: usize, t: usize) -> usize {
        ((ant * self.n_layers + layer) * self.n_t + t) * self.n_sc
    }

    #[inline]
    pub fn get(&self, ant: usize, layer: usize, sc: usize, t: usize) -> C64 {
        self.values[self.offset(ant, layer, t) + sc]
    }

    #[inline]
    pub fn set(&mut self, ant: usize, layer: usize, sc: usize, t: usize, v: C64) {
        let o = self.offset(ant, layer, t);
        self.values[o + sc] = v;
    }

    /// Frequency response of one (antenna, layer, symbol).
    #[inline]
    pub fn row(&self, ant: usize, layer: usize, t: usize) -> &[C64] {
        let o = self.offset(ant, layer, t);
        &self.values[o..o + self.n_sc]
    }

    #[inline]
    pub fn row_mut(&mut self, ant: usize, layer: usize, t: usize) -> &mut [C64] {
        let o = self.offset(ant, layer, t);
        &mut self.values[o..o + self.n_sc]
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Mean of `|h|²` over every element.
    pub fn mean_power(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.values.len() as f64
    }

    /// Mean of `|h|` over every element.
    pub fn mean_magnitude(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().map(|v| v.norm()).sum::<f64>() / self.values.len() as f64
    }

    /// Keep only the given symbol indices along the fourth dimension.
    pub fn select_symbols(&self, symbols: &[usize]) -> ChannelTensor {
        let mut out = ChannelTensor::zeros(self.n_ant, self.n_layers, self.n_sc, symbols.len());
        for a in 0..self.n_ant {
            for l in 0..self.n_layers {
                for (i, &t) in symbols.iter().enumerate() {
                    out.row_mut(a, l, i).copy_from_slice(self.row(a, l, t));
                }
            }
        }
        out
    }
}

/// Received grid for one slot plus the simulator's ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    n_ant: usize,
    n_sc: usize,
    n_sym: usize,
    /// `[ant][sym][sc]`.
    values: Vec<C64>,
    /// Transmitted symbols `[sym][sc]` (pilots on the comb, data elsewhere).
    tx: Vec<C64>,
    /// Known DMRS sequence `[dmrs_index][comb_index]`, unit magnitude.
    known_dmrs: Vec<C64>,
}

impl ResourceGrid {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_ant, self.n_sc, self.n_sym)
    }

    #[inline]
    pub fn rx(&self, ant: usize, sc: usize, sym: usize) -> C64 {
        self.values[(ant * self.n_sym + sym) * self.n_sc + sc]
    }

    #[inline]
    pub fn rx_row(&self, ant: usize, sym: usize) -> &[C64] {
        let o = (ant * self.n_sym + sym) * self.n_sc;
        &self.values[o..o + self.n_sc]
    }

    #[inline]
    pub fn tx(&self, sc: usize, sym: usize) -> C64 {
        self.tx[sym * self.n_sc + sc]
    }

    #[inline]
    pub fn pilot(&self, dmrs_index: usize, comb_index: usize) -> C64 {
        self.known_dmrs[dmrs_index * (self.n_sc / 2) + comb_index]
    }

    pub fn known_dmrs(&self) -> &[C64] {
        &self.known_dmrs
    }
}

/// AR(1) moving-average length for coefficient `a`.
fn ar_memory(a: f64) -> usize {
    if a <= 0.0 {
        1
    } else {
        let k = math::ceil(math::ln(AR_TRUNCATION) / (2.0 * math::ln(a))) as usize;
        k.clamp(1, 1 << 20)
    }
}

/// Delay-domain taps `[ant][layer][tap]` for one slot.
fn channel_taps(
    geometry: &SlotGeometry,
    scenario: &ScenarioConfig,
    pdp: &PowerDelayProfile,
    slot_index: u64,
) -> Vec<C64> {
    let a = scenario.temporal_correlation;
    let memory = ar_memory(a);
    let n_taps = pdp.n_taps();
    let n_paths = geometry.n_ant * geometry.n_layers;
    // Exact unit variance for the truncated sum Σ_{k<K} a^k z_{n-k}.
    let norm = if a <= 0.0 {
        1.0
    } else {
        math::sqrt((1.0 - a * a) / (1.0 - math::powf(a, 2.0 * memory as f64)))
    };
    let amp: Vec<f64> = pdp.powers().iter().map(|&p| math::sqrt(p)).collect();
    let mut taps = vec![C64::new(0.0, 0.0); n_paths * n_taps];
    let mut weight = norm;
    for k in 0..memory {
        let innovation_slot = (slot_index as i64).wrapping_sub(k as i64) as u64;
        let mut stream = Stream::new(scenario.seed, Purpose::ChannelTaps, innovation_slot);
        for path in 0..n_paths {
            for (l, &s) in amp.iter().enumerate() {
                taps[path * n_taps + l] += stream.complex_gaussian(1.0) * (weight * s);
            }
        }
        weight *= a;
    }
    taps
}

/// True channel for `slot_index`, constant across the symbols of the slot.
pub fn generate_channel(
    geometry: &SlotGeometry,
    scenario: &ScenarioConfig,
    slot_index: u64,
) -> Result<ChannelTensor> {
    geometry.validate()?;
    scenario.validate(geometry)?;
    let n_sc = geometry.n_sc();
    let pdp = PowerDelayProfile::exponential(scenario.delay_spread, geometry.n_comb());
    let taps = channel_taps(geometry, scenario, &pdp, slot_index);
    let n_taps = pdp.n_taps();
    let tw = math::twiddle_table(n_sc);
    let mut h = ChannelTensor::zeros(geometry.n_ant, geometry.n_layers, n_sc, geometry.n_sym);
    let mut response = vec![C64::new(0.0, 0.0); n_sc];
    for a in 0..geometry.n_ant {
        for l in 0..geometry.n_layers {
            let g = &taps[(a * geometry.n_layers + l) * n_taps..][..n_taps];
            for (f, out) in response.iter_mut().enumerate() {
                *out = g
                    .iter()
                    .enumerate()
                    .map(|(tap, &gl)| gl * tw[(f * tap) % n_sc])
                    .sum();
            }
            for t in 0..geometry.n_sym {
                h.row_mut(a, l, t).copy_from_slice(&response);
            }
        }
    }
    Ok(h)
}

/// Fixed unit-magnitude QPSK pilot sequence `[dmrs_index][comb_index]`.
pub fn pilot_sequence(geometry: &SlotGeometry, seed: u64) -> Vec<C64> {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let mut stream = Stream::new(seed, Purpose::Pilots, 0);
    (0..geometry.n_dmrs() * geometry.n_comb())
        .map(|_| {
            let bits = stream.next_u64();
            let re = if bits & 1 == 0 { s } else { -s };
            let im = if bits & 2 == 0 { s } else { -s };
            C64::new(re, im)
        })
        .collect()
}

#[inline]
fn qam16(bits: u64) -> C64 {
    const LEVELS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];
    let scale = 1.0 / math::sqrt(10.0);
    C64::new(
        LEVELS[(bits & 3) as usize] * scale,
        LEVELS[((bits >> 2) & 3) as usize] * scale,
    )
}

/// `Y = H·X + I + W` for one slot.
pub fn synthesize_uplink_slot(
    geometry: &SlotGeometry,
    channel: &ChannelTensor,
    scenario: &ScenarioConfig,
    slot_index: u64,
) -> Result<ResourceGrid> {
    geometry.validate()?;
    scenario.validate(geometry)?;
    let n_sc = geometry.n_sc();
    let n_sym = geometry.n_sym;
    if channel.dims() != (geometry.n_ant, geometry.n_layers, n_sc, n_sym) {
        return Err(Error::contract(
            "channel dimensions do not match the slot geometry with full symbols",
        ));
    }
    if geometry.n_layers != 1 {
        return Err(Error::config("only single-layer transmission is simulated"));
    }
    let n_comb = geometry.n_comb();
    let known_dmrs = pilot_sequence(geometry, scenario.seed);

    let mut data = Stream::new(scenario.seed, Purpose::DataSymbols, slot_index);
    let mut tx = vec![C64::new(0.0, 0.0); n_sym * n_sc];
    for t in 0..n_sym {
        let dmrs = geometry.dmrs_index(t);
        for f in 0..n_sc {
            tx[t * n_sc + f] = match dmrs {
                Some(d) if f % 2 == 0 => known_dmrs[d * n_comb + f / 2],
                _ => qam16(data.next_u64()),
            };
        }
    }

    let noise_var = scenario.noise_var();
    let mut noise = Stream::new(scenario.seed, Purpose::Noise, slot_index);
    let interferer_power = if scenario.has_interference() {
        let gain = Stream::new(scenario.seed, Purpose::InterfererGain, slot_index).exponential();
        scenario.interference_power() * gain
    } else {
        0.0
    };
    let mut interference = Stream::new(scenario.seed, Purpose::Interference, slot_index);

    let mut values = vec![C64::new(0.0, 0.0); geometry.n_ant * n_sym * n_sc];
    for a in 0..geometry.n_ant {
        for t in 0..n_sym {
            let h = channel.row(a, 0, t);
            let out = &mut values[(a * n_sym + t) * n_sc..][..n_sc];
            for f in 0..n_sc {
                let mut y = h[f] * tx[t * n_sc + f];
                if noise_var > 0.0 {
                    y += noise.complex_gaussian(noise_var);
                }
                if interferer_power > 0.0 && scenario.is_interfered_sc(f) {
                    y += interference.complex_gaussian(interferer_power);
                }
                out[f] = y;
            }
        }
    }

    Ok(ResourceGrid {
        n_ant: geometry.n_ant,
        n_sc,
        n_sym,
        values,
        tx,
        known_dmrs,
    })
}
