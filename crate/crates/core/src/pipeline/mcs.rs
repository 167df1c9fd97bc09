//! Link adaptation, transport-block sizing and the CRC (BLER) abstraction.

use crate::error::{Error, Result};
use crate::math;
use crate::rng::{Purpose, Stream};
use alloc::format;
use alloc::vec::Vec;

pub const MAX_MCS: u8 = 28;
/// LDPC code-block segment size in bits.
pub const CODE_BLOCK_BITS: u64 = 8448;

/// Default link-adaptation threshold of MCS 0 (dB).
pub const DEFAULT_BASE_THRESHOLD_DB: f64 = -6.0;
/// Default threshold increment per MCS step (dB).
pub const DEFAULT_THRESHOLD_STEP_DB: f64 = 1.7;
/// Default distance between a link-adaptation threshold and its BLER midpoint.
pub const DEFAULT_CRC_BACKOFF_DB: f64 = 5.0;
/// Logistic BLER steepness (dB per e-fold).
pub const DEFAULT_BLER_STEEPNESS_DB: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McsEntry {
    pub mcs: u8,
    pub sinr_threshold_db: f64,
    pub qam_order: u8,
    pub code_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    entries: Vec<McsEntry>,
    /// BLER midpoint sits this far below the link-adaptation threshold.
    pub crc_backoff_db: f64,
    pub bler_steepness_db: f64,
}

impl Default for McsTable {
    fn default() -> Self {
        Self::linear(DEFAULT_BASE_THRESHOLD_DB, DEFAULT_THRESHOLD_STEP_DB)
    }
}

fn default_qam(mcs: u8) -> u8 {
    match mcs {
        0..=9 => 2,
        10..=16 => 4,
        _ => 6,
    }
}

fn default_rate(mcs: u8) -> f64 {
    0.12 + (0.93 - 0.12) * mcs as f64 / MAX_MCS as f64
}

impl McsTable {
    /// Table with thresholds `base + step · mcs` and the default modulation/rate ladder.
    pub fn linear(base_db: f64, step_db: f64) -> Self {
        let entries = (0..=MAX_MCS)
            .map(|mcs| McsEntry {
                mcs,
                sinr_threshold_db: base_db + step_db * mcs as f64,
                qam_order: default_qam(mcs),
                code_rate: default_rate(mcs),
            })
            .collect();
        McsTable {
            entries,
            crc_backoff_db: DEFAULT_CRC_BACKOFF_DB,
            bler_steepness_db: DEFAULT_BLER_STEEPNESS_DB,
        }
    }

    pub fn from_entries(entries: Vec<McsEntry>) -> Result<Self> {
        let table = McsTable {
            entries,
            crc_backoff_db: DEFAULT_CRC_BACKOFF_DB,
            bler_steepness_db: DEFAULT_BLER_STEEPNESS_DB,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.len() != MAX_MCS as usize + 1 {
            return Err(Error::config("MCS table must cover mcs 0..=28"));
        }
        for (i, e) in self.entries.iter().enumerate() {
            if e.mcs as usize != i {
                return Err(Error::config("MCS table entries must be ordered by mcs"));
            }
            if !e.sinr_threshold_db.is_finite() || !(e.code_rate > 0.0 && e.code_rate < 1.0) {
                return Err(Error::config(format!("invalid MCS entry {i}")));
            }
            if e.qam_order == 0 {
                return Err(Error::config(format!("zero QAM order at mcs {i}")));
            }
        }
        for w in self.entries.windows(2) {
            if w[1].sinr_threshold_db < w[0].sinr_threshold_db
                || w[1].qam_order < w[0].qam_order
                || w[1].code_rate < w[0].code_rate
            {
                return Err(Error::config(format!(
                    "MCS table not monotone at mcs {}",
                    w[1].mcs
                )));
            }
        }
        if !(self.bler_steepness_db > 0.0) || !self.crc_backoff_db.is_finite() {
            return Err(Error::config("invalid BLER curve parameters"));
        }
        Ok(())
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn entry(&self, mcs: u8) -> Result<&McsEntry> {
        self.entries
            .get(mcs as usize)
            .ok_or_else(|| Error::contract(format!("mcs {mcs} beyond table")))
    }
}

/// Largest MCS whose threshold does not exceed the SINR; 0 below the table.
pub fn link_adapt(post_eq_sinr_db: f64, table: &McsTable) -> u8 {
    table
        .entries
        .iter()
        .rev()
        .find(|e| e.sinr_threshold_db <= post_eq_sinr_db)
        .map_or(0, |e| e.mcs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportBlock {
    pub tb_bytes: u64,
    pub code_rate: f64,
    pub qam_order: u8,
    pub num_cb: u64,
}

/// Simplified TBS: `floor(n_prb · 12 · n_data_sym · Qm · R / 8)` bytes.
pub fn transport_block(
    mcs: u8,
    n_prb: usize,
    n_data_sym: usize,
    table: &McsTable,
) -> Result<TransportBlock> {
    let e = table.entry(mcs)?;
    let bits = (n_prb * crate::scene::SC_PER_PRB * n_data_sym) as f64
        * e.qam_order as f64
        * e.code_rate;
    let tb_bytes = math::floor(bits / 8.0) as u64;
    Ok(TransportBlock {
        tb_bytes,
        code_rate: e.code_rate,
        qam_order: e.qam_order,
        num_cb: (tb_bytes * 8).div_ceil(CODE_BLOCK_BITS),
    })
}

/// Logistic pass probability centered `crc_backoff_db` below the MCS threshold.
pub fn crc_pass_probability(post_eq_sinr_db: f64, mcs: u8, table: &McsTable) -> Result<f64> {
    let center = table.entry(mcs)?.sinr_threshold_db - table.crc_backoff_db;
    let z = (post_eq_sinr_db - center) / table.bler_steepness_db;
    Ok(1.0 / (1.0 + math::exp(-z)))
}

/// Deterministic Bernoulli CRC draw for one slot.
pub fn crc_outcome(
    post_eq_sinr_db: f64,
    mcs: u8,
    slot_index: u64,
    seed: u64,
    table: &McsTable,
) -> Result<bool> {
    let p = crc_pass_probability(post_eq_sinr_db, mcs, table)?;
    let u = Stream::new(seed, Purpose::Crc, slot_index).uniform();
    Ok(u < p)
}
