//! Time interpolation of DMRS estimates and per-RE MMSE combining.

use crate::error::{Error, Result};
use crate::expert::{DmrsEstimate, Stage};
use crate::math::{self, C64};
use crate::scene::{ResourceGrid, SlotGeometry, SC_PER_PRB};
use alloc::vec;
use alloc::vec::Vec;

/// Reported post-equalization SINR never exceeds this.
pub const SINR_CEILING_DB: f64 = 60.0;
/// Linear per-PRB SINR floor (-30 dB) so hopeless PRBs stay finite in dB.
pub const SINR_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Equalized {
    /// Equalized data symbols `[sym][sc]`; pilot REs are left at zero.
    pub symbols: Vec<C64>,
    /// Per-PRB post-equalization SINR in dB.
    pub prb_sinr_db: Vec<f64>,
    /// Mean of `prb_sinr_db`.
    pub post_eq_sinr_db: f64,
}

/// Interpolation weights `(lower dmrs index, upper dmrs index, weight of upper)`.
fn time_weights(geometry: &SlotGeometry, sym: usize) -> (usize, usize, f64) {
    let d = &geometry.dmrs_symbols;
    let last = d.len() - 1;
    if sym <= d[0] {
        return (0, 0, 0.0);
    }
    if sym >= d[last] {
        return (last, last, 0.0);
    }
    let hi = d.iter().position(|&s| s >= sym).unwrap_or(last);
    let lo = hi - 1;
    let w = (sym - d[lo]) as f64 / (d[hi] - d[lo]) as f64;
    (lo, hi, w)
}

/// Equalize every data RE and measure SINR against the transmitted symbols.
pub fn equalize(
    rx: &ResourceGrid,
    estimate: &DmrsEstimate,
    geometry: &SlotGeometry,
    noise_var: f64,
) -> Result<Equalized> {
    if estimate.stage != Stage::Interpolated {
        return Err(Error::contract("equalizer needs an interpolated estimate"));
    }
    let (n_ant, n_sc, n_sym) = rx.dims();
    if estimate.values.dims() != (n_ant, 1, n_sc, geometry.n_dmrs())
        || n_sym != geometry.n_sym
        || n_sc != geometry.n_sc()
    {
        return Err(Error::contract("estimate and grid dimensions disagree"));
    }
    let h = &estimate.values;
    let mut symbols = vec![C64::new(0.0, 0.0); n_sym * n_sc];
    let mut err = vec![0.0; geometry.n_prb];
    let mut sig = vec![0.0; geometry.n_prb];
    let mut hs = vec![C64::new(0.0, 0.0); n_ant];
    for t in 0..n_sym {
        let (lo, hi, w) = time_weights(geometry, t);
        for f in 0..n_sc {
            if geometry.is_pilot(f, t) {
                continue;
            }
            let mut gain = 0.0;
            let mut acc = C64::new(0.0, 0.0);
            for (a, ha) in hs.iter_mut().enumerate() {
                *ha = h.get(a, 0, f, lo) * (1.0 - w) + h.get(a, 0, f, hi) * w;
                gain += ha.norm_sqr();
                acc += ha.conj() * rx.rx(a, f, t);
            }
            let denom = gain + noise_var;
            let x_hat = if denom > 0.0 { acc / denom } else { C64::new(0.0, 0.0) };
            symbols[t * n_sc + f] = x_hat;
            let x = rx.tx(f, t);
            let prb = f / SC_PER_PRB;
            err[prb] += (x_hat - x).norm_sqr();
            sig[prb] += x.norm_sqr();
        }
    }
    let ceiling = math::db_to_linear(SINR_CEILING_DB);
    let prb_sinr_db: Vec<f64> = err
        .iter()
        .zip(sig.iter())
        .map(|(&e, &s)| {
            let nmse = e / s;
            let lin = if nmse <= 0.0 {
                ceiling
            } else {
                (1.0 / nmse - 1.0).clamp(SINR_FLOOR, ceiling)
            };
            math::linear_to_db(lin)
        })
        .collect();
    let post_eq_sinr_db = math::mean(&prb_sinr_db).unwrap_or(0.0);
    Ok(Equalized {
        symbols,
        prb_sinr_db,
        post_eq_sinr_db,
    })
}
