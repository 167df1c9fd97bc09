//! Deterministic virtual-time simulator core for real-time switching between
//! channel-estimation experts in a slot-granular 5G NR uplink pipeline.
//!
//! The crate is `no_std` (with `alloc`) and contains only pure computation:
//!
//! * [`scene`] generates the synthetic radio environment (fading channel,
//!   DMRS pilots, AWGN and PRB-localized interference).
//! * [`expert`] holds the channel-estimation experts (LS front end, Wiener
//!   interpolator, delay-domain denoiser) and their configured cost model.
//! * [`pipeline`] runs the per-slot PUSCH chain with the switch kernel and
//!   memory aliasing, equalization, link adaptation and KPM emission.
//! * [`perturb`] implements calibrated noise injection, the perturbation sweep
//!   and monotonicity filtering.
//! * [`selection`] computes Pearson correlation matrices, average-linkage
//!   clustering and representative selection.
//! * [`policy`] is the depth-limited Gini decision tree used as the gating
//!   policy.
//! * [`control`] is the external control plane: indications, latency-modeled
//!   control messages, fail-safe monitoring and the single-context scheduler.
#![no_std]
// `!(x > 0.0)` also rejects NaN, which is the point in the validators.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod control;
pub mod error;
pub mod expert;
mod linalg;
pub mod math;
pub mod perturb;
pub mod pipeline;
pub mod policy;
pub mod rng;
pub mod scene;
pub mod selection;

pub use error::{Error, Result};
pub use math::C64;
