//! Blind Godard (p = 2) adaptation of per-subcarrier combiner weights.
//!
//! The combiner output for weights `w` and antenna snapshot `y` is the
//! real-projected `z = Re(w · y)`. The cost over a block is
//!
//! ```text
//! J(w) = mean_n (z_n² - R)²,       R = E[a⁴] / E[a²]
//! ```
//!
//! Treating `w = u + jv`, the gradient packed as `∂J/∂u + j·∂J/∂v` is
//! `4 · mean_n (z_n² - R)·z_n·conj(y_n)`. Each update steps against it,
//! normalized by the block's mean input power (NLMS-style):
//!
//! ```text
//! w ← w - μ / mean_n ||y_n||² · mean_n (z_n² - R)·z_n·conj(y_n)
//! ```
//!
//! One tracking iteration sweeps the whole steady-state packet once in
//! blocks of `block_size` snapshots. SINR is scored on a second packet
//! through the same channels, so the trace reflects how the weights
//! generalize rather than how closely they fit the training noise.

use std::ops::Range;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combining::{mf_combiner, mmse_combiner, ChannelEstimate, CombinerWeights};
use crate::error::{Error, Result};
use crate::filterbank::PamOrder;
use crate::link::Uplink;
use crate::linalg;
use crate::metrics::{self, slot_sinr_db};

/// Weight-norm growth (relative to the starting weights) treated as divergence.
pub const DIVERGENCE_GROWTH: f64 = 1e6;

pub const DEFAULT_STEP_SIZE: f64 = 0.2;
pub const DEFAULT_BLOCK_SIZE: usize = 32;
pub const DEFAULT_ITERATIONS: usize = 100;

/// Where the blind iterations start.
#[derive(Debug, Clone, PartialEq)]
pub enum BlindInit {
    /// Matched filter built from the (contaminated) pilot estimate.
    MfContaminated,
    /// Caller-provided weights.
    Custom(CombinerWeights),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlindConfig {
    pub step_size: f64,
    pub dispersion: f64,
    pub iterations: usize,
    pub block_size: usize,
    pub init: BlindInit,
}

impl BlindConfig {
    pub fn for_alphabet(pam: PamOrder) -> Self {
        BlindConfig {
            step_size: DEFAULT_STEP_SIZE,
            dispersion: pam.dispersion(),
            iterations: DEFAULT_ITERATIONS,
            block_size: DEFAULT_BLOCK_SIZE,
            init: BlindInit::MfContaminated,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return Err(Error::config(format!(
                "blind.step_size must be a nonnegative finite number, got {}",
                self.step_size
            )));
        }
        if !(self.dispersion > 0.0 && self.dispersion.is_finite()) {
            return Err(Error::config("blind.dispersion must be positive"));
        }
        if self.iterations == 0 {
            return Err(Error::config("blind.iterations must be positive"));
        }
        if self.block_size == 0 {
            return Err(Error::config("blind.block_size must be positive"));
        }
        Ok(())
    }
}

/// `mean (z² - R)²`.
pub fn godard_cost(outputs: &[f64], dispersion: f64) -> Result<f64> {
    if outputs.is_empty() {
        return Err(Error::Argument("godard_cost needs at least one output".into()));
    }
    Ok(outputs
        .iter()
        .map(|z| (z * z - dispersion).powi(2))
        .sum::<f64>()
        / outputs.len() as f64)
}

/// Real-projected outputs of `w` over a `[n][m]` snapshot block.
pub fn combiner_outputs(w: &[Complex64], block: &[Complex64]) -> Vec<f64> {
    block
        .chunks_exact(w.len())
        .map(|y| linalg::dot(w, y).re)
        .collect()
}

fn check_block(w: &[Complex64], block: &[Complex64]) -> Result<()> {
    if w.is_empty() || block.is_empty() || !block.len().is_multiple_of(w.len()) {
        return Err(Error::shape(format!(
            "snapshot block of {} values does not hold whole {}-antenna snapshots",
            block.len(),
            w.len()
        )));
    }
    Ok(())
}

/// Exact gradient of [`godard_cost`] of the block outputs, as `∂J/∂Re w + j·∂J/∂Im w`.
pub fn godard_gradient(w: &[Complex64], block: &[Complex64], dispersion: f64) -> Result<Vec<Complex64>> {
    check_block(w, block)?;
    let mut grad = descent_direction(w, block, dispersion).0;
    grad.iter_mut().for_each(|g| *g *= 4.0);
    Ok(grad)
}

// mean (z²-R)·z·conj(y), and mean ||y||²
fn descent_direction(w: &[Complex64], block: &[Complex64], dispersion: f64) -> (Vec<Complex64>, f64) {
    let m = w.len();
    let count = (block.len() / m) as f64;
    let mut dir = vec![Complex64::new(0.0, 0.0); m];
    let mut power = 0.0;
    for y in block.chunks_exact(m) {
        let z = linalg::dot(w, y).re;
        let e = (z * z - dispersion) * z;
        for (d, yi) in dir.iter_mut().zip(y) {
            *d += yi.conj() * e;
        }
        power += linalg::norm_sqr(y);
    }
    dir.iter_mut().for_each(|d| *d /= count);
    (dir, power / count)
}

/// One normalized block-gradient step.
///
/// `reference_norm` is the norm of the weights the adaptation started from;
/// growth beyond [`DIVERGENCE_GROWTH`] times it is reported as divergence.
pub fn blind_update(
    w: &[Complex64],
    block: &[Complex64],
    cfg: &BlindConfig,
    reference_norm: f64,
) -> Result<Vec<Complex64>> {
    check_block(w, block)?;
    let mut out = w.to_vec();
    blind_update_in_place(&mut out, block, cfg, reference_norm, 0)?;
    Ok(out)
}

fn blind_update_in_place(
    w: &mut [Complex64],
    block: &[Complex64],
    cfg: &BlindConfig,
    reference_norm: f64,
    subcarrier: usize,
) -> Result<()> {
    if cfg.step_size == 0.0 {
        return Ok(());
    }
    let (dir, power) = descent_direction(w, block, cfg.dispersion);
    if power == 0.0 {
        return Ok(());
    }
    let step = cfg.step_size / power;
    for (wi, d) in w.iter_mut().zip(&dir) {
        *wi -= d * step;
    }
    let norm = linalg::norm_sqr(w).sqrt();
    let growth = norm / reference_norm;
    if !growth.is_finite() || growth > DIVERGENCE_GROWTH {
        return Err(Error::Divergence { subcarrier, growth });
    }
    Ok(())
}

/// Mean-over-slots SINR of three reference receivers on the same realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    /// Matched filter from the contaminated, noisy estimate.
    pub mf_noisy: f64,
    /// Matched filter from the true home-cell channels.
    pub mf_clean: f64,
    /// MMSE from the true channels of every user in the network.
    pub mmse_clean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingTrace {
    /// Entry `i` is the SINR after `i` sweeps; entry 0 is the starting point.
    pub sinr_db_per_iteration: Vec<f64>,
    pub baselines: Baselines,
}

fn mean_slot_sinr(
    uplink: &Uplink,
    weights: &CombinerWeights,
    steady: &Range<usize>,
    num_home_users: usize,
) -> Result<f64> {
    let per_slot = (0..num_home_users)
        .flat_map(|k| (0..weights.num_subcarriers()).map(move |l| (k, l)))
        .map(|(k, l)| {
            let snaps = uplink.snapshots(l, steady.clone());
            let z = combiner_outputs(weights.get(k, l), &snaps);
            slot_sinr_db(&z, &uplink.symbols[k].row(l)[steady.clone()])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(metrics::mean_db(per_slot))
}

/// Runs blind tracking for the home-cell users of one realization.
///
/// Users `0..num_home_users` of `uplink` are the home cell; the remaining
/// users are interferers. `estimate` covers the home users only. Weights
/// adapt on `uplink`; the trace and the baselines are measured on `holdout`,
/// which must share its channels.
pub fn track(
    uplink: &Uplink,
    holdout: &Uplink,
    estimate: &ChannelEstimate,
    num_home_users: usize,
    steady: Range<usize>,
    cfg: &BlindConfig,
) -> Result<TrackingTrace> {
    cfg.validate()?;
    let l_sub = estimate.gains.num_subcarriers();
    if estimate.gains.num_users() != num_home_users || num_home_users > uplink.symbols.len() {
        return Err(Error::shape("estimate does not cover the home-cell users"));
    }
    if holdout.received.len() != uplink.received.len()
        || holdout.symbols.len() != uplink.symbols.len()
        || holdout.response != uplink.response
    {
        return Err(Error::shape("holdout packet does not share the training channels"));
    }
    if steady.is_empty() {
        return Err(Error::Argument("empty steady-state region".into()));
    }
    let initial = match &cfg.init {
        BlindInit::MfContaminated => mf_combiner(estimate)?,
        BlindInit::Custom(w) => {
            if w.num_users() != num_home_users
                || w.num_subcarriers() != l_sub
                || w.num_antennas() != uplink.received.len()
            {
                return Err(Error::shape("custom initial weights have the wrong shape"));
            }
            w.clone()
        }
    };

    let home: Vec<usize> = (0..num_home_users).collect();
    let clean_home = ChannelEstimate::perfect(uplink.response.select_users(&home));
    let clean_all = ChannelEstimate::perfect(uplink.response.clone());
    let mmse_all = mmse_combiner(&clean_all, uplink.noise_var.max(f64::MIN_POSITIVE))?;
    let mut mmse_home = CombinerWeights::zeros(num_home_users, l_sub, uplink.received.len());
    for k in 0..num_home_users {
        for l in 0..l_sub {
            mmse_home.set(k, l, mmse_all.get(k, l));
        }
    }
    let baselines = Baselines {
        mf_noisy: mean_slot_sinr(holdout, &initial, &steady, num_home_users)?,
        mf_clean: mean_slot_sinr(holdout, &mf_combiner(&clean_home)?, &steady, num_home_users)?,
        mmse_clean: mean_slot_sinr(holdout, &mmse_home, &steady, num_home_users)?,
    };

    let slots: Vec<(usize, usize)> = (0..num_home_users)
        .flat_map(|k| (0..l_sub).map(move |l| (k, l)))
        .collect();
    let per_slot: Vec<Vec<f64>> = slots
        .par_iter()
        .map(|&(k, l)| {
            let snaps = uplink.snapshots(l, steady.clone());
            let scored = holdout.snapshots(l, steady.clone());
            let reference = &holdout.symbols[k].row(l)[steady.clone()];
            let mut w = initial.get(k, l).to_vec();
            let m = w.len();
            let reference_norm = linalg::norm_sqr(&w).sqrt().max(f64::MIN_POSITIVE);
            let mut trace = Vec::with_capacity(cfg.iterations);
            trace.push(slot_sinr_db(&combiner_outputs(&w, &scored), reference)?);
            for _ in 1..cfg.iterations {
                for block in snaps.chunks(cfg.block_size * m) {
                    blind_update_in_place(&mut w, block, cfg, reference_norm, l)?;
                }
                trace.push(slot_sinr_db(&combiner_outputs(&w, &scored), reference)?);
            }
            Ok(trace)
        })
        .collect::<Result<Vec<_>>>()?;

    let sinr_db_per_iteration = (0..cfg.iterations)
        .map(|i| metrics::mean_db(per_slot.iter().map(|t| t[i])))
        .collect();
    Ok(TrackingTrace {
        sinr_db_per_iteration,
        baselines,
    })
}
