//! TDD pilot observation and least-squares channel estimation.
//!
//! Pilots are modeled at the analysis-bank output: user `k` sends one full
//! multicarrier symbol of known PAM-2 values `p_k[l]` in time slot `k`, with
//! guard columns around it so no intrinsic interference reaches it. The
//! per-subcarrier observation on antenna `m` in slot `s` is
//!
//! ```text
//! Y_s[m,l] = Σ_{users k in slot s} Σ_{cells c sharing the pilot} H[m, c·K + k, l] · p_k[l] + n
//! ```
//!
//! with `n ~ CN(0, σ²)`. Interfering-cell channels already carry their
//! large-scale gain, so with shared pilots the LS estimate of user `k` is
//! `H_k + Σ_j sqrt(β_j) · h_k^(j) + n/p`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{noise_variance, FrequencyResponse};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

/// Multicell pilot-sharing setup seen from the home cell (cell 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationConfig {
    pub num_cells: usize,
    /// Large-scale gain of each interfering cell relative to the home cell.
    pub cross_gains: Vec<f64>,
    pub shared_pilots: bool,
}

impl ContaminationConfig {
    pub fn new(num_cells: usize, cross_gains: Vec<f64>, shared_pilots: bool) -> Result<Self> {
        let cfg = ContaminationConfig {
            num_cells,
            cross_gains,
            shared_pilots,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Single cell, nothing shared.
    pub fn none() -> Self {
        ContaminationConfig {
            num_cells: 1,
            cross_gains: Vec::new(),
            shared_pilots: false,
        }
    }

    /// `num_cells` cells all at cross gain `beta`, pilots shared.
    pub fn uniform(num_cells: usize, beta: f64) -> Result<Self> {
        Self::new(num_cells, vec![beta; num_cells.saturating_sub(1)], true)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_cells == 0 {
            return Err(Error::config("contamination.num_cells must be positive"));
        }
        if self.cross_gains.len() + 1 != self.num_cells {
            return Err(Error::config(format!(
                "contamination.cross_gains needs num_cells - 1 = {} entries, got {}",
                self.num_cells - 1,
                self.cross_gains.len()
            )));
        }
        if let Some(bad) = self
            .cross_gains
            .iter()
            .find(|b| !(0.0..=1.0).contains(*b))
        {
            return Err(Error::config(format!(
                "contamination.cross_gains must lie in [0, 1], got {bad}"
            )));
        }
        Ok(())
    }

    /// Large-scale gain of every user in the network, cell-major (home cell first).
    pub fn cell_gains(&self, users_per_cell: usize) -> Vec<f64> {
        std::iter::once(1.0)
            .chain(self.cross_gains.iter().copied())
            .flat_map(|g| std::iter::repeat_n(g, users_per_cell))
            .collect()
    }

    /// Whether interfering pilots land on the home cell's estimates.
    pub fn is_contaminating(&self) -> bool {
        self.shared_pilots && self.cross_gains.iter().any(|b| *b > 0.0)
    }
}

/// Known pilot symbols and their time slots, one per home-cell user.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotPlan {
    pilots: Vec<Vec<f64>>,
    slots: Vec<usize>,
}

impl PilotPlan {
    pub fn new(pilots: Vec<Vec<f64>>, slots: Vec<usize>) -> Result<Self> {
        if pilots.len() != slots.len() {
            return Err(Error::shape(format!(
                "{} pilot sequences for {} slots",
                pilots.len(),
                slots.len()
            )));
        }
        let len = pilots.first().map_or(0, Vec::len);
        if pilots.iter().any(|p| p.len() != len) {
            return Err(Error::shape("pilot sequences differ in length"));
        }
        if pilots.iter().flatten().any(|p| *p == 0.0 || !p.is_finite()) {
            return Err(Error::config("pilot symbols must be nonzero and finite"));
        }
        for (i, s) in slots.iter().enumerate() {
            if let Some(j) = slots[..i].iter().position(|t| t == s) {
                return Err(Error::config(format!(
                    "pilot slot collision: users {j} and {i} both use slot {s}"
                )));
            }
        }
        Ok(PilotPlan { pilots, slots })
    }

    /// Random PAM-2 pilots, user `k` in slot `k`.
    pub fn orthogonal<R: Rng + ?Sized>(num_users: usize, num_subcarriers: usize, rng: &mut R) -> Self {
        let pilots = (0..num_users)
            .map(|_| {
                (0..num_subcarriers)
                    .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        PilotPlan {
            pilots,
            slots: (0..num_users).collect(),
        }
    }

    pub fn num_users(&self) -> usize {
        self.pilots.len()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.pilots.first().map_or(0, Vec::len)
    }

    pub fn pilot(&self, user: usize) -> &[f64] {
        &self.pilots[user]
    }

    pub fn slot(&self, user: usize) -> usize {
        self.slots[user]
    }

    pub fn num_slots(&self) -> usize {
        self.slots.iter().max().map_or(0, |s| s + 1)
    }
}

/// Received pilot observations, `[slot][antenna][subcarrier]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotObservation {
    pub num_antennas: usize,
    pub num_subcarriers: usize,
    pub slots: Vec<Vec<Complex64>>,
    pub noise_var: f64,
}

impl PilotObservation {
    pub fn get(&self, slot: usize, antenna: usize, subcarrier: usize) -> Complex64 {
        self.slots[slot][antenna * self.num_subcarriers + subcarrier]
    }
}

/// Pilot-induced contamination of one home user's estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationTerm {
    pub user: usize,
    pub cell: usize,
    pub cross_gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub gains: FrequencyResponse,
    /// Per-entry LS error variance.
    pub noise_var_estimate: f64,
    pub contaminated: bool,
    pub contamination_terms: Vec<ContaminationTerm>,
}

impl ChannelEstimate {
    /// Perfect CSI.
    pub fn perfect(gains: FrequencyResponse) -> Self {
        ChannelEstimate {
            gains,
            noise_var_estimate: 0.0,
            contaminated: false,
            contamination_terms: Vec::new(),
        }
    }
}

/// Forms the per-slot pilot observations at the home base station.
///
/// `network` holds every user's response to the home array, cell-major with
/// `plan.num_users()` users per cell.
pub fn observe_pilots(
    plan: &PilotPlan,
    network: &FrequencyResponse,
    contamination: &ContaminationConfig,
    snr_in_db: f64,
    seed: u64,
    trial: u64,
) -> Result<PilotObservation> {
    contamination.validate()?;
    let k_home = plan.num_users();
    let l_sub = network.num_subcarriers();
    let m_ant = network.num_antennas();
    if plan.num_subcarriers() != l_sub {
        return Err(Error::shape(format!(
            "pilots span {} subcarriers, channel has {l_sub}",
            plan.num_subcarriers()
        )));
    }
    if network.num_users() != k_home * contamination.num_cells {
        return Err(Error::shape(format!(
            "network response has {} users, expected {} cells x {k_home}",
            network.num_users(),
            contamination.num_cells
        )));
    }
    if snr_in_db.is_nan() {
        return Err(Error::config("snr_in_db is NaN"));
    }
    let cells: Vec<usize> = if contamination.shared_pilots {
        (0..contamination.num_cells).collect()
    } else {
        vec![0]
    };
    let noise_var = noise_variance(snr_in_db);
    let mut rng = rng::stream(seed, trial, Purpose::PilotNoise);
    let mut slots = vec![vec![Complex64::new(0.0, 0.0); m_ant * l_sub]; plan.num_slots()];
    for k in 0..k_home {
        let obs = &mut slots[plan.slot(k)];
        let pilot = plan.pilot(k);
        for &c in &cells {
            let u = c * k_home + k;
            for m in 0..m_ant {
                for (l, h) in network.link(m, u).iter().enumerate() {
                    obs[m * l_sub + l] += h * pilot[l];
                }
            }
        }
    }
    if noise_var > 0.0 {
        for v in slots.iter_mut().flatten() {
            *v += rng::complex_gaussian(&mut rng, noise_var);
        }
    }
    Ok(PilotObservation {
        num_antennas: m_ant,
        num_subcarriers: l_sub,
        slots,
        noise_var,
    })
}

/// Per-subcarrier least squares `ĥ[m,k,l] = Y_{slot(k)}[m,l] / p_k[l]`.
pub fn least_squares(
    plan: &PilotPlan,
    obs: &PilotObservation,
    contamination: &ContaminationConfig,
) -> Result<ChannelEstimate> {
    if obs.num_subcarriers != plan.num_subcarriers() {
        return Err(Error::shape("pilot observation and plan disagree on L"));
    }
    if obs.slots.len() < plan.num_slots() {
        return Err(Error::shape("missing pilot slots in observation"));
    }
    let k_home = plan.num_users();
    let mut gains = FrequencyResponse::zeros(obs.num_antennas, k_home, obs.num_subcarriers);
    let mut pilot_power = f64::INFINITY;
    for k in 0..k_home {
        let pilot = plan.pilot(k);
        for m in 0..obs.num_antennas {
            for (l, p) in pilot.iter().enumerate() {
                gains.set(m, k, l, obs.get(plan.slot(k), m, l) / *p);
            }
        }
        pilot_power = pilot.iter().fold(pilot_power, |a, p| a.min(p * p));
    }
    let contamination_terms = if contamination.shared_pilots {
        (0..k_home)
            .flat_map(|user| {
                contamination
                    .cross_gains
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| **b > 0.0)
                    .map(move |(j, b)| ContaminationTerm {
                        user,
                        cell: j + 1,
                        cross_gain: *b,
                    })
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(ChannelEstimate {
        gains,
        noise_var_estimate: obs.noise_var / pilot_power,
        contaminated: contamination.is_contaminating(),
        contamination_terms,
    })
}

/// Observes pilots and returns the LS estimate for the home-cell users.
pub fn estimate_channels(
    plan: &PilotPlan,
    network: &FrequencyResponse,
    contamination: &ContaminationConfig,
    snr_in_db: f64,
    seed: u64,
) -> Result<ChannelEstimate> {
    estimate_channels_for_trial(plan, network, contamination, snr_in_db, seed, 0)
}

pub(crate) fn estimate_channels_for_trial(
    plan: &PilotPlan,
    network: &FrequencyResponse,
    contamination: &ContaminationConfig,
    snr_in_db: f64,
    seed: u64,
    trial: u64,
) -> Result<ChannelEstimate> {
    let obs = observe_pilots(plan, network, contamination, snr_in_db, seed, trial)?;
    least_squares(plan, &obs, contamination)
}
