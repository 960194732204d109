//! Monte Carlo experiments: per-subcarrier SINR of MF/MMSE combining
//! (self-equalization) and blind tracking under pilot contamination.
//!
//! Trials run in parallel; every trial draws from its own seed streams and
//! results are reduced in trial order, so reports do not depend on the
//! thread count.

mod sweep;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blind::{self, Baselines, BlindConfig};
use crate::channel::PowerDelayProfile;
use crate::combining::{
    estimate::estimate_channels_for_trial, mf_combiner, mmse_combiner, combine, ChannelEstimate,
    ContaminationConfig, PilotPlan,
};
use crate::error::{Error, Result};
use crate::filterbank::{FbmcConfig, Modem};
use crate::link::{holdout_packet, simulate_uplink};
use crate::metrics;
use crate::rng::{self, Purpose};

pub use crate::metrics::{measure_sinr, slot_sinr_db, SINR_CAP_DB};
pub use sweep::{run_sweep, SweepAxis, SweepPoint, SweepResult};

/// How the power delay profile is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PdpSpec {
    /// `num_taps` taps at consecutive delays, powers `exp(-d/decay)`.
    /// Without an explicit decay, `max(L/16, 1)` samples is used.
    Exponential {
        num_taps: usize,
        decay_samples: Option<f64>,
    },
    Flat,
    Custom { delays: Vec<usize>, powers: Vec<f64> },
}

impl Default for PdpSpec {
    fn default() -> Self {
        PdpSpec::Exponential {
            num_taps: 8,
            decay_samples: None,
        }
    }
}

impl PdpSpec {
    pub fn resolve(&self, num_subcarriers: usize) -> Result<PowerDelayProfile> {
        match self {
            PdpSpec::Exponential {
                num_taps,
                decay_samples,
            } => {
                let decay = decay_samples.unwrap_or((num_subcarriers as f64 / 16.0).max(1.0));
                PowerDelayProfile::exponential(*num_taps, decay)
            }
            PdpSpec::Flat => Ok(PowerDelayProfile::flat()),
            PdpSpec::Custom { delays, powers } => {
                PowerDelayProfile::new(delays.clone(), powers.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub fbmc: FbmcConfig,
    pub pdp: PdpSpec,
    pub num_antennas: usize,
    /// Users per cell.
    pub num_users: usize,
    pub snr_in_db: f64,
    pub contamination: Option<ContaminationConfig>,
    pub blind: Option<BlindConfig>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    SelfEqualization,
    BlindTracking,
}

impl Scenario {
    /// The K=6, L=64, M=128 multiuser operating point with a 20 dB target.
    pub fn self_equalization_default() -> Self {
        Scenario {
            fbmc: FbmcConfig {
                num_subcarriers: 64,
                overlap_factor: 4,
                num_symbols: 64,
                pam_order: Default::default(),
            },
            pdp: PdpSpec::default(),
            num_antennas: 128,
            num_users: 6,
            snr_in_db: -1.07,
            contamination: None,
            blind: None,
            trials: 100,
            seed: 1,
        }
    }

    /// Seven cells, one user each, shared pilots at cross gain 0.3 (L=64, M=64).
    pub fn blind_tracking_default() -> Self {
        let fbmc = FbmcConfig {
            num_subcarriers: 64,
            overlap_factor: 4,
            num_symbols: 128,
            pam_order: Default::default(),
        };
        Scenario {
            fbmc,
            pdp: PdpSpec::default(),
            num_antennas: 64,
            num_users: 1,
            snr_in_db: 0.0,
            contamination: Some(ContaminationConfig::uniform(7, 0.3).expect("valid")),
            blind: Some(BlindConfig::for_alphabet(fbmc.pam_order)),
            trials: 50,
            seed: 1,
        }
    }

    pub fn kind(&self) -> ScenarioKind {
        if self.blind.is_some() {
            ScenarioKind::BlindTracking
        } else {
            ScenarioKind::SelfEqualization
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.fbmc.validate()?;
        crate::filterbank::prototype::frequency_samples(self.fbmc.overlap_factor)?;
        if self.fbmc.steady_state().is_empty() {
            return Err(Error::config(format!(
                "fbmc.num_symbols must exceed 2*overlap_factor ({}) to leave a steady-state region",
                2 * self.fbmc.overlap_factor
            )));
        }
        let pdp = self.pdp.resolve(self.fbmc.num_subcarriers)?;
        if pdp.max_delay() + 1 > self.fbmc.num_subcarriers {
            return Err(Error::config(format!(
                "channel spans {} samples, more than L={}",
                pdp.max_delay() + 1,
                self.fbmc.num_subcarriers
            )));
        }
        if self.num_antennas == 0 {
            return Err(Error::config("array.M must be at least 1"));
        }
        if self.num_users == 0 {
            return Err(Error::config("array.K must be at least 1"));
        }
        if !self.snr_in_db.is_finite() {
            return Err(Error::config("array.snr_in_db must be finite"));
        }
        if self.trials == 0 {
            return Err(Error::config("run.trials must be at least 1"));
        }
        if let Some(c) = &self.contamination {
            c.validate()?;
        }
        if let Some(b) = &self.blind {
            b.validate()?;
            if self.contamination.is_none() {
                return Err(Error::config(
                    "blind tracking needs a [contamination] section",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combiner {
    Mf,
    Mmse,
}

impl Combiner {
    pub fn name(self) -> &'static str {
        match self {
            Combiner::Mf => "mf",
            Combiner::Mmse => "mmse",
        }
    }
}

/// Per-subcarrier SINR of one combiner across trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrCurve {
    pub combiner: Combiner,
    /// `[trial][subcarrier]`, dB; each value averages the users (linear).
    pub per_trial_db: Vec<Vec<f64>>,
    /// Ensemble mean (linear average over trials), dB.
    pub mean_db: Vec<f64>,
    pub median_db: Vec<f64>,
    /// Variance across subcarriers of each trial's curve, dB².
    pub subcarrier_variance: Vec<f64>,
    /// `max - min` across subcarriers of each trial's curve, dB.
    pub subcarrier_spread: Vec<f64>,
}

impl SinrCurve {
    fn from_trials(combiner: Combiner, per_trial_db: Vec<Vec<f64>>) -> Self {
        let l_sub = per_trial_db.first().map_or(0, Vec::len);
        let column = |l: usize| per_trial_db.iter().map(|t| t[l]).collect::<Vec<_>>();
        let mean_db = (0..l_sub).map(|l| metrics::mean_db(column(l))).collect();
        let median_db = (0..l_sub).map(|l| metrics::median(&column(l))).collect();
        let subcarrier_variance = per_trial_db.iter().map(|t| metrics::variance(t)).collect();
        let subcarrier_spread = per_trial_db
            .iter()
            .map(|t| {
                let (lo, hi) = t
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
                hi - lo
            })
            .collect();
        SinrCurve {
            combiner,
            per_trial_db,
            mean_db,
            median_db,
            subcarrier_variance,
            subcarrier_spread,
        }
    }

    pub fn mean_subcarrier_variance(&self) -> f64 {
        self.subcarrier_variance.iter().sum::<f64>() / self.subcarrier_variance.len().max(1) as f64
    }

    pub fn median_spread(&self) -> f64 {
        metrics::median(&self.subcarrier_spread)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinrReport {
    pub scenario: Scenario,
    pub target_sinr_db: f64,
    pub mf: SinrCurve,
    pub mmse: SinrCurve,
}

impl SinrReport {
    pub fn num_subcarriers(&self) -> usize {
        self.scenario.fbmc.num_subcarriers
    }

    pub fn trials(&self) -> usize {
        self.mf.per_trial_db.len()
    }

    /// Fraction of trials where MMSE beats MF on every subcarrier.
    pub fn mmse_dominance_fraction(&self) -> f64 {
        let wins = self
            .mmse
            .per_trial_db
            .iter()
            .zip(&self.mf.per_trial_db)
            .filter(|(a, b)| a.iter().zip(b.iter()).all(|(x, y)| x > y))
            .count();
        wins as f64 / self.trials().max(1) as f64
    }

    /// Fraction of trials where MMSE's curve is flatter (smaller variance) than MF's.
    pub fn mmse_flatter_fraction(&self) -> f64 {
        let wins = self
            .mmse
            .subcarrier_variance
            .iter()
            .zip(&self.mf.subcarrier_variance)
            .filter(|(a, b)| a < b)
            .count();
        wins as f64 / self.trials().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingReport {
    pub scenario: Scenario,
    /// `[trial][iteration]`, dB.
    pub traces: Vec<Vec<f64>>,
    pub per_trial_baselines: Vec<Baselines>,
    /// Median over trials per iteration.
    pub median_trace: Vec<f64>,
    /// Median over trials of each baseline.
    pub baselines: Baselines,
}

impl TrackingReport {
    /// First iteration whose median SINR reaches the clean-MF baseline.
    pub fn mf_clean_crossing(&self) -> Option<usize> {
        self.median_trace
            .iter()
            .position(|v| *v >= self.baselines.mf_clean)
    }

    pub fn final_sinr(&self) -> f64 {
        *self.median_trace.last().expect("nonempty trace")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Sinr(SinrReport),
    Tracking(TrackingReport),
}

impl Report {
    pub fn scenario(&self) -> &Scenario {
        match self {
            Report::Sinr(r) => &r.scenario,
            Report::Tracking(r) => &r.scenario,
        }
    }
}

/// Runs whichever experiment the scenario describes.
pub fn run(s: &Scenario) -> Result<Report> {
    match s.kind() {
        ScenarioKind::SelfEqualization => run_self_equalization(s).map(Report::Sinr),
        ScenarioKind::BlindTracking => run_blind_tracking(s).map(Report::Tracking),
    }
}

fn average_users(per_user: &[Vec<f64>]) -> Vec<f64> {
    let l_sub = per_user.first().map_or(0, Vec::len);
    (0..l_sub)
        .map(|l| metrics::mean_db(per_user.iter().map(|u| u[l])))
        .collect()
}

/// MF and MMSE with perfect CSI, single cell.
pub fn run_self_equalization(s: &Scenario) -> Result<SinrReport> {
    s.validate()?;
    if s.contamination.as_ref().is_some_and(|c| c.num_cells > 1) {
        return Err(Error::config(
            "self-equalization runs a single cell; remove the [contamination] section",
        ));
    }
    let modem = Modem::designed(s.fbmc)?;
    let pdp = s.pdp.resolve(s.fbmc.num_subcarriers)?;
    let gains = vec![1.0; s.num_users];
    let steady = s.fbmc.steady_state();
    let per_trial: Vec<(Vec<f64>, Vec<f64>)> = (0..s.trials as u64)
        .into_par_iter()
        .map(|t| {
            let up = simulate_uplink(&modem, &pdp, s.num_antennas, &gains, s.snr_in_db, s.seed, t)?;
            let est = ChannelEstimate::perfect(up.response.clone());
            let mf = combine(&up.received, &mf_combiner(&est)?)?;
            let mmse = combine(&up.received, &mmse_combiner(&est, up.noise_var)?)?;
            let mf_db = measure_sinr(&mf, &up.symbols, steady.clone())?;
            let mmse_db = measure_sinr(&mmse, &up.symbols, steady.clone())?;
            Ok((average_users(&mf_db), average_users(&mmse_db)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mf, mmse): (Vec<_>, Vec<_>) = per_trial.into_iter().unzip();
    Ok(SinrReport {
        scenario: s.clone(),
        target_sinr_db: crate::combining::target_sinr_db(s.snr_in_db, s.num_antennas)?,
        mf: SinrCurve::from_trials(Combiner::Mf, mf),
        mmse: SinrCurve::from_trials(Combiner::Mmse, mmse),
    })
}

/// Contaminated pilot estimate, then blind tracking, per trial.
pub fn run_blind_tracking(s: &Scenario) -> Result<TrackingReport> {
    s.validate()?;
    let (Some(cont), Some(cfg)) = (&s.contamination, &s.blind) else {
        return Err(Error::config(
            "blind tracking needs both [contamination] and [blind] sections",
        ));
    };
    let modem = Modem::designed(s.fbmc)?;
    let pdp = s.pdp.resolve(s.fbmc.num_subcarriers)?;
    let gains = cont.cell_gains(s.num_users);
    let steady = s.fbmc.steady_state();
    let results: Vec<blind::TrackingTrace> = (0..s.trials as u64)
        .into_par_iter()
        .map(|t| {
            let up = simulate_uplink(&modem, &pdp, s.num_antennas, &gains, s.snr_in_db, s.seed, t)?;
            let plan = PilotPlan::orthogonal(
                s.num_users,
                s.fbmc.num_subcarriers,
                &mut rng::stream(s.seed, t, Purpose::Pilots),
            );
            let est = estimate_channels_for_trial(&plan, &up.response, cont, s.snr_in_db, s.seed, t)?;
            let scored = holdout_packet(&modem, &pdp, &up, s.snr_in_db, s.seed, t)?;
            blind::track(&up, &scored, &est, s.num_users, steady.clone(), cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let traces: Vec<Vec<f64>> = results.iter().map(|r| r.sinr_db_per_iteration.clone()).collect();
    let per_trial_baselines: Vec<Baselines> = results.iter().map(|r| r.baselines).collect();
    let median_trace = (0..cfg.iterations)
        .map(|i| metrics::median(&traces.iter().map(|t| t[i]).collect::<Vec<_>>()))
        .collect();
    let pick = |f: fn(&Baselines) -> f64| {
        metrics::median(&per_trial_baselines.iter().map(f).collect::<Vec<_>>())
    };
    let baselines = Baselines {
        mf_noisy: pick(|b| b.mf_noisy),
        mf_clean: pick(|b| b.mf_clean),
        mmse_clean: pick(|b| b.mmse_clean),
    };
    Ok(TrackingReport {
        scenario: s.clone(),
        traces,
        per_trial_baselines,
        median_trace,
        baselines,
    })
}
