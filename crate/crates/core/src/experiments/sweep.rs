use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run, Report, Scenario};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "M")]
    Antennas,
    #[serde(rename = "L")]
    Subcarriers,
    #[serde(rename = "snr_in_db")]
    SnrInDb,
    #[serde(rename = "beta")]
    Beta,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Antennas => "M",
            SweepAxis::Subcarriers => "L",
            SweepAxis::SnrInDb => "snr_in_db",
            SweepAxis::Beta => "beta",
        }
    }

    /// Copy of `base` with the axis set to `value`.
    pub fn apply(self, base: &Scenario, value: f64) -> Result<Scenario> {
        let mut s = base.clone();
        let as_count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::config(format!(
                    "sweep value {v} for axis {} must be a positive integer",
                    self.name()
                )))
            }
        };
        match self {
            SweepAxis::Antennas => s.num_antennas = as_count(value)?,
            SweepAxis::Subcarriers => s.fbmc.num_subcarriers = as_count(value)?,
            SweepAxis::SnrInDb => s.snr_in_db = value,
            SweepAxis::Beta => {
                let c = s.contamination.as_mut().ok_or_else(|| {
                    Error::config("sweeping beta needs a [contamination] section")
                })?;
                c.cross_gains.iter_mut().for_each(|b| *b = value);
            }
        }
        s.validate()?;
        Ok(s)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "M" => Ok(SweepAxis::Antennas),
            "L" => Ok(SweepAxis::Subcarriers),
            "snr_in_db" => Ok(SweepAxis::SnrInDb),
            "beta" => Ok(SweepAxis::Beta),
            other => Err(Error::config(format!(
                "unknown sweep axis {other:?}; expected one of M, L, snr_in_db, beta"
            ))),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug)]
pub struct SweepPoint {
    pub value: f64,
    pub seed: u64,
    pub outcome: Result<Report>,
}

#[derive(Debug)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn failures(&self) -> impl Iterator<Item = &SweepPoint> {
        self.points.iter().filter(|p| p.outcome.is_err())
    }
}

/// Runs `base` once per value. Point `i` uses seed `derive_seed(base.seed, i)`.
/// A failing point is recorded and does not stop the others.
pub fn run_sweep(base: &Scenario, axis: SweepAxis, values: &[f64]) -> SweepResult {
    let points = values
        .par_iter()
        .enumerate()
        .map(|(i, &value)| {
            let seed = rng::derive_seed(base.seed, i as u64);
            let outcome = axis.apply(base, value).and_then(|mut s| {
                s.seed = seed;
                run(&s)
            });
            SweepPoint {
                value,
                seed,
                outcome,
            }
        })
        .collect();
    SweepResult { axis, points }
}
