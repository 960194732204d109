//! Least-squares SINR estimation against known transmitted symbols.
//!
//! For each slot sequence the gain `g = Σ z·s / Σ s²` is fitted first, so
//! the estimate ignores any real scale or sign on the equalizer output:
//! `SINR = g²·Σ s² / Σ (z - g·s)²`.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::filterbank::SymbolGrid;

/// Reported value when the residual vanishes.
pub const SINR_CAP_DB: f64 = 200.0;

/// SINR (dB) of `z` as a scaled copy of `s`.
pub fn slot_sinr_db(z: &[f64], s: &[f64]) -> Result<f64> {
    if z.len() != s.len() {
        return Err(Error::shape(format!(
            "{} outputs for {} reference symbols",
            z.len(),
            s.len()
        )));
    }
    let ss: f64 = s.iter().map(|v| v * v).sum();
    if ss == 0.0 {
        return Err(Error::Argument("zero-power transmitted slot".into()));
    }
    let zs: f64 = z.iter().zip(s).map(|(a, b)| a * b).sum();
    let g = zs / ss;
    let err: f64 = z.iter().zip(s).map(|(a, b)| (a - g * b).powi(2)).sum();
    let sig = g * g * ss;
    if !(sig.is_finite() && err.is_finite()) {
        return Err(Error::Numerical("non-finite combiner output".into()));
    }
    if sig == 0.0 {
        return Ok(-SINR_CAP_DB);
    }
    if err == 0.0 {
        return Ok(SINR_CAP_DB);
    }
    Ok((10.0 * (sig / err).log10()).clamp(-SINR_CAP_DB, SINR_CAP_DB))
}

/// Per-user, per-subcarrier SINR over the symbol columns in `steady`.
pub fn measure_sinr(
    equalized: &[SymbolGrid],
    transmitted: &[SymbolGrid],
    steady: Range<usize>,
) -> Result<Vec<Vec<f64>>> {
    if equalized.len() != transmitted.len() {
        return Err(Error::shape(format!(
            "{} equalized grids for {} transmitted",
            equalized.len(),
            transmitted.len()
        )));
    }
    equalized
        .iter()
        .zip(transmitted)
        .map(|(z, s)| {
            z.check_same_shape(s.num_subcarriers(), s.num_symbols())?;
            if steady.end > s.num_symbols() || steady.is_empty() {
                return Err(Error::Argument(format!(
                    "steady-state range {steady:?} invalid for {} symbols",
                    s.num_symbols()
                )));
            }
            (0..s.num_subcarriers())
                .map(|l| slot_sinr_db(&z.row(l)[steady.clone()], &s.row(l)[steady.clone()]))
                .collect()
        })
        .collect()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// dB of the arithmetic mean of the linear values.
pub fn mean_db(values_db: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values_db
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + db_to_linear(v), n + 1));
    linear_to_db(sum / n.max(1) as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}
