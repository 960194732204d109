//! Frequency-sampling prototype design.
//!
//! The pulse is specified by `K` samples of its frequency response taken at
//! multiples of `1/(K·L)` (`K` = overlap factor). The remaining samples are
//! zero, so the impulse response is a short cosine series:
//!
//! ```text
//! p[m] = H0 + 2 · Σ_{k=1}^{K-1} (-1)^k · Hk · cos(2π·k·m / (K·L)),   m = 0..=K·L
//! ```
//!
//! The `K·L + 1` taps are symmetric about `m = K·L/2` and the two end taps
//! are (numerically) zero. Taps are normalized to unit energy.
//!
//! The coefficient sets satisfy the Nyquist pairing `Hk² + H(K-k)² = 1`,
//! which is what makes the filter bank nearly perfectly reconstructing.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Overlap factors with tabulated frequency-sampling coefficients.
pub const SUPPORTED_OVERLAP: [usize; 3] = [3, 4, 6];

/// Frequency samples `H1` and `H3` for `K = 4`. `H3` is fixed by `H1² + H3² = 1`.
pub const K4_H1: f64 = 0.971_959_83;

/// Returns the frequency samples `[H0, H1, ..., H(K-1)]` for an overlap factor.
pub fn frequency_samples(overlap_factor: usize) -> Result<Vec<f64>> {
    let half = std::f64::consts::FRAC_1_SQRT_2;
    match overlap_factor {
        3 => {
            let h1 = 0.911_437_83;
            Ok(vec![1.0, h1, (1.0 - h1 * h1).sqrt()])
        }
        4 => Ok(vec![1.0, K4_H1, half, (1.0 - K4_H1 * K4_H1).sqrt()]),
        6 => {
            let h1 = 0.998_185_72;
            let h2 = 0.948_386_78;
            Ok(vec![
                1.0,
                h1,
                h2,
                half,
                (1.0 - h2 * h2).sqrt(),
                (1.0 - h1 * h1).sqrt(),
            ])
        }
        other => Err(Error::config(format!(
            "overlap_factor must be one of {SUPPORTED_OVERLAP:?}, got {other}"
        ))),
    }
}

/// Real linear-phase FIR pulse shared by the synthesis and analysis banks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeFilter {
    taps: Vec<f64>,
    overlap_factor: usize,
    num_subcarriers: usize,
}

impl PrototypeFilter {
    /// Frequency-sampling design for `num_subcarriers` bands and the given overlap.
    pub fn design(num_subcarriers: usize, overlap_factor: usize) -> Result<Self> {
        check_subcarriers(num_subcarriers)?;
        let coeffs = frequency_samples(overlap_factor)?;
        let span = overlap_factor * num_subcarriers;
        let taps = (0..=span)
            .map(|m| {
                let mut acc = coeffs[0];
                for (k, hk) in coeffs.iter().enumerate().skip(1) {
                    let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
                    let arg = 2.0 * std::f64::consts::PI * (k * m) as f64 / span as f64;
                    acc += 2.0 * sign * hk * arg.cos();
                }
                acc
            })
            .collect();
        Self::from_taps(taps, num_subcarriers, overlap_factor)
    }

    /// Constant pulse of the same length as [`PrototypeFilter::design`]. Useful as
    /// a badly-localized reference.
    pub fn rectangular(num_subcarriers: usize, overlap_factor: usize) -> Result<Self> {
        check_subcarriers(num_subcarriers)?;
        if overlap_factor == 0 {
            return Err(Error::config("overlap_factor must be positive"));
        }
        let taps = vec![1.0; overlap_factor * num_subcarriers + 1];
        Self::from_taps(taps, num_subcarriers, overlap_factor)
    }

    /// Wraps arbitrary taps, normalizing them to unit energy.
    pub fn from_taps(
        mut taps: Vec<f64>,
        num_subcarriers: usize,
        overlap_factor: usize,
    ) -> Result<Self> {
        check_subcarriers(num_subcarriers)?;
        let span = overlap_factor * num_subcarriers;
        if taps.len() != span && taps.len() != span + 1 {
            return Err(Error::shape(format!(
                "prototype length {} must be overlap_factor*L ({span}) or that plus one",
                taps.len()
            )));
        }
        let energy: f64 = taps.iter().map(|t| t * t).sum();
        if !(energy.is_finite() && energy > 0.0) {
            return Err(Error::Numerical("prototype has zero or non-finite energy".into()));
        }
        let scale = energy.sqrt().recip();
        taps.iter_mut().for_each(|t| *t *= scale);
        Ok(PrototypeFilter {
            taps,
            overlap_factor,
            num_subcarriers,
        })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn overlap_factor(&self) -> usize {
        self.overlap_factor
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }

    /// Largest `|taps[i] - taps[end-i]|` relative to the peak tap.
    pub fn symmetry_error(&self) -> f64 {
        let peak = self.taps.iter().fold(0.0_f64, |a, t| a.max(t.abs()));
        let n = self.taps.len();
        (0..n / 2)
            .map(|i| (self.taps[i] - self.taps[n - 1 - i]).abs())
            .fold(0.0, f64::max)
            / peak
    }

    /// Writes one tap per line with 17 significant digits.
    pub fn write_taps<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for t in &self.taps {
            writeln!(out, "{t:.16e}")?;
        }
        Ok(())
    }
}

pub(crate) fn check_subcarriers(num_subcarriers: usize) -> Result<()> {
    if num_subcarriers < 2 || !num_subcarriers.is_power_of_two() {
        return Err(Error::config(format!(
            "L must be a power of two (>= 2), got {num_subcarriers}"
        )));
    }
    Ok(())
}
