use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::FbmcConfig;

/// PAM alphabet carried on each subcarrier slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum PamOrder {
    #[default]
    Pam2,
    Pam4,
}

impl PamOrder {
    pub fn from_order(order: u32) -> Result<Self> {
        match order {
            2 => Ok(PamOrder::Pam2),
            4 => Ok(PamOrder::Pam4),
            other => Err(Error::config(format!("pam_order must be 2 or 4, got {other}"))),
        }
    }

    pub fn order(self) -> u32 {
        match self {
            PamOrder::Pam2 => 2,
            PamOrder::Pam4 => 4,
        }
    }

    /// Unit-average-power constellation points.
    pub fn levels(self) -> &'static [f64] {
        // 1/sqrt(5) and 3/sqrt(5)
        const P4: [f64; 4] = [
            -1.341_640_786_499_873_8,
            -0.447_213_595_499_957_9,
            0.447_213_595_499_957_9,
            1.341_640_786_499_873_8,
        ];
        match self {
            PamOrder::Pam2 => &[-1.0, 1.0],
            PamOrder::Pam4 => &P4,
        }
    }

    /// Godard dispersion constant `E[a^4] / E[a^2]`.
    pub fn dispersion(self) -> f64 {
        let lv = self.levels();
        let m2: f64 = lv.iter().map(|a| a * a).sum::<f64>();
        let m4: f64 = lv.iter().map(|a| a.powi(4)).sum::<f64>();
        m4 / m2
    }

    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        let lv = self.levels();
        lv[rng.random_range(0..lv.len())]
    }
}

/// `L x N` grid of real PAM symbols, row-major by subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGrid {
    num_subcarriers: usize,
    num_symbols: usize,
    values: Vec<f64>,
    /// Transmitting user, when the grid belongs to one.
    pub user: Option<usize>,
}

impl SymbolGrid {
    pub fn zeros(num_subcarriers: usize, num_symbols: usize) -> Self {
        SymbolGrid {
            num_subcarriers,
            num_symbols,
            values: vec![0.0; num_subcarriers * num_symbols],
            user: None,
        }
    }

    pub fn from_values(num_subcarriers: usize, num_symbols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_subcarriers * num_symbols {
            return Err(Error::shape(format!(
                "grid of {num_subcarriers}x{num_symbols} needs {} values, got {}",
                num_subcarriers * num_symbols,
                values.len()
            )));
        }
        Ok(SymbolGrid {
            num_subcarriers,
            num_symbols,
            values,
            user: None,
        })
    }

    /// Independent uniformly-drawn PAM symbols.
    pub fn random<R: Rng + ?Sized>(cfg: &FbmcConfig, rng: &mut R) -> Self {
        let n = cfg.num_subcarriers * cfg.num_symbols;
        let values = (0..n).map(|_| cfg.pam_order.draw(rng)).collect();
        SymbolGrid {
            num_subcarriers: cfg.num_subcarriers,
            num_symbols: cfg.num_symbols,
            values,
            user: None,
        }
    }

    pub fn with_user(mut self, user: usize) -> Self {
        self.user = Some(user);
        self
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, subcarrier: usize, symbol: usize) -> f64 {
        self.values[subcarrier * self.num_symbols + symbol]
    }

    pub fn set(&mut self, subcarrier: usize, symbol: usize, value: f64) {
        self.values[subcarrier * self.num_symbols + symbol] = value;
    }

    /// Symbols of one subcarrier across time.
    pub fn row(&self, subcarrier: usize) -> &[f64] {
        let start = subcarrier * self.num_symbols;
        &self.values[start..start + self.num_symbols]
    }

    pub fn row_mut(&mut self, subcarrier: usize) -> &mut [f64] {
        let start = subcarrier * self.num_symbols;
        &mut self.values[start..start + self.num_symbols]
    }

    pub fn average_power(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len().max(1) as f64
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn add(&self, other: &SymbolGrid) -> Result<Self> {
        self.check_same_shape(other.num_subcarriers, other.num_symbols)?;
        let mut out = self.clone();
        out.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(a, b)| *a += b);
        Ok(out)
    }

    pub(crate) fn check_same_shape(&self, l: usize, n: usize) -> Result<()> {
        if self.num_subcarriers != l || self.num_symbols != n {
            return Err(Error::shape(format!(
                "grid is {}x{}, expected {l}x{n}",
                self.num_subcarriers, self.num_symbols
            )));
        }
        Ok(())
    }
}

/// Complex analysis-bank outputs before the real-part projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    num_subcarriers: usize,
    num_symbols: usize,
    values: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn zeros(num_subcarriers: usize, num_symbols: usize) -> Self {
        ComplexGrid {
            num_subcarriers,
            num_symbols,
            values: vec![Complex64::new(0.0, 0.0); num_subcarriers * num_symbols],
        }
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, subcarrier: usize, symbol: usize) -> Complex64 {
        self.values[subcarrier * self.num_symbols + symbol]
    }

    pub fn set(&mut self, subcarrier: usize, symbol: usize, value: Complex64) {
        self.values[subcarrier * self.num_symbols + symbol] = value;
    }

    pub fn row(&self, subcarrier: usize) -> &[Complex64] {
        let start = subcarrier * self.num_symbols;
        &self.values[start..start + self.num_symbols]
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    /// Real-part projection (the staggered-PAM demapping step).
    pub fn real_part(&self) -> SymbolGrid {
        SymbolGrid {
            num_subcarriers: self.num_subcarriers,
            num_symbols: self.num_symbols,
            values: self.values.iter().map(|v| v.re).collect(),
            user: None,
        }
    }
}

/// Complex baseband samples at `L` samples per multicarrier symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    pub samples: Vec<Complex64>,
}

impl TimeSignal {
    pub fn zeros(len: usize) -> Self {
        TimeSignal {
            samples: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        self.samples.iter_mut().for_each(|s| *s *= factor);
    }
}
