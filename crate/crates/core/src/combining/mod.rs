//! Per-subcarrier linear combining at the base station.
//!
//! The combiner for user `k` on subcarrier `l` is a row vector `w` applied
//! to the antenna outputs: `z = Σ_m w[m] · y_m`, followed by the real-part
//! projection. Both combiners make `w · ĥ_k` real, so the imaginary
//! intrinsic interference of the user's own symbols is discarded by the
//! projection.

pub mod estimate;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::filterbank::{ComplexGrid, SymbolGrid};
use crate::linalg;

pub use estimate::{
    estimate_channels, least_squares, observe_pilots, ChannelEstimate, ContaminationConfig,
    ContaminationTerm, PilotObservation, PilotPlan,
};

/// `K x L x M` complex weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinerWeights {
    num_users: usize,
    num_subcarriers: usize,
    num_antennas: usize,
    weights: Vec<Complex64>,
}

impl CombinerWeights {
    pub fn zeros(num_users: usize, num_subcarriers: usize, num_antennas: usize) -> Self {
        CombinerWeights {
            num_users,
            num_subcarriers,
            num_antennas,
            weights: vec![Complex64::new(0.0, 0.0); num_users * num_subcarriers * num_antennas],
        }
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn get(&self, user: usize, subcarrier: usize) -> &[Complex64] {
        let start = (user * self.num_subcarriers + subcarrier) * self.num_antennas;
        &self.weights[start..start + self.num_antennas]
    }

    pub fn get_mut(&mut self, user: usize, subcarrier: usize) -> &mut [Complex64] {
        let start = (user * self.num_subcarriers + subcarrier) * self.num_antennas;
        &mut self.weights[start..start + self.num_antennas]
    }

    pub fn set(&mut self, user: usize, subcarrier: usize, w: &[Complex64]) {
        self.get_mut(user, subcarrier).copy_from_slice(w);
    }

    /// Copy with every weight negated.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|w| *w = -*w);
        out
    }
}

/// Matched filter with unit intended-signal gain: `w = ĥ^H / ||ĥ||²`.
pub fn mf_combiner(est: &ChannelEstimate) -> Result<CombinerWeights> {
    let g = &est.gains;
    let (k_users, l_sub, m_ant) = (g.num_users(), g.num_subcarriers(), g.num_antennas());
    let mut out = CombinerWeights::zeros(k_users, l_sub, m_ant);
    for k in 0..k_users {
        for l in 0..l_sub {
            let h = g.column(k, l);
            let energy = linalg::norm_sqr(&h);
            if !energy.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite channel estimate for user {k} on subcarrier {l}"
                )));
            }
            if energy == 0.0 {
                return Err(Error::Singular {
                    user: k,
                    subcarrier: l,
                });
            }
            let w = out.get_mut(k, l);
            for (wm, hm) in w.iter_mut().zip(&h) {
                *wm = hm.conj() / energy;
            }
        }
    }
    Ok(out)
}

/// Multiuser MMSE: row `k` of `(Ĥ^H Ĥ + σ² I)^{-1} Ĥ^H` per subcarrier.
///
/// `noise_var` is the noise power relative to one user's symbol power at the
/// combiner input.
pub fn mmse_combiner(est: &ChannelEstimate, noise_var: f64) -> Result<CombinerWeights> {
    if noise_var.is_nan() || noise_var <= 0.0 || !noise_var.is_finite() {
        return Err(Error::config(format!(
            "MMSE noise variance must be positive and finite, got {noise_var}"
        )));
    }
    let g = &est.gains;
    let (k_users, l_sub, m_ant) = (g.num_users(), g.num_subcarriers(), g.num_antennas());
    let mut out = CombinerWeights::zeros(k_users, l_sub, m_ant);
    let mut gram = vec![Complex64::new(0.0, 0.0); k_users * k_users];
    let mut rhs = vec![Complex64::new(0.0, 0.0); k_users * m_ant];
    for l in 0..l_sub {
        let cols: Vec<Vec<Complex64>> = (0..k_users).map(|k| g.column(k, l)).collect();
        if cols.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite channel estimate on subcarrier {l}"
            )));
        }
        for i in 0..k_users {
            for j in 0..k_users {
                let v: Complex64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
                gram[i * k_users + j] = if i == j { v + noise_var } else { v };
            }
            for m in 0..m_ant {
                rhs[i * m_ant + m] = cols[i][m].conj();
            }
        }
        linalg::solve_in_place(&mut gram, &mut rhs, k_users, m_ant)?;
        for k in 0..k_users {
            out.set(k, l, &rhs[k * m_ant..(k + 1) * m_ant]);
        }
    }
    Ok(out)
}

/// Applies the weights to per-antenna analysis outputs and projects onto the
/// real axis. Returns one grid per user.
pub fn combine(grids: &[ComplexGrid], w: &CombinerWeights) -> Result<Vec<SymbolGrid>> {
    if grids.len() != w.num_antennas {
        return Err(Error::shape(format!(
            "{} antenna grids for {}-antenna weights",
            grids.len(),
            w.num_antennas
        )));
    }
    let l_sub = w.num_subcarriers;
    let n_sym = grids.first().map_or(0, ComplexGrid::num_symbols);
    if grids
        .iter()
        .any(|g| g.num_subcarriers() != l_sub || g.num_symbols() != n_sym)
    {
        return Err(Error::shape(format!(
            "antenna grids must all be {l_sub}x{n_sym}"
        )));
    }
    let mut out = Vec::with_capacity(w.num_users);
    let mut acc = vec![Complex64::new(0.0, 0.0); n_sym];
    for k in 0..w.num_users {
        let mut grid = SymbolGrid::zeros(l_sub, n_sym).with_user(k);
        for l in 0..l_sub {
            acc.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
            for (wm, y) in w.get(k, l).iter().zip(grids) {
                for (a, v) in acc.iter_mut().zip(y.row(l)) {
                    *a += wm * v;
                }
            }
            for (dst, a) in grid.row_mut(l).iter_mut().zip(&acc) {
                *dst = a.re;
            }
        }
        out.push(grid);
    }
    Ok(out)
}

/// Output SINR predicted by the spreading gain: `snr_in + 10·log10(M)`.
pub fn target_sinr_db(snr_in_db: f64, num_antennas: usize) -> Result<f64> {
    if num_antennas < 1 {
        return Err(Error::config("M must be at least 1"));
    }
    Ok(snr_in_db + 10.0 * (num_antennas as f64).log10())
}
