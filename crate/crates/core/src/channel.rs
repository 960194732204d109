//! Block-fading frequency-selective Rayleigh channels for an `M`-antenna
//! base station and `K` single-antenna users.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::TimeSignal;
use crate::rng::{self, Purpose};

/// Tap delays (in samples) and normalized tap powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerDelayProfile {
    delays: Vec<usize>,
    powers: Vec<f64>,
}

impl PowerDelayProfile {
    /// Normalizes `powers` to sum to one.
    pub fn new(delays: Vec<usize>, powers: Vec<f64>) -> Result<Self> {
        if delays.is_empty() {
            return Err(Error::config("power delay profile needs at least one tap"));
        }
        if delays.len() != powers.len() {
            return Err(Error::config(format!(
                "pdp has {} delays but {} powers",
                delays.len(),
                powers.len()
            )));
        }
        if delays[0] != 0 {
            return Err(Error::config("pdp delays must start at 0"));
        }
        if delays.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("pdp delays must be strictly increasing"));
        }
        if powers.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::config("pdp powers must be finite and nonnegative"));
        }
        let total: f64 = powers.iter().sum();
        if total <= 0.0 {
            return Err(Error::config("pdp powers sum to zero"));
        }
        let powers = powers.into_iter().map(|p| p / total).collect();
        Ok(PowerDelayProfile { delays, powers })
    }

    /// Single tap: a flat channel.
    pub fn flat() -> Self {
        PowerDelayProfile {
            delays: vec![0],
            powers: vec![1.0],
        }
    }

    /// Taps at delays `0..num_taps` with powers `exp(-d / decay)`.
    pub fn exponential(num_taps: usize, decay_samples: f64) -> Result<Self> {
        if num_taps == 0 {
            return Err(Error::config("pdp needs at least one tap"));
        }
        if !(decay_samples > 0.0 && decay_samples.is_finite()) {
            return Err(Error::config("pdp decay must be positive"));
        }
        let delays: Vec<usize> = (0..num_taps).collect();
        let powers = delays
            .iter()
            .map(|&d| (-(d as f64) / decay_samples).exp())
            .collect();
        Self::new(delays, powers)
    }

    /// Default profile for `L` subcarriers: 8 taps decaying with constant `L/16`.
    pub fn default_for(num_subcarriers: usize) -> Self {
        let decay = (num_subcarriers as f64 / 16.0).max(1.0);
        Self::exponential(8, decay).expect("valid default pdp")
    }

    pub fn delays(&self) -> &[usize] {
        &self.delays
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn num_taps(&self) -> usize {
        self.delays.len()
    }

    pub fn max_delay(&self) -> usize {
        *self.delays.last().expect("nonempty")
    }

    /// Power-weighted mean delay in samples.
    pub fn mean_delay(&self) -> f64 {
        self.delays
            .iter()
            .zip(&self.powers)
            .map(|(d, p)| *d as f64 * p)
            .sum()
    }

    pub fn rms_delay_spread(&self) -> f64 {
        let mean = self.mean_delay();
        let second: f64 = self
            .delays
            .iter()
            .zip(&self.powers)
            .map(|(d, p)| (*d as f64).powi(2) * p)
            .sum();
        (second - mean * mean).max(0.0).sqrt()
    }
}

/// Tapped-delay-line channels for every (antenna, user) link.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    num_antennas: usize,
    num_users: usize,
    delays: Vec<usize>,
    // [m][k][t]
    taps: Vec<Complex64>,
    cell_gains: Vec<f64>,
    pub rng_seed: u64,
}

impl ChannelSet {
    /// Builds a channel set from explicit taps laid out `[antenna][user][tap]`.
    pub fn from_taps(
        num_antennas: usize,
        num_users: usize,
        delays: Vec<usize>,
        taps: Vec<Complex64>,
    ) -> Result<Self> {
        if num_antennas == 0 || num_users == 0 {
            return Err(Error::config("need at least one antenna and one user"));
        }
        if delays.is_empty() {
            return Err(Error::config("channel needs at least one tap"));
        }
        if taps.len() != num_antennas * num_users * delays.len() {
            return Err(Error::shape(format!(
                "expected {} taps, got {}",
                num_antennas * num_users * delays.len(),
                taps.len()
            )));
        }
        Ok(ChannelSet {
            num_antennas,
            num_users,
            delays,
            taps,
            cell_gains: vec![1.0; num_users],
            rng_seed: 0,
        })
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn delays(&self) -> &[usize] {
        &self.delays
    }

    pub fn cell_gains(&self) -> &[f64] {
        &self.cell_gains
    }

    /// Taps of the link from `user` to `antenna`.
    pub fn link(&self, antenna: usize, user: usize) -> &[Complex64] {
        let t = self.delays.len();
        let start = (antenna * self.num_users + user) * t;
        &self.taps[start..start + t]
    }

    pub fn link_energy(&self, antenna: usize, user: usize) -> f64 {
        self.link(antenna, user).iter().map(|h| h.norm_sqr()).sum()
    }

    /// Channel length in samples (max delay + 1).
    pub fn len_samples(&self) -> usize {
        self.delays.last().map_or(0, |d| d + 1)
    }

    /// Copy with every tap multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.taps.iter_mut().for_each(|h| *h *= factor);
        out
    }
}

/// Draws i.i.d. circular Gaussian taps scaled by `sqrt(tap_power * cell_gain)`.
pub fn draw_channels(
    pdp: &PowerDelayProfile,
    num_antennas: usize,
    num_users: usize,
    cell_gains: &[f64],
    seed: u64,
) -> Result<ChannelSet> {
    draw_channels_for_trial(pdp, num_antennas, num_users, cell_gains, seed, 0)
}

pub(crate) fn draw_channels_for_trial(
    pdp: &PowerDelayProfile,
    num_antennas: usize,
    num_users: usize,
    cell_gains: &[f64],
    seed: u64,
    trial: u64,
) -> Result<ChannelSet> {
    if num_antennas == 0 || num_users == 0 {
        return Err(Error::config("need at least one antenna and one user"));
    }
    if pdp.num_taps() == 0 {
        return Err(Error::config("pdp has zero taps"));
    }
    if cell_gains.len() != num_users {
        return Err(Error::shape(format!(
            "{} cell gains for {num_users} users",
            cell_gains.len()
        )));
    }
    if cell_gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(Error::config("cell gains must be finite and nonnegative"));
    }
    let mut rng = rng::stream(seed, trial, Purpose::Channel);
    let mut taps = Vec::with_capacity(num_antennas * num_users * pdp.num_taps());
    for _ in 0..num_antennas {
        for gain in cell_gains {
            for p in pdp.powers() {
                taps.push(rng::complex_gaussian(&mut rng, p * gain));
            }
        }
    }
    Ok(ChannelSet {
        num_antennas,
        num_users,
        delays: pdp.delays().to_vec(),
        taps,
        cell_gains: cell_gains.to_vec(),
        rng_seed: seed,
    })
}

/// Per-subcarrier gains `H[m,k,l] = Σ_t h_t · exp(-j2π·d_t·l/L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    num_antennas: usize,
    num_users: usize,
    num_subcarriers: usize,
    // [m][k][l]
    gains: Vec<Complex64>,
}

impl FrequencyResponse {
    pub fn zeros(num_antennas: usize, num_users: usize, num_subcarriers: usize) -> Self {
        FrequencyResponse {
            num_antennas,
            num_users,
            num_subcarriers,
            gains: vec![Complex64::new(0.0, 0.0); num_antennas * num_users * num_subcarriers],
        }
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    #[inline]
    fn index(&self, antenna: usize, user: usize, subcarrier: usize) -> usize {
        (antenna * self.num_users + user) * self.num_subcarriers + subcarrier
    }

    pub fn get(&self, antenna: usize, user: usize, subcarrier: usize) -> Complex64 {
        self.gains[self.index(antenna, user, subcarrier)]
    }

    pub fn set(&mut self, antenna: usize, user: usize, subcarrier: usize, value: Complex64) {
        let i = self.index(antenna, user, subcarrier);
        self.gains[i] = value;
    }

    /// Spectrum of one link over all subcarriers.
    pub fn link(&self, antenna: usize, user: usize) -> &[Complex64] {
        let start = self.index(antenna, user, 0);
        &self.gains[start..start + self.num_subcarriers]
    }

    /// `M`-vector of gains for `(user, subcarrier)`.
    pub fn column(&self, user: usize, subcarrier: usize) -> Vec<Complex64> {
        (0..self.num_antennas)
            .map(|m| self.get(m, user, subcarrier))
            .collect()
    }

    /// Keeps only the listed users, in order.
    pub fn select_users(&self, users: &[usize]) -> Self {
        let mut out = FrequencyResponse::zeros(self.num_antennas, users.len(), self.num_subcarriers);
        for m in 0..self.num_antennas {
            for (new_k, &k) in users.iter().enumerate() {
                for l in 0..self.num_subcarriers {
                    out.set(m, new_k, l, self.get(m, k, l));
                }
            }
        }
        out
    }

    /// Per-subcarrier `(1/M)·Σ_m |H[m,k,l]|²`.
    pub fn combined_gain(&self, user: usize) -> Vec<f64> {
        let mut acc = vec![0.0; self.num_subcarriers];
        for m in 0..self.num_antennas {
            for (a, h) in acc.iter_mut().zip(self.link(m, user)) {
                *a += h.norm_sqr();
            }
        }
        acc.iter_mut().for_each(|a| *a /= self.num_antennas as f64);
        acc
    }
}

/// L-point spectra of every link.
pub fn frequency_response(ch: &ChannelSet, num_subcarriers: usize) -> Result<FrequencyResponse> {
    frequency_response_advanced(ch, num_subcarriers, 0)
}

/// Response seen by a receiver that samples `advance` samples early, i.e.
/// with every tap delay reduced by `advance`.
pub fn frequency_response_advanced(
    ch: &ChannelSet,
    num_subcarriers: usize,
    advance: usize,
) -> Result<FrequencyResponse> {
    if num_subcarriers < ch.len_samples() {
        return Err(Error::config(format!(
            "L={num_subcarriers} is shorter than the channel ({} samples)",
            ch.len_samples()
        )));
    }
    let twiddle: Vec<Complex64> = (0..num_subcarriers)
        .map(|i| {
            Complex64::from_polar(
                1.0,
                -2.0 * std::f64::consts::PI * i as f64 / num_subcarriers as f64,
            )
        })
        .collect();
    let mut out = FrequencyResponse::zeros(ch.num_antennas, ch.num_users, num_subcarriers);
    for m in 0..ch.num_antennas {
        for k in 0..ch.num_users {
            let taps = ch.link(m, k);
            for l in 0..num_subcarriers {
                let v = taps
                    .iter()
                    .zip(&ch.delays)
                    .map(|(h, d)| {
                        let shift = (*d as i64 - advance as i64).rem_euclid(num_subcarriers as i64);
                        h * twiddle[(shift as usize * l) % num_subcarriers]
                    })
                    .sum();
                out.set(m, k, l, v);
            }
        }
    }
    Ok(out)
}

/// Noise variance per complex sample for an SNR (dB) defined against unit
/// per-user received power. `+inf` means noise-free.
pub fn noise_variance(snr_in_db: f64) -> f64 {
    10f64.powf(-snr_in_db / 10.0)
}

/// `y_m = Σ_k h_{m,k} * x_k + n_m`, truncated to the input frame length.
pub fn apply_channel(
    signals: &[TimeSignal],
    ch: &ChannelSet,
    snr_in_db: f64,
    seed: u64,
) -> Result<Vec<TimeSignal>> {
    apply_channel_for_trial(signals, ch, snr_in_db, seed, 0, Purpose::Noise)
}

pub(crate) fn apply_channel_for_trial(
    signals: &[TimeSignal],
    ch: &ChannelSet,
    snr_in_db: f64,
    seed: u64,
    trial: u64,
    noise: Purpose,
) -> Result<Vec<TimeSignal>> {
    if signals.len() != ch.num_users {
        return Err(Error::shape(format!(
            "{} user signals for a channel with {} users",
            signals.len(),
            ch.num_users
        )));
    }
    let len = signals.first().map_or(0, TimeSignal::len);
    if signals.iter().any(|s| s.len() != len) {
        return Err(Error::shape("user signals differ in length"));
    }
    if snr_in_db.is_nan() {
        return Err(Error::config("snr_in_db is NaN"));
    }
    let var = noise_variance(snr_in_db);
    let mut rng = rng::stream(seed, trial, noise);
    let mut out = Vec::with_capacity(ch.num_antennas);
    for m in 0..ch.num_antennas {
        let mut y = TimeSignal::zeros(len);
        for (k, x) in signals.iter().enumerate() {
            for (h, &d) in ch.link(m, k).iter().zip(&ch.delays) {
                if d >= len {
                    continue;
                }
                for (yi, xi) in y.samples[d..].iter_mut().zip(&x.samples) {
                    *yi += h * xi;
                }
            }
        }
        if var > 0.0 {
            for s in y.samples.iter_mut() {
                *s += rng::complex_gaussian(&mut rng, var);
            }
        }
        out.push(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pdp_validation() {
        assert!(PowerDelayProfile::new(vec![], vec![]).is_err());
        assert!(PowerDelayProfile::new(vec![1, 2], vec![0.5, 0.5]).is_err());
        assert!(PowerDelayProfile::new(vec![0, 2, 2], vec![1.0; 3]).is_err());
        assert!(PowerDelayProfile::new(vec![0, 1], vec![1.0, -0.1]).is_err());
        let p = PowerDelayProfile::new(vec![0, 3], vec![2.0, 6.0]).unwrap();
        assert_eq!(p.powers(), &[0.25, 0.75]);
        let e = PowerDelayProfile::default_for(64);
        assert_eq!(e.num_taps(), 8);
        assert!((e.powers().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_channel_has_flat_spectrum() {
        let ch = draw_channels(&PowerDelayProfile::flat(), 3, 2, &[1.0, 1.0], 5).unwrap();
        let fr = frequency_response(&ch, 16).unwrap();
        for m in 0..3 {
            for k in 0..2 {
                let mag0 = fr.get(m, k, 0).norm();
                for l in 1..16 {
                    assert_eq!(fr.get(m, k, l).norm(), mag0);
                }
            }
        }
    }

    #[test]
    fn draws_are_deterministic() {
        let pdp = PowerDelayProfile::default_for(64);
        let a = draw_channels(&pdp, 2, 1, &[1.0], 11).unwrap();
        let b = draw_channels(&pdp, 2, 1, &[1.0], 11).unwrap();
        assert_eq!(a, b);
        let c = draw_channels(&pdp, 2, 1, &[1.0], 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn unit_impulse_and_shifted_delta() {
        let one = Complex64::new(1.0, 0.0);
        let ch = ChannelSet::from_taps(1, 1, vec![0], vec![one]).unwrap();
        let fr = frequency_response(&ch, 8).unwrap();
        assert!(fr.link(0, 0).iter().all(|g| *g == one));

        let d = 3;
        let ch = ChannelSet::from_taps(1, 1, vec![d], vec![one]).unwrap();
        let fr = frequency_response(&ch, 16).unwrap();
        for l in 0..16 {
            let g = fr.get(0, 0, l);
            assert!((g.norm() - 1.0).abs() < 1e-12);
            let want = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (d * l) as f64 / 16.0);
            assert!((g - want).norm() < 1e-12);
        }
    }

    #[test]
    fn short_l_rejected() {
        let pdp = PowerDelayProfile::exponential(8, 2.0).unwrap();
        let ch = draw_channels(&pdp, 1, 1, &[1.0], 0).unwrap();
        assert!(frequency_response(&ch, 4).is_err());
        assert!(frequency_response(&ch, 8).is_ok());
    }

    #[test]
    fn apply_rejects_length_mismatch() {
        let ch = draw_channels(&PowerDelayProfile::flat(), 1, 2, &[1.0, 1.0], 0).unwrap();
        let sigs = [TimeSignal::zeros(10), TimeSignal::zeros(11)];
        assert!(matches!(apply_channel(&sigs, &ch, 10.0, 0), Err(Error::Shape(_))));
        assert!(matches!(apply_channel(&sigs[..1], &ch, 10.0, 0), Err(Error::Shape(_))));
    }

    #[test]
    fn noise_free_flat_unit_channel_passes_through() {
        let one = Complex64::new(1.0, 0.0);
        let ch = ChannelSet::from_taps(1, 2, vec![0], vec![one, one]).unwrap();
        let a = TimeSignal {
            samples: (0..20).map(|i| Complex64::new(i as f64, -(i as f64))).collect(),
        };
        let b = TimeSignal {
            samples: (0..20).map(|i| Complex64::new(0.5, i as f64 * 0.25)).collect(),
        };
        let y = apply_channel(std::slice::from_ref(&a), &ChannelSet::from_taps(1, 1, vec![0], vec![one]).unwrap(), f64::INFINITY, 0).unwrap();
        assert_eq!(y[0], a);
        let y = apply_channel(&[a.clone(), b.clone()], &ch, f64::INFINITY, 0).unwrap();
        for i in 0..20 {
            assert_eq!(y[0].samples[i], a.samples[i] + b.samples[i]);
        }
    }
}
