//! Staggered real-PAM filter bank multicarrier modem.
//!
//! Each of the `L` subcarriers carries one real PAM symbol every `L/2`
//! samples (half a multicarrier symbol). Symbol `a[l][n]` modulates the atom
//!
//! ```text
//! g_{l,n}[m] = p[m - n·L/2] · exp(j2π·l·(m - D/2)/L) · j^(l+n)
//! ```
//!
//! where `p` is the prototype and `D = len(p) - 1`. The `j^(l+n)` rotation
//! makes every pair of distinct atoms orthogonal in the real part, so the
//! receiver recovers `a[l][n]` as `Re<r, g_{l,n}>` while the neighbours'
//! contributions fall into the imaginary part. Both banks are implemented
//! as polyphase networks around a length-`L` FFT.
//!
//! The transmit signal of `N` symbol columns spans `(N-1)·L/2 + len(p)`
//! samples; filter tails are kept. Symbols in the first and last
//! `overlap_factor` columns are treated as transients by measurements.

mod grid;
pub mod prototype;

use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use grid::{ComplexGrid, PamOrder, SymbolGrid, TimeSignal};
pub use prototype::PrototypeFilter;

/// Transmit scale giving unit average power per sample: the banks emit two
/// unit-energy real symbols per sample.
pub const TX_SCALE: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbmcConfig {
    pub num_subcarriers: usize,
    pub overlap_factor: usize,
    pub num_symbols: usize,
    pub pam_order: PamOrder,
}

impl FbmcConfig {
    pub fn new(
        num_subcarriers: usize,
        overlap_factor: usize,
        num_symbols: usize,
        pam_order: PamOrder,
    ) -> Result<Self> {
        let cfg = FbmcConfig {
            num_subcarriers,
            overlap_factor,
            num_symbols,
            pam_order,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        prototype::check_subcarriers(self.num_subcarriers)?;
        if self.overlap_factor == 0 {
            return Err(Error::config("overlap_factor must be positive"));
        }
        if self.num_symbols < 2 * self.overlap_factor {
            return Err(Error::config(format!(
                "num_symbols must be at least 2*overlap_factor ({}), got {}",
                2 * self.overlap_factor,
                self.num_symbols
            )));
        }
        Ok(())
    }

    /// Samples between consecutive symbol columns.
    pub fn hop(&self) -> usize {
        self.num_subcarriers / 2
    }

    /// Length of a synthesized frame for a prototype of `filter_len` taps.
    pub fn signal_len_for(&self, filter_len: usize) -> usize {
        (self.num_symbols - 1) * self.hop() + filter_len
    }

    /// Frame length with the designed `K·L + 1`-tap prototype.
    pub fn signal_len(&self) -> usize {
        self.signal_len_for(self.overlap_factor * self.num_subcarriers + 1)
    }

    /// Symbol columns outside the filter transients.
    pub fn steady_state(&self) -> Range<usize> {
        self.overlap_factor..self.num_symbols.saturating_sub(self.overlap_factor)
    }
}

/// `exp(-jπ·num/den)`, exact when the angle is a multiple of π/2.
fn neg_half_turn_phase(num: usize, den: usize) -> Complex64 {
    let twice = 2 * den;
    let r = num % twice;
    if (2 * r).is_multiple_of(den) {
        match (2 * r) / den {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, -1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, 1.0),
        }
    } else {
        let angle = -std::f64::consts::PI * r as f64 / den as f64;
        Complex64::from_polar(1.0, angle)
    }
}

fn quarter_turn(q: usize) -> Complex64 {
    match q % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Synthesis and analysis banks for one configuration and prototype.
#[derive(Clone)]
pub struct Modem {
    cfg: FbmcConfig,
    filter: PrototypeFilter,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    // exp(-jπ·l·D/L)
    delay_phase: Vec<Complex64>,
}

impl std::fmt::Debug for Modem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Modem")
            .field("cfg", &self.cfg)
            .field("filter_len", &self.filter.len())
            .finish()
    }
}

impl Modem {
    pub fn new(cfg: FbmcConfig, filter: PrototypeFilter) -> Result<Self> {
        cfg.validate()?;
        if filter.num_subcarriers() != cfg.num_subcarriers {
            return Err(Error::shape(format!(
                "prototype designed for L={}, config has L={}",
                filter.num_subcarriers(),
                cfg.num_subcarriers
            )));
        }
        let l = cfg.num_subcarriers;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(l);
        let inverse = planner.plan_fft_inverse(l);
        let d = filter.len() - 1;
        let delay_phase = (0..l).map(|k| neg_half_turn_phase(k * d, l)).collect();
        Ok(Modem {
            cfg,
            filter,
            forward,
            inverse,
            delay_phase,
        })
    }

    /// Modem with the designed prototype for `cfg`.
    pub fn designed(cfg: FbmcConfig) -> Result<Self> {
        let filter = PrototypeFilter::design(cfg.num_subcarriers, cfg.overlap_factor)?;
        Self::new(cfg, filter)
    }

    pub fn config(&self) -> &FbmcConfig {
        &self.cfg
    }

    pub fn filter(&self) -> &PrototypeFilter {
        &self.filter
    }

    pub fn signal_len(&self) -> usize {
        self.cfg.signal_len_for(self.filter.len())
    }

    /// Rotation applied to slot `(l, n)`: `j^(l+n) · exp(jπ·l·n) · exp(-jπ·l·D/L)`.
    #[inline]
    fn slot_phase(&self, l: usize, n: usize) -> Complex64 {
        quarter_turn(l + n + 2 * ((l * n) % 2)) * self.delay_phase[l]
    }

    pub fn synthesize(&self, grid: &SymbolGrid) -> Result<TimeSignal> {
        let l_sub = self.cfg.num_subcarriers;
        let n_sym = self.cfg.num_symbols;
        grid.check_same_shape(l_sub, n_sym)?;
        let taps = self.filter.taps();
        let hop = self.cfg.hop();
        let mut out = TimeSignal::zeros(self.signal_len());
        let mut buf = vec![Complex64::new(0.0, 0.0); l_sub];
        let mut scratch =
            vec![Complex64::new(0.0, 0.0); self.inverse.get_inplace_scratch_len()];
        for n in 0..n_sym {
            let mut any = false;
            for (l, b) in buf.iter_mut().enumerate() {
                let a = grid.get(l, n);
                any |= a != 0.0;
                *b = self.slot_phase(l, n) * a;
            }
            if !any {
                continue;
            }
            self.inverse.process_with_scratch(&mut buf, &mut scratch);
            let seg = &mut out.samples[n * hop..n * hop + taps.len()];
            for (r, (s, p)) in seg.iter_mut().zip(taps).enumerate() {
                *s += buf[r % l_sub] * *p;
            }
        }
        Ok(out)
    }

    /// Matched analysis bank without the real-part projection.
    pub fn analyze_complex(&self, signal: &TimeSignal) -> Result<ComplexGrid> {
        if signal.len() != self.signal_len() {
            return Err(Error::shape(format!(
                "signal has {} samples, framing for this configuration is {}",
                signal.len(),
                self.signal_len()
            )));
        }
        let l_sub = self.cfg.num_subcarriers;
        let n_sym = self.cfg.num_symbols;
        let taps = self.filter.taps();
        let hop = self.cfg.hop();
        let mut out = ComplexGrid::zeros(l_sub, n_sym);
        let mut buf = vec![Complex64::new(0.0, 0.0); l_sub];
        let mut scratch =
            vec![Complex64::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        for n in 0..n_sym {
            buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            let seg = &signal.samples[n * hop..n * hop + taps.len()];
            for (r, (s, p)) in seg.iter().zip(taps).enumerate() {
                buf[r % l_sub] += *s * *p;
            }
            self.forward.process_with_scratch(&mut buf, &mut scratch);
            for (l, b) in buf.iter().enumerate() {
                out.set(l, n, *b * self.slot_phase(l, n).conj());
            }
        }
        Ok(out)
    }

    /// Analysis followed by the real-part projection.
    pub fn analyze(&self, signal: &TimeSignal) -> Result<SymbolGrid> {
        Ok(self.analyze_complex(signal)?.real_part())
    }

    /// The atom `g_{l,n}` laid out on the full frame. Slow; meant for checks.
    pub fn atom(&self, subcarrier: usize, symbol: usize) -> TimeSignal {
        let mut grid = SymbolGrid::zeros(self.cfg.num_subcarriers, self.cfg.num_symbols);
        grid.set(subcarrier, symbol, 1.0);
        self.synthesize(&grid).expect("grid shape matches config")
    }
}

pub fn design_prototype(num_subcarriers: usize, overlap_factor: usize) -> Result<PrototypeFilter> {
    PrototypeFilter::design(num_subcarriers, overlap_factor)
}

pub fn synthesize(grid: &SymbolGrid, cfg: &FbmcConfig, filter: &PrototypeFilter) -> Result<TimeSignal> {
    Modem::new(*cfg, filter.clone())?.synthesize(grid)
}

pub fn analyze(signal: &TimeSignal, cfg: &FbmcConfig, filter: &PrototypeFilter) -> Result<SymbolGrid> {
    Modem::new(*cfg, filter.clone())?.analyze(signal)
}

/// Back-to-back system response of the banks, sounded slot by slot.
#[derive(Debug, Clone)]
pub struct InterferenceProfile {
    pub num_subcarriers: usize,
    pub num_symbols: usize,
    /// Real-part response of each slot to its own unit symbol.
    pub diagonal: Vec<f64>,
    /// Per-slot power leaking in from all other unit symbols after the
    /// real-part projection.
    pub real_residual: Vec<f64>,
    /// Same, without the projection (intrinsic imaginary interference included).
    pub complex_residual: Vec<f64>,
    steady: Range<usize>,
}

impl InterferenceProfile {
    fn steady_slots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_subcarriers)
            .flat_map(move |l| self.steady.clone().map(move |n| l * self.num_symbols + n))
    }

    /// Worst steady-state real-part residual, in dB.
    pub fn worst_real_residual_db(&self) -> f64 {
        let worst = self
            .steady_slots()
            .map(|i| self.real_residual[i])
            .fold(0.0, f64::max);
        10.0 * worst.log10()
    }

    /// Largest `|diagonal - 1|` over steady-state slots.
    pub fn worst_diagonal_error(&self) -> f64 {
        self.steady_slots()
            .map(|i| (self.diagonal[i] - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Mean steady-state interference power without the real projection.
    pub fn mean_complex_residual(&self) -> f64 {
        let (sum, count) = self
            .steady_slots()
            .fold((0.0, 0usize), |(s, c), i| (s + self.complex_residual[i], c + 1));
        sum / count.max(1) as f64
    }
}

/// Sounds every slot through synthesis and analysis over an ideal channel.
pub fn intrinsic_interference_profile(
    cfg: &FbmcConfig,
    filter: &PrototypeFilter,
) -> Result<InterferenceProfile> {
    let modem = Modem::new(*cfg, filter.clone())?;
    let l_sub = cfg.num_subcarriers;
    let n_sym = cfg.num_symbols;
    let slots = l_sub * n_sym;
    let mut diagonal = vec![0.0; slots];
    let mut real_residual = vec![0.0; slots];
    let mut complex_residual = vec![0.0; slots];
    for src in 0..slots {
        let (sl, sn) = (src / n_sym, src % n_sym);
        let response = modem.analyze_complex(&modem.atom(sl, sn))?;
        for (dst, v) in response.values().iter().enumerate() {
            if dst == src {
                diagonal[dst] = v.re;
                complex_residual[dst] += v.im * v.im;
            } else {
                real_residual[dst] += v.re * v.re;
                complex_residual[dst] += v.norm_sqr();
            }
        }
    }
    Ok(InterferenceProfile {
        num_subcarriers: l_sub,
        num_symbols: n_sym,
        diagonal,
        real_residual,
        complex_residual,
        steady: cfg.steady_state(),
    })
}
