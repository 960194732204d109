//! One block-fading uplink realization, end to end up to the analysis banks.

use num_complex::Complex64;

use crate::channel::{self, ChannelSet, FrequencyResponse, PowerDelayProfile};
use crate::error::Result;
use crate::filterbank::{ComplexGrid, Modem, SymbolGrid, TimeSignal, TX_SCALE};
use crate::rng::{self, Purpose};

/// Everything a receiver-side experiment needs from one trial.
#[derive(Debug, Clone)]
pub struct Uplink {
    pub channels: ChannelSet,
    /// True per-subcarrier gains of every user.
    pub response: FrequencyResponse,
    pub symbols: Vec<SymbolGrid>,
    /// Analysis-bank outputs per antenna, rescaled so a user's real symbol
    /// arrives with gain `H[m,k,l]`.
    pub received: Vec<ComplexGrid>,
    /// Noise power relative to one user's complex symbol power at the
    /// combiner input; the MMSE regularizer.
    pub noise_var: f64,
}

impl Uplink {
    /// Antenna snapshots of one subcarrier over `symbols`, laid out `[n][m]`.
    pub fn snapshots(&self, subcarrier: usize, symbols: std::ops::Range<usize>) -> Vec<Complex64> {
        let m_ant = self.received.len();
        let mut out = vec![Complex64::new(0.0, 0.0); symbols.len() * m_ant];
        for (m, grid) in self.received.iter().enumerate() {
            for (i, v) in grid.row(subcarrier)[symbols.clone()].iter().enumerate() {
                out[i * m_ant + m] = *v;
            }
        }
        out
    }
}

/// Transmits independent PAM grids from every user through fresh channels.
///
/// Users are indexed as in `cell_gains`. Streams are keyed by `(seed, trial)`.
/// The receiver samples [`timing_advance`] samples early and `response` is
/// reported for that alignment.
pub fn simulate_uplink(
    modem: &Modem,
    pdp: &PowerDelayProfile,
    num_antennas: usize,
    cell_gains: &[f64],
    snr_in_db: f64,
    seed: u64,
    trial: u64,
) -> Result<Uplink> {
    let channels =
        channel::draw_channels_for_trial(pdp, num_antennas, cell_gains.len(), cell_gains, seed, trial)?;
    let advance = timing_advance(pdp);
    let response =
        channel::frequency_response_advanced(&channels, modem.config().num_subcarriers, advance)?;
    let streams = (Purpose::Data, Purpose::Noise);
    transmit(modem, channels, response, advance, snr_in_db, seed, trial, streams)
}

/// A second packet through the channels of `uplink` with fresh symbols and
/// noise, for scoring a receiver on data it was not adapted on.
pub fn holdout_packet(
    modem: &Modem,
    pdp: &PowerDelayProfile,
    uplink: &Uplink,
    snr_in_db: f64,
    seed: u64,
    trial: u64,
) -> Result<Uplink> {
    let streams = (Purpose::HoldoutData, Purpose::HoldoutNoise);
    transmit(
        modem,
        uplink.channels.clone(),
        uplink.response.clone(),
        timing_advance(pdp),
        snr_in_db,
        seed,
        trial,
        streams,
    )
}

#[allow(clippy::too_many_arguments)]
fn transmit(
    modem: &Modem,
    channels: ChannelSet,
    response: FrequencyResponse,
    advance: usize,
    snr_in_db: f64,
    seed: u64,
    trial: u64,
    (data, noise): (Purpose, Purpose),
) -> Result<Uplink> {
    let cfg = modem.config();
    let mut data_rng = rng::stream(seed, trial, data);
    let symbols: Vec<SymbolGrid> = (0..channels.num_users())
        .map(|k| SymbolGrid::random(cfg, &mut data_rng).with_user(k))
        .collect();
    let tx = symbols
        .iter()
        .map(|g| {
            let mut x = modem.synthesize(g)?;
            x.scale(TX_SCALE);
            Ok(x)
        })
        .collect::<Result<Vec<_>>>()?;
    let rx = channel::apply_channel_for_trial(&tx, &channels, snr_in_db, seed, trial, noise)?;
    drop(tx);
    let received = rx
        .iter()
        .map(|y| {
            let mut g = modem.analyze_complex(&advanced(y, advance))?;
            g.scale(TX_SCALE.recip());
            Ok(g)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Uplink {
        channels,
        response,
        symbols,
        received,
        noise_var: channel::noise_variance(snr_in_db),
    })
}

/// Receiver timing offset: the profile's mean delay, rounded to a sample.
pub fn timing_advance(pdp: &PowerDelayProfile) -> usize {
    pdp.mean_delay().round() as usize
}

/// Drops the first `by` samples and pads the tail with zeros.
fn advanced(signal: &TimeSignal, by: usize) -> TimeSignal {
    let mut samples = vec![Complex64::new(0.0, 0.0); signal.len()];
    if by < signal.len() {
        samples[..signal.len() - by].copy_from_slice(&signal.samples[by..]);
    }
    TimeSignal { samples }
}
