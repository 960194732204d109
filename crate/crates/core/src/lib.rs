//! Link-level simulator for filter-bank multicarrier (FBMC) massive MIMO
//! uplinks.
//!
//! The crate covers the staggered real-PAM filter bank modem
//! ([`filterbank`]), frequency-selective multiuser channels ([`channel`]),
//! pilot estimation and MF/MMSE combining ([`combining`]), blind Godard
//! tracking of the combiner weights ([`blind`]), the Monte Carlo experiments
//! built from them ([`experiments`]) and the scenario/report file formats
//! used by the `fbmc-mimo` command line tool ([`scenario`], [`report`]).

pub mod blind;
pub mod channel;
pub mod cli;
pub mod combining;
pub mod error;
pub mod experiments;
pub mod filterbank;
pub mod link;
mod linalg;
pub mod metrics;
pub mod rng;
pub mod report;
pub mod scenario;

pub use error::{Error, Result};

/// Embedded in every report summary.
pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
