//! Scenario files: INI-style sections with typed `key = value` lines.
//!
//! ```text
//! [fbmc]
//! L = 64                  # required, power of two
//! overlap_factor = 4      # 3, 4 or 6
//! num_symbols = 64        # 128 when [blind] is present
//! pam_order = 2           # 2 or 4
//!
//! [channel]
//! pdp = "exponential"     # exponential | flat | custom
//! num_taps = 8            # exponential only
//! decay_samples = 4.0     # exponential only; default max(L/16, 1)
//! delays = [0, 1, 3]      # custom only
//! powers = [0.6, 0.3, 0.1]
//!
//! [array]
//! M = 128                 # required
//! K = 6                   # required, users per cell
//! snr_in_db = 0.0
//!
//! [contamination]         # optional
//! num_cells = 7           # required in this section
//! beta = 0.3              # uniform cross gain, or:
//! cross_gains = [...]     # one entry per interfering cell
//! shared_pilots = true
//!
//! [blind]                 # optional; selects the blind tracking experiment
//! step_size = 0.2
//! iterations = 100
//! block_size = 32
//! dispersion = 1.0        # default from pam_order
//! init = "mf_contaminated"
//!
//! [run]
//! trials = 100            # 50 when [blind] is present
//! seed = 1
//! ```
//!
//! Values follow TOML lexical rules, so strings are quoted and lists use
//! brackets. Unknown sections and keys are rejected.

use std::fmt::Write as _;
use std::path::Path;

use toml::{Table, Value};

use crate::blind::{BlindConfig, BlindInit, DEFAULT_BLOCK_SIZE, DEFAULT_ITERATIONS, DEFAULT_STEP_SIZE};
use crate::combining::ContaminationConfig;
use crate::error::{Error, Result};
use crate::experiments::{PdpSpec, Scenario};
use crate::filterbank::{FbmcConfig, PamOrder};

pub const DEFAULT_OVERLAP_FACTOR: usize = 4;
pub const DEFAULT_NUM_SYMBOLS: usize = 64;
pub const DEFAULT_NUM_SYMBOLS_BLIND: usize = 128;
pub const DEFAULT_NUM_TAPS: usize = 8;
pub const DEFAULT_SNR_IN_DB: f64 = 0.0;
pub const DEFAULT_BETA: f64 = 0.3;
pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_TRIALS_BLIND: usize = 50;
pub const DEFAULT_SEED: u64 = 1;

const SECTIONS: [&str; 6] = ["fbmc", "channel", "array", "contamination", "blind", "run"];

/// Reads and validates a scenario file.
pub fn parse_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario_str(&text).map_err(|e| match e {
        Error::Syntax { line, message, .. } => Error::Syntax {
            path: path.display().to_string(),
            line,
            message,
        },
        other => other,
    })
}

/// Parses scenario text. Syntax errors carry a 1-based line number.
pub fn parse_scenario_str(text: &str) -> Result<Scenario> {
    let doc: Table = toml::from_str(text).map_err(|e| Error::Syntax {
        path: "<input>".into(),
        line: e
            .span()
            .map_or(1, |s| text[..s.start.min(text.len())].matches('\n').count() + 1),
        message: e.message().trim().to_string(),
    })?;
    for (name, value) in &doc {
        if !SECTIONS.contains(&name.as_str()) {
            return Err(Error::config(format!("unknown section [{name}]")));
        }
        if !value.is_table() {
            return Err(Error::config(format!("{name} must be a [section]")));
        }
    }
    let section = |name: &'static str| Section::new(name, doc.get(name).and_then(Value::as_table));
    let has = |name: &str| doc.contains_key(name);
    let blind_present = has("blind");

    let mut fbmc = section("fbmc");
    let num_subcarriers = fbmc.required_usize("L")?;
    let pam_order = match fbmc.usize("pam_order")? {
        Some(o) => PamOrder::from_order(o as u32).map_err(|e| keyed("fbmc.pam_order", e))?,
        None => PamOrder::default(),
    };
    let cfg = FbmcConfig {
        num_subcarriers,
        overlap_factor: fbmc.usize("overlap_factor")?.unwrap_or(DEFAULT_OVERLAP_FACTOR),
        num_symbols: fbmc.usize("num_symbols")?.unwrap_or(if blind_present {
            DEFAULT_NUM_SYMBOLS_BLIND
        } else {
            DEFAULT_NUM_SYMBOLS
        }),
        pam_order,
    };
    fbmc.finish()?;
    crate::filterbank::prototype::check_subcarriers(cfg.num_subcarriers)
        .map_err(|e| keyed("fbmc.L", e))?;
    crate::filterbank::prototype::frequency_samples(cfg.overlap_factor)
        .map_err(|e| keyed("fbmc.overlap_factor", e))?;
    cfg.validate().map_err(|e| keyed("fbmc.num_symbols", e))?;

    let mut ch = section("channel");
    let kind = ch.string("pdp")?.unwrap_or_else(|| "exponential".into());
    let pdp = match kind.as_str() {
        "exponential" => PdpSpec::Exponential {
            num_taps: ch.usize("num_taps")?.unwrap_or(DEFAULT_NUM_TAPS),
            decay_samples: ch.f64("decay_samples")?,
        },
        "flat" => PdpSpec::Flat,
        "custom" => PdpSpec::Custom {
            delays: ch.required("delays", Section::usize_list)?,
            powers: ch.required("powers", Section::f64_list)?,
        },
        other => {
            return Err(Error::config(format!(
                "channel.pdp must be \"exponential\", \"flat\" or \"custom\", got {other:?}"
            )))
        }
    };
    ch.finish_with_hint(&format!("pdp = \"{kind}\""))?;
    pdp.resolve(cfg.num_subcarriers).map_err(|e| keyed("channel", e))?;

    let mut array = section("array");
    let num_antennas = array.required_usize("M")?;
    let num_users = array.required_usize("K")?;
    let snr_in_db = array.f64("snr_in_db")?.unwrap_or(DEFAULT_SNR_IN_DB);
    array.finish()?;

    let contamination = if has("contamination") {
        let mut c = section("contamination");
        let num_cells = c.required_usize("num_cells")?;
        let beta = c.f64("beta")?;
        let gains = c.f64_list("cross_gains")?;
        let shared = c.bool("shared_pilots")?.unwrap_or(true);
        c.finish()?;
        let cross_gains = match (beta, gains) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "contamination.beta and contamination.cross_gains are mutually exclusive",
                ))
            }
            (_, Some(g)) => g,
            (b, None) => vec![b.unwrap_or(DEFAULT_BETA); num_cells.saturating_sub(1)],
        };
        Some(ContaminationConfig::new(num_cells, cross_gains, shared)?)
    } else {
        None
    };

    let blind = if blind_present {
        let mut b = section("blind");
        let init = match b.string("init")?.as_deref() {
            None | Some("mf_contaminated") => BlindInit::MfContaminated,
            Some(other) => {
                return Err(Error::config(format!(
                    "blind.init must be \"mf_contaminated\", got {other:?}"
                )))
            }
        };
        let cfg = BlindConfig {
            step_size: b.f64("step_size")?.unwrap_or(DEFAULT_STEP_SIZE),
            dispersion: b.f64("dispersion")?.unwrap_or(pam_order.dispersion()),
            iterations: b.usize("iterations")?.unwrap_or(DEFAULT_ITERATIONS),
            block_size: b.usize("block_size")?.unwrap_or(DEFAULT_BLOCK_SIZE),
            init,
        };
        b.finish()?;
        cfg.validate()?;
        Some(cfg)
    } else {
        None
    };

    let mut run = section("run");
    let trials = run.usize("trials")?.unwrap_or(if blind_present {
        DEFAULT_TRIALS_BLIND
    } else {
        DEFAULT_TRIALS
    });
    let seed = run.usize("seed")?.map_or(DEFAULT_SEED, |s| s as u64);
    run.finish()?;

    let scenario = Scenario {
        fbmc: cfg,
        pdp,
        num_antennas,
        num_users,
        snr_in_db,
        contamination,
        blind,
        trials,
        seed,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Canonical text for `s`: every key written explicitly, fixed order.
/// Parsing the result yields a scenario equal to `s`.
pub fn to_canonical_string(s: &Scenario) -> Result<String> {
    if let Some(BlindConfig {
        init: BlindInit::Custom(_),
        ..
    }) = &s.blind
    {
        return Err(Error::config(
            "custom initial weights cannot be written to a scenario file",
        ));
    }
    if s.seed > i64::MAX as u64 {
        return Err(Error::config(format!(
            "run.seed {} does not fit a scenario file (max {})",
            s.seed,
            i64::MAX
        )));
    }
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "[fbmc]");
    let _ = writeln!(w, "L = {}", s.fbmc.num_subcarriers);
    let _ = writeln!(w, "overlap_factor = {}", s.fbmc.overlap_factor);
    let _ = writeln!(w, "num_symbols = {}", s.fbmc.num_symbols);
    let _ = writeln!(w, "pam_order = {}", s.fbmc.pam_order.order());
    let _ = writeln!(w, "\n[channel]");
    match &s.pdp {
        PdpSpec::Exponential {
            num_taps,
            decay_samples,
        } => {
            let _ = writeln!(w, "pdp = \"exponential\"");
            let _ = writeln!(w, "num_taps = {num_taps}");
            if let Some(d) = decay_samples {
                let _ = writeln!(w, "decay_samples = {}", float(*d));
            }
        }
        PdpSpec::Flat => {
            let _ = writeln!(w, "pdp = \"flat\"");
        }
        PdpSpec::Custom { delays, powers } => {
            let _ = writeln!(w, "pdp = \"custom\"");
            let d: Vec<String> = delays.iter().map(|d| d.to_string()).collect();
            let p: Vec<String> = powers.iter().map(|p| float(*p)).collect();
            let _ = writeln!(w, "delays = [{}]", d.join(", "));
            let _ = writeln!(w, "powers = [{}]", p.join(", "));
        }
    }
    let _ = writeln!(w, "\n[array]");
    let _ = writeln!(w, "M = {}", s.num_antennas);
    let _ = writeln!(w, "K = {}", s.num_users);
    let _ = writeln!(w, "snr_in_db = {}", float(s.snr_in_db));
    if let Some(c) = &s.contamination {
        let g: Vec<String> = c.cross_gains.iter().map(|b| float(*b)).collect();
        let _ = writeln!(w, "\n[contamination]");
        let _ = writeln!(w, "num_cells = {}", c.num_cells);
        let _ = writeln!(w, "cross_gains = [{}]", g.join(", "));
        let _ = writeln!(w, "shared_pilots = {}", c.shared_pilots);
    }
    if let Some(b) = &s.blind {
        let _ = writeln!(w, "\n[blind]");
        let _ = writeln!(w, "step_size = {}", float(b.step_size));
        let _ = writeln!(w, "iterations = {}", b.iterations);
        let _ = writeln!(w, "block_size = {}", b.block_size);
        let _ = writeln!(w, "dispersion = {}", float(b.dispersion));
        let _ = writeln!(w, "init = \"mf_contaminated\"");
    }
    let _ = writeln!(w, "\n[run]");
    let _ = writeln!(w, "trials = {}", s.trials);
    let _ = writeln!(w, "seed = {}", s.seed);
    Ok(out)
}

/// Shortest text that parses back to the same `f64`, always in float syntax.
fn float(v: f64) -> String {
    format!("{v:?}")
}

fn keyed(key: &str, err: Error) -> Error {
    match err {
        Error::Config(msg) if !msg.contains(key) => Error::Config(format!("{key}: {msg}")),
        other => other,
    }
}

/// Typed access to one section; remembers which keys were consumed.
struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    used: Vec<&'static str>,
}

impl<'a> Section<'a> {
    fn new(name: &'static str, table: Option<&'a Table>) -> Self {
        Section {
            name,
            table,
            used: Vec::new(),
        }
    }

    fn key(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.push(key);
        self.table.and_then(|t| t.get(key))
    }

    fn required<T>(
        &mut self,
        key: &'static str,
        get: fn(&mut Self, &'static str) -> Result<Option<T>>,
    ) -> Result<T> {
        get(self, key)?.ok_or_else(|| Error::config(format!("{} is required", self.key(key))))
    }

    fn required_usize(&mut self, key: &'static str) -> Result<usize> {
        self.required(key, Self::usize)
    }

    fn usize(&mut self, key: &'static str) -> Result<Option<usize>> {
        let full = self.key(key);
        self.raw(key).map(|v| to_usize(&full, v)).transpose()
    }

    fn f64(&mut self, key: &'static str) -> Result<Option<f64>> {
        let full = self.key(key);
        self.raw(key).map(|v| to_f64(&full, v)).transpose()
    }

    fn bool(&mut self, key: &'static str) -> Result<Option<bool>> {
        let full = self.key(key);
        self.raw(key)
            .map(|v| {
                v.as_bool()
                    .ok_or_else(|| Error::config(format!("{full} must be true or false")))
            })
            .transpose()
    }

    fn string(&mut self, key: &'static str) -> Result<Option<String>> {
        let full = self.key(key);
        self.raw(key)
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| Error::config(format!("{full} must be a quoted string")))
            })
            .transpose()
    }

    fn list(&mut self, key: &'static str) -> Result<Option<&'a Vec<Value>>> {
        let full = self.key(key);
        self.raw(key)
            .map(|v| {
                v.as_array()
                    .ok_or_else(|| Error::config(format!("{full} must be a list")))
            })
            .transpose()
    }

    fn usize_list(&mut self, key: &'static str) -> Result<Option<Vec<usize>>> {
        let full = self.key(key);
        self.list(key)?
            .map(|a| a.iter().map(|v| to_usize(&full, v)).collect())
            .transpose()
    }

    fn f64_list(&mut self, key: &'static str) -> Result<Option<Vec<f64>>> {
        let full = self.key(key);
        self.list(key)?
            .map(|a| a.iter().map(|v| to_f64(&full, v)).collect())
            .transpose()
    }

    fn finish(self) -> Result<()> {
        self.finish_with_hint("")
    }

    /// Rejects keys that were never read.
    fn finish_with_hint(self, context: &str) -> Result<()> {
        let Some(table) = self.table else {
            return Ok(());
        };
        if let Some(k) = table.keys().find(|k| !self.used.contains(&k.as_str())) {
            let suffix = if context.is_empty() {
                String::new()
            } else {
                format!(" with {context}")
            };
            return Err(Error::config(format!(
                "unknown key {}.{k}{suffix}",
                self.name
            )));
        }
        Ok(())
    }
}

fn to_usize(key: &str, v: &Value) -> Result<usize> {
    match v.as_integer() {
        Some(i) if i >= 0 => usize::try_from(i)
            .map_err(|_| Error::config(format!("{key} is too large: {i}"))),
        Some(i) => Err(Error::config(format!("{key} must be nonnegative, got {i}"))),
        None => Err(Error::config(format!("{key} must be an integer"))),
    }
}

fn to_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) if f.is_finite() => Ok(*f),
        Value::Float(_) => Err(Error::config(format!("{key} must be finite"))),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::config(format!("{key} must be a number"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[fbmc]\nL = 64\n\n[array]\nM = 128\nK = 6\n";

    #[test]
    fn minimal_file_gets_defaults() {
        let s = parse_scenario_str(MINIMAL).unwrap();
        assert_eq!(s.fbmc.num_subcarriers, 64);
        assert_eq!(s.fbmc.overlap_factor, DEFAULT_OVERLAP_FACTOR);
        assert_eq!(s.fbmc.num_symbols, DEFAULT_NUM_SYMBOLS);
        assert_eq!(s.pdp, PdpSpec::default());
        assert_eq!((s.num_antennas, s.num_users), (128, 6));
        assert_eq!(s.snr_in_db, DEFAULT_SNR_IN_DB);
        assert!(s.contamination.is_none() && s.blind.is_none());
        assert_eq!((s.trials, s.seed), (DEFAULT_TRIALS, DEFAULT_SEED));
    }

    #[test]
    fn blind_section_switches_defaults() {
        let s = parse_scenario_str(&format!(
            "{MINIMAL}[contamination]\nnum_cells = 7\n[blind]\n"
        ))
        .unwrap();
        assert_eq!(s.fbmc.num_symbols, DEFAULT_NUM_SYMBOLS_BLIND);
        assert_eq!(s.trials, DEFAULT_TRIALS_BLIND);
        assert_eq!(s.contamination.unwrap().cross_gains, vec![DEFAULT_BETA; 6]);
        assert_eq!(s.blind.unwrap().step_size, DEFAULT_STEP_SIZE);
    }

    #[test]
    fn non_power_of_two() {
        let err = parse_scenario_str("[fbmc]\nL = 60\n[array]\nM = 4\nK = 1\n").unwrap_err();
        assert!(err.to_string().contains("L must be a power of two"), "{err}");
        assert!(err.to_string().contains("fbmc.L"), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_scenario_str("[fbmc]\nL = 64\ncp_length = 16\n[array]\nM = 4\nK = 1\n")
            .unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("fbmc.cp_length"), "{err}");
    }

    #[test]
    fn key_for_other_pdp_is_rejected() {
        let err = parse_scenario_str(&format!("{MINIMAL}[channel]\npdp = \"flat\"\nnum_taps = 3\n"))
            .unwrap_err();
        assert!(err.to_string().contains("channel.num_taps"), "{err}");
    }

    #[test]
    fn syntax_error_has_line() {
        let err = parse_scenario_str("[fbmc]\nL = 64\n\n[array]\nM = = 3\n").unwrap_err();
        match err {
            Error::Syntax { line, .. } => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_section_and_missing_key() {
        assert!(parse_scenario_str(&format!("{MINIMAL}[extra]\na = 1\n")).is_err());
        let err = parse_scenario_str("[fbmc]\nL = 64\n[array]\nK = 6\n").unwrap_err();
        assert!(err.to_string().contains("array.M is required"), "{err}");
    }

    #[test]
    fn wrong_types() {
        let err = parse_scenario_str("[fbmc]\nL = \"64\"\n[array]\nM = 4\nK = 1\n").unwrap_err();
        assert!(err.to_string().contains("fbmc.L must be an integer"));
        let err = parse_scenario_str(&format!("{MINIMAL}[run]\nseed = -1\n")).unwrap_err();
        assert!(err.to_string().contains("run.seed"));
    }

    #[test]
    fn beta_and_cross_gains_conflict() {
        let text = format!("{MINIMAL}[contamination]\nnum_cells = 3\nbeta = 0.1\ncross_gains = [0.1, 0.2]\n");
        assert!(parse_scenario_str(&text).is_err());
    }

    #[test]
    fn canonical_round_trip() {
        for s in [
            Scenario::self_equalization_default(),
            Scenario::blind_tracking_default(),
            parse_scenario_str(&format!(
                "{MINIMAL}[channel]\npdp = \"custom\"\ndelays = [0, 2, 5]\npowers = [0.5, 0.3, 0.2]\n"
            ))
            .unwrap(),
        ] {
            let text = to_canonical_string(&s).unwrap();
            assert_eq!(parse_scenario_str(&text).unwrap(), s, "{text}");
            assert_eq!(to_canonical_string(&parse_scenario_str(&text).unwrap()).unwrap(), text);
        }
    }
}
