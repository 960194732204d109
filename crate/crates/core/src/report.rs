//! Report bundles: a JSON summary plus one CSV table (and optionally one SVG
//! plot) per curve.
//!
//! Every file is written to a temporary name and renamed into place, so a
//! failed run never leaves a truncated table behind. Output bytes depend only
//! on the report contents and [`crate::VERSION`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::blind::Baselines;
use crate::error::{Error, Result};
use crate::experiments::{
    PdpSpec, Report, Scenario, SinrCurve, SinrReport, SweepResult, TrackingReport,
};
use crate::scenario;

pub const SUMMARY_FILE: &str = "summary.json";
pub const SWEEP_SUMMARY_FILE: &str = "sweep.json";

/// Paths written for one report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportBundle {
    pub summary: PathBuf,
    pub tables: Vec<PathBuf>,
    pub plots: Vec<PathBuf>,
}

/// One row of a curve table.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub index: usize,
    pub value_db: f64,
    pub combiner: String,
    pub trial_stat: String,
    /// Values of the table's extra columns, in order.
    pub extra: Vec<f64>,
}

/// A curve as a table with columns
/// `<index_column>,value_db,combiner,trial_stat[,extra...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub index_column: String,
    pub extra_columns: Vec<String>,
    pub rows: Vec<CurveRow>,
}

impl CurveTable {
    pub fn header(&self) -> String {
        let mut cols = vec![
            self.index_column.clone(),
            "value_db".into(),
            "combiner".into(),
            "trial_stat".into(),
        ];
        cols.extend(self.extra_columns.iter().cloned());
        cols.join(",")
    }

    /// CSV text; reals carry 17 significant digits, every line ends in `\n`.
    pub fn to_csv(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{}",
                r.index,
                real(r.value_db),
                r.combiner,
                r.trial_stat
            );
            for v in &r.extra {
                let _ = write!(out, ",{}", real(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Syntax {
            path: "<csv>".into(),
            line,
            message: msg.to_string(),
        };
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().ok_or_else(|| bad(1, "empty table"))?.split(',').collect();
        if header.len() < 4 || header[1..4] != ["value_db", "combiner", "trial_stat"] {
            return Err(bad(1, "unexpected header"));
        }
        let mut table = CurveTable {
            index_column: header[0].to_string(),
            extra_columns: header[4..].iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        };
        for (i, line) in lines.enumerate() {
            let n = i + 2;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != header.len() {
                return Err(bad(n, "wrong number of fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(n, "bad number"));
            table.rows.push(CurveRow {
                index: f[0].parse().map_err(|_| bad(n, "bad index"))?,
                value_db: num(f[1])?,
                combiner: f[2].to_string(),
                trial_stat: f[3].to_string(),
                extra: f[4..].iter().map(|s| num(s)).collect::<Result<_>>()?,
            });
        }
        Ok(table)
    }
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Mean and median rows of one combiner's per-subcarrier curve.
pub fn sinr_table(curve: &SinrCurve) -> CurveTable {
    let name = curve.combiner.name();
    let rows = [("mean", &curve.mean_db), ("median", &curve.median_db)]
        .into_iter()
        .flat_map(|(stat, values)| {
            values.iter().enumerate().map(move |(l, v)| CurveRow {
                index: l,
                value_db: *v,
                combiner: name.to_string(),
                trial_stat: stat.to_string(),
                extra: Vec::new(),
            })
        })
        .collect();
    CurveTable {
        index_column: "subcarrier_index".into(),
        extra_columns: Vec::new(),
        rows,
    }
}

/// Median blind trace with the three baselines repeated on every row.
pub fn tracking_table(report: &TrackingReport) -> CurveTable {
    let b = report.baselines;
    CurveTable {
        index_column: "iteration".into(),
        extra_columns: vec![
            "mf_noisy_db".into(),
            "mf_clean_db".into(),
            "mmse_clean_db".into(),
        ],
        rows: report
            .median_trace
            .iter()
            .enumerate()
            .map(|(i, v)| CurveRow {
                index: i,
                value_db: *v,
                combiner: "blind".into(),
                trial_stat: "median".into(),
                extra: vec![b.mf_noisy, b.mf_clean, b.mmse_clean],
            })
            .collect(),
    }
}

/// Fully resolved scenario, defaults included.
pub fn scenario_json(s: &Scenario) -> Value {
    let pdp = s.pdp.resolve(s.fbmc.num_subcarriers).ok();
    let kind = match &s.pdp {
        PdpSpec::Exponential { .. } => "exponential",
        PdpSpec::Flat => "flat",
        PdpSpec::Custom { .. } => "custom",
    };
    let mut channel = Map::new();
    channel.insert("pdp".into(), json!(kind));
    if let PdpSpec::Exponential {
        num_taps,
        decay_samples,
    } = &s.pdp
    {
        let decay = decay_samples.unwrap_or((s.fbmc.num_subcarriers as f64 / 16.0).max(1.0));
        channel.insert("num_taps".into(), json!(num_taps));
        channel.insert("decay_samples".into(), json!(decay));
    }
    if let Some(p) = &pdp {
        channel.insert("delays".into(), json!(p.delays()));
        channel.insert("powers".into(), json!(p.powers()));
        channel.insert("timing_advance".into(), json!(crate::link::timing_advance(p)));
    }
    let mut root = Map::new();
    root.insert(
        "fbmc".into(),
        json!({
            "L": s.fbmc.num_subcarriers,
            "overlap_factor": s.fbmc.overlap_factor,
            "num_symbols": s.fbmc.num_symbols,
            "pam_order": s.fbmc.pam_order.order(),
        }),
    );
    root.insert("channel".into(), Value::Object(channel));
    root.insert(
        "array".into(),
        json!({"M": s.num_antennas, "K": s.num_users, "snr_in_db": s.snr_in_db}),
    );
    if let Some(c) = &s.contamination {
        root.insert(
            "contamination".into(),
            json!({
                "num_cells": c.num_cells,
                "cross_gains": c.cross_gains,
                "shared_pilots": c.shared_pilots,
            }),
        );
    }
    if let Some(b) = &s.blind {
        root.insert(
            "blind".into(),
            json!({
                "step_size": b.step_size,
                "iterations": b.iterations,
                "block_size": b.block_size,
                "dispersion": b.dispersion,
                "init": "mf_contaminated",
            }),
        );
    }
    root.insert("run".into(), json!({"trials": s.trials, "seed": s.seed}));
    Value::Object(root)
}

fn curve_stats(c: &SinrCurve) -> Value {
    let lo = c.mean_db.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = c.mean_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let avg = c.mean_db.iter().sum::<f64>() / c.mean_db.len().max(1) as f64;
    json!({
        "mean_over_subcarriers_db": avg,
        "min_subcarrier_db": lo,
        "max_subcarrier_db": hi,
        "mean_subcarrier_variance_db2": c.mean_subcarrier_variance(),
        "median_subcarrier_spread_db": c.median_spread(),
    })
}

fn baselines_json(b: &Baselines) -> Value {
    json!({"mf_noisy_db": b.mf_noisy, "mf_clean_db": b.mf_clean, "mmse_clean_db": b.mmse_clean})
}

/// Aggregate statistics shown in the summary.
pub fn aggregates(report: &Report) -> Value {
    match report {
        Report::Sinr(r) => json!({
            "target_sinr_db": r.target_sinr_db,
            "trials": r.trials(),
            "mf": curve_stats(&r.mf),
            "mmse": curve_stats(&r.mmse),
            "mmse_dominance_fraction": r.mmse_dominance_fraction(),
            "mmse_flatter_fraction": r.mmse_flatter_fraction(),
        }),
        Report::Tracking(r) => json!({
            "trials": r.traces.len(),
            "iterations": r.median_trace.len(),
            "baselines": baselines_json(&r.baselines),
            "initial_sinr_db": r.median_trace.first(),
            "final_sinr_db": r.final_sinr(),
            "mf_clean_crossing_iteration": r.mf_clean_crossing(),
        }),
    }
}

fn kind_name(report: &Report) -> &'static str {
    match report {
        Report::Sinr(_) => "self_equalization",
        Report::Tracking(_) => "blind_tracking",
    }
}

fn summary_json(report: &Report, failures: Vec<Value>) -> Value {
    json!({
        "version": crate::VERSION,
        "kind": kind_name(report),
        "scenario": scenario_json(report.scenario()),
        "scenario_file": scenario::to_canonical_string(report.scenario()).ok(),
        "aggregates": aggregates(report),
        "failures": failures,
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Writes files into one directory; on drop without `commit`, removes them.
struct Writer {
    dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        })
    }

    fn put(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let result = fs::write(&tmp, contents).and_then(|_| fs::rename(&tmp, &path));
        if let Err(e) = result {
            let _ = fs::remove_file(&tmp);
            return Err(Error::io(&path, e));
        }
        self.written.push(path.clone());
        Ok(path)
    }

    fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Writer {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

/// Writes `summary.json`, the curve tables and (with `plot`) SVG plots.
pub fn write_reports(report: &Report, out_dir: impl AsRef<Path>, plot: bool) -> Result<ReportBundle> {
    write_with_failures(report, out_dir.as_ref(), plot, Vec::new())
}

fn write_with_failures(
    report: &Report,
    out_dir: &Path,
    plot: bool,
    failures: Vec<Value>,
) -> Result<ReportBundle> {
    let mut w = Writer::new(out_dir)?;
    let mut tables = Vec::new();
    let mut plots = Vec::new();
    match report {
        Report::Sinr(r) => {
            for curve in [&r.mf, &r.mmse] {
                let name = format!("sinr_{}", curve.combiner.name());
                tables.push(w.put(&format!("{name}.csv"), &sinr_table(curve).to_csv())?);
            }
            if plot {
                plots.push(w.put("sinr.svg", &sinr_plot(r))?);
            }
        }
        Report::Tracking(r) => {
            tables.push(w.put("tracking.csv", &tracking_table(r).to_csv())?);
            if plot {
                plots.push(w.put("tracking.svg", &tracking_plot(r))?);
            }
        }
    }
    let summary = w.put(SUMMARY_FILE, &pretty(&summary_json(report, failures)))?;
    w.commit();
    Ok(ReportBundle {
        summary,
        tables,
        plots,
    })
}

/// Directory name of sweep point `index`.
pub fn sweep_point_dir(index: usize) -> String {
    format!("point_{index:03}")
}

/// One bundle per successful point plus `sweep.json` listing every point
/// and its failure message, if any.
pub fn write_sweep(result: &SweepResult, out_dir: impl AsRef<Path>, plot: bool) -> Result<PathBuf> {
    let out_dir = out_dir.as_ref();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (i, p) in result.points.iter().enumerate() {
        let dir = sweep_point_dir(i);
        match &p.outcome {
            Ok(report) => {
                write_reports(report, out_dir.join(&dir), plot)?;
                points.push(json!({
                    "index": i, "value": p.value, "seed": p.seed, "status": "ok",
                    "dir": dir, "aggregates": aggregates(report),
                }));
            }
            Err(e) => {
                let entry = json!({
                    "index": i, "value": p.value, "seed": p.seed, "status": "failed",
                    "error": e.to_string(),
                });
                failures.push(entry.clone());
                points.push(entry);
            }
        }
    }
    let summary = json!({
        "version": crate::VERSION,
        "axis": result.axis.name(),
        "points": points,
        "failures": failures,
    });
    let mut w = Writer::new(out_dir)?;
    let path = w.put(SWEEP_SUMMARY_FILE, &pretty(&summary))?;
    w.commit();
    Ok(path)
}

const PLOT_W: f64 = 640.0;
const PLOT_H: f64 = 400.0;
const MARGIN: f64 = 50.0;

struct Series<'a> {
    label: &'a str,
    color: &'a str,
    values: Vec<f64>,
}

fn line_plot(title: &str, x_label: &str, series: &[Series]) -> String {
    let finite = series.iter().flat_map(|s| s.values.iter().copied()).filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        (lo, hi) = (lo - 1.0, hi + 1.0);
    }
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(1).max(2);
    let x = |i: usize| MARGIN + (PLOT_W - 2.0 * MARGIN) * i as f64 / (n - 1) as f64;
    let y = |v: f64| PLOT_H - MARGIN - (PLOT_H - 2.0 * MARGIN) * (v.clamp(lo, hi) - lo) / (hi - lo);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PLOT_W}" height="{PLOT_H}" viewBox="0 0 {PLOT_W} {PLOT_H}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>"#,
        PLOT_W / 2.0
    );
    let (x0, x1, y0, y1) = (MARGIN, PLOT_W - MARGIN, PLOT_H - MARGIN, MARGIN);
    let _ = writeln!(
        s,
        r#"<polyline points="{x0},{y1} {x0},{y0} {x1},{y0}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{x_label}</text>"#,
        PLOT_W / 2.0,
        PLOT_H - 12.0
    );
    for (v, anchor_y) in [(lo, y0), (hi, y1)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{anchor_y}" text-anchor="end" font-family="sans-serif" font-size="11">{v:.1} dB</text>"#,
            MARGIN - 4.0
        );
    }
    for (k, ser) in series.iter().enumerate() {
        let pts: Vec<String> = ser
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{:.2},{:.2}", x(i), y(*v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            pts.join(" "),
            ser.color
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{}">{}</text>"#,
            x1 - 120.0,
            y1 + 14.0 * (k + 1) as f64,
            ser.color,
            ser.label
        );
    }
    s.push_str("</svg>\n");
    s
}

fn sinr_plot(r: &SinrReport) -> String {
    let l = r.num_subcarriers();
    line_plot(
        "Output SINR per subcarrier (ensemble mean)",
        "subcarrier index",
        &[
            Series { label: "MF", color: "#1f77b4", values: r.mf.mean_db.clone() },
            Series { label: "MMSE", color: "#d62728", values: r.mmse.mean_db.clone() },
            Series { label: "target", color: "#555555", values: vec![r.target_sinr_db; l] },
        ],
    )
}

fn tracking_plot(r: &TrackingReport) -> String {
    let n = r.median_trace.len();
    let b = r.baselines;
    line_plot(
        "Blind tracking (median over trials)",
        "iteration",
        &[
            Series { label: "blind", color: "#d62728", values: r.median_trace.clone() },
            Series { label: "MF, contaminated", color: "#7f7f7f", values: vec![b.mf_noisy; n] },
            Series { label: "MF, clean", color: "#1f77b4", values: vec![b.mf_clean; n] },
            Series { label: "MMSE, clean", color: "#2ca02c", values: vec![b.mmse_clean; n] },
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_extremes() {
        let t = CurveTable {
            index_column: "iteration".into(),
            extra_columns: vec!["a".into()],
            rows: vec![
                CurveRow {
                    index: 0,
                    value_db: 0.1 + 0.2,
                    combiner: "blind".into(),
                    trial_stat: "median".into(),
                    extra: vec![-200.0],
                },
                CurveRow {
                    index: 1,
                    value_db: f64::MIN_POSITIVE,
                    combiner: "blind".into(),
                    trial_stat: "median".into(),
                    extra: vec![1.0 / 3.0],
                },
            ],
        };
        let text = t.to_csv();
        assert!(text.ends_with('\n'));
        assert_eq!(CurveTable::from_csv(&text).unwrap(), t);
    }

    #[test]
    fn bad_csv() {
        assert!(CurveTable::from_csv("").is_err());
        assert!(CurveTable::from_csv("x,y\n").is_err());
        assert!(CurveTable::from_csv("i,value_db,combiner,trial_stat\n1,2\n").is_err());
    }
}
