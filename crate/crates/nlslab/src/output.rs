//! Artifact writers: CSV tables, JSON documents, SVG log-log plots and the
//! run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nlslab_core::observables::{weighted_envelope, DecayFit, ObservableSeries};
use nlslab_core::solver::Trajectory;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Trajectory CSV columns, in order.
pub const TRAJECTORY_COLUMNS: [&str; 14] = [
    "t",
    "linf",
    "l2",
    "l3",
    "l4",
    "l5",
    "l6",
    "h_half_dot",
    "h1",
    "mass",
    "energy",
    "A_env",
    "V_pc",
    "horizon_flag",
];

/// Twelve significant digits in scientific notation.
pub fn fmt12(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        format!("{v}")
    }
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| HarnessError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| HarnessError::Serialize(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// RFC-4180 table with a header row.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| HarnessError::Serialize(e.to_string());
    writer.write_record(header).map_err(ser)?;
    for row in rows {
        writer.write_record(row).map_err(ser)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| HarnessError::Serialize(e.to_string()))?;
    write_atomic(path, &bytes)
}

/// One row per sample time; missing series print as `NaN` and samples past
/// the horizon are kept with `horizon_flag = 1`.
pub fn trajectory_rows(traj: &Trajectory, envelope_weight: f64) -> Vec<Vec<String>> {
    let envelope = traj
        .series("linf")
        .map(|linf| weighted_envelope(linf, envelope_weight));
    let column = |name: &str| -> Option<&ObservableSeries> { traj.series(name) };
    let names = &TRAJECTORY_COLUMNS[1..11];
    traj.times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut row = Vec::with_capacity(TRAJECTORY_COLUMNS.len());
            row.push(fmt12(t));
            for name in names {
                row.push(fmt12(column(name).map_or(f64::NAN, |s| s.values[k])));
            }
            let a = envelope
                .as_ref()
                .map_or(f64::NAN, |e| e.at(t).unwrap_or(0.0));
            row.push(fmt12(a));
            row.push(fmt12(column("V_pc").map_or(f64::NAN, |s| s.values[k])));
            row.push(if t > traj.validity_horizon { "1" } else { "0" }.into());
            row
        })
        .collect()
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory, envelope_weight: f64) -> Result<()> {
    write_table(
        path,
        &TRAJECTORY_COLUMNS,
        &trajectory_rows(traj, envelope_weight),
    )
}

/// Acceptance check outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    /// `NaN` when the quantity could not be measured; stored as `null`.
    #[serde(deserialize_with = "nan_from_null")]
    pub measured: f64,
    pub expected: String,
    pub pass: bool,
}

/// Shortest readable form: scientific below 1e-3, plain otherwise.
pub fn compact(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-3 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn nan_from_null<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl Verdict {
    pub fn within(name: &str, measured: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            expected: format!("{} +/- {}", compact(target), compact(tol)),
            pass: (measured - target).abs() <= tol,
        }
    }

    pub fn in_range(name: &str, measured: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            expected: format!("[{}, {}]", compact(lo), compact(hi)),
            pass: measured >= lo && measured <= hi,
        }
    }

    pub fn at_most(name: &str, measured: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            expected: format!("<= {}", compact(bound)),
            pass: measured <= bound,
        }
    }
}

/// Fitted power law as listed in manifests and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub quantity: String,
    /// Rate the experiment compares against, if any.
    pub claimed: Option<f64>,
    pub exponent: f64,
    pub window: [f64; 2],
    pub constant: f64,
    pub r_squared: f64,
    pub samples: usize,
}

impl FitRow {
    pub fn new(quantity: &str, claimed: Option<f64>, fit: &DecayFit) -> Self {
        Self {
            quantity: quantity.into(),
            claimed,
            exponent: fit.exponent,
            window: fit.window,
            constant: fit.constant(),
            r_squared: fit.r_squared,
            samples: fit.samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config_hash: String,
    pub kind: String,
    pub code_version: String,
    pub started: String,
    pub finished: String,
    pub validity_horizon: Option<f64>,
    pub verdicts: Vec<Verdict>,
    pub fits: Vec<FitRow>,
    pub artifacts: Vec<String>,
    /// Set when the run aborted; artifacts written so far are kept.
    pub error: Option<String>,
    pub passed: bool,
}

impl RunManifest {
    pub fn failed_verdicts(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.pass)
    }
}

/// Static log-log chart of one or more positive series, with an optional
/// fitted power law drawn over its window and its slope printed.
pub fn loglog_svg(title: &str, series: &[(&str, &[(f64, f64)])], fit: Option<&DecayFit>) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const PAD: f64 = 60.0;
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let positive: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().copied())
        .filter(|&(t, v)| t > 0.0 && v > 0.0 && v.is_finite())
        .map(|(t, v)| (t.log10(), v.log10()))
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    if positive.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">no positive samples</text>"#,
            W / 2.0,
            H / 2.0
        );
        svg.push_str("</svg>\n");
        return svg;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &positive {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 - x0 < 1e-9 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-9 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let _ = writeln!(
        svg,
        r##"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(
        svg,
        r#"<text x="{PAD}" y="{}" font-family="sans-serif" font-size="11">log10 t: [{x0:.3}, {x1:.3}]   log10 value: [{y0:.3}, {y1:.3}]</text>"#,
        H - PAD / 3.0
    );
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts
            .iter()
            .filter(|&&(t, v)| t > 0.0 && v > 0.0 && v.is_finite())
            .map(|&(t, v)| format!("{:.2},{:.2}", sx(t.log10()), sy(v.log10())))
            .collect();
        if !path.is_empty() {
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                path.join(" ")
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#,
            W - PAD - 150.0,
            PAD + 16.0 * (i as f64 + 1.0),
            escape(label)
        );
    }
    if let Some(f) = fit {
        let [a, b] = f.window;
        let (ya, yb) = (f.predict(a).log10(), f.predict(b).log10());
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#000" stroke-dasharray="6 4" stroke-width="1.5"/>"##,
            sx(a.log10()),
            sy(ya),
            sx(b.log10()),
            sy(yb)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13">fitted slope -{:.4} on [{a:.3}, {b:.3}]</text>"#,
            PAD + 10.0,
            PAD + 18.0,
            f.exponent
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt12(1.0), "1.00000000000e0");
        assert_eq!(fmt12(-0.000123456789012345), "-1.23456789012e-4");
        assert_eq!(fmt12(f64::NAN), "NaN");
    }

    #[test]
    fn svg_is_well_formed_and_annotated() {
        let pts: Vec<(f64, f64)> = (1..20).map(|k| (k as f64, (k as f64).powf(-1.5))).collect();
        let fit = DecayFit {
            exponent: 1.5,
            log_constant: 0.0,
            r_squared: 1.0,
            window: [2.0, 10.0],
            samples: 9,
        };
        let svg = loglog_svg("a < b", &[("linf", &pts)], Some(&fit));
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("fitted slope -1.5000"));
        assert!(svg.contains("a &lt; b"));
        let empty = loglog_svg("empty", &[("x", &[])], None);
        assert!(empty.contains("no positive samples"));
    }

    #[test]
    fn verdict_helpers() {
        assert!(Verdict::within("x", 1.52, 1.5, 0.05).pass);
        assert!(!Verdict::within("x", 1.56, 1.5, 0.05).pass);
        assert!(Verdict::in_range("r", 4.0, 3.5, 4.5).pass);
        assert!(!Verdict::at_most("b", 2.0, 1.5).pass);
    }

    #[test]
    fn unmeasured_verdict_round_trips() {
        let v = Verdict::at_most("x", f64::NAN, 1.0);
        let text = serde_json::to_string(&v).unwrap();
        assert!(text.contains("null"));
        let back: Verdict = serde_json::from_str(&text).unwrap();
        assert!(back.measured.is_nan() && !back.pass);
    }
}
