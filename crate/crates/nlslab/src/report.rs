//! Markdown summary assembled from run manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{HarnessError, Result};
use crate::output::RunManifest;

type Unreadable = Vec<(PathBuf, String)>;

/// Manifests matched by a glob pattern. Directories resolve to their
/// `manifest.json`; unreadable entries are returned separately.
pub fn collect_manifests(pattern: &str) -> Result<(Vec<RunManifest>, Unreadable)> {
    let paths = glob::glob(pattern)
        .map_err(|e| HarnessError::Config(vec![format!("runs: bad glob pattern: {e}")]))?;
    let mut found = Vec::new();
    let mut missing = Vec::new();
    for entry in paths {
        let path = match entry {
            Ok(p) => p,
            Err(e) => {
                missing.push((e.path().to_path_buf(), e.to_string()));
                continue;
            }
        };
        let file = if path.is_dir() {
            path.join("manifest.json")
        } else {
            path
        };
        match read_manifest(&file) {
            Ok(m) => found.push(m),
            Err(reason) => missing.push((file, reason)),
        }
    }
    found.sort_by(|a, b| (&a.kind, &a.run_id).cmp(&(&b.kind, &b.run_id)));
    Ok((found, missing))
}

fn read_manifest(path: &Path) -> std::result::Result<RunManifest, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn num(v: f64) -> String {
    if v.is_finite() && v != 0.0 && v.abs() < 1e-3 {
        format!("{v:.3e}")
    } else if v.is_finite() {
        format!("{v:.4}")
    } else {
        "n/a".into()
    }
}

/// One table per experiment kind: each fit contributes a row, and runs
/// without fits contribute one row per verdict.
pub fn render_report(manifests: &[RunManifest], missing: &[(PathBuf, String)]) -> String {
    let mut out = String::from("# nlslab report\n\n");
    if manifests.is_empty() {
        out.push_str("No completed runs matched.\n");
    }
    let mut by_kind: BTreeMap<&str, Vec<&RunManifest>> = BTreeMap::new();
    for m in manifests {
        by_kind.entry(m.kind.as_str()).or_default().push(m);
    }
    for (kind, runs) in by_kind {
        let _ = writeln!(out, "## {kind}\n");
        out.push_str("| run | quantity | claimed | measured | window | constant | verdict |\n");
        out.push_str("|---|---|---|---|---|---|---|\n");
        for m in runs {
            let overall = if m.passed { "pass" } else { "FAIL" };
            if let Some(err) = &m.error {
                let _ = writeln!(
                    out,
                    "| {} | aborted | | | | | FAIL: {} |",
                    m.run_id,
                    err.replace('|', "/")
                );
                continue;
            }
            for f in &m.fits {
                let verdict = m
                    .verdicts
                    .iter()
                    .find(|v| {
                        v.name
                            .starts_with(f.quantity.split('_').next().unwrap_or(""))
                    })
                    .map_or(overall, |v| if v.pass { "pass" } else { "FAIL" });
                let _ = writeln!(
                    out,
                    "| {} | {} exponent | {} | {} | [{}, {}] | {} | {} |",
                    m.run_id,
                    f.quantity,
                    f.claimed.map_or("n/a".into(), num),
                    num(f.exponent),
                    num(f.window[0]),
                    num(f.window[1]),
                    num(f.constant),
                    verdict
                );
            }
            for v in &m.verdicts {
                if v.name.ends_with("_exponent") {
                    continue;
                }
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | | | {} |",
                    m.run_id,
                    v.name,
                    v.expected.replace('|', "\\|"),
                    num(v.measured),
                    if v.pass { "pass" } else { "FAIL" }
                );
            }
            if m.fits.is_empty() && m.verdicts.is_empty() {
                let _ = writeln!(out, "| {} | (no checks) | | | | | {} |", m.run_id, overall);
            }
        }
        out.push('\n');
    }
    if !missing.is_empty() {
        out.push_str("## Missing or unreadable runs\n\n");
        for (path, reason) in missing {
            let _ = writeln!(out, "- `{}`: {}", path.display(), reason);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::{FitRow, Verdict};

    fn manifest(kind: &str, id: &str, pass: bool) -> RunManifest {
        RunManifest {
            run_id: id.into(),
            config_hash: "00".into(),
            kind: kind.into(),
            code_version: "0".into(),
            started: String::new(),
            finished: String::new(),
            validity_horizon: Some(4.0),
            verdicts: vec![Verdict::within(
                "linf_exponent",
                if pass { 1.5 } else { 1.2 },
                1.5,
                0.05,
            )],
            fits: vec![FitRow {
                quantity: "linf".into(),
                claimed: Some(1.5),
                exponent: if pass { 1.5 } else { 1.2 },
                window: [2.0, 4.0],
                constant: 1.0,
                r_squared: 1.0,
                samples: 10,
            }],
            artifacts: Vec::new(),
            error: None,
            passed: pass,
        }
    }

    #[test]
    fn empty_report_is_valid() {
        let text = render_report(&[], &[]);
        assert!(text.starts_with("# nlslab report"));
        assert!(text.contains("No completed runs"));
    }

    #[test]
    fn groups_by_kind_and_lists_missing() {
        let ms = [
            manifest("linear-decay", "a", true),
            manifest("linear-decay", "b", false),
        ];
        let text = render_report(&ms, &[(PathBuf::from("x/manifest.json"), "gone".into())]);
        assert_eq!(text.matches("## linear-decay").count(), 1);
        assert!(text.contains(
            "| a | linf exponent | 1.5000 | 1.5000 | [2.0000, 4.0000] | 1.0000 | pass |"
        ));
        assert!(text.contains("| b | linf exponent | 1.5000 | 1.2000"));
        assert!(text.contains("FAIL"));
        assert!(text.contains("`x/manifest.json`: gone"));
    }
}
