//! Plain comma-separated report files with fixed headers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use msfrac_core::{RunReport, TheoryConstants};

use crate::suite::{CheckRecord, SuiteResult};

pub const TIME_SERIES_HEADER: &str = "t,linf,lip,theory_bound,modulus_min_margin";
pub const SUMMARY_HEADER: &str = "check_id,paper_ref,pass,margin,seconds";
pub const CONSTANTS_HEADER: &str = "run,name,value,formula";

/// Shortest round-trip scientific form, so equal values print identically.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn time_series_csv(report: &RunReport) -> String {
    let mut s = String::from(TIME_SERIES_HEADER);
    s.push('\n');
    for i in 0..report.times.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            num(report.times[i]),
            num(report.linf[i]),
            num(report.lip[i]),
            opt(report.theory_bound[i]),
            opt(report.modulus_min_margin[i])
        );
    }
    s
}

pub fn summary_csv(checks: &[CheckRecord]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for c in checks {
        let _ = writeln!(s, "{},{},{},{},{}", c.id, c.paper_ref, c.pass, num(c.margin), num(c.seconds));
    }
    s
}

pub fn constants_csv(rows: &[(&str, &TheoryConstants)]) -> String {
    let mut s = String::from(CONSTANTS_HEADER);
    s.push('\n');
    for (run, c) in rows {
        for (name, value, formula) in c.entries() {
            let _ = writeln!(s, "{run},{name},{},\"{formula}\"", num(value));
        }
    }
    s
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Writes `summary.csv`, one `<run>.csv` per recorded run and, when any run
/// carries constants, `constants.csv`. Returns the written paths.
pub fn emit_report(dir: &Path, result: &SuiteResult) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let mut written = vec![write(dir.join("summary.csv"), &summary_csv(&result.checks))?];
    for r in &result.runs {
        written.push(write(dir.join(format!("{}.csv", r.name)), &time_series_csv(&r.report))?);
    }
    let rows: Vec<(&str, &TheoryConstants)> =
        result.runs.iter().filter_map(|r| r.constants.as_ref().map(|c| (r.name.as_str(), c))).collect();
    if !rows.is_empty() {
        written.push(write(dir.join("constants.csv"), &constants_csv(&rows))?);
    }
    Ok(written)
}
