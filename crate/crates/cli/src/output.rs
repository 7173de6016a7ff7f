use std::fs;
use std::io;
use std::path::Path;

use wpfp_core::dispersive::{CheckKind, EstimateCheck, ESTIMATE_COLUMNS};

/// Writes `header` (comment lines), the column line, then `rows`.
pub fn write_csv(path: &Path, header: &str, columns: &str, rows: impl IntoIterator<Item = String>) -> io::Result<()> {
    let mut text = String::from(header);
    text.push_str(columns);
    text.push('\n');
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    fs::write(path, text)
}

/// `estimates.csv`, plus `failures.csv` when something failed (a stale one is removed otherwise).
pub fn write_checks(dir: &Path, header: &str, checks: &[EstimateCheck]) -> io::Result<()> {
    write_csv(&dir.join("estimates.csv"), header, ESTIMATE_COLUMNS, checks.iter().map(EstimateCheck::csv))?;
    let failures = dir.join("failures.csv");
    if checks.iter().any(|c| !c.passed) {
        write_csv(&failures, header, ESTIMATE_COLUMNS, checks.iter().filter(|c| !c.passed).map(EstimateCheck::csv))
    } else {
        match fs::remove_file(&failures) {
            Err(e) if e.kind() != io::ErrorKind::NotFound => Err(e),
            _ => Ok(()),
        }
    }
}

pub fn summary_table(checks: &[EstimateCheck]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(4).max(4);
    let mut s = format!("{:<width$}  {:>12}  {:>12}  {:>8}  {:>8}  {:>8}  result\n", "name", "value", "target", "tol", "r2", "kind");
    for c in checks {
        let kind = match c.kind {
            CheckKind::Match => "match",
            CheckKind::AtMost => "at_most",
        };
        let r2 = c.r2.map(|r| format!("{r:.4}")).unwrap_or_else(|| "-".into());
        let verdict = if c.passed { "pass" } else { "FAIL" };
        s.push_str(&format!("{:<width$}  {:>12.5e}  {:>12.5e}  {:>8.2e}  {r2:>8}  {kind:>8}  {verdict}\n", c.name, c.value, c.target, c.tol));
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    s.push_str(&format!("{} checks, {failed} failed\n", checks.len()));
    s
}
