//! Named pass/fail diagnostics shared by the CLI and reports.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Whether a failure makes the run fail; informational rows do not.
    pub gating: bool,
}

impl Check {
    /// Passes when `value <= threshold`; NaN fails.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
            gating: true,
        }
    }

    /// Passes when `value >= threshold`; NaN fails.
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value >= threshold,
            gating: true,
        }
    }

    pub fn informational(mut self) -> Self {
        self.gating = false;
        self
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass || !c.gating)
}

/// CSV with columns `name, value, threshold, pass`.
pub fn write_checks(checks: &[Check], out: impl Write) -> Result<()> {
    let io = |e: csv::Error| Error::io("writing diagnostics csv", e.into());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "value", "threshold", "pass"]).map_err(io)?;
    for c in checks {
        w.write_record([
            c.name.clone(),
            format!("{:.17e}", c.value),
            format!("{:.17e}", c.threshold),
            c.pass.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io("writing diagnostics csv", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_never_passes() {
        assert!(!Check::at_most("x", f64::NAN, 1.0).pass);
        assert!(!Check::at_least("x", f64::NAN, 1.0).pass);
        assert!(Check::at_most("x", 1.0, 1.0).pass);
    }

    #[test]
    fn informational_rows_do_not_gate() {
        let checks = [Check::at_most("a", 0.5, 1.0), Check::at_most("b", 2.0, 1.0).informational()];
        assert!(all_pass(&checks));
        assert!(!all_pass(&[Check::at_most("b", 2.0, 1.0)]));
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_checks(&[Check::at_most("div", 0.5, 1.0)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("name,value,threshold,pass"));
        assert!(lines.next().unwrap().ends_with(",true"));
    }
}
