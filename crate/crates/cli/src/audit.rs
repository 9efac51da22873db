//! Pre-run range audit.
//!
//! Every parameter the solver materializes is checked against the format it
//! will live in: medium planes, stencil taps and the source peak against the
//! stencil precision, the time step against the update precision. A value
//! that overflows or flushes to zero is an error; one that lands in the
//! subnormal range only loses bits and is reported as a warning.

use std::fmt;

use halfwave::precision::round_to;
use halfwave::{Format, Medium, RunSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditStatus {
    Ok,
    Subnormal,
    Underflow,
    Overflow,
}

impl AuditStatus {
    pub fn is_error(self) -> bool {
        matches!(self, AuditStatus::Underflow | AuditStatus::Overflow)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditEntry {
    pub item: String,
    pub value: f64,
    pub format: Format,
    pub status: AuditStatus,
}

impl fmt::Display for AuditEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.format.constants();
        let note = match self.status {
            AuditStatus::Ok => "ok".to_string(),
            AuditStatus::Subnormal => {
                format!("warning: subnormal in {} (normal range starts at {:.4e})", self.format, c.min_positive_normal)
            }
            AuditStatus::Underflow => format!(
                "error: rounds to zero in {} (smallest subnormal {:.4e})",
                self.format, c.min_positive_subnormal
            ),
            AuditStatus::Overflow => {
                format!("error: exceeds the {} maximum {:.4e}, rescale the units", self.format, c.max_finite)
            }
        };
        write!(f, "{:<28} {:>14.6e}  {}", self.item, self.value, note)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn has_errors(&self) -> bool {
        self.entries.iter().any(|e| e.status.is_error())
    }

    pub fn problems(&self) -> impl Iterator<Item = &AuditEntry> {
        self.entries.iter().filter(|e| e.status != AuditStatus::Ok)
    }

    fn check(&mut self, item: impl Into<String>, value: f64, format: Format) {
        self.entries.push(AuditEntry { item: item.into(), value, format, status: classify(value, format) });
    }

    /// Checks the smallest and largest non-zero magnitude of a plane.
    fn check_plane(&mut self, name: &str, plane: &[f64], format: Format) {
        let nonzero = plane.iter().map(|v| v.abs()).filter(|&v| v > 0.0);
        let (lo, hi) = nonzero.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if hi == 0.0 {
            return;
        }
        self.check(format!("{name} (min |value|)"), lo, format);
        if hi != lo {
            self.check(format!("{name} (max |value|)"), hi, format);
        }
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{e}")?;
        }
        let errors = self.entries.iter().filter(|e| e.status.is_error()).count();
        let warnings = self.entries.iter().filter(|e| e.status == AuditStatus::Subnormal).count();
        write!(f, "{} checks, {errors} errors, {warnings} warnings", self.entries.len())
    }
}

pub fn classify(value: f64, format: Format) -> AuditStatus {
    let rounded = round_to(format, value).value();
    if !rounded.is_finite() {
        AuditStatus::Overflow
    } else if value != 0.0 && rounded == 0.0 {
        AuditStatus::Underflow
    } else if value != 0.0 && value.abs() < format.constants().min_positive_normal {
        AuditStatus::Subnormal
    } else {
        AuditStatus::Ok
    }
}

pub fn range_audit(spec: &RunSpec) -> AuditReport {
    let mut report = AuditReport::default();
    let (s, u) = (spec.stencil_precision, spec.update_precision);
    report.check("dt", spec.grid.dt, u);
    report.check("stencil tap 9/(8 dx)", 9.0 / (8.0 * spec.grid.dx), s);
    report.check("stencil tap 1/(24 dx)", 1.0 / (24.0 * spec.grid.dx), s);
    match &spec.medium {
        Medium::Acoustic(m) => {
            report.check_plane("rho", &[&m.rho_x[..], &m.rho_y[..]].concat(), s);
            report.check_plane("beta", &m.beta, s);
            // The compressibility is stored, but its reciprocal is the
            // quantity users usually have at hand and the one that overflows.
            let bulk: Vec<f64> = m.beta.iter().map(|b| 1.0 / b).collect();
            report.check_plane("bulk modulus (1/beta)", &bulk, s);
        }
        Medium::Elastic(m) => {
            report.check_plane("rho", &[&m.rho_x[..], &m.rho_y[..]].concat(), s);
            report.check_plane("lambda", &m.lambda, s);
            report.check_plane("mu", &m.mu, s);
            let p: Vec<f64> = m.lambda.iter().zip(&m.mu).map(|(l, m)| l + 2.0 * m).collect();
            report.check_plane("lambda + 2 mu", &p, s);
        }
    }
    if let Some(src) = &spec.source {
        report.check("source peak", src.wavelet.amplitude, s);
    }
    report
}
