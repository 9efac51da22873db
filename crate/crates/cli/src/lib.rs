//! Command-line front end: scenario configs, the range audit, and the
//! artifact writers behind the `halfwave` binary.

pub mod audit;
pub mod config;
pub mod output;
pub mod scenario;

use halfwave::{Format, SimError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("missing required setting `{0}`")]
    Missing(String),
    #[error("invalid value for `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("unknown preset `{0}` (expected paper-acoustic or paper-elastic)")]
    UnknownPreset(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("range audit failed:\n{0}")]
    Range(audit::AuditReport),
    #[error("energy became non-finite at t = {0}")]
    NonFiniteEnergy(f64),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl CliError {
    /// Process exit status: 2 for a range failure (audit or non-finite
    /// values during the run), 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Range(_) | CliError::NonFiniteEnergy(_) | CliError::Sim(SimError::NonFinite { .. }) => 2,
            _ => 1,
        }
    }
}

/// The format constants table, five significant digits.
pub fn formats_table() -> String {
    let mut s = format!(
        "{:<6} {:>9} {:>9} {:>14} {:>12} {:>12} {:>14}\n",
        "format", "exp_bits", "frac_bits", "unit_roundoff", "max", "min_normal", "min_subnormal"
    );
    for f in [Format::Fp16, Format::Fp32, Format::Fp64] {
        let c = f.constants();
        s += &format!(
            "{:<6} {:>9} {:>9} {:>14} {:>12} {:>12} {:>14}\n",
            f.name(),
            c.exponent_bits,
            c.fraction_bits,
            format!("{:.4e}", c.unit_roundoff),
            format!("{:.4e}", c.max_finite),
            format!("{:.4e}", c.min_positive_normal),
            format!("{:.4e}", c.min_positive_subnormal),
        );
    }
    s
}
