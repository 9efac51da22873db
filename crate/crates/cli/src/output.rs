//! File writers. Everything is plain text with LF line endings, and floats
//! use the shortest decimal that round-trips, so identical runs give
//! identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use halfwave::diagnostics::EnergySeries;
use halfwave::RunOutput;

use crate::CliError;

/// Shortest round-trip decimal; switches to exponent form for very small or large magnitudes.
pub fn fmt_float(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.display().to_string(), e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Io(path.display().to_string(), e))
}

/// `step,time,<field>_r<k>...`, one row per step. Row `n` holds the state
/// after `n` steps, stamped `n * dt`.
pub fn traces_csv(out: &RunOutput) -> String {
    let mut s = String::from("step,time");
    for t in &out.traces {
        s.push(',');
        s.push_str(&t.label());
    }
    s.push('\n');
    for n in 0..out.steps {
        let _ = write!(s, "{},{}", n + 1, fmt_float((n + 1) as f64 * out.dt));
        for t in &out.traces {
            s.push(',');
            s.push_str(&fmt_float(t.samples[n]));
        }
        s.push('\n');
    }
    s
}

pub fn energy_csv(energy: &EnergySeries) -> String {
    let mut s = String::from("time,energy\n");
    for (t, e) in energy.times.iter().zip(&energy.values) {
        let _ = writeln!(s, "{},{}", fmt_float(*t), fmt_float(*e));
    }
    s
}

/// Two whitespace-separated columns under a `#` header, ready for gnuplot and friends.
pub fn plot_dat(header: &str, x: &[f64], y: &[f64]) -> String {
    let mut s = format!("# {header}\n");
    for (a, b) in x.iter().zip(y) {
        let _ = writeln!(s, "{} {}", fmt_float(*a), fmt_float(*b));
    }
    s
}

pub fn trace_times(out: &RunOutput) -> Vec<f64> {
    (1..=out.steps).map(|n| n as f64 * out.dt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use halfwave::diagnostics::TraceSeries;

    #[test]
    fn floats_round_trip_in_short_form() {
        for v in [0.1, 1.0, 1.220703125e-4, 6.5504e4, 1e-300, -0.0, 2.0f64.powi(-24)] {
            let s = fmt_float(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(fmt_float(0.1), "0.1");
        assert_eq!(fmt_float(1e-7), "1e-7");
    }

    #[test]
    fn csv_layout() {
        let mut energy = EnergySeries::default();
        energy.push(0.0, 1.5);
        energy.push(0.25, 1.25);
        let out = RunOutput {
            traces: vec![
                TraceSeries { field: "P", receiver: 0, samples: vec![0.5, -1.0] },
                TraceSeries { field: "Vx", receiver: 0, samples: vec![0.0, 2.5e-9] },
            ],
            energy,
            steps: 2,
            dt: 0.5,
        };
        assert_eq!(traces_csv(&out), "step,time,P_r0,Vx_r0\n1,0.5,0.5,0.0\n2,1.0,-1.0,2.5e-9\n");
        assert_eq!(energy_csv(&out.energy), "time,energy\n0.0,1.5\n0.25,1.25\n");
        assert_eq!(plot_dat("t E", &[1.0], &[2.0]), "# t E\n1.0 2.0\n");
    }
}
