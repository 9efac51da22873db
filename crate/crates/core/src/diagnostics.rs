//! Energy, receiver traces and comparison metrics, all in binary64.
//!
//! Fields are read through exact widening; nothing here touches solver state.
//! Sums run in a fixed row-major order so results do not depend on threading.
//!
//! The energies pair the integer-level unknowns at consecutive steps `n` and
//! `n + 1` with the half-level unknowns at `n + 1/2`. For the staggered
//! leapfrog scheme this form is constant in exact arithmetic; the plain
//! same-level quadratic form is not.

use thiserror::Error;

use crate::medium_grid::{GridSpec, Stagger};

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no energy samples after t = {0}")]
    EmptyWindow(f64),
}

/// Medium values as seen by the solver, widened to binary64.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticMaterial {
    pub rho_x: Vec<f64>,
    pub rho_y: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Consecutive pressure levels with the velocities between them.
#[derive(Debug, Clone, Copy)]
pub struct AcousticSnapshot<'a> {
    pub p_now: &'a [f64],
    pub p_next: &'a [f64],
    pub vx: &'a [f64],
    pub vy: &'a [f64],
}

/// `(dx^2 / 2) * (sum beta p^n p^{n+1} + sum rho (vx^2 + vy^2))`.
pub fn acoustic_energy(s: &AcousticSnapshot<'_>, m: &AcousticMaterial, grid: &GridSpec) -> f64 {
    let mut potential = 0.0;
    for k in 0..s.p_now.len() {
        potential += m.beta[k] * s.p_now[k] * s.p_next[k];
    }
    let mut kinetic = 0.0;
    for k in 0..s.vx.len() {
        kinetic += m.rho_x[k] * s.vx[k] * s.vx[k];
    }
    for k in 0..s.vy.len() {
        kinetic += m.rho_y[k] * s.vy[k] * s.vy[k];
    }
    0.5 * grid.dx * grid.dx * (potential + kinetic)
}

/// Elastic medium values as seen by the solver, widened to binary64.
///
/// Row counts follow the sub-grid each plane lives on.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticMaterial {
    pub rho_x: Vec<f64>,
    pub rho_y: Vec<f64>,
    /// `lambda + 2 mu` on cells.
    pub p_modulus: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu_node: Vec<f64>,
    /// Modulus relating `sxx` to `dvx/dx` on free-surface rows,
    /// `4 mu (lambda + mu) / (lambda + 2 mu)`. One entry per column for
    /// the top row, followed by the bottom row; empty for periodic y.
    pub surface_modulus: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct ElasticSnapshot<'a> {
    pub sxx_now: &'a [f64],
    pub syy_now: &'a [f64],
    pub sxy_now: &'a [f64],
    pub sxx_next: &'a [f64],
    pub syy_next: &'a [f64],
    pub sxy_next: &'a [f64],
    pub vx: &'a [f64],
    pub vy: &'a [f64],
}

/// Kinetic plus strain energy, with strain energy in compliance form.
///
/// With `a = lambda + 2 mu`, `b = lambda`, `m = (sxx + syy) / 2` and
/// `d = (sxx - syy) / 2`, the cell density is `m m' / (a + b) + d d' / (a - b)`
/// and the node density `sxy sxy' / (2 mu)`. Surface rows, where `syy = 0`,
/// use `sxx sxx' / (2 M)` with the surface modulus `M`, and carry half weight.
/// A vanishing shear modulus drops the corresponding terms.
pub fn elastic_energy(s: &ElasticSnapshot<'_>, m: &ElasticMaterial, grid: &GridSpec) -> f64 {
    let nx = grid.nx;
    let surface = !m.surface_modulus.is_empty();
    let mut total = 0.0;

    for j in 0..grid.rows(Stagger::XFace) {
        let w = grid.row_weight(Stagger::XFace, j);
        let mut row = 0.0;
        for i in 0..nx {
            let k = j * nx + i;
            row += m.rho_x[k] * s.vx[k] * s.vx[k];
        }
        total += 0.5 * w * row;
    }
    for k in 0..grid.len(Stagger::YFace) {
        total += 0.5 * m.rho_y[k] * s.vy[k] * s.vy[k];
    }
    let last = grid.ny - 1;
    for j in 0..grid.rows(Stagger::Cell) {
        let w = grid.row_weight(Stagger::Cell, j);
        let mut row = 0.0;
        if surface && (j == 0 || j == last) {
            let base = if j == 0 { 0 } else { nx };
            for i in 0..nx {
                let k = j * nx + i;
                let modulus = m.surface_modulus[base + i];
                if modulus > 0.0 {
                    row += s.sxx_now[k] * s.sxx_next[k] / (2.0 * modulus);
                }
            }
        } else {
            for i in 0..nx {
                let k = j * nx + i;
                let (a, b) = (m.p_modulus[k], m.lambda[k]);
                let mean_now = 0.5 * (s.sxx_now[k] + s.syy_now[k]);
                let mean_next = 0.5 * (s.sxx_next[k] + s.syy_next[k]);
                row += mean_now * mean_next / (a + b);
                if a > b {
                    let dev_now = 0.5 * (s.sxx_now[k] - s.syy_now[k]);
                    let dev_next = 0.5 * (s.sxx_next[k] - s.syy_next[k]);
                    row += dev_now * dev_next / (a - b);
                }
            }
        }
        total += w * row;
    }
    for k in 0..grid.len(Stagger::Node) {
        let mu = m.mu_node[k];
        if mu > 0.0 {
            total += s.sxy_now[k] * s.sxy_next[k] / (2.0 * mu);
        }
    }
    grid.dx * grid.dx * total
}

/// Energy history with the time of each sample.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `true` where the sample is not finite.
    pub flags: Vec<bool>,
}

impl EnergySeries {
    pub fn push(&mut self, t: f64, e: f64) {
        debug_assert!(self.times.last().is_none_or(|&last| t > last));
        self.times.push(t);
        self.values.push(e);
        self.flags.push(!e.is_finite());
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }

    pub fn any_flagged(&self) -> bool {
        self.flags.iter().any(|&f| f)
    }
}

/// Samples of one field at one receiver, one per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSeries {
    pub field: &'static str,
    pub receiver: usize,
    pub samples: Vec<f64>,
}

impl TraceSeries {
    pub fn label(&self) -> String {
        format!("{}_r{}", self.field, self.receiver)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceComparison {
    pub l2_rel: f64,
    pub linf_rel: f64,
    pub lag0_correlation: f64,
}

fn relative(err: f64, reference: f64) -> f64 {
    if reference > 0.0 {
        err / reference
    } else if err == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Distance of `a` from the reference `b`, relative to `b`, plus the zero-lag correlation.
pub fn compare_samples(a: &[f64], b: &[f64]) -> Result<TraceComparison, DiagnosticsError> {
    if a.len() != b.len() {
        return Err(DiagnosticsError::LengthMismatch(a.len(), b.len()));
    }
    let (mut d2, mut b2, mut a2, mut ab, mut dmax, mut bmax) = (0.0, 0.0, 0.0, 0.0, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        d2 += d * d;
        a2 += x * x;
        b2 += y * y;
        ab += x * y;
        dmax = dmax.max(d.abs());
        bmax = bmax.max(y.abs());
    }
    let denom = (a2 * b2).sqrt();
    Ok(TraceComparison {
        l2_rel: relative(d2.sqrt(), b2.sqrt()),
        linf_rel: relative(dmax, bmax),
        lag0_correlation: if denom > 0.0 { ab / denom } else { 0.0 },
    })
}

pub fn compare_traces(a: &TraceSeries, b: &TraceSeries) -> Result<TraceComparison, DiagnosticsError> {
    compare_samples(&a.samples, &b.samples)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDrift {
    /// `max |E - mean| / |mean|` over the window.
    pub rel_deviation: f64,
    /// Least-squares slope of `E` against time over the window.
    pub trend_slope: f64,
    pub mean: f64,
    pub samples: usize,
}

/// Drift statistics over samples with `t > t_source_off`.
pub fn energy_drift(series: &EnergySeries, t_source_off: f64) -> Result<EnergyDrift, DiagnosticsError> {
    let window: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(t, _)| **t > t_source_off)
        .map(|(&t, &e)| (t, e))
        .collect();
    if window.is_empty() {
        return Err(DiagnosticsError::EmptyWindow(t_source_off));
    }
    let n = window.len() as f64;
    let mean = window.iter().map(|w| w.1).sum::<f64>() / n;
    let t_mean = window.iter().map(|w| w.0).sum::<f64>() / n;
    let max_dev = window.iter().fold(0.0f64, |m, w| m.max((w.1 - mean).abs()));
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, e) in &window {
        sxy += (t - t_mean) * (e - mean);
        sxx += (t - t_mean) * (t - t_mean);
    }
    Ok(EnergyDrift {
        rel_deviation: relative(max_dev, mean.abs()),
        trend_slope: if sxx > 0.0 { sxy / sxx } else { 0.0 },
        mean,
        samples: window.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_acoustic_energy() {
        let g = GridSpec::new(8, 8, 0.5, 0.1, 1);
        let n = 64;
        let mut p = vec![0.0; n];
        p[9] = 3.0;
        let zeros = vec![0.0; n];
        let m = AcousticMaterial { rho_x: vec![1.0; n], rho_y: vec![1.0; n], beta: vec![2.0; n] };
        let s = AcousticSnapshot { p_now: &p, p_next: &p, vx: &zeros, vy: &zeros };
        assert_eq!(acoustic_energy(&s, &m, &g), 0.25 * 2.0 * 9.0 / 2.0);
        let s = AcousticSnapshot { p_now: &zeros, p_next: &zeros, vx: &zeros, vy: &zeros };
        assert_eq!(acoustic_energy(&s, &m, &g), 0.0);
    }

    #[test]
    fn acoustic_energy_is_quadratic() {
        let g = GridSpec::new(8, 8, 0.3, 0.1, 1);
        let n = 64;
        let f = |s: usize| (0..n).map(|k| ((k * 7 + s) % 13) as f64 - 6.0).collect::<Vec<_>>();
        let (p0, p1, vx, vy) = (f(1), f(2), f(3), f(4));
        let m = AcousticMaterial { rho_x: vec![1.5; n], rho_y: vec![0.5; n], beta: vec![2.0; n] };
        let e = acoustic_energy(&AcousticSnapshot { p_now: &p0, p_next: &p1, vx: &vx, vy: &vy }, &m, &g);
        let alpha = 3.7;
        let sc = |v: &[f64]| v.iter().map(|x| x * alpha).collect::<Vec<_>>();
        let (q0, q1, wx, wy) = (sc(&p0), sc(&p1), sc(&vx), sc(&vy));
        let e2 = acoustic_energy(&AcousticSnapshot { p_now: &q0, p_next: &q1, vx: &wx, vy: &wy }, &m, &g);
        assert!((e2 - alpha * alpha * e).abs() <= 1e-12 * e2.abs());
    }

    #[test]
    fn compare_identical_and_negated() {
        let x: Vec<f64> = (0..50).map(|k| (k as f64 * 0.3).sin()).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let c = compare_samples(&x, &x).unwrap();
        assert_eq!((c.l2_rel, c.linf_rel), (0.0, 0.0));
        assert!((c.lag0_correlation - 1.0).abs() < 1e-15);
        let c = compare_samples(&neg, &x).unwrap();
        assert!((c.lag0_correlation + 1.0).abs() < 1e-15);
        assert!((c.l2_rel - 2.0).abs() < 1e-15);
        assert_eq!(compare_samples(&x, &x[1..]), Err(DiagnosticsError::LengthMismatch(50, 49)));
    }

    #[test]
    fn drift_of_constant_and_linear_series() {
        let mut s = EnergySeries::default();
        for k in 0..100 {
            s.push(k as f64 * 0.1, 2.0);
        }
        let d = energy_drift(&s, 1.0).unwrap();
        assert_eq!((d.rel_deviation, d.trend_slope), (0.0, 0.0));

        let big_t = 10.0;
        let mut s = EnergySeries::default();
        for k in 0..=1000 {
            let t = k as f64 * big_t / 1000.0;
            s.push(t, 1.0 - 0.01 * t / big_t);
        }
        let d = energy_drift(&s, 0.0).unwrap();
        assert!((d.trend_slope + 0.01 / big_t).abs() < 1e-12);
        assert!(matches!(energy_drift(&s, 20.0), Err(DiagnosticsError::EmptyWindow(_))));
    }
}
