//! Pieces shared by the acoustic and elastic time loops: sources, update
//! modes, the solution-update kernel, run configuration and dispatch over
//! precision pairs.

use thiserror::Error;

use crate::diagnostics::{EnergySeries, TraceSeries};
use crate::efsum::{two_sum_work, SumVariant};
use crate::medium_grid::{GridError, GridSpec, Medium, MediumError};
use crate::operators::OperatorError;
use crate::precision::{Format, Precision};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("non-finite value in {field} at step {step}")]
    NonFinite { step: usize, field: &'static str },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Medium(#[from] MediumError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("invalid run setup: {0}")]
    Setup(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Equation {
    Acoustic,
    Elastic,
}

impl std::str::FromStr for Equation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "acoustic" => Ok(Equation::Acoustic),
            "elastic" => Ok(Equation::Elastic),
            other => Err(format!("unknown equation `{other}`")),
        }
    }
}

impl std::fmt::Display for Equation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Equation::Acoustic => "acoustic",
            Equation::Elastic => "elastic",
        })
    }
}

/// How the solution update `x += dt * R` is carried out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpdateMode {
    /// One rounded multiply and one rounded add.
    Baseline,
    /// The sum is formed with an error-free transformation and its residual
    /// is kept in the right-hand-side field and re-injected next step.
    Compensated(SumVariant),
}

impl std::str::FromStr for UpdateMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "baseline" | "naive" | "0op" => Ok(UpdateMode::Baseline),
            other => other.parse::<SumVariant>().map(UpdateMode::Compensated).map_err(|_| {
                format!("unknown update mode `{other}` (expected baseline, op3 or op6)")
            }),
        }
    }
}

impl std::fmt::Display for UpdateMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UpdateMode::Baseline => f.write_str("baseline"),
            UpdateMode::Compensated(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RickerSpec {
    /// Central frequency in Hz.
    pub f_center: f64,
    /// Time of the peak in seconds.
    pub delay: f64,
    pub amplitude: f64,
}

impl RickerSpec {
    /// Wavelet with the peak delayed by `1.2 / f_center`.
    pub fn with_default_delay(f_center: f64, amplitude: f64) -> Self {
        RickerSpec { f_center, delay: 1.2 / f_center, amplitude }
    }

    /// End of the injection window. The wavelet is symmetric about the
    /// delay, so its tail past twice the delay mirrors the cut-off start.
    pub fn cutoff(&self) -> f64 {
        2.0 * self.delay
    }

    /// Value injected at time `t`: the wavelet on `[0, 2 delay]`, zero outside.
    pub fn windowed(&self, t: f64) -> f64 {
        if (0.0..=self.cutoff()).contains(&t) {
            ricker(t, self)
        } else {
            0.0
        }
    }
}

/// `amplitude * (1 - 2 pi^2 f^2 tau^2) * exp(-pi^2 f^2 tau^2)` with `tau = t - delay`.
pub fn ricker(t: f64, spec: &RickerSpec) -> f64 {
    let tau = t - spec.delay;
    let a = (std::f64::consts::PI * spec.f_center * tau).powi(2);
    spec.amplitude * (1.0 - 2.0 * a) * (-a).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceKind {
    PressurePoint,
    VyPoint,
}

impl std::str::FromStr for SourceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pressure" | "pressure_point" | "p" => Ok(SourceKind::PressurePoint),
            "vy" | "vy_point" => Ok(SourceKind::VyPoint),
            other => Err(format!("unknown source kind `{other}`")),
        }
    }
}

impl std::fmt::Display for SourceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SourceKind::PressurePoint => "pressure",
            SourceKind::VyPoint => "vy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub ix: usize,
    pub iy: usize,
    pub wavelet: RickerSpec,
}

/// Everything a single simulation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub equation: Equation,
    pub grid: GridSpec,
    pub medium: Medium,
    pub source: Option<SourceSpec>,
    pub receivers: Vec<(usize, usize)>,
    pub stencil_precision: Format,
    pub update_precision: Format,
    pub mode: UpdateMode,
    /// Energy is sampled every this many steps (and after the last step).
    pub energy_cadence: usize,
}

impl RunSpec {
    /// End of source activity; energy is expected to be constant afterwards.
    pub fn source_off_time(&self) -> f64 {
        self.source.map_or(0.0, |s| s.wavelet.cutoff())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub traces: Vec<TraceSeries>,
    pub energy: EnergySeries,
    pub steps: usize,
    pub dt: f64,
}

impl RunOutput {
    pub fn trace(&self, field: &str, receiver: usize) -> Option<&TraceSeries> {
        self.traces.iter().find(|t| t.field == field && t.receiver == receiver)
    }
}

/// Applies one solution update at a point.
///
/// `rhs` is the right-hand side already rounded into the update precision.
/// In baseline mode `r` simply receives it. In compensated mode `r` holds the
/// residual from the previous step on entry and the new residual on exit.
#[inline(always)]
pub fn update_point<U: Precision>(x: &mut U::Elem, r: &mut U::Elem, rhs: U::Elem, dt: U::Elem, mode: UpdateMode) {
    let (dt, rhs_w) = (U::load(dt), U::load(rhs));
    let increment = U::wmul(dt, rhs_w);
    match mode {
        UpdateMode::Baseline => {
            *r = rhs;
            *x = U::store(U::wadd(U::load(*x), increment));
        }
        UpdateMode::Compensated(variant) => {
            let corrected = U::wadd(increment, U::load(*r));
            let (s, t) = two_sum_work::<U>(variant, U::load(*x), corrected);
            *x = U::store(s);
            *r = U::store(t);
        }
    }
}

/// Runs `update_point` over a whole field with the right-hand side given in
/// the stencil precision. Returns `false` if any solution or residual entry
/// ends up non-finite.
pub fn update_field<S: Precision, U: Precision>(
    x: &mut [U::Elem],
    r: &mut [U::Elem],
    rhs: &[S::Work],
    dt: U::Elem,
    mode: UpdateMode,
) -> bool {
    let mut finite = true;
    for ((x, r), &rhs) in x.iter_mut().zip(r.iter_mut()).zip(rhs) {
        update_point::<U>(x, r, U::convert::<S>(S::store(rhs)), dt, mode);
        finite &= U::is_finite(*x) & U::is_finite(*r);
    }
    finite
}

pub(crate) fn check_receivers(grid: &GridSpec, receivers: &[(usize, usize)], staggers: &[crate::Stagger]) -> Result<(), SimError> {
    for (k, &(ix, iy)) in receivers.iter().enumerate() {
        for &s in staggers {
            if ix >= grid.cols(s) || iy >= grid.rows(s) {
                return Err(SimError::Setup(format!(
                    "receiver {k} at ({ix}, {iy}) lies outside the {} sub-grid ({}x{})",
                    s.name(),
                    grid.cols(s),
                    grid.rows(s)
                )));
            }
        }
    }
    Ok(())
}

/// Empty traces ordered field-major: all receivers of the first field, then the next field.
pub(crate) fn new_traces(fields: &[&'static str], receivers: usize, nt: usize) -> Vec<TraceSeries> {
    fields
        .iter()
        .flat_map(|&field| {
            (0..receivers).map(move |receiver| TraceSeries { field, receiver, samples: Vec::with_capacity(nt) })
        })
        .collect()
}

/// Whether energy is sampled after step `n`.
pub(crate) fn samples_energy(n: usize, nt: usize, cadence: usize) -> bool {
    n.is_multiple_of(cadence) || n + 1 == nt
}

/// Calls `$body` with the type aliases `S` and `U` bound to the precision
/// types selected by two runtime `Format`s.
#[macro_export]
macro_rules! with_precisions {
    ($stencil:expr, $update:expr, |$s:ident, $u:ident| $body:expr) => {{
        use $crate::precision::{Format, Fp16, Fp32, Fp64};
        match ($stencil, $update) {
            (Format::Fp64, Format::Fp64) => { type $s = Fp64; type $u = Fp64; $body }
            (Format::Fp64, Format::Fp32) => { type $s = Fp64; type $u = Fp32; $body }
            (Format::Fp64, Format::Fp16) => { type $s = Fp64; type $u = Fp16; $body }
            (Format::Fp32, Format::Fp64) => { type $s = Fp32; type $u = Fp64; $body }
            (Format::Fp32, Format::Fp32) => { type $s = Fp32; type $u = Fp32; $body }
            (Format::Fp32, Format::Fp16) => { type $s = Fp32; type $u = Fp16; $body }
            (Format::Fp16, Format::Fp64) => { type $s = Fp16; type $u = Fp64; $body }
            (Format::Fp16, Format::Fp32) => { type $s = Fp16; type $u = Fp32; $body }
            (Format::Fp16, Format::Fp16) => { type $s = Fp16; type $u = Fp16; $body }
        }
    }};
}

/// Runs a full simulation.
pub fn run(spec: &RunSpec) -> Result<RunOutput, SimError> {
    match spec.equation {
        Equation::Acoustic => crate::acoustic::run_acoustic(spec),
        Equation::Elastic => crate::elastic::run_elastic(spec),
    }
}
