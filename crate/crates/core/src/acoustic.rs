//! Acoustic velocity–pressure time loop.
//!
//! Each step first updates the velocities from the pressure gradient, then
//! the pressure from the velocity divergence:
//!
//! ```text
//! R_vx = dP/dx / rho_x           Vx += dt * R_vx
//! R_vy = dP/dy / rho_y           Vy += dt * R_vy
//! R_p  = (dVx/dx + dVy/dy + s) / beta    P += dt * R_p
//! ```
//!
//! The right-hand sides are assembled in the stencil precision `S` and
//! rounded once into the update precision `U`, in which the state lives and
//! the solution update is performed (see [`crate::solver::update_point`]).

use crate::diagnostics::{acoustic_energy, AcousticMaterial, AcousticSnapshot, EnergySeries};
use crate::medium_grid::{Axis, Boundary, Field2D, GridSpec, Medium, Stagger};
use crate::operators::{derivative_into, StencilSpec};
use crate::precision::Precision;
use crate::solver::{
    check_receivers, samples_energy, update_field, RunOutput, RunSpec, SimError, SourceKind, SourceSpec, UpdateMode,
};
use crate::with_precisions;

/// Fields that receivers sample, in output order.
pub const RECEIVER_FIELDS: [&str; 3] = ["P", "Vx", "Vy"];

#[derive(Debug, Clone, PartialEq)]
pub struct AcousticState<U: Precision> {
    pub p: Field2D<U>,
    pub vx: Field2D<U>,
    pub vy: Field2D<U>,
    pub rp: Field2D<U>,
    pub rvx: Field2D<U>,
    pub rvy: Field2D<U>,
    pub step: usize,
}

impl<U: Precision> AcousticState<U> {
    pub fn zeros(grid: &GridSpec) -> Self {
        AcousticState {
            p: Field2D::zeros(grid, Stagger::Cell),
            vx: Field2D::zeros(grid, Stagger::XFace),
            vy: Field2D::zeros(grid, Stagger::YFace),
            rp: Field2D::zeros(grid, Stagger::Cell),
            rvx: Field2D::zeros(grid, Stagger::XFace),
            rvy: Field2D::zeros(grid, Stagger::YFace),
            step: 0,
        }
    }
}

/// A configured acoustic simulation with stencil precision `S` and update precision `U`.
pub struct AcousticSolver<S: Precision, U: Precision> {
    grid: GridSpec,
    mode: UpdateMode,
    source: Option<SourceSpec>,
    stencil: StencilSpec<S>,
    rho_x: Vec<S::Work>,
    rho_y: Vec<S::Work>,
    beta: Vec<S::Work>,
    dt: U::Elem,
    state: AcousticState<U>,
    p_s: Field2D<S>,
    vx_s: Field2D<S>,
    vy_s: Field2D<S>,
    dpdx: Field2D<S>,
    dpdy: Field2D<S>,
    dvxdx: Field2D<S>,
    dvydy: Field2D<S>,
    rhs: Vec<S::Work>,
}

/// Rounds a binary64 plane into `S`, kept in working form.
pub(crate) fn narrow<S: Precision>(plane: &[f64]) -> Vec<S::Work> {
    plane.iter().map(|&v| S::load(S::round(v))).collect()
}

pub(crate) fn widen_all<S: Precision>(v: &[S::Work]) -> Vec<f64> {
    v.iter().map(|&x| S::widen(S::store(x))).collect()
}

/// Copies `src` into `dst`, rounding each entry into `S`.
pub(crate) fn convert_into<U: Precision, S: Precision>(src: &Field2D<U>, dst: &mut Field2D<S>) {
    for (d, &s) in dst.as_mut_slice().iter_mut().zip(src.as_slice()) {
        *d = S::convert::<U>(s);
    }
}

impl<S: Precision, U: Precision> AcousticSolver<S, U> {
    pub fn new(spec: &RunSpec) -> Result<Self, SimError> {
        let grid = spec.grid;
        grid.validate()?;
        if grid.bc_y != Boundary::Periodic {
            return Err(SimError::Setup("the acoustic solver needs periodic boundaries in y".into()));
        }
        let Medium::Acoustic(medium) = &spec.medium else {
            return Err(SimError::Setup(format!("expected an acoustic medium, got {}", spec.medium.kind_name())));
        };
        spec.medium.validate()?;
        if spec.medium.dims() != (grid.nx, grid.ny) {
            return Err(SimError::Setup(format!(
                "medium is {:?} but the grid is {}x{}",
                spec.medium.dims(),
                grid.nx,
                grid.ny
            )));
        }
        grid.check_cfl(spec.medium.max_speed())?;
        if let Some(src) = &spec.source {
            if src.kind != SourceKind::PressurePoint {
                return Err(SimError::Setup(format!("acoustic runs take a pressure source, got {}", src.kind)));
            }
            check_receivers(&grid, &[(src.ix, src.iy)], &[Stagger::Cell])
                .map_err(|_| SimError::Setup(format!("source at ({}, {}) lies outside the grid", src.ix, src.iy)))?;
        }
        check_receivers(&grid, &spec.receivers, &[Stagger::Cell, Stagger::XFace, Stagger::YFace])?;
        Ok(AcousticSolver {
            grid,
            mode: spec.mode,
            source: spec.source,
            stencil: StencilSpec::new(grid.dx),
            rho_x: narrow::<S>(&medium.rho_x),
            rho_y: narrow::<S>(&medium.rho_y),
            beta: narrow::<S>(&medium.beta),
            dt: U::round(grid.dt),
            state: AcousticState::zeros(&grid),
            p_s: Field2D::zeros(&grid, Stagger::Cell),
            vx_s: Field2D::zeros(&grid, Stagger::XFace),
            vy_s: Field2D::zeros(&grid, Stagger::YFace),
            dpdx: Field2D::zeros(&grid, Stagger::XFace),
            dpdy: Field2D::zeros(&grid, Stagger::YFace),
            dvxdx: Field2D::zeros(&grid, Stagger::Cell),
            dvydy: Field2D::zeros(&grid, Stagger::Cell),
            rhs: vec![S::load(S::zero()); grid.nx * grid.ny],
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn state(&self) -> &AcousticState<U> {
        &self.state
    }

    /// Mutable access, for setting initial data.
    pub fn state_mut(&mut self) -> &mut AcousticState<U> {
        &mut self.state
    }

    /// Medium values exactly as the solver uses them, widened to binary64.
    pub fn material(&self) -> AcousticMaterial {
        AcousticMaterial {
            rho_x: widen_all::<S>(&self.rho_x),
            rho_y: widen_all::<S>(&self.rho_y),
            beta: widen_all::<S>(&self.beta),
        }
    }

    /// Advances one step with the configured update mode.
    pub fn step(&mut self) -> Result<(), SimError> {
        self.advance(self.mode)
    }

    pub fn step_baseline(&mut self) -> Result<(), SimError> {
        self.advance(UpdateMode::Baseline)
    }

    pub fn step_compensated(&mut self, variant: crate::SumVariant) -> Result<(), SimError> {
        self.advance(UpdateMode::Compensated(variant))
    }

    fn non_finite(&self, field: &'static str) -> SimError {
        SimError::NonFinite { step: self.state.step, field }
    }

    fn advance(&mut self, mode: UpdateMode) -> Result<(), SimError> {
        let grid = self.grid;
        let st = &mut self.state;

        convert_into(&st.p, &mut self.p_s);
        derivative_into(&self.p_s, Axis::X, &self.stencil, &grid, &mut self.dpdx)?;
        derivative_into(&self.p_s, Axis::Y, &self.stencil, &grid, &mut self.dpdy)?;

        for ((r, &d), &rho) in self.rhs.iter_mut().zip(self.dpdx.as_slice()).zip(&self.rho_x) {
            *r = S::wdiv(S::load(d), rho);
        }
        if !update_field::<S, U>(st.vx.as_mut_slice(), st.rvx.as_mut_slice(), &self.rhs, self.dt, mode) {
            return Err(self.non_finite("Vx"));
        }
        let st = &mut self.state;
        for ((r, &d), &rho) in self.rhs.iter_mut().zip(self.dpdy.as_slice()).zip(&self.rho_y) {
            *r = S::wdiv(S::load(d), rho);
        }
        if !update_field::<S, U>(st.vy.as_mut_slice(), st.rvy.as_mut_slice(), &self.rhs, self.dt, mode) {
            return Err(self.non_finite("Vy"));
        }

        let st = &mut self.state;
        convert_into(&st.vx, &mut self.vx_s);
        convert_into(&st.vy, &mut self.vy_s);
        derivative_into(&self.vx_s, Axis::X, &self.stencil, &grid, &mut self.dvxdx)?;
        derivative_into(&self.vy_s, Axis::Y, &self.stencil, &grid, &mut self.dvydy)?;
        for ((r, &a), &b) in self.rhs.iter_mut().zip(self.dvxdx.as_slice()).zip(self.dvydy.as_slice()) {
            *r = S::wadd(S::load(a), S::load(b));
        }
        if let Some(src) = &self.source {
            let t = (st.step as f64 + 0.5) * grid.dt;
            let k = src.iy * grid.nx + src.ix;
            self.rhs[k] = S::wadd(self.rhs[k], S::load(S::round(src.wavelet.windowed(t))));
        }
        for (r, &beta) in self.rhs.iter_mut().zip(&self.beta) {
            *r = S::wdiv(*r, beta);
        }
        if !update_field::<S, U>(st.p.as_mut_slice(), st.rp.as_mut_slice(), &self.rhs, self.dt, mode) {
            return Err(self.non_finite("P"));
        }
        self.state.step += 1;
        Ok(())
    }

    /// Energy of the pressure level `p_now` (the one before the latest
    /// step) paired with the current state.
    pub fn energy_with(&self, p_now: &[f64], material: &AcousticMaterial) -> f64 {
        let (p_next, vx, vy) = (self.state.p.to_f64(), self.state.vx.to_f64(), self.state.vy.to_f64());
        acoustic_energy(&AcousticSnapshot { p_now, p_next: &p_next, vx: &vx, vy: &vy }, material, &self.grid)
    }

    /// Value of the receiver field `slot` (index into [`RECEIVER_FIELDS`]) at `(ix, iy)`.
    pub fn sample(&self, slot: usize, ix: usize, iy: usize) -> f64 {
        match slot {
            0 => self.state.p.value(ix, iy),
            1 => self.state.vx.value(ix, iy),
            _ => self.state.vy.value(ix, iy),
        }
    }

    /// Runs `nt` steps from the current state, recording traces every step and energy on the cadence.
    pub fn run(&mut self, receivers: &[(usize, usize)], cadence: usize) -> Result<RunOutput, SimError> {
        let cadence = cadence.max(1);
        let material = self.material();
        let nt = self.grid.nt;
        let dt = self.grid.dt;
        let mut traces = crate::solver::new_traces(&RECEIVER_FIELDS, receivers.len(), nt);
        let mut energy = EnergySeries::default();
        let p0 = self.state.p.to_f64();
        energy.push(0.0, self.energy_with(&p0, &material));
        for n in 0..nt {
            let sample = samples_energy(n, nt, cadence);
            let p_now = if sample { Some(self.state.p.to_f64()) } else { None };
            self.step()?;
            for (slot, _) in RECEIVER_FIELDS.iter().enumerate() {
                for (r, &(ix, iy)) in receivers.iter().enumerate() {
                    traces[slot * receivers.len() + r].samples.push(self.sample(slot, ix, iy));
                }
            }
            if let Some(p_now) = p_now {
                energy.push((n as f64 + 0.5) * dt, self.energy_with(&p_now, &material));
            }
        }
        Ok(RunOutput { traces, energy, steps: nt, dt })
    }
}

fn run_typed<S: Precision, U: Precision>(spec: &RunSpec) -> Result<RunOutput, SimError> {
    let mut solver = AcousticSolver::<S, U>::new(spec)?;
    solver.run(&spec.receivers, spec.energy_cadence)
}

pub fn run_acoustic(spec: &RunSpec) -> Result<RunOutput, SimError> {
    with_precisions!(spec.stencil_precision, spec.update_precision, |S, U| run_typed::<S, U>(spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium_grid::build_homogeneous_acoustic;
    use crate::precision::{Format, Fp16, Fp32, Fp64, Half};
    use crate::solver::{Equation, RickerSpec};
    use crate::SumVariant;

    fn spec(n: usize, nt: usize, source: Option<SourceSpec>, mode: UpdateMode) -> RunSpec {
        RunSpec {
            equation: Equation::Acoustic,
            grid: GridSpec::new(n, n, 1.0 / n as f64, 0.2 / n as f64, nt),
            medium: build_homogeneous_acoustic(n, n, 1.0, 1.0).unwrap(),
            source,
            receivers: vec![(n / 2, n / 2)],
            stencil_precision: Format::Fp64,
            update_precision: Format::Fp64,
            mode,
            energy_cadence: 1,
        }
    }

    #[test]
    fn zero_state_stays_zero() {
        for mode in [UpdateMode::Baseline, UpdateMode::Compensated(SumVariant::Op3)] {
            let mut s = AcousticSolver::<Fp16, Fp16>::new(&spec(12, 5, None, mode)).unwrap();
            for _ in 0..5 {
                s.step().unwrap();
            }
            let st = s.state();
            for f in [&st.p, &st.vx, &st.vy, &st.rp, &st.rvx, &st.rvy] {
                assert!(f.is_zero());
            }
        }
    }

    #[test]
    fn first_step_impulse_touches_only_source_cell() {
        let n = 16;
        let wavelet = RickerSpec { f_center: 5.0, delay: 1e-3, amplitude: 3.0 };
        let src = SourceSpec { kind: SourceKind::PressurePoint, ix: 4, iy: 9, wavelet };
        let mut sp = spec(n, 1, Some(src), UpdateMode::Baseline);
        sp.grid.dt = 1e-3;
        sp.medium = build_homogeneous_acoustic(n, n, 1.0, 2.0).unwrap();
        let mut s = AcousticSolver::<Fp32, Fp16>::new(&sp).unwrap();
        s.step().unwrap();
        // s_p evaluated at half a step, divided by beta = 1/4 in fp32, then rounded to fp16.
        let sp32 = crate::precision::Fp32::round(crate::solver::ricker(0.5e-3, &wavelet));
        let rhs = Fp16::convert::<Fp32>(Fp32::div(sp32, Fp32::round(0.25)));
        let expect = Fp16::mul(Fp16::round(1e-3), rhs);
        for j in 0..n {
            for i in 0..n {
                let v = s.state().p.get(i, j);
                if (i, j) == (4, 9) {
                    assert_eq!(v, expect);
                } else {
                    assert_eq!(v, Half::ZERO);
                }
            }
        }
        assert!(s.state().vx.is_zero() && s.state().vy.is_zero());
    }

    #[test]
    fn nt_zero_gives_initial_energy_only() {
        let out = run_acoustic(&spec(10, 0, None, UpdateMode::Baseline)).unwrap();
        assert_eq!(out.energy.len(), 1);
        assert!(out.traces.iter().all(|t| t.samples.is_empty()));
        assert_eq!(out.traces.len(), 3);
    }

    #[test]
    fn gaussian_pulse_conserves_energy_in_fp64() {
        let n = 32;
        let mut s = AcousticSolver::<Fp64, Fp64>::new(&spec(n, 200, None, UpdateMode::Baseline)).unwrap();
        let c = n as f64 / 2.0;
        let p = Field2D::<Fp64>::from_fn(s.grid(), Stagger::Cell, |i, j| {
            let r2 = (i as f64 + 0.5 - c).powi(2) + (j as f64 - c).powi(2);
            (-r2 / 8.0).exp()
        });
        s.state_mut().p = p;
        let out = s.run(&[(3, 3)], 5).unwrap();
        let d = crate::diagnostics::energy_drift(&out.energy, 0.0).unwrap();
        assert!(d.rel_deviation < 1e-12, "{d:?}");
        assert!(d.mean > 0.0);
    }

    #[test]
    fn overflow_is_reported_with_step_and_field() {
        let n = 12;
        let wavelet = RickerSpec { f_center: 5.0, delay: 0.01, amplitude: 1e9 };
        let src = SourceSpec { kind: SourceKind::PressurePoint, ix: 2, iy: 2, wavelet };
        let err = run_acoustic(&RunSpec {
            update_precision: Format::Fp16,
            ..spec(n, 10, Some(src), UpdateMode::Baseline)
        })
        .unwrap_err();
        assert!(matches!(err, SimError::NonFinite { step: 0, field: "P" }), "{err}");
    }

    #[test]
    fn rejects_bad_setup() {
        let mut sp = spec(12, 1, None, UpdateMode::Baseline);
        sp.receivers = vec![(12, 0)];
        assert!(matches!(run_acoustic(&sp), Err(SimError::Setup(_))));
        let mut sp = spec(12, 1, None, UpdateMode::Baseline);
        sp.grid.dt = 1.0;
        assert!(matches!(run_acoustic(&sp), Err(SimError::Grid(_))));
        let mut sp = spec(12, 1, None, UpdateMode::Baseline);
        sp.source = Some(SourceSpec {
            kind: SourceKind::VyPoint,
            ix: 1,
            iy: 1,
            wavelet: RickerSpec::with_default_delay(5.0, 1.0),
        });
        assert!(matches!(run_acoustic(&sp), Err(SimError::Setup(_))));
    }
}
