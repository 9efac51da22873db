//! Velocity–stress elastic time loop.
//!
//! ```text
//! rho dvx/dt  = dsxx/dx + dsxy/dy
//! rho dvy/dt  = dsxy/dx + dsyy/dy + s
//! dsxx/dt     = (lambda + 2 mu) dvx/dx + lambda dvy/dy
//! dsyy/dt     = lambda dvx/dx + (lambda + 2 mu) dvy/dy
//! dsxy/dt     = mu (dvx/dy + dvy/dx)
//! ```
//!
//! Velocities are advanced first, then stresses. With a free surface in y
//! the rows `0` and `ny - 1` of the cell sub-grid lie on the surfaces:
//! `syy` is held at zero there, and `sxx` follows `dsxx/dt = M dvx/dx` with
//! `M = 4 mu (lambda + mu) / (lambda + 2 mu)`, which is what the bulk
//! equations give once `syy` is eliminated.

use crate::acoustic::{convert_into, narrow, widen_all};
use crate::diagnostics::{elastic_energy, ElasticMaterial, ElasticSnapshot, EnergySeries};
use crate::medium_grid::{Axis, Boundary, Field2D, GridSpec, Medium, Stagger};
use crate::operators::{apply_free_surface, derivative_into, StencilSpec};
use crate::precision::Precision;
use crate::solver::{
    check_receivers, new_traces, samples_energy, update_field, RunOutput, RunSpec, SimError, SourceKind, SourceSpec,
    UpdateMode,
};
use crate::with_precisions;

/// Fields that receivers sample, in output order.
pub const RECEIVER_FIELDS: [&str; 5] = ["Vx", "Vy", "Sxx", "Syy", "Sxy"];

#[derive(Debug, Clone, PartialEq)]
pub struct ElasticState<U: Precision> {
    pub vx: Field2D<U>,
    pub vy: Field2D<U>,
    pub sxx: Field2D<U>,
    pub syy: Field2D<U>,
    pub sxy: Field2D<U>,
    pub rvx: Field2D<U>,
    pub rvy: Field2D<U>,
    pub rsxx: Field2D<U>,
    pub rsyy: Field2D<U>,
    pub rsxy: Field2D<U>,
    pub step: usize,
}

impl<U: Precision> ElasticState<U> {
    pub fn zeros(grid: &GridSpec) -> Self {
        let z = |s| Field2D::zeros(grid, s);
        ElasticState {
            vx: z(Stagger::XFace),
            vy: z(Stagger::YFace),
            sxx: z(Stagger::Cell),
            syy: z(Stagger::Cell),
            sxy: z(Stagger::Node),
            rvx: z(Stagger::XFace),
            rvy: z(Stagger::YFace),
            rsxx: z(Stagger::Cell),
            rsyy: z(Stagger::Cell),
            rsxy: z(Stagger::Node),
            step: 0,
        }
    }
}

/// Stress levels saved before a step, for the energy pairing.
struct StressLevels {
    sxx: Vec<f64>,
    syy: Vec<f64>,
    sxy: Vec<f64>,
}

pub struct ElasticSolver<S: Precision, U: Precision> {
    grid: GridSpec,
    mode: UpdateMode,
    source: Option<SourceSpec>,
    stencil: StencilSpec<S>,
    rho_x: Vec<S::Work>,
    rho_y: Vec<S::Work>,
    p_modulus: Vec<S::Work>,
    lambda: Vec<S::Work>,
    mu_node: Vec<S::Work>,
    /// Top row then bottom row; empty without a free surface.
    surface_modulus: Vec<S::Work>,
    dt: U::Elem,
    state: ElasticState<U>,
    sxx_s: Field2D<S>,
    syy_s: Field2D<S>,
    sxy_s: Field2D<S>,
    vx_s: Field2D<S>,
    vy_s: Field2D<S>,
    /// Two derivative buffers per target sub-grid.
    on_xface: [Field2D<S>; 2],
    on_yface: [Field2D<S>; 2],
    on_cell: [Field2D<S>; 2],
    on_node: [Field2D<S>; 2],
    rhs: Vec<S::Work>,
}

impl<S: Precision, U: Precision> ElasticSolver<S, U> {
    pub fn new(spec: &RunSpec) -> Result<Self, SimError> {
        let grid = spec.grid;
        grid.validate()?;
        let Medium::Elastic(medium) = &spec.medium else {
            return Err(SimError::Setup(format!("expected an elastic medium, got {}", spec.medium.kind_name())));
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
            if src.kind != SourceKind::VyPoint {
                return Err(SimError::Setup(format!("elastic runs take a vy source, got {}", src.kind)));
            }
            check_receivers(&grid, &[(src.ix, src.iy)], &[Stagger::YFace])
                .map_err(|_| SimError::Setup(format!("source at ({}, {}) lies outside the grid", src.ix, src.iy)))?;
        }
        check_receivers(&grid, &spec.receivers, &Stagger::ALL)?;

        let n = grid.nx * grid.ny;
        let p_modulus: Vec<f64> = medium.lambda.iter().zip(&medium.mu).map(|(l, m)| l + 2.0 * m).collect();
        let surface_modulus = match grid.bc_y {
            Boundary::Periodic => Vec::new(),
            Boundary::FreeSurface => {
                let row = |j: usize| (0..grid.nx).map(move |i| j * grid.nx + i);
                row(0)
                    .chain(row(grid.ny - 1))
                    .map(|k| {
                        let (l, m) = (medium.lambda[k], medium.mu[k]);
                        S::load(S::round(4.0 * m * (l + m) / (l + 2.0 * m)))
                    })
                    .collect()
            }
        };
        let z = |s| Field2D::<S>::zeros(&grid, s);
        Ok(ElasticSolver {
            grid,
            mode: spec.mode,
            source: spec.source,
            stencil: StencilSpec::new(grid.dx),
            rho_x: narrow::<S>(&medium.rho_x[..grid.len(Stagger::XFace)]),
            rho_y: narrow::<S>(&medium.rho_y[..grid.len(Stagger::YFace)]),
            p_modulus: narrow::<S>(&p_modulus),
            lambda: narrow::<S>(&medium.lambda),
            mu_node: narrow::<S>(&medium.mu_nodes(&grid)),
            surface_modulus,
            dt: U::round(grid.dt),
            state: ElasticState::zeros(&grid),
            sxx_s: z(Stagger::Cell),
            syy_s: z(Stagger::Cell),
            sxy_s: z(Stagger::Node),
            vx_s: z(Stagger::XFace),
            vy_s: z(Stagger::YFace),
            on_xface: [z(Stagger::XFace), z(Stagger::XFace)],
            on_yface: [z(Stagger::YFace), z(Stagger::YFace)],
            on_cell: [z(Stagger::Cell), z(Stagger::Cell)],
            on_node: [z(Stagger::Node), z(Stagger::Node)],
            rhs: vec![S::load(S::zero()); n],
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn state(&self) -> &ElasticState<U> {
        &self.state
    }

    /// Mutable access, for setting initial data.
    pub fn state_mut(&mut self) -> &mut ElasticState<U> {
        &mut self.state
    }

    /// Medium values exactly as the solver uses them, widened to binary64.
    pub fn material(&self) -> ElasticMaterial {
        ElasticMaterial {
            rho_x: widen_all::<S>(&self.rho_x),
            rho_y: widen_all::<S>(&self.rho_y),
            p_modulus: widen_all::<S>(&self.p_modulus),
            lambda: widen_all::<S>(&self.lambda),
            mu_node: widen_all::<S>(&self.mu_node),
            surface_modulus: widen_all::<S>(&self.surface_modulus),
        }
    }

    fn free_surface(&self) -> bool {
        self.grid.bc_y == Boundary::FreeSurface
    }

    fn non_finite(&self, field: &'static str) -> SimError {
        SimError::NonFinite { step: self.state.step, field }
    }

    pub fn step(&mut self) -> Result<(), SimError> {
        self.advance(self.mode)
    }

    pub fn step_baseline(&mut self) -> Result<(), SimError> {
        self.advance(UpdateMode::Baseline)
    }

    pub fn step_compensated(&mut self, variant: crate::SumVariant) -> Result<(), SimError> {
        self.advance(UpdateMode::Compensated(variant))
    }

    fn advance(&mut self, mode: UpdateMode) -> Result<(), SimError> {
        let grid = self.grid;
        let nx = grid.nx;
        let stencil = self.stencil;
        let surface = self.free_surface();

        // Velocities from the stress divergence.
        convert_into(&self.state.sxx, &mut self.sxx_s);
        convert_into(&self.state.syy, &mut self.syy_s);
        convert_into(&self.state.sxy, &mut self.sxy_s);
        let [a, b] = &mut self.on_xface;
        derivative_into(&self.sxx_s, Axis::X, &stencil, &grid, a)?;
        derivative_into(&self.sxy_s, Axis::Y, &stencil, &grid, b)?;
        let len = a.len();
        let rhs = &mut self.rhs[..len];
        for (k, r) in rhs.iter_mut().enumerate() {
            *r = S::wdiv(S::wadd(S::load(a.as_slice()[k]), S::load(b.as_slice()[k])), self.rho_x[k]);
        }
        let st = &mut self.state;
        if !update_field::<S, U>(st.vx.as_mut_slice(), st.rvx.as_mut_slice(), rhs, self.dt, mode) {
            return Err(self.non_finite("Vx"));
        }

        let [a, b] = &mut self.on_yface;
        derivative_into(&self.sxy_s, Axis::X, &stencil, &grid, a)?;
        derivative_into(&self.syy_s, Axis::Y, &stencil, &grid, b)?;
        let len = a.len();
        let rhs = &mut self.rhs[..len];
        for (r, (&d1, &d2)) in rhs.iter_mut().zip(a.as_slice().iter().zip(b.as_slice())) {
            *r = S::wadd(S::load(d1), S::load(d2));
        }
        if let Some(src) = &self.source {
            let t = self.state.step as f64 * grid.dt;
            let k = src.iy * nx + src.ix;
            rhs[k] = S::wadd(rhs[k], S::load(S::round(src.wavelet.windowed(t))));
        }
        for (r, &rho) in rhs.iter_mut().zip(&self.rho_y) {
            *r = S::wdiv(*r, rho);
        }
        let st = &mut self.state;
        if !update_field::<S, U>(st.vy.as_mut_slice(), st.rvy.as_mut_slice(), rhs, self.dt, mode) {
            return Err(self.non_finite("Vy"));
        }

        // Stresses from the velocity gradients.
        convert_into(&self.state.vx, &mut self.vx_s);
        convert_into(&self.state.vy, &mut self.vy_s);
        let [dvxdx, dvydy] = &mut self.on_cell;
        derivative_into(&self.vx_s, Axis::X, &stencil, &grid, dvxdx)?;
        derivative_into(&self.vy_s, Axis::Y, &stencil, &grid, dvydy)?;
        let (dvxdx, dvydy) = (dvxdx.as_slice(), dvydy.as_slice());
        let last = grid.ny - 1;
        let on_surface = |k: usize| surface && (k < nx || k >= last * nx);
        let surface_index = |k: usize| if k < nx { k } else { nx + k - last * nx };

        let rhs = &mut self.rhs[..];
        for (k, r) in rhs.iter_mut().enumerate() {
            *r = if on_surface(k) {
                S::wmul(self.surface_modulus[surface_index(k)], S::load(dvxdx[k]))
            } else {
                S::wadd(S::wmul(self.p_modulus[k], S::load(dvxdx[k])), S::wmul(self.lambda[k], S::load(dvydy[k])))
            };
        }
        let st = &mut self.state;
        if !update_field::<S, U>(st.sxx.as_mut_slice(), st.rsxx.as_mut_slice(), rhs, self.dt, mode) {
            return Err(self.non_finite("Sxx"));
        }

        for (k, r) in rhs.iter_mut().enumerate() {
            *r = if on_surface(k) {
                S::load(S::zero())
            } else {
                S::wadd(S::wmul(self.lambda[k], S::load(dvxdx[k])), S::wmul(self.p_modulus[k], S::load(dvydy[k])))
            };
        }
        let st = &mut self.state;
        if !update_field::<S, U>(st.syy.as_mut_slice(), st.rsyy.as_mut_slice(), rhs, self.dt, mode) {
            return Err(self.non_finite("Syy"));
        }
        if surface {
            apply_free_surface(&mut self.state.syy, &grid, Axis::Y)?;
            apply_free_surface(&mut self.state.rsyy, &grid, Axis::Y)?;
        }

        let [dvxdy, dvydx] = &mut self.on_node;
        derivative_into(&self.vx_s, Axis::Y, &stencil, &grid, dvxdy)?;
        derivative_into(&self.vy_s, Axis::X, &stencil, &grid, dvydx)?;
        let len = dvxdy.len();
        let rhs = &mut self.rhs[..len];
        for (k, r) in rhs.iter_mut().enumerate() {
            *r = S::wmul(self.mu_node[k], S::wadd(S::load(dvxdy.as_slice()[k]), S::load(dvydx.as_slice()[k])));
        }
        let st = &mut self.state;
        if !update_field::<S, U>(st.sxy.as_mut_slice(), st.rsxy.as_mut_slice(), rhs, self.dt, mode) {
            return Err(self.non_finite("Sxy"));
        }

        self.state.step += 1;
        Ok(())
    }

    fn stress_levels(&self) -> StressLevels {
        StressLevels { sxx: self.state.sxx.to_f64(), syy: self.state.syy.to_f64(), sxy: self.state.sxy.to_f64() }
    }

    fn energy_with(&self, before: &StressLevels, material: &ElasticMaterial) -> f64 {
        let now = self.stress_levels();
        let (vx, vy) = (self.state.vx.to_f64(), self.state.vy.to_f64());
        let snap = ElasticSnapshot {
            sxx_now: &before.sxx,
            syy_now: &before.syy,
            sxy_now: &before.sxy,
            sxx_next: &now.sxx,
            syy_next: &now.syy,
            sxy_next: &now.sxy,
            vx: &vx,
            vy: &vy,
        };
        elastic_energy(&snap, material, &self.grid)
    }

    /// Value of the receiver field `slot` (index into [`RECEIVER_FIELDS`]) at `(ix, iy)`.
    pub fn sample(&self, slot: usize, ix: usize, iy: usize) -> f64 {
        let st = &self.state;
        match slot {
            0 => st.vx.value(ix, iy),
            1 => st.vy.value(ix, iy),
            2 => st.sxx.value(ix, iy),
            3 => st.syy.value(ix, iy),
            _ => st.sxy.value(ix, iy),
        }
    }

    /// Runs `nt` steps from the current state, recording traces every step and energy on the cadence.
    pub fn run(&mut self, receivers: &[(usize, usize)], cadence: usize) -> Result<RunOutput, SimError> {
        let cadence = cadence.max(1);
        let material = self.material();
        let nt = self.grid.nt;
        let dt = self.grid.dt;
        let mut traces = new_traces(&RECEIVER_FIELDS, receivers.len(), nt);
        let mut energy = EnergySeries::default();
        let initial = self.stress_levels();
        energy.push(0.0, self.energy_with(&initial, &material));
        for n in 0..nt {
            let before = samples_energy(n, nt, cadence).then(|| self.stress_levels());
            self.step()?;
            for slot in 0..RECEIVER_FIELDS.len() {
                for (r, &(ix, iy)) in receivers.iter().enumerate() {
                    traces[slot * receivers.len() + r].samples.push(self.sample(slot, ix, iy));
                }
            }
            if let Some(before) = before {
                energy.push((n as f64 + 0.5) * dt, self.energy_with(&before, &material));
            }
        }
        Ok(RunOutput { traces, energy, steps: nt, dt })
    }
}

fn run_typed<S: Precision, U: Precision>(spec: &RunSpec) -> Result<RunOutput, SimError> {
    let mut solver = ElasticSolver::<S, U>::new(spec)?;
    solver.run(&spec.receivers, spec.energy_cadence)
}

pub fn run_elastic(spec: &RunSpec) -> Result<RunOutput, SimError> {
    with_precisions!(spec.stencil_precision, spec.update_precision, |S, U| run_typed::<S, U>(spec))
}
