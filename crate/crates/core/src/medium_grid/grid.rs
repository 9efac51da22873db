//! Grid geometry and the staggered sub-grid layout.
//!
//! Along x every sub-grid has `nx` points and wraps periodically. Positions
//! are either on integer coordinates (`XFace`, `Node`) or shifted by half a
//! spacing (`Cell`, `YFace`).
//!
//! Along y, `Cell` and `XFace` rows sit at integer coordinates `j` and
//! `YFace` and `Node` rows at `j + 1/2`. With a periodic y boundary all four
//! sub-grids have `ny` rows. With free surfaces the top and bottom surfaces
//! coincide with integer rows `0` and `ny - 1`, so the half-shifted sub-grids
//! only have the `ny - 1` rows lying strictly between them.

use super::GridError;

/// Stability limit of `c * dt / dx` for the fourth-order staggered leapfrog scheme in 2D.
pub const CFL_LIMIT: f64 = 6.0 / (7.0 * std::f64::consts::SQRT_2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    FreeSurface,
}

impl std::str::FromStr for Boundary {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "periodic" => Ok(Boundary::Periodic),
            "free_surface" | "free-surface" | "freesurface" => Ok(Boundary::FreeSurface),
            other => Err(format!("unknown boundary `{other}`")),
        }
    }
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Boundary::Periodic => "periodic",
            Boundary::FreeSurface => "free_surface",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

/// Sub-grid a field lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stagger {
    /// Pressure and normal stresses.
    Cell,
    /// `v_x`.
    XFace,
    /// `v_y`.
    YFace,
    /// Shear stress.
    Node,
}

impl Stagger {
    pub const ALL: [Stagger; 4] = [Stagger::Cell, Stagger::XFace, Stagger::YFace, Stagger::Node];

    /// Whether the sub-grid is shifted by half a spacing along `axis`.
    pub fn is_half(self, axis: Axis) -> bool {
        match axis {
            Axis::X => matches!(self, Stagger::Cell | Stagger::YFace),
            Axis::Y => matches!(self, Stagger::YFace | Stagger::Node),
        }
    }

    /// The sub-grid reached by differentiating along `axis`.
    pub fn shifted(self, axis: Axis) -> Stagger {
        use Stagger::*;
        match (self, axis) {
            (Cell, Axis::X) => XFace,
            (XFace, Axis::X) => Cell,
            (YFace, Axis::X) => Node,
            (Node, Axis::X) => YFace,
            (Cell, Axis::Y) => YFace,
            (YFace, Axis::Y) => Cell,
            (XFace, Axis::Y) => Node,
            (Node, Axis::Y) => XFace,
        }
    }

    /// Position of index `k` along `axis` in units of the grid spacing.
    pub fn coordinate(self, axis: Axis, k: usize) -> f64 {
        k as f64 + if self.is_half(axis) { 0.5 } else { 0.0 }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stagger::Cell => "cell",
            Stagger::XFace => "xface",
            Stagger::YFace => "yface",
            Stagger::Node => "node",
        }
    }
}

/// Discretization parameters for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// Grid spacing, identical along both axes.
    pub dx: f64,
    pub dt: f64,
    pub nt: usize,
    pub bc_x: Boundary,
    pub bc_y: Boundary,
}

impl GridSpec {
    pub const MIN_CELLS: usize = 8;

    pub fn new(nx: usize, ny: usize, dx: f64, dt: f64, nt: usize) -> Self {
        GridSpec {
            nx,
            ny,
            dx,
            dt,
            nt,
            bc_x: Boundary::Periodic,
            bc_y: Boundary::Periodic,
        }
    }

    pub fn with_bc_y(mut self, bc_y: Boundary) -> Self {
        self.bc_y = bc_y;
        self
    }

    /// Checks the shape invariants. A zero step count is accepted and yields
    /// a run that only reports the initial state.
    pub fn validate(&self) -> Result<(), GridError> {
        if self.nx < Self::MIN_CELLS || self.ny < Self::MIN_CELLS {
            return Err(GridError::TooSmall { nx: self.nx, ny: self.ny, min: Self::MIN_CELLS });
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(GridError::NonPositive { name: "dx", value: self.dx });
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(GridError::NonPositive { name: "dt", value: self.dt });
        }
        if self.bc_x != Boundary::Periodic {
            return Err(GridError::UnsupportedBoundary { axis: Axis::X, bc: self.bc_x });
        }
        Ok(())
    }

    pub fn cfl(&self, max_speed: f64) -> f64 {
        max_speed * self.dt / self.dx
    }

    pub fn check_cfl(&self, max_speed: f64) -> Result<f64, GridError> {
        let cfl = self.cfl(max_speed);
        if !(cfl <= CFL_LIMIT) {
            return Err(GridError::Cfl { cfl, limit: CFL_LIMIT });
        }
        Ok(cfl)
    }

    pub fn rows(&self, stagger: Stagger) -> usize {
        if self.bc_y == Boundary::FreeSurface && stagger.is_half(Axis::Y) {
            self.ny - 1
        } else {
            self.ny
        }
    }

    pub fn cols(&self, _stagger: Stagger) -> usize {
        self.nx
    }

    pub fn len(&self, stagger: Stagger) -> usize {
        self.rows(stagger) * self.cols(stagger)
    }

    pub fn is_empty(&self) -> bool {
        self.nx == 0 || self.ny == 0
    }

    /// Quadrature weight of row `j` of `stagger`: one half on rows lying on a
    /// free surface, one elsewhere.
    pub fn row_weight(&self, stagger: Stagger, j: usize) -> f64 {
        if self.bc_y == Boundary::FreeSurface && !stagger.is_half(Axis::Y) && (j == 0 || j + 1 == self.ny) {
            0.5
        } else {
            1.0
        }
    }

    pub fn duration(&self) -> f64 {
        self.nt as f64 * self.dt
    }
}
