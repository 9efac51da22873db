//! Physical parameters on the staggered layout.
//!
//! Every plane is `nx * ny`, row-major, binary64. Density is stored on the two
//! velocity sub-grids, compressibility and the Lamé parameters on cells. The
//! shear modulus needed at nodes is derived from the four surrounding cells
//! when a medium is materialized for an elastic run.

use super::grid::{Axis, GridSpec, Stagger};
use super::MediumError;

#[derive(Debug, Clone, PartialEq)]
pub struct AcousticMedium {
    pub nx: usize,
    pub ny: usize,
    pub rho_x: Vec<f64>,
    pub rho_y: Vec<f64>,
    /// Compressibility, `1 / (rho c^2)`.
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElasticMedium {
    pub nx: usize,
    pub ny: usize,
    pub rho_x: Vec<f64>,
    pub rho_y: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Medium {
    Acoustic(AcousticMedium),
    Elastic(ElasticMedium),
}

/// One horizontal layer of a layered elastic model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    /// Bottom of the layer as a fraction of the model depth.
    pub depth_fraction: f64,
    pub rho: f64,
    pub cp: f64,
    pub cs: f64,
}

impl Layer {
    pub fn new(depth_fraction: f64, rho: f64, cp: f64, cs: f64) -> Self {
        Layer { depth_fraction, rho, cp, cs }
    }

    pub fn lambda(&self) -> f64 {
        self.rho * (self.cp * self.cp - 2.0 * self.cs * self.cs)
    }

    pub fn mu(&self) -> f64 {
        self.rho * self.cs * self.cs
    }
}

pub fn build_homogeneous_acoustic(nx: usize, ny: usize, rho: f64, c: f64) -> Result<Medium, MediumError> {
    for (name, v) in [("rho", rho), ("c", c)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(MediumError::Parameter(format!("{name} must be positive and finite, got {v}")));
        }
    }
    let n = nx * ny;
    let beta = 1.0 / (rho * c * c);
    Ok(Medium::Acoustic(AcousticMedium {
        nx,
        ny,
        rho_x: vec![rho; n],
        rho_y: vec![rho; n],
        beta: vec![beta; n],
    }))
}

/// Piecewise-constant-by-depth elastic medium.
///
/// Depth is measured in rows from the top surface: cell and `XFace` row `j`
/// sits at depth `j`, `YFace` row `j` at `j + 1/2`. A sample belongs to the
/// first layer whose bottom `depth_fraction * ny` lies below it.
pub fn build_layered_elastic(nx: usize, ny: usize, layers: &[Layer]) -> Result<Medium, MediumError> {
    if layers.is_empty() {
        return Err(MediumError::Parameter("layer list is empty".into()));
    }
    let mut prev = 0.0;
    for (k, l) in layers.iter().enumerate() {
        if !(l.depth_fraction > prev) {
            return Err(MediumError::Parameter(format!("layer {k}: depth fractions must increase, got {}", l.depth_fraction)));
        }
        prev = l.depth_fraction;
        if !(l.rho > 0.0 && l.cp > 0.0 && l.cs >= 0.0) || !(l.rho.is_finite() && l.cp.is_finite() && l.cs.is_finite()) {
            return Err(MediumError::Parameter(format!("layer {k}: rho and cp must be positive and cs non-negative")));
        }
        if l.cs >= l.cp {
            return Err(MediumError::Parameter(format!("layer {k}: cs = {} must be below cp = {}", l.cs, l.cp)));
        }
        if l.lambda() + 2.0 * l.mu() <= 0.0 {
            return Err(MediumError::Parameter(format!("layer {k}: lambda + 2 mu must be positive")));
        }
    }
    let layer_at = |depth: f64| -> &Layer {
        layers
            .iter()
            .find(|l| depth < l.depth_fraction * ny as f64)
            .unwrap_or(layers.last().unwrap())
    };
    let plane = |stagger: Stagger, f: &dyn Fn(&Layer) -> f64| -> Vec<f64> {
        let mut v = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let l = layer_at(stagger.coordinate(Axis::Y, j));
            v.extend(std::iter::repeat_n(f(l), nx));
        }
        v
    };
    Ok(Medium::Elastic(ElasticMedium {
        nx,
        ny,
        rho_x: plane(Stagger::XFace, &|l| l.rho),
        rho_y: plane(Stagger::YFace, &|l| l.rho),
        lambda: plane(Stagger::Cell, &Layer::lambda),
        mu: plane(Stagger::Cell, &Layer::mu),
    }))
}

impl Medium {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Medium::Acoustic(m) => (m.nx, m.ny),
            Medium::Elastic(m) => (m.nx, m.ny),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Medium::Acoustic(_) => "acoustic",
            Medium::Elastic(_) => "elastic",
        }
    }

    /// Named planes in file order.
    pub fn planes(&self) -> Vec<(&'static str, &[f64])> {
        match self {
            Medium::Acoustic(m) => vec![("rho_x", &m.rho_x[..]), ("rho_y", &m.rho_y[..]), ("beta", &m.beta[..])],
            Medium::Elastic(m) => vec![
                ("rho_x", &m.rho_x[..]),
                ("rho_y", &m.rho_y[..]),
                ("lambda", &m.lambda[..]),
                ("mu", &m.mu[..]),
            ],
        }
    }

    /// Checks plane sizes and the positivity invariants, naming the first offending cell.
    pub fn validate(&self) -> Result<(), MediumError> {
        let (nx, ny) = self.dims();
        for (name, plane) in self.planes() {
            if plane.len() != nx * ny {
                return Err(MediumError::DimensionMismatch(format!(
                    "plane {name} has {} entries, expected {}",
                    plane.len(),
                    nx * ny
                )));
            }
            for (k, &v) in plane.iter().enumerate() {
                let bad = !v.is_finite() || if name == "mu" { v < 0.0 } else if name == "lambda" { false } else { v <= 0.0 };
                if bad {
                    return Err(MediumError::Invalid { plane: name, i: k % nx, j: k / nx, value: v });
                }
            }
        }
        if let Medium::Elastic(m) = self {
            for k in 0..nx * ny {
                let p = m.lambda[k] + 2.0 * m.mu[k];
                if !(p > 0.0) {
                    return Err(MediumError::Invalid { plane: "lambda+2mu", i: k % nx, j: k / nx, value: p });
                }
            }
        }
        Ok(())
    }

    /// Largest wave speed, used for the stability check.
    pub fn max_speed(&self) -> f64 {
        match self {
            Medium::Acoustic(m) => {
                // c^2 = 1 / (rho beta) with rho taken from both faces.
                let mut cmax: f64 = 0.0;
                for k in 0..m.beta.len() {
                    let rho = m.rho_x[k].min(m.rho_y[k]);
                    cmax = cmax.max((1.0 / (rho * m.beta[k])).sqrt());
                }
                cmax
            }
            Medium::Elastic(m) => {
                let mut cmax: f64 = 0.0;
                for k in 0..m.lambda.len() {
                    let rho = m.rho_x[k].min(m.rho_y[k]);
                    cmax = cmax.max(((m.lambda[k] + 2.0 * m.mu[k]) / rho).sqrt());
                }
                cmax
            }
        }
    }
}

impl ElasticMedium {
    /// Shear modulus at nodes: harmonic mean of the four surrounding cells,
    /// zero if any of them is fluid. Rows follow `grid.rows(Stagger::Node)`.
    pub fn mu_nodes(&self, grid: &GridSpec) -> Vec<f64> {
        let nx = self.nx;
        let rows = grid.rows(Stagger::Node);
        let mut out = Vec::with_capacity(nx * rows);
        for j in 0..rows {
            // Node row j lies between cell rows j and j + 1.
            let j1 = (j + 1) % self.ny;
            for i in 0..nx {
                let im = (i + nx - 1) % nx;
                let cells = [
                    self.mu[j * nx + im],
                    self.mu[j * nx + i],
                    self.mu[j1 * nx + im],
                    self.mu[j1 * nx + i],
                ];
                out.push(harmonic_mean4(cells));
            }
        }
        out
    }
}

fn harmonic_mean4(v: [f64; 4]) -> f64 {
    if v.iter().any(|&m| m <= 0.0) {
        return 0.0;
    }
    4.0 / (1.0 / v[0] + 1.0 / v[1] + 1.0 / v[2] + 1.0 / v[3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium_grid::grid::Boundary;
    use crate::precision::{round_to, Format};

    #[test]
    fn homogeneous_unit_medium() {
        let Medium::Acoustic(m) = build_homogeneous_acoustic(600, 600, 1.0, 1.0).unwrap() else { unreachable!() };
        assert!(m.beta.iter().all(|&b| b == 1.0));
        assert!(m.rho_x.iter().chain(&m.rho_y).all(|&r| r == 1.0));
        assert!(m.beta.iter().all(|&b| round_to(Format::Fp16, b).value() == 1.0));
    }

    #[test]
    fn homogeneous_beta_formula() {
        let Medium::Acoustic(m) = build_homogeneous_acoustic(8, 8, 1.0, 2.0).unwrap() else { unreachable!() };
        assert!(m.beta.iter().all(|&b| b == 0.25));
        assert!(build_homogeneous_acoustic(8, 8, 0.0, 1.0).is_err());
        assert!(build_homogeneous_acoustic(8, 8, 1.0, -1.0).is_err());
    }

    #[test]
    fn single_layer_lame_parameters() {
        let Medium::Elastic(m) = build_layered_elastic(8, 8, &[Layer::new(1.0, 2.0, 3.0, 1.5)]).unwrap() else {
            unreachable!()
        };
        assert!(m.lambda.iter().all(|&l| l == 9.0));
        assert!(m.mu.iter().all(|&u| u == 4.5));
    }

    #[test]
    fn two_layers_switch_at_mid_depth() {
        let layers = [Layer::new(0.5, 2.0, 3.0, 1.5), Layer::new(1.0, 2.5, 4.0, 2.0)];
        let Medium::Elastic(m) = build_layered_elastic(8, 8, &layers).unwrap() else { unreachable!() };
        for j in 0..8 {
            let expect = if j < 4 { (9.0, 4.5) } else { (2.5 * (16.0 - 8.0), 10.0) };
            assert_eq!((m.lambda[j * 8], m.mu[j * 8]), expect, "row {j}");
            assert_eq!(m.rho_y[j * 8], if j < 4 { 2.0 } else { 2.5 });
        }
    }

    #[test]
    fn extreme_layer_shear_modulus() {
        let l = Layer::new(1.0, 2.0293, 4.6992, 1.0117);
        // 2.0293 * 1.0117^2 evaluated independently: 1.0117^2 = 1.02353689.
        assert!((l.mu() - 2.0293 * 1.023_536_89).abs() < 1e-12);
        assert!((l.mu() - 2.0771).abs() < 1e-3);
    }

    #[test]
    fn layered_errors() {
        assert!(build_layered_elastic(8, 8, &[]).is_err());
        assert!(build_layered_elastic(8, 8, &[Layer::new(1.0, 2.0, 1.0, 1.0)]).is_err());
        assert!(build_layered_elastic(8, 8, &[Layer::new(1.0, 2.0, 1.0, 1.5)]).is_err());
    }

    #[test]
    fn node_shear_modulus_is_harmonic() {
        let layers = [Layer::new(0.5, 1.0, 2.0, 1.0), Layer::new(1.0, 1.0, 3.0, 2.0)];
        let Medium::Elastic(m) = build_layered_elastic(8, 8, &layers).unwrap() else { unreachable!() };
        let g = GridSpec::new(8, 8, 1.0, 0.1, 1).with_bc_y(Boundary::FreeSurface);
        let nodes = m.mu_nodes(&g);
        assert_eq!(nodes.len(), 8 * 7);
        assert_eq!(nodes[0], 1.0);
        // Row 3 straddles the interface between mu = 1 and mu = 4.
        assert!((nodes[3 * 8] - 1.6).abs() < 1e-15);
        assert_eq!(nodes[6 * 8], 4.0);
    }

    #[test]
    fn validation_names_cell() {
        let Medium::Acoustic(mut m) = build_homogeneous_acoustic(8, 8, 1.0, 1.0).unwrap() else { unreachable!() };
        m.rho_y[3 * 8 + 5] = 0.0;
        match Medium::Acoustic(m).validate() {
            Err(MediumError::Invalid { plane, i, j, .. }) => assert_eq!((plane, i, j), ("rho_y", 5, 3)),
            other => panic!("{other:?}"),
        }
    }
}
