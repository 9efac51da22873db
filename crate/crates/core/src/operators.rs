//! Fourth-order staggered finite-difference derivatives.
//!
//! Output point `o` combines the four inputs at `o - 3/2, o - 1/2, o + 1/2,
//! o + 3/2` with taps `[1/24, -9/8, 9/8, -1/24] / dx`. Products are paired
//! outer-with-outer and inner-with-inner, `(c1 a + c4 d) + (c2 b + c3 c)`,
//! every multiply and add rounded in the stencil precision. Because the
//! rounded taps satisfy `c1 == -c4` and `c2 == -c3` exactly, a constant
//! input cancels to zero in every precision.
//!
//! Along a free-surface axis the stencil reads image values beyond the
//! surface: stress sub-grids (`Cell`, `Node`) are reflected with a sign
//! flip, velocity sub-grids (`XFace`, `YFace`) without. Combined with the
//! half weights on surface rows this makes the velocity-to-stress operator
//! the negative adjoint of the stress-to-velocity operator, so the discrete
//! energy is conserved.

use rayon::prelude::*;
use thiserror::Error;

use crate::medium_grid::{Axis, Boundary, Field2D, GridSpec, Stagger};
use crate::precision::Precision;

pub const TAPS: [(f64, f64); 4] = [(1.0, 24.0), (-9.0, 8.0), (9.0, 8.0), (-1.0, 24.0)];

#[derive(Debug, Error, PartialEq)]
pub enum OperatorError {
    #[error("cannot differentiate a {from:?} field along {axis:?} onto {to:?}")]
    IncompatibleStagger { from: Stagger, to: Stagger, axis: Axis },
    #[error("field shape {cols}x{rows} does not match the {stagger:?} sub-grid of the grid")]
    Shape { stagger: Stagger, cols: usize, rows: usize },
    #[error("free-surface conditions need a {expected:?} field on a free-surface y axis")]
    FreeSurfaceUnsupported { expected: Stagger },
}

/// Stencil taps scaled by `1/dx` and rounded into precision `P`.
#[derive(Debug, Clone, Copy)]
pub struct StencilSpec<P: Precision> {
    coefficients: [P::Work; 4],
}

impl<P: Precision> StencilSpec<P> {
    pub fn new(dx: f64) -> Self {
        let inner = P::load(P::round(9.0 / (8.0 * dx)));
        let outer = P::load(P::round(1.0 / (24.0 * dx)));
        StencilSpec {
            coefficients: [outer, P::wneg(inner), inner, P::wneg(outer)],
        }
    }

    pub fn coefficients(&self) -> [P::Elem; 4] {
        self.coefficients.map(P::store)
    }

    #[inline(always)]
    pub fn apply_work(&self, a: P::Work, b: P::Work, c: P::Work, d: P::Work) -> P::Work {
        let [c1, c2, c3, c4] = self.coefficients;
        let outer = P::wadd(P::wmul(c1, a), P::wmul(c4, d));
        let inner = P::wadd(P::wmul(c2, b), P::wmul(c3, c));
        P::wadd(outer, inner)
    }

    #[inline(always)]
    pub fn apply(&self, a: P::Elem, b: P::Elem, c: P::Elem, d: P::Elem) -> P::Elem {
        P::store(self.apply_work(P::load(a), P::load(b), P::load(c), P::load(d)))
    }
}

/// Index offsets of the four inputs relative to the output index.
fn offsets(target_is_half: bool) -> [isize; 4] {
    if target_is_half {
        [-1, 0, 1, 2]
    } else {
        [-2, -1, 0, 1]
    }
}

/// Maps a possibly out-of-range index along a free-surface axis to a stored
/// index and the image sign. `surface` is the index of the bottom surface
/// row on the integer sub-grid.
pub fn image_index(stagger: Stagger, surface: isize, r: isize) -> (usize, bool) {
    let odd = matches!(stagger, Stagger::Cell | Stagger::Node);
    if stagger.is_half(Axis::Y) {
        // Rows 0..surface-1 at depths k + 1/2; surfaces at depths 0 and `surface`.
        if r < 0 {
            ((-r - 1) as usize, odd)
        } else if r >= surface {
            ((2 * surface - 1 - r) as usize, odd)
        } else {
            (r as usize, false)
        }
    } else if r < 0 {
        ((-r) as usize, odd)
    } else if r > surface {
        ((2 * surface - r) as usize, odd)
    } else {
        (r as usize, false)
    }
}

/// Value of `field` at row `j` (possibly a ghost row beyond a free surface), widened to binary64.
pub fn ghost_value<P: Precision>(field: &Field2D<P>, grid: &GridSpec, i: usize, j: isize) -> f64 {
    match grid.bc_y {
        Boundary::Periodic => field.value(i, j.rem_euclid(field.rows() as isize) as usize),
        Boundary::FreeSurface => {
            let (r, flip) = image_index(field.stagger(), grid.ny as isize - 1, j);
            let v = field.value(i, r);
            if flip {
                -v
            } else {
                v
            }
        }
    }
}

fn check_shape<P: Precision>(f: &Field2D<P>, grid: &GridSpec) -> Result<(), OperatorError> {
    let s = f.stagger();
    if f.cols() != grid.cols(s) || f.rows() != grid.rows(s) {
        return Err(OperatorError::Shape { stagger: s, cols: f.cols(), rows: f.rows() });
    }
    Ok(())
}

/// Derivative along `axis` of `src`, written into `out`, which must live on
/// the sub-grid half a spacing away along that axis.
pub fn derivative_into<P: Precision>(
    src: &Field2D<P>,
    axis: Axis,
    stencil: &StencilSpec<P>,
    grid: &GridSpec,
    out: &mut Field2D<P>,
) -> Result<(), OperatorError> {
    let from = src.stagger();
    let to = out.stagger();
    if from.shifted(axis) != to {
        return Err(OperatorError::IncompatibleStagger { from, to, axis });
    }
    check_shape(src, grid)?;
    check_shape(out, grid)?;
    let off = offsets(to.is_half(axis));
    let cols = out.cols();
    match axis {
        Axis::X => {
            let n = cols as isize;
            let idx: Vec<[usize; 4]> = (0..cols as isize)
                .map(|i| off.map(|o| (i + o).rem_euclid(n) as usize))
                .collect();
            out.as_mut_slice()
                .par_chunks_mut(cols)
                .enumerate()
                .for_each(|(j, row_out)| {
                    let row: Vec<P::Work> = src.row(j).iter().map(|&v| P::load(v)).collect();
                    for (i, v) in row_out.iter_mut().enumerate() {
                        let [a, b, c, d] = idx[i];
                        *v = P::store(stencil.apply_work(row[a], row[b], row[c], row[d]));
                    }
                });
        }
        Axis::Y => {
            let src_rows = src.rows() as isize;
            let surface = grid.ny as isize - 1;
            let bc = grid.bc_y;
            out.as_mut_slice()
                .par_chunks_mut(cols)
                .enumerate()
                .for_each(|(j, row_out)| {
                    let taps = off.map(|o| {
                        let r = j as isize + o;
                        match bc {
                            Boundary::Periodic => (src.row(r.rem_euclid(src_rows) as usize), false),
                            Boundary::FreeSurface => {
                                let (r, flip) = image_index(from, surface, r);
                                (src.row(r), flip)
                            }
                        }
                    });
                    let load = |k: usize, i: usize| {
                        let (row, flip) = taps[k];
                        let v = P::load(row[i]);
                        if flip {
                            P::wneg(v)
                        } else {
                            v
                        }
                    };
                    if taps.iter().any(|t| t.1) {
                        for (i, v) in row_out.iter_mut().enumerate() {
                            *v = P::store(stencil.apply_work(load(0, i), load(1, i), load(2, i), load(3, i)));
                        }
                    } else {
                        let [(a, _), (b, _), (c, _), (d, _)] = taps;
                        for (i, v) in row_out.iter_mut().enumerate() {
                            *v = stencil.apply(a[i], b[i], c[i], d[i]);
                        }
                    }
                });
        }
    }
    Ok(())
}

pub fn ddx<P: Precision>(
    field: &Field2D<P>,
    target: Stagger,
    stencil: &StencilSpec<P>,
    grid: &GridSpec,
) -> Result<Field2D<P>, OperatorError> {
    let mut out = Field2D::zeros(grid, target);
    derivative_into(field, Axis::X, stencil, grid, &mut out)?;
    Ok(out)
}

pub fn ddy<P: Precision>(
    field: &Field2D<P>,
    target: Stagger,
    stencil: &StencilSpec<P>,
    grid: &GridSpec,
) -> Result<Field2D<P>, OperatorError> {
    let mut out = Field2D::zeros(grid, target);
    derivative_into(field, Axis::Y, stencil, grid, &mut out)?;
    Ok(out)
}

/// Imposes the traction-free condition on the normal stress: `syy` vanishes
/// on both surface rows. Shear-stress and velocity images are applied
/// implicitly by the derivative operators (see [`image_index`]).
pub fn apply_free_surface<P: Precision>(
    syy: &mut Field2D<P>,
    grid: &GridSpec,
    axis: Axis,
) -> Result<(), OperatorError> {
    if axis != Axis::Y || grid.bc_y != Boundary::FreeSurface || syy.stagger() != Stagger::Cell {
        return Err(OperatorError::FreeSurfaceUnsupported { expected: Stagger::Cell });
    }
    check_shape(syy, grid)?;
    for i in 0..syy.cols() {
        syy.set(i, 0, P::zero());
        syy.set(i, grid.ny - 1, P::zero());
    }
    Ok(())
}
