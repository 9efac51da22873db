use super::grid::{GridSpec, Stagger};
use crate::precision::Precision;

/// One scalar unknown on its sub-grid, stored row-major in precision `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D<P: Precision> {
    stagger: Stagger,
    cols: usize,
    rows: usize,
    data: Vec<P::Elem>,
}

impl<P: Precision> Field2D<P> {
    pub fn zeros(grid: &GridSpec, stagger: Stagger) -> Self {
        Self::zeros_shaped(stagger, grid.cols(stagger), grid.rows(stagger))
    }

    pub fn zeros_shaped(stagger: Stagger, cols: usize, rows: usize) -> Self {
        Field2D {
            stagger,
            cols,
            rows,
            data: vec![P::zero(); cols * rows],
        }
    }

    /// Rounds each binary64 sample of `f(i, j)` into `P`.
    pub fn from_fn(grid: &GridSpec, stagger: Stagger, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut out = Self::zeros(grid, stagger);
        for j in 0..out.rows {
            for i in 0..out.cols {
                out.data[j * out.cols + i] = P::round(f(i, j));
            }
        }
        out
    }

    /// Rounds a row-major binary64 plane into `P`. Extra trailing rows in
    /// `plane` (as for half-shifted sub-grids under free surfaces) are ignored.
    pub fn from_plane(grid: &GridSpec, stagger: Stagger, plane: &[f64]) -> Self {
        let cols = grid.cols(stagger);
        Self::from_fn(grid, stagger, |i, j| plane[j * cols + i])
    }

    pub fn stagger(&self) -> Stagger {
        self.stagger
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> P::Elem {
        self.data[j * self.cols + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: P::Elem) {
        self.data[j * self.cols + i] = v;
    }

    /// Exact binary64 value at `(i, j)`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        P::widen(self.get(i, j))
    }

    pub fn as_slice(&self) -> &[P::Elem] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [P::Elem] {
        &mut self.data
    }

    pub fn row(&self, j: usize) -> &[P::Elem] {
        &self.data[j * self.cols..(j + 1) * self.cols]
    }

    /// Exact widening of every entry.
    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| P::widen(v)).collect()
    }

    /// Converts into another precision, rounding each entry once.
    pub fn convert<Q: Precision>(&self) -> Field2D<Q> {
        Field2D {
            stagger: self.stagger,
            cols: self.cols,
            rows: self.rows,
            data: self.data.iter().map(|&v| Q::convert::<P>(v)).collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|v| *v = P::zero());
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|&v| P::is_finite(v))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| P::widen(v) == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(P::widen(v).abs()))
    }

    /// Memory held by the samples.
    pub fn storage_bytes(&self) -> usize {
        self.data.len() * std::mem::size_of::<P::Elem>()
    }
}
