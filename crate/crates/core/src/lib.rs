//! Staggered-grid acoustic and elastic wave solvers with selectable
//! operating precision (binary64, binary32, emulated binary16) and optional
//! compensated summation in the solution update.

// `!(x > 0.0)` is how the validators reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acoustic;
pub mod diagnostics;
pub mod efsum;
pub mod elastic;
pub mod medium_grid;
pub mod operators;
pub mod precision;
pub mod solver;

pub use efsum::{SumResult, SumVariant};
pub use medium_grid::{Boundary, Field2D, GridSpec, Medium, Stagger};
pub use precision::{Format, Fp16, Fp32, Fp64, Half, PScalar, Precision};
pub use solver::{run, Equation, RickerSpec, RunOutput, RunSpec, SimError, SourceKind, SourceSpec, UpdateMode};
