//! Fast evaluation of the free-space Helmholtz kernels `exp(-jkr)` and
//! `exp(-jkr)/r` from adaptive one-dimensional tables.
//!
//! A [`SamplingPlan`] places samples on a uniform grid with denser windows
//! around the zeros of the real and imaginary parts. [`KernelTable`]s hold
//! the kernel values, a [`HashIndex`] finds the bracketing sample of any
//! radius in constant time, and [`KernelEvaluator`] interpolates (linear for
//! `exp(-jkr)`, Lagrange for `exp(-jkr)/r`). [`bounds`] carries the a-priori
//! error bounds and empirical sweeps; [`matfill`] is a Galerkin matrix-fill
//! benchmark comparing interpolated and closed-form evaluation.

// `!(x > 0.0)` is the idiom used throughout to reject NaN alongside bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod interp;
pub mod kernel;
pub mod matfill;
pub mod sampler;
pub mod table;

pub use error::{Error, Result};
pub use interp::{KernelEvaluator, Method, DEFAULT_LAGRANGE_DEGREE};
pub use kernel::{eval_analytic, wavenumber, ComplexSample, KernelKind, Medium};
pub use sampler::{base_interval, build_plan, zero_crossings, SamplingConfig, SamplingPlan};
pub use table::{HashIndex, KernelTable};
