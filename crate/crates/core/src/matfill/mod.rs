//! Galerkin matrix-fill benchmark for the scalar kernel.
//!
//! Each entry couples an observation triangle (symmetric `m`-point rule) with
//! a source triangle sampled at `n` Gauss–Legendre points on each of its
//! three edges, giving `3·m·n` kernel calls per pair. Self-pairs are skipped.

mod fill;
mod mesh;
mod quadrature;

pub use fill::{
    auto_range, bench_compare, expected_calls, fill_matrix, fill_with_points, max_relative_error, predicted_calls,
    BenchOptions, FillEvaluator, FillReport, FillRun, KernelMatrix, FILL_CSV_HEADER, RANGE_MARGIN,
};
pub use mesh::{generate_sphere_mesh, load_mesh, parse_off, Point3, TriangleMesh, MAX_SUBDIVISIONS, MIN_TRIANGLE_AREA};
pub use quadrature::{
    gauss_legendre, triangle_rule, QuadraturePoints, QuadratureSpec, TriangleRule, WeightedPoint, SUPPORTED_OUTER,
};
