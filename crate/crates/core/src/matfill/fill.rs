//! Dense fill of the scalar kernel matrix and the analytic-vs-table A/B.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use super::mesh::TriangleMesh;
use super::quadrature::{distance, QuadraturePoints, QuadratureSpec};
use crate::error::{Error, Result};
use crate::interp::KernelEvaluator;
use crate::kernel::{eval_unchecked, wavenumber, ComplexSample, KernelKind, Medium};
use crate::sampler::SamplingConfig;

/// Margin applied to the largest vertex distance when sizing the table.
pub const RANGE_MARGIN: f64 = 1.01;

/// Call-count model `3·m·n·N²` for a full fill.
pub fn predicted_calls(n_triangles: u64, outer_points: u64, inner_points_per_edge: u64) -> u128 {
    3 * outer_points as u128 * inner_points_per_edge as u128 * (n_triangles as u128).pow(2)
}

/// Evaluations a fill actually performs: the model minus the skipped
/// self-pairs, `3·m·n·N·(N-1)`.
pub fn expected_calls(n_triangles: u64, outer_points: u64, inner_points_per_edge: u64) -> u128 {
    let n = n_triangles as u128;
    3 * outer_points as u128 * inner_points_per_edge as u128 * n * n.saturating_sub(1)
}

/// How kernel values are obtained during a fill.
#[derive(Debug, Clone, Copy)]
pub enum FillEvaluator<'a> {
    /// Closed-form `sin_cos` per evaluation.
    Analytic { k: f64 },
    /// Table lookup with the closed form below `r_min`.
    Interpolated(&'a KernelEvaluator),
}

/// Dense `N×N` matrix, row-major; row `p` is the observation triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    n: usize,
    data: Vec<ComplexSample>,
}

impl KernelMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, p: usize, q: usize) -> ComplexSample {
        self.data[p * self.n + q]
    }

    pub fn as_slice(&self) -> &[ComplexSample] {
        &self.data
    }
}

/// Counters and timing of a single fill.
#[derive(Debug, Clone, PartialEq)]
pub struct FillRun {
    pub n_triangles: usize,
    pub outer_points: usize,
    pub inner_points_per_edge: usize,
    pub predicted_calls: u128,
    /// Kernel evaluations performed, fallbacks included.
    pub actual_calls: u64,
    /// Evaluations below the table's `r_min`.
    pub fallback_calls: u64,
    /// Fill loop only.
    pub wall_time_s: f64,
}

/// `Z[p][q] = Σ_outer Σ_inner w_o·w_i·G(|x_o - x_i|)` for every `p ≠ q`;
/// self-pairs are left at zero. `threads == 1` runs on the calling thread.
pub fn fill_matrix(
    mesh: &TriangleMesh,
    spec: QuadratureSpec,
    evaluator: FillEvaluator<'_>,
    kind: KernelKind,
    threads: usize,
) -> Result<(KernelMatrix, FillRun)> {
    let points = QuadraturePoints::new(mesh, spec)?;
    fill_with_points(&points, mesh.len(), evaluator, kind, threads)
}

/// [`fill_matrix`] over precomputed quadrature points.
pub fn fill_with_points(
    points: &QuadraturePoints,
    n_triangles: usize,
    evaluator: FillEvaluator<'_>,
    kind: KernelKind,
    threads: usize,
) -> Result<(KernelMatrix, FillRun)> {
    if threads == 0 {
        return Err(Error::InvalidInput("threads must be >= 1".into()));
    }
    let spec = points.spec;
    let (data, actual_calls, fallback_calls, wall_time_s) = match evaluator {
        FillEvaluator::Analytic { k } => {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(Error::InvalidInput(format!("wavenumber must be finite and >= 0, got {k}")));
            }
            let analytic = move |r: f64| {
                if r > 0.0 || (r == 0.0 && kind == KernelKind::PlainExp) {
                    Ok(eval_unchecked(kind, k, r))
                } else {
                    Err(Error::Singularity { r })
                }
            };
            let (data, calls, secs) = run_fill(points, n_triangles, threads, analytic)?;
            (data, calls, 0, secs)
        }
        FillEvaluator::Interpolated(ev) => {
            let before = ev.fallback_count();
            let (data, calls, secs) = run_fill(points, n_triangles, threads, |r| ev.eval_kernel(kind, r))?;
            (data, calls, ev.fallback_count() - before, secs)
        }
    };
    let run = FillRun {
        n_triangles,
        outer_points: spec.outer_points,
        inner_points_per_edge: spec.inner_points_per_edge,
        predicted_calls: predicted_calls(
            n_triangles as u64,
            spec.outer_points as u64,
            spec.inner_points_per_edge as u64,
        ),
        actual_calls,
        fallback_calls,
        wall_time_s,
    };
    Ok((KernelMatrix { n: n_triangles, data }, run))
}

fn run_fill<F>(points: &QuadraturePoints, n: usize, threads: usize, eval: F) -> Result<(Vec<ComplexSample>, u64, f64)>
where
    F: Fn(f64) -> Result<ComplexSample> + Sync,
{
    let mut data = vec![ComplexSample::new(0.0, 0.0); n * n];
    let start = Instant::now();
    let calls = if threads == 1 {
        let mut calls = 0;
        for (p, row) in data.chunks_mut(n.max(1)).enumerate() {
            calls += fill_row(points, p, row, &eval)?;
        }
        calls
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidInput(format!("cannot start {threads} threads: {e}")))?;
        pool.install(|| {
            data.par_chunks_mut(n.max(1))
                .enumerate()
                .map(|(p, row)| fill_row(points, p, row, &eval))
                .try_reduce(|| 0, |a, b| Ok(a + b))
        })?
    };
    Ok((data, calls, start.elapsed().as_secs_f64()))
}

#[inline]
fn fill_row<F>(points: &QuadraturePoints, p: usize, row: &mut [ComplexSample], eval: &F) -> Result<u64>
where
    F: Fn(f64) -> Result<ComplexSample>,
{
    let outer = points.outer_of(p);
    let mut calls = 0u64;
    for (q, z) in row.iter_mut().enumerate() {
        if q == p {
            continue;
        }
        let inner = points.inner_of(q);
        let mut acc = ComplexSample::new(0.0, 0.0);
        for o in outer {
            let mut partial = ComplexSample::new(0.0, 0.0);
            for i in inner {
                partial += eval(distance(o.x, i.x))? * i.w;
            }
            acc += partial * o.w;
        }
        calls += (outer.len() * inner.len()) as u64;
        *z = acc;
    }
    Ok(calls)
}

/// Largest component-wise relative deviation of `approx` from `reference`
/// over off-diagonal entries, skipping components that are exactly zero in
/// the reference.
pub fn max_relative_error(reference: &KernelMatrix, approx: &KernelMatrix) -> (f64, f64) {
    let n = reference.dim();
    let mut worst = (0.0f64, 0.0f64);
    for p in 0..n {
        for q in (0..n).filter(|&q| q != p) {
            let (a, b) = (reference.get(p, q), approx.get(p, q));
            if a.re != 0.0 {
                worst.0 = worst.0.max((b.re - a.re).abs() / a.re.abs());
            }
            if a.im != 0.0 {
                worst.1 = worst.1.max((b.im - a.im).abs() / a.im.abs());
            }
        }
    }
    worst
}

/// Benchmark knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub kind: KernelKind,
    pub lagrange_degree: usize,
    pub threads: usize,
    /// Each fill is timed this many times; the fastest run is reported.
    pub repeats: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { kind: KernelKind::GreenOverR, lagrange_degree: 3, threads: 1, repeats: 1 }
    }
}

/// Outcome of an analytic-vs-interpolated fill comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct FillReport {
    pub n_triangles: usize,
    pub outer_points: usize,
    pub inner_points_per_edge: usize,
    pub predicted_calls: u128,
    pub actual_calls: u64,
    /// Fallback evaluations in the interpolated fill.
    pub fallback_calls: u64,
    pub analytic_s: f64,
    /// Interpolated fill including plan, table and index construction.
    pub interp_s: f64,
    /// Construction share of `interp_s`.
    pub table_build_s: f64,
    /// `analytic_s / interp_s`.
    pub speedup: f64,
    pub max_rel_error_re: f64,
    pub max_rel_error_im: f64,
    /// Table range actually used.
    pub r_min: f64,
    pub r_max: f64,
    pub table_samples: usize,
}

pub const FILL_CSV_HEADER: &str =
    "N,m,n,predicted_calls,actual_calls,fallback_calls,analytic_s,interp_s,speedup,max_rel_re,max_rel_im";

impl FillReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{FILL_CSV_HEADER}")?;
        writeln!(
            out,
            "{},{},{},{},{},{},{:.6},{:.6},{:.4},{:.6e},{:.6e}",
            self.n_triangles,
            self.outer_points,
            self.inner_points_per_edge,
            self.predicted_calls,
            self.actual_calls,
            self.fallback_calls,
            self.analytic_s,
            self.interp_s,
            self.speedup,
            self.max_rel_error_re,
            self.max_rel_error_im
        )
    }

    /// Multi-line human-readable summary.
    pub fn summary(&self) -> String {
        format!(
            "N = {} triangles, m = {}, n = {}\n\
             kernel calls: {} actual ({} predicted by 3mnN^2), {} fallback\n\
             table: {} samples over [{:.3e}, {:.4}] m, built in {:.3} ms ({:.2}% of interpolated time)\n\
             analytic fill: {:.4} s, interpolated fill: {:.4} s, speedup {:.3}x\n\
             max elementwise relative error: re {:.3e}, im {:.3e}",
            self.n_triangles,
            self.outer_points,
            self.inner_points_per_edge,
            self.actual_calls,
            self.predicted_calls,
            self.fallback_calls,
            self.table_samples,
            self.r_min,
            self.r_max,
            self.table_build_s * 1e3,
            100.0 * self.table_build_s / self.interp_s,
            self.analytic_s,
            self.interp_s,
            self.speedup,
            self.max_rel_error_re,
            self.max_rel_error_im
        )
    }
}

/// Table range for a mesh: `config.r_min` up to the largest vertex distance
/// with a 1% margin.
pub fn auto_range(mesh: &TriangleMesh, config: &SamplingConfig) -> SamplingConfig {
    SamplingConfig { r_max: mesh.max_vertex_distance() * RANGE_MARGIN, ..config.clone() }
}

/// Fills the matrix with the closed form, then with tables built for the
/// mesh, and compares time and elementwise accuracy. `config.r_max` is
/// replaced by [`auto_range`].
pub fn bench_compare(
    mesh: &TriangleMesh,
    spec: QuadratureSpec,
    medium: &Medium,
    config: &SamplingConfig,
    options: &BenchOptions,
) -> Result<FillReport> {
    if options.repeats == 0 {
        return Err(Error::InvalidInput("repeats must be >= 1".into()));
    }
    let k = wavenumber(medium)?;
    let config = auto_range(mesh, config);
    let points = QuadraturePoints::new(mesh, spec)?;
    let n = mesh.len();

    // Runs alternate so that slow drift in machine load hits both sides.
    let mut analytic: Option<(KernelMatrix, FillRun)> = None;
    let mut best: Option<(KernelMatrix, FillRun, f64, f64, usize)> = None;
    for _ in 0..options.repeats {
        let run = fill_with_points(&points, n, FillEvaluator::Analytic { k }, options.kind, options.threads)?;
        if analytic.as_ref().is_none_or(|best| run.1.wall_time_s < best.1.wall_time_s) {
            analytic = Some(run);
        }

        let start = Instant::now();
        let ev = KernelEvaluator::build(&config, medium, options.lagrange_degree)?;
        let build_s = start.elapsed().as_secs_f64();
        let (matrix, run) =
            fill_with_points(&points, n, FillEvaluator::Interpolated(&ev), options.kind, options.threads)?;
        let total = start.elapsed().as_secs_f64();
        if best.as_ref().is_none_or(|b| total < b.2) {
            best = Some((matrix, run, total, build_s, ev.plan().len()));
        }
    }
    let (reference, analytic_run) = analytic.expect("repeats >= 1");
    let (matrix, interp_run, interp_s, table_build_s, table_samples) = best.expect("repeats >= 1");
    let (max_rel_error_re, max_rel_error_im) = max_relative_error(&reference, &matrix);

    Ok(FillReport {
        n_triangles: n,
        outer_points: spec.outer_points,
        inner_points_per_edge: spec.inner_points_per_edge,
        predicted_calls: interp_run.predicted_calls,
        actual_calls: interp_run.actual_calls,
        fallback_calls: interp_run.fallback_calls,
        analytic_s: analytic_run.wall_time_s,
        interp_s,
        table_build_s,
        speedup: analytic_run.wall_time_s / interp_s,
        max_rel_error_re,
        max_rel_error_im,
        r_min: config.r_min,
        r_max: config.r_max,
        table_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::super::mesh::{generate_sphere_mesh, TriangleMesh};
    use super::*;
    use crate::bounds::lagrange_bound;
    use crate::interp::Method;
    use std::f64::consts::PI;

    fn two_parallel_triangles() -> TriangleMesh {
        TriangleMesh::new(
            vec![[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, 0.0, 1.0], [0.1, 0.0, 1.0], [0.0, 0.1, 1.0]],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap()
    }

    #[test]
    fn call_model() {
        assert_eq!(predicted_calls(100, 4, 3), 360_000);
        assert_eq!(predicted_calls(1, 1, 1), 3);
        assert_eq!(predicted_calls(320, 4, 3), 3_686_400);
        assert_eq!(expected_calls(320, 4, 3), 3_674_880);
        // sizes whose count exceeds u64
        assert_eq!(predicted_calls(1 << 32, 7, 64), 3 * 7 * 64 * (1u128 << 64));
    }

    #[test]
    fn hand_summed_parallel_pair() {
        let mesh = two_parallel_triangles();
        let spec = QuadratureSpec::new(1, 1).unwrap();
        let (z, run) = fill_matrix(&mesh, spec, FillEvaluator::Analytic { k: 0.0 }, KernelKind::GreenOverR, 1).unwrap();
        // centroid of triangle 0 against the three edge midpoints of triangle 1
        let area = 0.005;
        let c: [f64; 3] = [0.1 / 3.0, 0.1 / 3.0, 0.0];
        let mids = [[0.05, 0.0, 1.0], [0.05, 0.05, 1.0], [0.0, 0.05, 1.0]];
        let want: f64 = mids
            .iter()
            .map(|m| {
                let r = ((c[0] - m[0]).powi(2) + (c[1] - m[1]).powi(2) + (c[2] - m[2]).powi(2)).sqrt();
                area * (area / 3.0) / r
            })
            .sum();
        assert!((z.get(0, 1).re - want).abs() <= 1e-15 * want);
        assert_eq!(z.get(0, 1).im, 0.0);
        assert_eq!(z.get(0, 0), ComplexSample::new(0.0, 0.0));
        assert_eq!(run.actual_calls, 6);
        assert_eq!(run.predicted_calls, 12);
    }

    #[test]
    fn point_reflected_pair_is_symmetric() {
        let a = [[0.1, 0.2, 0.05], [0.3, 0.15, 0.1], [0.2, 0.4, 0.0]];
        let b: Vec<[f64; 3]> = a.iter().map(|p| [-p[0], -p[1], -p[2]]).collect();
        let mesh = TriangleMesh::new([a.to_vec(), b].concat(), vec![[0, 1, 2], [3, 4, 5]]).unwrap();
        for (m, n) in [(1, 1), (4, 3), (7, 5)] {
            let spec = QuadratureSpec::new(m, n).unwrap();
            let (z, _) =
                fill_matrix(&mesh, spec, FillEvaluator::Analytic { k: 2.0 * PI }, KernelKind::GreenOverR, 1).unwrap();
            let (u, v) = (z.get(0, 1), z.get(1, 0));
            assert!((u - v).norm() <= 1e-13 * u.norm(), "{u} vs {v}");
        }
    }

    #[test]
    fn interpolated_fill_matches_analytic_within_bound() {
        let mesh = two_parallel_triangles();
        let spec = QuadratureSpec::new(4, 3).unwrap();
        let medium = Medium::vacuum(1.0).unwrap();
        let k = wavenumber(&medium).unwrap();
        let cfg = auto_range(&mesh, &SamplingConfig::new(1e-4, 0.0));
        let ev = KernelEvaluator::build(&cfg, &medium, 3).unwrap();
        let (za, _) = fill_matrix(&mesh, spec, FillEvaluator::Analytic { k }, KernelKind::GreenOverR, 1).unwrap();
        let (zi, _) = fill_matrix(&mesh, spec, FillEvaluator::Interpolated(&ev), KernelKind::GreenOverR, 1).unwrap();

        // worst pointwise Lagrange bound over the pair's distances, relative
        // to the smallest kernel magnitude involved
        let pts = QuadraturePoints::new(&mesh, spec).unwrap();
        let mut worst_rel_bound: f64 = 0.0;
        for o in pts.outer_of(0) {
            for i in pts.inner_of(1) {
                let r = distance(o.x, i.x);
                let st = ev.stencil(Method::Lagrange, r).unwrap();
                let b = lagrange_bound(&ev.plan().abscissae()[st], r, KernelKind::GreenOverR, k).unwrap();
                worst_rel_bound = worst_rel_bound.max(b * r);
            }
        }
        let (re, im) = max_relative_error(&za, &zi);
        let floor = 1e-13;
        assert!(re <= 10.0 * worst_rel_bound + floor, "{re} vs {worst_rel_bound}");
        assert!(im <= 10.0 * worst_rel_bound + floor, "{im} vs {worst_rel_bound}");
    }

    #[test]
    fn threaded_fill_is_identical() {
        let mesh = generate_sphere_mesh(0.5, 1).unwrap();
        let spec = QuadratureSpec::default();
        let medium = Medium::vacuum(1.0).unwrap();
        let cfg = auto_range(&mesh, &SamplingConfig::new(1e-4, 0.0));
        let ev = KernelEvaluator::build(&cfg, &medium, 3).unwrap();
        let (z1, r1) = fill_matrix(&mesh, spec, FillEvaluator::Interpolated(&ev), KernelKind::GreenOverR, 1).unwrap();
        let (z4, r4) = fill_matrix(&mesh, spec, FillEvaluator::Interpolated(&ev), KernelKind::GreenOverR, 4).unwrap();
        assert_eq!(z1, z4);
        assert_eq!(r1.actual_calls, r4.actual_calls);
        assert_eq!(r1.actual_calls as u128, expected_calls(80, 4, 3));
    }

    #[test]
    fn fallback_is_counted() {
        let mesh = two_parallel_triangles();
        let spec = QuadratureSpec::new(1, 2).unwrap();
        let medium = Medium::vacuum(1.0).unwrap();
        // r_min above every pair distance except none: all calls fall back
        let cfg = SamplingConfig { r_min: 1.2, r_max: 1.5, ..SamplingConfig::new(1.2, 1.5) };
        let ev = KernelEvaluator::build(&cfg, &medium, 3).unwrap();
        let (zi, run) = fill_matrix(&mesh, spec, FillEvaluator::Interpolated(&ev), KernelKind::GreenOverR, 1).unwrap();
        assert_eq!(run.actual_calls, 12);
        assert_eq!(run.fallback_calls, 12);
        let (za, _) =
            fill_matrix(&mesh, spec, FillEvaluator::Analytic { k: ev.k() }, KernelKind::GreenOverR, 1).unwrap();
        assert_eq!(za, zi);
    }

    #[test]
    fn coincident_points_are_an_error() {
        let spec = QuadratureSpec::new(1, 1).unwrap();
        // centroid of triangle 0 is (1,1,0); midpoint of edge 3→4 is (1,1,z)
        let mesh_at = |z: f64| {
            TriangleMesh::new(
                vec![
                    [0.0, 0.0, 0.0],
                    [3.0, 0.0, 0.0],
                    [0.0, 3.0, 0.0],
                    [1.0, 1.0, z - 1.0],
                    [1.0, 1.0, z + 1.0],
                    [5.0, 5.0, 5.0],
                ],
                vec![[0, 1, 2], [3, 4, 5]],
            )
            .unwrap()
        };
        let analytic = FillEvaluator::Analytic { k: 1.0 };
        assert!(fill_matrix(&mesh_at(1.0), spec, analytic, KernelKind::GreenOverR, 1).is_ok());
        let res = fill_matrix(&mesh_at(0.0), spec, analytic, KernelKind::GreenOverR, 1);
        assert_eq!(res.unwrap_err(), Error::Singularity { r: 0.0 });
        assert!(fill_matrix(&mesh_at(0.0), spec, analytic, KernelKind::PlainExp, 1).is_ok());
    }

    #[test]
    fn csv_and_summary() {
        let mesh = generate_sphere_mesh(0.5, 0).unwrap();
        let rep = bench_compare(
            &mesh,
            QuadratureSpec::default(),
            &Medium::vacuum(1.0).unwrap(),
            &SamplingConfig::new(1e-4, 0.0),
            &BenchOptions::default(),
        )
        .unwrap();
        assert_eq!(rep.actual_calls as u128, expected_calls(20, 4, 3));
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], FILL_CSV_HEADER);
        assert!(lines[1].starts_with("20,4,3,14400,13680,0,"), "{}", lines[1]);
        assert!(rep.summary().contains("speedup"));
    }
}
