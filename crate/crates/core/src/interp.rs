//! Table-driven kernel evaluation.
//!
//! `exp(-jkr)` is interpolated linearly between the bracketing samples and
//! `exp(-jkr)/r` with a Lagrange polynomial over a short stencil around
//! them. Radii below the first sample fall back to the closed form.

use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernel::{eval_unchecked, wavenumber, ComplexSample, KernelKind, Medium};
use crate::sampler::{build_plan, SamplingConfig, SamplingPlan};
use crate::table::{HashIndex, KernelTable};

pub const DEFAULT_LAGRANGE_DEGREE: usize = 3;
pub const MAX_LAGRANGE_DEGREE: usize = 8;

/// Interpolation scheme applied to a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Two-point linear interpolation on the bracketing pair.
    Linear,
    /// Lagrange polynomial of the evaluator's degree.
    Lagrange,
}

impl Method {
    /// The scheme the evaluator uses for `kind` by default.
    pub fn default_for(kind: KernelKind) -> Self {
        match kind {
            KernelKind::PlainExp => Method::Linear,
            KernelKind::GreenOverR => Method::Lagrange,
        }
    }
}

/// Both kernel tables over one plan, the bucket index, and precomputed
/// Lagrange denominators.
#[derive(Debug)]
pub struct KernelEvaluator {
    plan: Arc<SamplingPlan>,
    exp_table: KernelTable,
    green_table: KernelTable,
    hash: HashIndex,
    lagrange_degree: usize,
    /// `1 / Π_{m≠i}(x_{s+i} - x_{s+m})` for every stencil start `s`, laid
    /// out as `(degree + 1)` consecutive entries per `s`.
    inv_denoms: Vec<f64>,
    /// Degree 3 only: per stencil start, nodes, denominators and both value
    /// components packed together so a lookup touches two cache lines.
    /// Indexed by kernel code; empty for other degrees.
    cubic_cells: [Vec<CubicCell>; 2],
    fallback: AtomicU64,
}

#[derive(Debug, Clone, Copy)]
#[repr(C, align(64))]
struct CubicCell {
    x: [f64; 4],
    inv: [f64; 4],
    re: [f64; 4],
    im: [f64; 4],
}

impl KernelEvaluator {
    /// Builds tables and index for the plan's wavenumber.
    pub fn new(plan: Arc<SamplingPlan>, lagrange_degree: usize) -> Result<Self> {
        if !(1..=MAX_LAGRANGE_DEGREE).contains(&lagrange_degree) {
            return Err(Error::InvalidInput(format!(
                "lagrange degree must lie in 1..={MAX_LAGRANGE_DEGREE}, got {lagrange_degree}"
            )));
        }
        if lagrange_degree + 1 > plan.len() {
            return Err(Error::InvalidInput(format!(
                "degree {lagrange_degree} needs {} samples, plan has {}",
                lagrange_degree + 1,
                plan.len()
            )));
        }
        let k = plan.k();
        let exp_table = KernelTable::build(plan.clone(), KernelKind::PlainExp, k)?;
        let green_table = KernelTable::build(plan.clone(), KernelKind::GreenOverR, k)?;
        let hash = HashIndex::build(&plan)?;
        let inv_denoms = stencil_denominators(plan.abscissae(), lagrange_degree);
        let cubic_cells = if lagrange_degree == 3 {
            [&exp_table, &green_table].map(|t| cubic_cells(plan.abscissae(), t.values(), &inv_denoms))
        } else {
            [Vec::new(), Vec::new()]
        };
        Ok(KernelEvaluator {
            plan,
            exp_table,
            green_table,
            hash,
            lagrange_degree,
            inv_denoms,
            cubic_cells,
            fallback: AtomicU64::new(0),
        })
    }

    /// Plan, tables and index in one step.
    pub fn build(config: &SamplingConfig, medium: &Medium, lagrange_degree: usize) -> Result<Self> {
        let plan = build_plan(config, medium)?;
        debug_assert_eq!(plan.k(), wavenumber(medium)?);
        Self::new(Arc::new(plan), lagrange_degree)
    }

    pub fn plan(&self) -> &Arc<SamplingPlan> {
        &self.plan
    }

    pub fn k(&self) -> f64 {
        self.plan.k()
    }

    pub fn r_min(&self) -> f64 {
        self.plan.r_min()
    }

    pub fn r_max(&self) -> f64 {
        self.plan.r_max()
    }

    pub fn lagrange_degree(&self) -> usize {
        self.lagrange_degree
    }

    pub fn hash(&self) -> &HashIndex {
        &self.hash
    }

    pub fn table(&self, kind: KernelKind) -> &KernelTable {
        match kind {
            KernelKind::PlainExp => &self.exp_table,
            KernelKind::GreenOverR => &self.green_table,
        }
    }

    /// Number of evaluations routed to the closed form since construction
    /// (or the last reset).
    pub fn fallback_count(&self) -> u64 {
        self.fallback.load(Ordering::Relaxed)
    }

    pub fn reset_fallback_count(&self) {
        self.fallback.store(0, Ordering::Relaxed);
    }

    /// Linear interpolation of `exp(-jkr)`; `r` must lie in the table range.
    pub fn eval_exp(&self, r: f64) -> Result<ComplexSample> {
        self.eval_with(KernelKind::PlainExp, Method::Linear, r)
    }

    /// Lagrange interpolation of `exp(-jkr)/r`; `r` must lie in the table range.
    pub fn eval_green(&self, r: f64) -> Result<ComplexSample> {
        self.eval_with(KernelKind::GreenOverR, Method::Lagrange, r)
    }

    /// Interpolates either table with either scheme. No fallback.
    #[inline]
    pub fn eval_with(&self, kind: KernelKind, method: Method, r: f64) -> Result<ComplexSample> {
        let xs = self.plan.abscissae();
        let j = self.hash.locate(xs, r)?;
        Ok(self.interpolate(kind, method, j, r))
    }

    /// Evaluation entry point: interpolates inside the table, uses the
    /// closed form (and counts it) for `0 < r < r_min`.
    #[inline]
    pub fn eval_kernel(&self, kind: KernelKind, r: f64) -> Result<ComplexSample> {
        let xs = self.plan.abscissae();
        if r >= xs[0] {
            if r > xs[xs.len() - 1] {
                return Err(Error::OutOfRange { r, r_min: xs[0], r_max: xs[xs.len() - 1] });
            }
            let j = self.hash.locate_unchecked(xs, r);
            return Ok(self.interpolate(kind, Method::default_for(kind), j, r));
        }
        if !(r >= 0.0) {
            return Err(Error::InvalidInput(format!("radius must be >= 0, got {r}")));
        }
        if r == 0.0 && kind == KernelKind::GreenOverR {
            return Err(Error::Singularity { r });
        }
        self.fallback.fetch_add(1, Ordering::Relaxed);
        Ok(eval_unchecked(kind, self.k(), r))
    }

    /// [`eval_kernel`](Self::eval_kernel) over a slice; stops at the first
    /// failing radius and reports its index.
    pub fn eval_batch(&self, kind: KernelKind, radii: &[f64]) -> Result<Vec<ComplexSample>> {
        radii
            .iter()
            .enumerate()
            .map(|(index, &r)| self.eval_kernel(kind, r).map_err(|e| Error::Batch { index, source: Box::new(e) }))
            .collect()
    }

    /// Sample indices the given scheme uses at `r`.
    pub fn stencil(&self, method: Method, r: f64) -> Result<Range<usize>> {
        let j = self.hash.locate(self.plan.abscissae(), r)?;
        Ok(match method {
            Method::Linear => j..j + 2,
            Method::Lagrange => {
                let s = self.stencil_start(j);
                s..s + self.lagrange_degree + 1
            }
        })
    }

    #[inline]
    fn stencil_start(&self, j: usize) -> usize {
        let n = self.lagrange_degree;
        let back = (n - 1) / 2;
        j.saturating_sub(back).min(self.plan.len() - (n + 1))
    }

    #[inline]
    fn interpolate(&self, kind: KernelKind, method: Method, j: usize, r: f64) -> ComplexSample {
        let xs = self.plan.abscissae();
        let fs = self.table(kind).values();
        if xs[j] == r {
            return fs[j];
        }
        if xs[j + 1] == r {
            return fs[j + 1];
        }
        match method {
            Method::Linear => linear(xs[j], xs[j + 1], fs[j], fs[j + 1], r),
            Method::Lagrange => {
                let s = self.stencil_start(j);
                if self.lagrange_degree == 3 {
                    return cubic(&self.cubic_cells[kind.code() as usize][s], r);
                }
                let n = self.lagrange_degree + 1;
                let inv = &self.inv_denoms[s * n..(s + 1) * n];
                lagrange(&xs[s..s + n], &fs[s..s + n], inv, r)
            }
        }
    }
}

#[inline]
fn linear(x0: f64, x1: f64, f0: ComplexSample, f1: ComplexSample, r: f64) -> ComplexSample {
    let w0 = (r - x1) / (x0 - x1);
    let w1 = (r - x0) / (x1 - x0);
    f0 * w0 + f1 * w1
}

#[inline]
fn cubic(c: &CubicCell, r: f64) -> ComplexSample {
    let (inv, re, im) = (&c.inv, &c.re, &c.im);
    let d0 = r - c.x[0];
    let d1 = r - c.x[1];
    let d2 = r - c.x[2];
    let d3 = r - c.x[3];
    let d01 = d0 * d1;
    let d23 = d2 * d3;
    let w0 = d1 * d23 * inv[0];
    let w1 = d0 * d23 * inv[1];
    let w2 = d01 * d3 * inv[2];
    let w3 = d01 * d2 * inv[3];
    ComplexSample::new(
        re[0] * w0 + re[1] * w1 + re[2] * w2 + re[3] * w3,
        im[0] * w0 + im[1] * w1 + im[2] * w2 + im[3] * w3,
    )
}

fn cubic_cells(xs: &[f64], fs: &[ComplexSample], inv_denoms: &[f64]) -> Vec<CubicCell> {
    (0..xs.len() - 3)
        .map(|s| {
            let f = &fs[s..s + 4];
            CubicCell {
                x: xs[s..s + 4].try_into().unwrap(),
                inv: inv_denoms[4 * s..4 * s + 4].try_into().unwrap(),
                re: [f[0].re, f[1].re, f[2].re, f[3].re],
                im: [f[0].im, f[1].im, f[2].im, f[3].im],
            }
        })
        .collect()
}

fn lagrange(xs: &[f64], fs: &[ComplexSample], inv: &[f64], r: f64) -> ComplexSample {
    let n = xs.len();
    let mut d = [0.0; MAX_LAGRANGE_DEGREE + 1];
    for (di, x) in d.iter_mut().zip(xs) {
        *di = r - x;
    }
    // suffix[i] = Π_{m>i} d_m
    let mut suffix = [1.0; MAX_LAGRANGE_DEGREE + 2];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] * d[i];
    }
    let mut prefix = 1.0;
    let mut acc = ComplexSample::new(0.0, 0.0);
    for i in 0..n {
        let w = prefix * suffix[i + 1] * inv[i];
        acc += fs[i] * w;
        prefix *= d[i];
    }
    acc
}

fn stencil_denominators(xs: &[f64], degree: usize) -> Vec<f64> {
    let n = degree + 1;
    let starts = xs.len() - degree;
    let mut out = Vec::with_capacity(starts * n);
    for s in 0..starts {
        let nodes = &xs[s..s + n];
        for (i, xi) in nodes.iter().enumerate() {
            let den: f64 = nodes.iter().enumerate().filter(|(m, _)| *m != i).map(|(_, xm)| xi - xm).product();
            out.push(1.0 / den);
        }
    }
    out
}
