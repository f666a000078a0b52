//! A-priori interpolation error bounds and empirical error sweeps.
//!
//! The bounds follow the mean-value form of the polynomial interpolation
//! remainder: `|f - p_n| <= |ω_{n+1}(r)| · max|f^{(n+1)}| / (n+1)!`, with
//! the derivative maximum bounded in closed form for both kernels.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interp::{KernelEvaluator, Method};
use crate::kernel::{eval_analytic, ComplexSample, KernelKind};

/// Upper bound on `|d^m f/dr^m|` over `[r_low, ∞)`.
///
/// `exp(-jkr)` gives exactly `k^m`. For `exp(-jkr)/r` the Leibniz expansion
/// with the triangle inequality gives `Σ_p C(m,p)·k^p·(m-p)!/r_low^{m-p+1}`,
/// which decreases in `r_low`.
pub fn derivative_bound(kind: KernelKind, k: f64, r_low: f64, order: u32) -> Result<f64> {
    if order == 0 {
        return Err(Error::InvalidInput("derivative order must be >= 1".into()));
    }
    match kind {
        KernelKind::PlainExp => Ok(k.powi(order as i32)),
        KernelKind::GreenOverR => {
            if !(r_low > 0.0) {
                return Err(Error::Singularity { r: r_low });
            }
            // C(m,p)·(m-p)! = m!/p!
            let m = order as i32;
            let mut sum = 0.0;
            let mut m_fact_over_p_fact = factorial(order);
            for p in 0..=m {
                if p > 0 {
                    m_fact_over_p_fact /= p as f64;
                }
                sum += m_fact_over_p_fact * k.powi(p) / r_low.powi(m - p + 1);
            }
            Ok(sum)
        }
    }
}

/// Two-point bound on an interval of width `h`: `h²·max|f''|/8`.
pub fn linear_bound(h: f64, kind: KernelKind, k: f64, r_low: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("interval width must be > 0, got {h}")));
    }
    Ok(h * h * derivative_bound(kind, k, r_low, 2)? / 8.0)
}

/// Pointwise Lagrange bound `Π|r - r_j| · max|f^{(n+1)}|/(n+1)!` with the
/// derivative maximum taken from the stencil's left end.
pub fn lagrange_bound(stencil: &[f64], r: f64, kind: KernelKind, k: f64) -> Result<f64> {
    if stencil.len() < 2 || stencil.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("stencil must be strictly increasing with >= 2 nodes".into()));
    }
    let (lo, hi) = (stencil[0], stencil[stencil.len() - 1]);
    if !(r >= lo && r <= hi) {
        return Err(Error::Extrapolation { r, lo, hi });
    }
    let order = stencil.len() as u32;
    let omega: f64 = stencil.iter().map(|x| (r - x).abs()).product();
    Ok(omega * derivative_bound(kind, k, lo, order)? / factorial(order))
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Which formula an [`ErrorBound`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMethod {
    Linear,
    Lagrange { degree: usize },
}

/// A bound attached to one interpolation stencil.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBound {
    pub kind: KernelKind,
    pub method: BoundMethod,
    /// Stencil hull `[a, b]` in meters.
    pub interval: (f64, f64),
    /// Exact-arithmetic bound on `|f - p|`, kernel units.
    pub bound_abs: f64,
    pub derivative_order: u32,
    /// Floating-point allowance for evaluating the interpolant and the
    /// closed-form reference; see [`rounding_allowance`].
    pub rounding: f64,
}

impl ErrorBound {
    /// Bound plus rounding allowance; what a measured error is held to.
    pub fn total(&self) -> f64 {
        self.bound_abs + self.rounding
    }
}

/// Bound for the stencil the evaluator uses at `r`.
pub fn stencil_bound(ev: &KernelEvaluator, kind: KernelKind, method: Method, r: f64) -> Result<ErrorBound> {
    let idx = ev.stencil(method, r)?;
    let xs = &ev.plan().abscissae()[idx.clone()];
    let fs = &ev.table(kind).values()[idx];
    let k = ev.k();
    let (bound_abs, bmethod) = match method {
        Method::Linear => (linear_bound(xs[1] - xs[0], kind, k, xs[0])?, BoundMethod::Linear),
        Method::Lagrange => (lagrange_bound(xs, r, kind, k)?, BoundMethod::Lagrange { degree: ev.lagrange_degree() }),
    };
    Ok(ErrorBound {
        kind,
        method: bmethod,
        interval: (xs[0], xs[xs.len() - 1]),
        bound_abs,
        derivative_order: xs.len() as u32,
        rounding: rounding_allowance(xs, fs, r, k),
    })
}

/// Floating-point allowance on top of the exact-arithmetic bound.
///
/// Each stored sample and the reference value carry a relative error of a
/// few ulps times `(1 + k·r)` from rounding the phase `k·r`; the weights and
/// the `n+1`-term sum add `O(n)` ulps relative to `Σ|w_j|·|f_j|`.
pub fn rounding_allowance(xs: &[f64], fs: &[ComplexSample], r: f64, k: f64) -> f64 {
    let n = xs.len() as f64;
    let mut weighted = 0.0;
    let mut f_mag: f64 = 0.0;
    for (j, (xj, fj)) in xs.iter().zip(fs).enumerate() {
        let w: f64 = xs.iter().enumerate().filter(|(m, _)| *m != j).map(|(_, xm)| (r - xm) / (xj - xm)).product();
        weighted += w.abs() * fj.norm() * (1.0 + k * xj);
        f_mag = f_mag.max(fj.norm());
    }
    // |f(r)| is within Σ|w_j||f_j| plus the (tiny) interpolation error
    let reference = f_mag * (1.0 + k * r);
    4.0 * (n + 3.0) * f64::EPSILON * (weighted + reference)
}

/// Errors per decade of relative modulus error, `|f - f_i|/|f|`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DecadeHistogram {
    /// `counts[0]` holds everything below `1e-17` (including exact hits);
    /// `counts[i]` for `i >= 1` holds `[10^(i-18), 10^(i-17))`; the last bin
    /// is open-ended.
    pub counts: [u64; Self::BINS],
}

impl DecadeHistogram {
    pub const BINS: usize = 20;

    pub fn record(&mut self, rel: f64) {
        let bin =
            if rel < 1e-17 { 0 } else { ((rel.log10().floor() as i64 + 18).clamp(1, Self::BINS as i64 - 1)) as usize };
        self.counts[bin] += 1;
    }

    /// Lower decade exponent of bin `i` (bin 0 is open below).
    pub fn decade(i: usize) -> i32 {
        i as i32 - 18
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Empirical error of an interpolation scheme against the closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSweepReport {
    pub probe_count: u64,
    /// `max |Re f - Re f_i| / |Re f|` over probes with `Re f != 0`.
    pub max_rel_error_re: f64,
    pub max_rel_error_im: f64,
    /// `max |f - f_i|`.
    pub max_abs_error: f64,
    /// Probe at which `max_abs_error` occurred.
    pub worst_probe_r: f64,
    /// Absolute component error at probes where that component is exactly 0.
    pub zero_abs_error_re: f64,
    pub zero_abs_error_im: f64,
    pub histogram: DecadeHistogram,
}

impl Default for ErrorSweepReport {
    fn default() -> Self {
        ErrorSweepReport {
            probe_count: 0,
            max_rel_error_re: 0.0,
            max_rel_error_im: 0.0,
            max_abs_error: 0.0,
            worst_probe_r: f64::NAN,
            zero_abs_error_re: 0.0,
            zero_abs_error_im: 0.0,
            histogram: DecadeHistogram::default(),
        }
    }
}

impl ErrorSweepReport {
    fn record(&mut self, r: f64, exact: ComplexSample, approx: ComplexSample) {
        self.probe_count += 1;
        let diff = approx - exact;
        let component = |d: f64, f: f64, rel: &mut f64, zero: &mut f64| {
            if f == 0.0 {
                *zero = zero.max(d.abs());
            } else {
                *rel = rel.max(d.abs() / f.abs());
            }
        };
        component(diff.re, exact.re, &mut self.max_rel_error_re, &mut self.zero_abs_error_re);
        component(diff.im, exact.im, &mut self.max_rel_error_im, &mut self.zero_abs_error_im);
        let abs = diff.norm();
        if abs > self.max_abs_error || (abs == self.max_abs_error && !(r >= self.worst_probe_r)) {
            self.max_abs_error = abs;
            self.worst_probe_r = r;
        }
        self.histogram.record(abs / exact.norm());
    }

    /// Combines reports over disjoint probe sets; associative and
    /// commutative, so partitioned sweeps merge to the same result.
    pub fn merge(mut self, other: &Self) -> Self {
        self.probe_count += other.probe_count;
        self.max_rel_error_re = self.max_rel_error_re.max(other.max_rel_error_re);
        self.max_rel_error_im = self.max_rel_error_im.max(other.max_rel_error_im);
        self.zero_abs_error_re = self.zero_abs_error_re.max(other.zero_abs_error_re);
        self.zero_abs_error_im = self.zero_abs_error_im.max(other.zero_abs_error_im);
        let take_other = other.max_abs_error > self.max_abs_error
            || (other.max_abs_error == self.max_abs_error
                && other.probe_count > 0
                && !(other.worst_probe_r >= self.worst_probe_r));
        if take_other {
            self.max_abs_error = other.max_abs_error;
            self.worst_probe_r = other.worst_probe_r;
        }
        self.histogram.merge(&other.histogram);
        self
    }

    /// Larger of the two component-wise maximum relative errors.
    pub fn max_rel_error(&self) -> f64 {
        self.max_rel_error_re.max(self.max_rel_error_im)
    }
}

/// Uniform grid of `count` probes over `[lo, hi]`, endpoints included.
pub fn uniform_probes(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> + Clone {
    let last = count.saturating_sub(1);
    (0..count).map(move |i| {
        if i == last && last > 0 {
            hi
        } else if last == 0 {
            lo
        } else {
            lo + (hi - lo) * (i as f64 / last as f64)
        }
    })
}

/// Sweep over the evaluator's whole table range.
pub fn error_sweep(
    ev: &KernelEvaluator,
    kind: KernelKind,
    method: Method,
    probe_count: usize,
) -> Result<ErrorSweepReport> {
    error_sweep_range(ev, kind, method, probe_count, ev.r_min(), ev.r_max())
}

/// Sweep over `[lo, hi]`, which must lie inside the table range.
pub fn error_sweep_range(
    ev: &KernelEvaluator,
    kind: KernelKind,
    method: Method,
    probe_count: usize,
    lo: f64,
    hi: f64,
) -> Result<ErrorSweepReport> {
    check_sweep_args(ev, probe_count, lo, hi)?;
    let mut report = ErrorSweepReport::default();
    for r in uniform_probes(lo, hi, probe_count) {
        report.record(r, eval_analytic(kind, ev.k(), r)?, ev.eval_with(kind, method, r)?);
    }
    Ok(report)
}

/// [`error_sweep_range`] split across the rayon pool; the merged report is
/// identical to the sequential one.
pub fn error_sweep_par(
    ev: &KernelEvaluator,
    kind: KernelKind,
    method: Method,
    probe_count: usize,
    lo: f64,
    hi: f64,
) -> Result<ErrorSweepReport> {
    check_sweep_args(ev, probe_count, lo, hi)?;
    let probes: Vec<f64> = uniform_probes(lo, hi, probe_count).collect();
    probes
        .par_chunks(4096)
        .map(|chunk| {
            let mut part = ErrorSweepReport::default();
            for &r in chunk {
                part.record(r, eval_analytic(kind, ev.k(), r)?, ev.eval_with(kind, method, r)?);
            }
            Ok(part)
        })
        .try_reduce(ErrorSweepReport::default, |a, b| Ok(a.merge(&b)))
}

fn check_sweep_args(ev: &KernelEvaluator, probe_count: usize, lo: f64, hi: f64) -> Result<()> {
    if probe_count == 0 {
        return Err(Error::InvalidInput("probe_count must be >= 1".into()));
    }
    if !(lo >= ev.r_min() && hi <= ev.r_max() && lo <= hi) {
        return Err(Error::OutOfRange {
            r: if lo < ev.r_min() { lo } else { hi },
            r_min: ev.r_min(),
            r_max: ev.r_max(),
        });
    }
    Ok(())
}

/// Outcome of holding every probe's measured error to its stencil bound.
#[derive(Debug, Clone, PartialEq)]
pub struct DominationReport {
    pub probes: u64,
    pub violations: u64,
    /// Largest `measured / (bound + rounding)`; `<= 1` means no violation.
    pub worst_ratio: f64,
    pub worst_r: f64,
}

pub fn check_domination(
    ev: &KernelEvaluator,
    kind: KernelKind,
    method: Method,
    probe_count: usize,
    lo: f64,
    hi: f64,
) -> Result<DominationReport> {
    check_sweep_args(ev, probe_count, lo, hi)?;
    let mut rep = DominationReport { probes: 0, violations: 0, worst_ratio: 0.0, worst_r: f64::NAN };
    for r in uniform_probes(lo, hi, probe_count) {
        let err = (ev.eval_with(kind, method, r)? - eval_analytic(kind, ev.k(), r)?).norm();
        let bound = stencil_bound(ev, kind, method, r)?;
        rep.probes += 1;
        if err > bound.total() {
            rep.violations += 1;
        }
        let ratio = err / bound.total();
        if ratio > rep.worst_ratio {
            rep.worst_ratio = ratio;
            rep.worst_r = r;
        }
    }
    Ok(rep)
}

/// Label used in sweep CSV output.
pub fn method_label(method: Method, degree: usize) -> String {
    match method {
        Method::Linear => "linear".into(),
        Method::Lagrange => format!("lagrange{degree}"),
    }
}

/// One `sweep-error` CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kind: KernelKind,
    pub method: String,
    pub report: ErrorSweepReport,
}

pub const SWEEP_CSV_HEADER: &str = "kernel,method,probes,max_rel_re,max_rel_im,max_abs,worst_r";

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for row in rows {
        let r = &row.report;
        writeln!(
            out,
            "{},{},{},{:.6e},{:.6e},{:.6e},{:.16e}",
            row.kind.name(),
            row.method,
            r.probe_count,
            r.max_rel_error_re,
            r.max_rel_error_im,
            r.max_abs_error,
            r.worst_probe_r
        )?;
    }
    Ok(())
}

/// Sweeps both kernels with both schemes, in CSV row order.
pub fn sweep_all(ev: &KernelEvaluator, probe_count: usize) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(4);
    for kind in KernelKind::ALL {
        for method in [Method::Linear, Method::Lagrange] {
            rows.push(SweepRow {
                kind,
                method: method_label(method, ev.lagrange_degree()),
                report: error_sweep(ev, kind, method, probe_count)?,
            });
        }
    }
    Ok(rows)
}
