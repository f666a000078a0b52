//! Adaptive sampling plans: a uniform base grid, denser windows around the
//! zeros of `cos(kr)` / `sin(kr)`, and exact samples at those zeros.

use std::f64::consts::PI;
use std::io::Write;

use log::warn;

use crate::error::{Error, Result};
use crate::kernel::{wavenumber, Medium};

/// Recommended density range for [`base_interval`].
pub const RECOMMENDED_DENSITY: (u32, u32) = (1_000, 10_000);

/// Relative slack when comparing a floating-point gap against the base
/// interval; `r_min + (i+1)t - (r_min + it)` may exceed `t` by an ulp.
pub const GAP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingConfig {
    /// First sample (m). Kernel requests below this go to the analytic path.
    pub r_min: f64,
    /// Last sample (m); always an exact abscissa.
    pub r_max: f64,
    pub samples_per_wavelength: u32,
    /// Enables both refinement windows and forced zero samples.
    pub refine: bool,
    /// Refined spacing is `t / refine_divisor`.
    pub refine_divisor: u32,
    /// Windows extend this many base intervals on each side of a zero.
    pub refine_halfwidth: f64,
    /// Minimum spacing kept next to a higher-priority sample, as a fraction
    /// of the refined spacing.
    pub dedup_fraction: f64,
}

impl SamplingConfig {
    /// Defaults: 10³ samples per wavelength, refinement at `t/2` over `±2t`,
    /// dedup at half a refined interval.
    pub fn new(r_min: f64, r_max: f64) -> Self {
        SamplingConfig {
            r_min,
            r_max,
            samples_per_wavelength: 1_000,
            refine: true,
            refine_divisor: 2,
            refine_halfwidth: 2.0,
            dedup_fraction: 0.5,
        }
    }

    pub fn with_density(mut self, samples_per_wavelength: u32) -> Self {
        self.samples_per_wavelength = samples_per_wavelength;
        self
    }

    pub fn with_refine(mut self, refine: bool) -> Self {
        self.refine = refine;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.r_min.is_finite() && self.r_min > 0.0) {
            return bad(format!("r_min must be finite and > 0, got {}", self.r_min));
        }
        if !(self.r_max.is_finite() && self.r_max > self.r_min) {
            return bad(format!("r_max ({}) must be finite and > r_min ({})", self.r_max, self.r_min));
        }
        if self.samples_per_wavelength < 2 {
            return bad(format!("samples_per_wavelength must be >= 2, got {}", self.samples_per_wavelength));
        }
        if self.refine_divisor == 0 {
            return bad("refine_divisor must be positive".into());
        }
        if !(self.refine_halfwidth.is_finite() && self.refine_halfwidth > 0.0) {
            return bad(format!("refine_halfwidth must be > 0, got {}", self.refine_halfwidth));
        }
        if !(self.dedup_fraction > 0.0 && self.dedup_fraction <= 1.0) {
            return bad(format!("dedup_fraction must lie in (0, 1], got {}", self.dedup_fraction));
        }
        Ok(())
    }

    /// Refined spacing for a given base interval.
    pub fn refined_interval(&self, t: f64) -> f64 {
        t / self.refine_divisor as f64
    }

    /// Minimum spacing guaranteed by the dedup rule.
    pub fn dedup_distance(&self, t: f64) -> f64 {
        self.dedup_fraction * self.refined_interval(t)
    }
}

/// Immutable, sorted set of sample radii.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    abscissae: Vec<f64>,
    t: f64,
    dr_min: f64,
    k: f64,
    zero_locations: Vec<f64>,
}

impl SamplingPlan {
    /// Builds a plan from explicit abscissae (strictly increasing, at least
    /// two). `t` defaults to the largest gap. Mostly useful for tests and
    /// hand-built tables.
    pub fn from_abscissae(abscissae: Vec<f64>, k: f64) -> Result<Self> {
        if abscissae.len() < 2 {
            return Err(Error::InvalidInput("a plan needs at least two abscissae".into()));
        }
        if abscissae.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::InvalidInput("abscissae must be finite and >= 0".into()));
        }
        let mut dr_min = f64::INFINITY;
        let mut t: f64 = 0.0;
        for w in abscissae.windows(2) {
            let gap = w[1] - w[0];
            if !(gap > 0.0) {
                return Err(Error::InvalidInput("abscissae must be strictly increasing".into()));
            }
            dr_min = dr_min.min(gap);
            t = t.max(gap);
        }
        Ok(SamplingPlan { abscissae, t, dr_min, k, zero_locations: Vec::new() })
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.abscissae
    }

    pub fn len(&self) -> usize {
        self.abscissae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissae.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.abscissae[0]
    }

    pub fn r_max(&self) -> f64 {
        self.abscissae[self.abscissae.len() - 1]
    }

    /// Base interval (coarsest spacing).
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Smallest gap between consecutive abscissae.
    pub fn dr_min(&self) -> f64 {
        self.dr_min
    }

    /// Wavenumber the plan was built for.
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn zero_locations(&self) -> &[f64] {
        &self.zero_locations
    }

    pub fn is_zero(&self, r: f64) -> bool {
        self.zero_locations.binary_search_by(|z| z.total_cmp(&r)).is_ok()
    }

    /// Writes `index,r,is_zero,gap_to_next` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,r,is_zero,gap_to_next")?;
        for (i, &r) in self.abscissae.iter().enumerate() {
            let zero = u8::from(self.is_zero(r));
            match self.abscissae.get(i + 1) {
                Some(next) => writeln!(out, "{i},{r:.16e},{zero},{:.16e}", next - r)?,
                None => writeln!(out, "{i},{r:.16e},{zero},")?,
            }
        }
        Ok(())
    }
}

/// Base interval `t = λ0 / (S·sqrt(eps_r·mu_r))`.
///
/// Densities outside 10³..10⁴ are accepted with a warning.
pub fn base_interval(medium: &Medium, samples_per_wavelength: u32) -> Result<f64> {
    medium.validate()?;
    if samples_per_wavelength < 2 {
        return Err(Error::InvalidConfig(format!("samples_per_wavelength must be >= 2, got {samples_per_wavelength}")));
    }
    let (lo, hi) = RECOMMENDED_DENSITY;
    if !(lo..=hi).contains(&samples_per_wavelength) {
        warn!("{samples_per_wavelength} samples per wavelength is outside the recommended range {lo}..={hi}");
    }
    Ok(medium.lambda0 / (samples_per_wavelength as f64 * medium.index()))
}

/// All radii `nπ/(2k)`, `n ≥ 1`, inside `[r_min, r_max]`, ascending.
///
/// These are where either the real or the imaginary part of `exp(-jkr)`
/// vanishes; `1/r` never does, so both kernels share them.
pub fn zero_crossings(k: f64, r_min: f64, r_max: f64) -> Result<Vec<f64>> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidInput(format!("wavenumber must be > 0, got {k}")));
    }
    if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
        return Err(Error::InvalidInput(format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]")));
    }
    let quarter = PI / (2.0 * k);
    let n_lo = ((r_min / quarter).floor() as u64).max(1);
    let n_hi = (r_max / quarter).ceil() as u64;
    Ok((n_lo..=n_hi).map(|n| n as f64 * quarter).filter(|z| (r_min..=r_max).contains(z)).collect())
}

/// Candidate priority when two samples are closer than the dedup distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Priority {
    Base,
    Refined,
    Zero,
    Endpoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Candidate {
    pub r: f64,
    pub priority: Priority,
    pub is_zero: bool,
}

impl Candidate {
    fn new(r: f64, priority: Priority) -> Self {
        Candidate { r, priority, is_zero: priority == Priority::Zero }
    }
}

/// Builds the adaptive plan for `medium` over `[config.r_min, config.r_max]`.
pub fn build_plan(config: &SamplingConfig, medium: &Medium) -> Result<SamplingPlan> {
    config.validate()?;
    let k = wavenumber(medium)?;
    let t = base_interval(medium, config.samples_per_wavelength)?;
    let (r_min, r_max) = (config.r_min, config.r_max);
    if r_max - r_min < 2.0 * t {
        return Err(Error::InvalidConfig(format!("range [{r_min}, {r_max}] is shorter than two base intervals ({t})")));
    }

    let mut cands = Vec::with_capacity(((r_max - r_min) / t) as usize + 2);
    cands.push(Candidate::new(r_min, Priority::Endpoint));
    for i in 1.. {
        let r = r_min + i as f64 * t;
        if r >= r_max {
            break;
        }
        cands.push(Candidate::new(r, Priority::Base));
    }
    cands.push(Candidate::new(r_max, Priority::Endpoint));

    if config.refine {
        let zeros = zero_crossings(k, r_min, r_max)?;
        let half = config.refine_halfwidth * t;
        let windows = merge_windows(zeros.iter().map(|&z| ((z - half).max(r_min), (z + half).min(r_max))));

        // Base samples inside a window are superseded by the refined lattice.
        cands.retain(|c| c.priority != Priority::Base || !inside_any(&windows, c.r));

        let h = config.refined_interval(t);
        let steps = (config.refine_halfwidth * config.refine_divisor as f64 + 1e-9).floor() as i64;
        for &z in &zeros {
            cands.push(Candidate::new(z, Priority::Zero));
            for i in (-steps..=steps).filter(|&i| i != 0) {
                let r = z + i as f64 * h;
                if r > r_min && r < r_max {
                    cands.push(Candidate::new(r, Priority::Refined));
                }
            }
        }
    }

    cands.sort_by(|a, b| a.r.total_cmp(&b.r));
    let kept = thin_candidates(cands, config.dedup_distance(t));
    let kept = fill_wide_gaps(kept, t);

    let zero_locations = kept.iter().filter(|c| c.is_zero).map(|c| c.r).collect();
    let abscissae: Vec<f64> = kept.iter().map(|c| c.r).collect();
    let dr_min = abscissae.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    Ok(SamplingPlan { abscissae, t, dr_min, k, zero_locations })
}

fn merge_windows(windows: impl Iterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in windows {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged
}

fn inside_any(windows: &[(f64, f64)], r: f64) -> bool {
    let i = windows.partition_point(|w| w.1 < r);
    windows.get(i).is_some_and(|w| w.0 <= r && r <= w.1)
}

/// Enforces a minimum gap over sorted candidates. When two samples are
/// closer than `min_gap`, the lower-priority one goes; a zero sample is
/// never displaced by a base or refined sample. Bitwise-equal radii merge.
pub(crate) fn thin_candidates(sorted: Vec<Candidate>, min_gap: f64) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = Vec::with_capacity(sorted.len());
    'next: for c in sorted {
        while let Some(prev) = out.last_mut() {
            if c.r == prev.r {
                prev.priority = prev.priority.max(c.priority);
                prev.is_zero |= c.is_zero;
                continue 'next;
            }
            if c.r - prev.r >= min_gap {
                break;
            }
            if c.priority > prev.priority {
                out.pop();
            } else {
                // Ties keep the earlier sample; endpoints outrank zeros.
                continue 'next;
            }
        }
        out.push(c);
    }
    out
}

/// Splits any gap wider than `t` into equal pieces.
fn fill_wide_gaps(kept: Vec<Candidate>, t: f64) -> Vec<Candidate> {
    let mut out = Vec::with_capacity(kept.len() + 16);
    for (i, c) in kept.iter().enumerate() {
        out.push(*c);
        if let Some(next) = kept.get(i + 1) {
            let gap = next.r - c.r;
            if gap > t * (1.0 + GAP_TOLERANCE) {
                let pieces = (gap / t).ceil() as usize;
                let step = gap / pieces as f64;
                out.extend((1..pieces).map(|p| Candidate::new(c.r + p as f64 * step, Priority::Base)));
            }
        }
    }
    out
}
