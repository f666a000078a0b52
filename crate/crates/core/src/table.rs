//! Kernel value tables over a sampling plan, and the bucket array that maps
//! a radius to its bracketing sample in constant time.

use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernel::{eval_unchecked, ComplexSample, KernelKind};
use crate::sampler::SamplingPlan;

/// Kernel values at every abscissa of a plan.
#[derive(Debug, Clone)]
pub struct KernelTable {
    kind: KernelKind,
    k: f64,
    plan: Arc<SamplingPlan>,
    values: Vec<ComplexSample>,
}

impl KernelTable {
    /// Evaluates `kind` once per abscissa.
    pub fn build(plan: Arc<SamplingPlan>, kind: KernelKind, k: f64) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::InvalidInput(format!("wavenumber must be finite and >= 0, got {k}")));
        }
        if kind == KernelKind::GreenOverR && plan.r_min() <= 0.0 {
            return Err(Error::Singularity { r: plan.r_min() });
        }
        let values = plan.abscissae().iter().map(|&r| eval_unchecked(kind, k, r)).collect();
        Ok(KernelTable { kind, k, plan, values })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn plan(&self) -> &Arc<SamplingPlan> {
        &self.plan
    }

    pub fn values(&self) -> &[ComplexSample] {
        &self.values
    }

    /// Little-endian dump: `"GKTB"`, u32 version, u32 count, f64 k, u8 kind,
    /// then `count × (f64 r, f64 re, f64 im)`.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(DUMP_MAGIC)?;
        out.write_all(&DUMP_VERSION.to_le_bytes())?;
        out.write_all(&(self.values.len() as u32).to_le_bytes())?;
        out.write_all(&self.k.to_le_bytes())?;
        out.write_all(&[self.kind.code()])?;
        for (r, v) in self.plan.abscissae().iter().zip(&self.values) {
            out.write_all(&r.to_le_bytes())?;
            out.write_all(&v.re.to_le_bytes())?;
            out.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }
}

pub const DUMP_MAGIC: &[u8; 4] = b"GKTB";
pub const DUMP_VERSION: u32 = 1;

/// Contents of a binary table dump.
#[derive(Debug, Clone, PartialEq)]
pub struct TableDump {
    pub kind: KernelKind,
    pub k: f64,
    pub radii: Vec<f64>,
    pub values: Vec<ComplexSample>,
}

pub fn read_table_dump<R: Read>(mut input: R) -> Result<TableDump> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::InvalidInput("not a GKTB table dump".into()));
    }
    let version = read_u32(&mut input)?;
    if version != DUMP_VERSION {
        return Err(Error::InvalidInput(format!("unsupported dump version {version}")));
    }
    let count = read_u32(&mut input)? as usize;
    let k = read_f64(&mut input)?;
    let mut code = [0u8; 1];
    input.read_exact(&mut code)?;
    let kind = KernelKind::from_code(code[0])
        .ok_or_else(|| Error::InvalidInput(format!("unknown kernel code {}", code[0])))?;
    let mut radii = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        radii.push(read_f64(&mut input)?);
        let re = read_f64(&mut input)?;
        let im = read_f64(&mut input)?;
        values.push(ComplexSample::new(re, im));
    }
    Ok(TableDump { kind, k, radii, values })
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Dense bucket array over `[r_min, r_max]` with bucket width `dr_min`.
///
/// Bucket `b` stores the index of the greatest abscissa whose bucket
/// coordinate `(r_j - r_min)/dr_min` is at most `b`, i.e. the greatest
/// sample at or below the bucket's left edge. A query therefore needs at
/// most a short forward correction to reach its bracketing sample.
#[derive(Debug, Clone, PartialEq)]
pub struct HashIndex {
    r_min: f64,
    dr_min: f64,
    inv_dr_min: f64,
    buckets: Vec<u32>,
}

impl HashIndex {
    /// Two-pass fill: drop each sample index into the first bucket whose
    /// left edge is at or past it, then propagate forward into empty buckets.
    pub fn build(plan: &SamplingPlan) -> Result<Self> {
        let xs = plan.abscissae();
        if xs.len() < 2 {
            return Err(Error::InvalidInput("plan needs at least two abscissae".into()));
        }
        if xs.len() > u32::MAX as usize {
            return Err(Error::InvalidInput("plan too large for 32-bit bucket entries".into()));
        }
        let r_min = plan.r_min();
        let dr_min = plan.dr_min();
        let coord = |r: f64| (r - r_min) / dr_min;
        let n = snapped_ceil(coord(plan.r_max())) + 1;

        const EMPTY: u32 = u32::MAX;
        let mut buckets = vec![EMPTY; n];
        for (j, &r) in xs.iter().enumerate() {
            let b = snapped_ceil(coord(r));
            if b >= n {
                // r_max sitting a rounding error past the last edge.
                continue;
            }
            if buckets[b] != EMPTY {
                // Only reachable through rounding when two samples sit
                // exactly dr_min apart; the later (greater) one wins.
                debug_assert!(buckets[b] < j as u32);
            }
            buckets[b] = j as u32;
        }
        debug_assert_eq!(buckets[0], 0);
        for b in 1..n {
            if buckets[b] == EMPTY {
                buckets[b] = buckets[b - 1];
            }
        }
        Ok(HashIndex { r_min, dr_min, inv_dr_min: 1.0 / dr_min, buckets })
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn dr_min(&self) -> f64 {
        self.dr_min
    }

    pub fn buckets(&self) -> &[u32] {
        &self.buckets
    }

    /// Integer part of `(r - r_min)/dr_min`, clamped to the array. Plain
    /// floor; a query within rounding of a bucket edge may land on either
    /// side, which `locate` corrects.
    #[inline]
    pub fn bucket_of(&self, r: f64) -> usize {
        (((r - self.r_min) / self.dr_min) as usize).min(self.buckets.len() - 1)
    }

    /// Index `j` with `xs[j] <= r < xs[j+1]`; `r == r_max` maps to the
    /// penultimate index. `xs` must be the abscissae this index was built from.
    #[inline]
    pub fn locate(&self, xs: &[f64], r: f64) -> Result<usize> {
        let last = xs.len() - 1;
        if !(r >= xs[0] && r <= xs[last]) {
            return Err(Error::OutOfRange { r, r_min: xs[0], r_max: xs[last] });
        }
        Ok(self.locate_unchecked(xs, r))
    }

    /// [`locate`](Self::locate) without the range check.
    #[inline]
    pub(crate) fn locate_unchecked(&self, xs: &[f64], r: f64) -> usize {
        let last = xs.len() - 1;
        if r >= xs[last] {
            return last - 1;
        }
        // Multiplying by the reciprocal can round the coordinate across a
        // bucket edge; the two corrections below absorb that.
        let b = (((r - self.r_min) * self.inv_dr_min) as usize).min(self.buckets.len() - 1);
        let mut j = self.buckets[b] as usize;
        // Rounding can land a query one sample high.
        while xs[j] > r {
            j -= 1;
        }
        // Consecutive samples are >= dr_min apart, so at most one sample
        // (two under rounding) lies between the bucket edge and r.
        while xs[j + 1] <= r {
            j += 1;
        }
        j
    }
}

/// `ceil(x)`, treating values within 1e-9 of an integer as that integer.
fn snapped_ceil(x: f64) -> usize {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        x.ceil() as usize
    }
}
