//! Closed-form free-space kernels `exp(-jkr)` and `exp(-jkr)/r`.
//!
//! These are both the source of every table value and the reference that
//! interpolated results are checked against.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A complex kernel value. Dimensionless for [`KernelKind::PlainExp`],
/// 1/m for [`KernelKind::GreenOverR`].
pub type ComplexSample = Complex64;

/// Homogeneous lossless medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Medium {
    /// Free-space wavelength in meters.
    pub lambda0: f64,
    pub eps_r: f64,
    pub mu_r: f64,
}

impl Medium {
    pub fn new(lambda0: f64, eps_r: f64, mu_r: f64) -> Result<Self> {
        let m = Medium { lambda0, eps_r, mu_r };
        m.validate()?;
        Ok(m)
    }

    /// Vacuum at the given wavelength.
    pub fn vacuum(lambda0: f64) -> Result<Self> {
        Self::new(lambda0, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda0", self.lambda0), ("eps_r", self.eps_r), ("mu_r", self.mu_r)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidInput(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Refractive index `sqrt(eps_r * mu_r)`.
    pub fn index(&self) -> f64 {
        (self.eps_r * self.mu_r).sqrt()
    }

    /// Wavelength inside the medium.
    pub fn wavelength(&self) -> f64 {
        self.lambda0 / self.index()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// `exp(-jkr)`
    PlainExp,
    /// `exp(-jkr)/r`
    GreenOverR,
}

impl KernelKind {
    pub const ALL: [KernelKind; 2] = [KernelKind::PlainExp, KernelKind::GreenOverR];

    /// Short name used in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::PlainExp => "exp",
            KernelKind::GreenOverR => "green",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            KernelKind::PlainExp => 0,
            KernelKind::GreenOverR => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(KernelKind::PlainExp),
            1 => Some(KernelKind::GreenOverR),
            _ => None,
        }
    }
}

/// Wavenumber `k = 2π·sqrt(eps_r·mu_r)/λ0` in 1/m.
pub fn wavenumber(medium: &Medium) -> Result<f64> {
    medium.validate()?;
    Ok(2.0 * PI * medium.index() / medium.lambda0)
}

/// Direct evaluation of the kernel at distance `r`.
///
/// `r = 0` is valid for `PlainExp` and a [`Error::Singularity`] for
/// `GreenOverR`.
pub fn eval_analytic(kind: KernelKind, k: f64, r: f64) -> Result<ComplexSample> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::InvalidInput(format!("wavenumber must be finite and >= 0, got {k}")));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidInput(format!("radius must be finite and >= 0, got {r}")));
    }
    if kind == KernelKind::GreenOverR && r == 0.0 {
        return Err(Error::Singularity { r });
    }
    Ok(eval_unchecked(kind, k, r))
}

/// Kernel value with no argument checks; callers guarantee `r > 0` for
/// `GreenOverR`.
#[inline]
pub(crate) fn eval_unchecked(kind: KernelKind, k: f64, r: f64) -> ComplexSample {
    let (s, c) = (k * r).sin_cos();
    match kind {
        KernelKind::PlainExp => Complex64::new(c, -s),
        KernelKind::GreenOverR => Complex64::new(c / r, -s / r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    #[allow(clippy::approx_constant)] // decimal literals on purpose
    fn wavenumber_examples() {
        let k = wavenumber(&Medium::new(1.0, 1.0, 1.0).unwrap()).unwrap();
        assert!((k - 6.283185307).abs() < 1e-9);
        let k = wavenumber(&Medium::new(1.0, 4.0, 1.0).unwrap()).unwrap();
        assert!((k - 12.56637061).abs() < 1e-8);
        // 2π·sqrt(4)/0.5 = 8π
        let k = wavenumber(&Medium::new(0.5, 2.0, 2.0).unwrap()).unwrap();
        assert!((k - 25.13274123).abs() < 1e-8);
    }

    #[test]
    fn invalid_medium() {
        assert!(Medium::new(0.0, 1.0, 1.0).is_err());
        assert!(Medium::new(1.0, -1.0, 1.0).is_err());
        assert!(Medium::new(1.0, 1.0, f64::NAN).is_err());
        let bad = Medium { lambda0: f64::INFINITY, eps_r: 1.0, mu_r: 1.0 };
        assert!(matches!(wavenumber(&bad), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn analytic_examples() {
        let v = eval_analytic(KernelKind::PlainExp, 2.0 * PI, 0.25).unwrap();
        assert!(v.re.abs() < 1e-15 && (v.im + 1.0).abs() < 1e-15);

        let v = eval_analytic(KernelKind::PlainExp, 123.0, 0.0).unwrap();
        assert_eq!((v.re, v.im), (1.0, 0.0));

        let v = eval_analytic(KernelKind::GreenOverR, 2.0 * PI, 0.5).unwrap();
        assert!((v.re + 2.0).abs() < 1e-14 && v.im.abs() < 1e-14);
    }

    #[test]
    fn green_singular_at_origin() {
        assert_eq!(eval_analytic(KernelKind::GreenOverR, 1.0, 0.0), Err(Error::Singularity { r: 0.0 }));
        assert!(eval_analytic(KernelKind::PlainExp, 1.0, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn plain_exp_unit_modulus(k in 0.0f64..100.0, r in 0.0f64..10.0) {
            let v = eval_analytic(KernelKind::PlainExp, k, r).unwrap();
            prop_assert!((v.norm() - 1.0).abs() < 1e-14);
        }

        #[test]
        fn green_is_exp_over_r(k in 0.0f64..100.0, r in 1e-6f64..10.0) {
            let e = eval_analytic(KernelKind::PlainExp, k, r).unwrap();
            let g = eval_analytic(KernelKind::GreenOverR, k, r).unwrap();
            prop_assert!((g.re - e.re / r).abs() <= 1e-15 * (1.0 / r));
            prop_assert!((g.im - e.im / r).abs() <= 1e-15 * (1.0 / r));
        }

        #[test]
        fn zero_wavenumber_is_one(r in 0.0f64..1e6) {
            let v = eval_analytic(KernelKind::PlainExp, 0.0, r).unwrap();
            prop_assert_eq!(v.re, 1.0);
            prop_assert_eq!(v.im, 0.0);
        }
    }
}
