//! Normalized spherical-harmonic profiles and the special functions used to
//! model them: Legendre/Jacobi polynomials, Hermite functions, Bessel
//! functions and Gauss-Legendre quadrature.
//!
//! The profile of index `(l, m)` is
//! `Y(l, m; x) = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) P_l^m(x)` with the
//! Condon-Shortley phase in `P_l^m`, so that `Y(l, m; sin theta) e^{i m phi}`
//! is an orthonormal eigenfunction of `-d_theta^2 + tan(theta) d_theta -
//! tan^2(theta) d_phi^2` with eigenvalue `l(l+1) - m^2`.

mod bessel;
mod hermite;
mod polys;
mod profile;
mod quadrature;
mod scaled;

pub use bessel::{bessel_j, bessel_power_bound};
pub use hermite::{hermite_function, hermite_function_scaled, HermiteBoundFit};
pub use polys::{jacobi_poly, legendre_poly};
pub use profile::{
    addition_theorem_residual, for_each_in_order, jacobi_form, orthonormality_residual,
    parity_residual, profile, profile_scaled, sweep_fixed_order, sweep_fixed_order_rows, SeedTable,
    SweepRow, INV_SQRT_4PI,
};
pub use quadrature::{adaptive_integrate, gauss_legendre, graded_panels, QuadratureGrid};
pub use scaled::ScaledReal;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Spectral index `(l, m)` with `|m| <= l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HarmonicIndex {
    pub l: u32,
    pub m: i32,
}

impl HarmonicIndex {
    pub fn new(l: u32, m: i32) -> Result<Self> {
        if m.unsigned_abs() > l {
            return Err(Error::InvalidIndex {
                l: l as i64,
                m: m as i64,
            });
        }
        Ok(Self { l, m })
    }

    /// `l(l+1) - m^2`, exact.
    pub fn eigenvalue_exact(&self) -> i64 {
        let l = self.l as i64;
        let m = self.m as i64;
        l * (l + 1) - m * m
    }

    pub fn eigenvalue(&self) -> f64 {
        self.eigenvalue_exact() as f64
    }

    /// The factorized form `(l - |m| + 1/2)(l + |m| + 1/2) - 1/4`.
    pub fn eigenvalue_factored(&self) -> f64 {
        let l = self.l as f64;
        let m = self.m.unsigned_abs() as f64;
        (l - m + 0.5) * (l + m + 0.5) - 0.25
    }

    /// `l + 1/2`.
    pub fn half_shifted(&self) -> f64 {
        self.l as f64 + 0.5
    }
}

/// Eigenvalue `l(l+1) - m^2` as `f64` without constructing an index.
#[inline]
pub fn eigenvalue(l: u32, m: u32) -> f64 {
    let (l, m) = (l as f64, m as f64);
    l * (l + 1.0) - m * m
}
