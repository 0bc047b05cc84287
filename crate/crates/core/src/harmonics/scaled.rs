use std::f64::consts::LN_2;

/// A real number stored as `mantissa * 2^exponent` with `0.5 <= |mantissa| < 1`,
/// so values far outside the `f64` exponent range keep full precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledReal {
    mant: f64,
    exp: i64,
}

/// Splits a finite non-zero `v` into `(m, e)` with `v = m 2^e`, `0.5 <= |m| < 1`.
fn frexp(v: f64) -> (f64, i64) {
    let (v, bias) = if v.abs() < f64::MIN_POSITIVE {
        (v * 2f64.powi(64), -64)
    } else {
        (v, 0)
    };
    let bits = v.to_bits();
    let e = ((bits >> 52) & 0x7ff) as i64 - 1022;
    let m = f64::from_bits((bits & !(0x7ff << 52)) | (1022 << 52));
    (m, e + bias)
}

/// `m 2^e` for arbitrary `e`, flushing to zero or infinity outside range.
pub(crate) fn ldexp(m: f64, e: i64) -> f64 {
    if e > 1100 {
        m * f64::INFINITY
    } else if e < -1200 {
        m * 0.0
    } else if e < -1000 {
        m * 2f64.powi((e + 200) as i32) * 2f64.powi(-200)
    } else if e > 1000 {
        m * 2f64.powi((e - 100) as i32) * 2f64.powi(100)
    } else {
        m * 2f64.powi(e as i32)
    }
}

impl ScaledReal {
    pub const ZERO: Self = Self { mant: 0.0, exp: 0 };

    pub fn from_f64(v: f64) -> Self {
        Self::from_parts(v, 0)
    }

    /// `mantissa * 2^exponent` for any finite mantissa.
    pub fn from_parts(mantissa: f64, exponent: i64) -> Self {
        if mantissa == 0.0 || !mantissa.is_finite() {
            return Self::ZERO;
        }
        let (m, e) = frexp(mantissa);
        Self {
            mant: m,
            exp: e + exponent,
        }
    }

    /// `sign * exp(ln_abs)`.
    pub fn from_ln(sign: f64, ln_abs: f64) -> Self {
        if sign == 0.0 || ln_abs == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        let e = (ln_abs / LN_2).floor();
        let m = (ln_abs - e * LN_2).exp();
        Self::from_parts(sign.signum() * m, e as i64)
    }

    pub fn to_f64(self) -> f64 {
        ldexp(self.mant, self.exp)
    }

    pub fn is_zero(self) -> bool {
        self.mant == 0.0
    }

    pub fn signum(self) -> f64 {
        if self.mant == 0.0 {
            0.0
        } else {
            self.mant.signum()
        }
    }

    /// Natural log of the magnitude (`-inf` for zero).
    pub fn ln_abs(self) -> f64 {
        if self.mant == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.mant.abs().ln() + self.exp as f64 * LN_2
        }
    }

    pub fn scale(self, factor: f64) -> Self {
        Self::from_parts(self.mant * factor, self.exp)
    }

    pub(crate) fn parts(self) -> (f64, i64) {
        (self.mant, self.exp)
    }

    pub fn abs(self) -> Self {
        Self {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }
}

impl std::ops::Mul for ScaledReal {
    type Output = Self;

    fn mul(self, other: Self) -> Self {
        Self::from_parts(self.mant * other.mant, self.exp + other.exp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        for v in [1.0, -3.5, 1e-310, 5e-324, 1.7e308, -2.2250738585072014e-308] {
            assert_eq!(ScaledReal::from_f64(v).to_f64(), v);
        }
    }

    #[test]
    fn extends_range() {
        let tiny = ScaledReal::from_f64(1e-300) * ScaledReal::from_f64(1e-300);
        assert_eq!(tiny.to_f64(), 0.0);
        assert!((tiny.ln_abs() - (-600.0 * 10f64.ln())).abs() < 1e-12);
        let back = tiny * ScaledReal::from_f64(1e300);
        assert!((back.to_f64() / 1e-300 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn from_ln_matches() {
        let s = ScaledReal::from_ln(-1.0, 2.0f64.ln() * 10.0);
        assert!((s.to_f64() + 1024.0).abs() < 1e-10);
    }
}
