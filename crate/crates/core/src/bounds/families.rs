use super::{critical_points_raw, Envelope, EnvelopeParams, RowContext};

const LN_2: f64 = std::f64::consts::LN_2;

fn unit_params() -> EnvelopeParams {
    EnvelopeParams::default()
}

/// `(1 + l)^{1/2}`.
pub struct ClassicalI;

impl Envelope for ClassicalI {
    fn family(&self) -> &'static str {
        "classical_i"
    }
    fn params(&self) -> EnvelopeParams {
        unit_params()
    }
    fn check(&self, _: u32, _: u32, _: f64) -> Result<(), &'static str> {
        Ok(())
    }
    fn ln_value(&self, l: u32, _: u32, _: f64) -> f64 {
        0.5 * (1.0 + l as f64).ln()
    }
    fn fill_inverse(&self, row: &RowContext<'_>, out: &mut [f64]) -> bool {
        out.fill((1.0 + row.l as f64).powf(-0.5));
        true
    }
}

/// `(1 + l)^{1/4} (1 - x^2)^{-1/4}`.
pub struct ClassicalII;

impl Envelope for ClassicalII {
    fn family(&self) -> &'static str {
        "classical_ii"
    }
    fn params(&self) -> EnvelopeParams {
        unit_params()
    }
    fn check(&self, _: u32, _: u32, x: f64) -> Result<(), &'static str> {
        if x.abs() < 1.0 {
            Ok(())
        } else {
            Err("|x| < 1")
        }
    }
    fn ln_value(&self, l: u32, _: u32, x: f64) -> f64 {
        0.25 * (1.0 + l as f64).ln() - 0.25 * crate::numeric::ln_one_minus_sq(x)
    }
    fn fill_inverse(&self, row: &RowContext<'_>, out: &mut [f64]) -> bool {
        let c = (1.0 + row.l as f64).powf(-0.25);
        for (o, q) in out.iter_mut().zip(row.quarter) {
            *o = c * q;
        }
        true
    }
}

/// `(1 + l)^{1/6} |x (1 - x^2)|^{-1/6}`.
pub struct ClassicalIII;

impl Envelope for ClassicalIII {
    fn family(&self) -> &'static str {
        "classical_iii"
    }
    fn params(&self) -> EnvelopeParams {
        unit_params()
    }
    fn check(&self, _: u32, _: u32, x: f64) -> Result<(), &'static str> {
        if x != 0.0 && x.abs() < 1.0 {
            Ok(())
        } else {
            Err("0 < |x| < 1")
        }
    }
    fn ln_value(&self, l: u32, _: u32, x: f64) -> f64 {
        (1.0 + l as f64).ln() / 6.0 - (x.abs().ln() + crate::numeric::ln_one_minus_sq(x)) / 6.0
    }
    fn fill_inverse(&self, row: &RowContext<'_>, out: &mut [f64]) -> bool {
        let c = (1.0 + row.l as f64).powf(-1.0 / 6.0);
        for (o, s) in out.iter_mut().zip(row.sixth) {
            *o = c * s;
        }
        true
    }
}

#[inline]
fn fill_quartic(row: &RowContext<'_>, floor: f64, out: &mut [f64]) {
    let a2 = row.crit.a * row.crit.a;
    for (o, x2) in out.iter_mut().zip(row.x2) {
        *o = (floor + (x2 - a2).abs()).sqrt().sqrt();
    }
}

fn ln_quartic(floor: f64, l: u32, m: u32, x: f64) -> f64 {
    let a = critical_points_raw(l, m).a;
    -0.25 * (floor + (x * x - a * a).abs()).ln()
}

#[inline]
fn hermite_regime(eps: f64, l: u32, m: u32) -> bool {
    m as f64 >= eps * (l as f64 + 0.5)
}

#[inline]
fn bessel_regime(eps: f64, l: u32, m: u32) -> bool {
    m as f64 <= eps * (l as f64 + 0.5)
}

/// `((1 + l)^{-1} + |x^2 - a^2|)^{-1/4}` on `|m| >= epsilon (l + 1/2)`.
pub struct HermiteMain {
    eps: f64,
}

impl HermiteMain {
    pub fn new(eps: f64) -> Self {
        Self { eps }
    }
}

impl Envelope for HermiteMain {
    fn family(&self) -> &'static str {
        "hermite_regime_main"
    }
    fn params(&self) -> EnvelopeParams {
        EnvelopeParams {
            epsilon: self.eps,
            ..unit_params()
        }
    }
    fn check(&self, l: u32, m: u32, _: f64) -> Result<(), &'static str> {
        if hermite_regime(self.eps, l, m) {
            Ok(())
        } else {
            Err("|m| >= epsilon (l + 1/2)")
        }
    }
    fn ln_value(&self, l: u32, m: u32, x: f64) -> f64 {
        ln_quartic(1.0 / (1.0 + l as f64), l, m, x)
    }
    fn fill_inverse(&self, row: &RowContext<'_>, out: &mut [f64]) -> bool {
        if !hermite_regime(self.eps, row.l, row.m) {
            return false;
        }
        fill_quartic(row, 1.0 / (1.0 + row.l as f64), out);
        true
    }
}

/// `|x|^{-1/2} exp(-c l x^2)` on `|m| >= epsilon (l + 1/2)`, `|x| >= K a`.
pub struct HermiteTail {
    eps: f64,
    k: f64,
    c: f64,
}

impl HermiteTail {
    pub fn new(eps: f64, k: f64, c: f64) -> Self {
        Self { eps, k, c }
    }
}

impl Envelope for HermiteTail {
    fn family(&self) -> &'static str {
        "hermite_regime_tail"
    }
    fn params(&self) -> EnvelopeParams {
        EnvelopeParams {
            epsilon: self.eps,
            tail_k: self.k,
            tail_c: self.c,
        }
    }
    fn check(&self, l: u32, m: u32, x: f64) -> Result<(), &'static str> {
        if !hermite_regime(self.eps, l, m) {
            Err("|m| >= epsilon (l + 1/2)")
        } else if x.abs() < self.k * critical_points_raw(l, m).a {
            Err("|x| >= K a")
        } else {
            Ok(())
        }
    }
    fn ln_value(&self, l: u32, _: u32, x: f64) -> f64 {
        -0.5 * x.abs().ln() - self.c * l as f64 * x * x
    }
    fn log_domain(&self) -> bool {
        true
    }
    fn fill_inverse(&self, row: &RowContext<'_>, out: &mut [f64]) -> bool {
        if !hermite_regime(self.eps, row.l, row.m) {
            return false;
        }
        let cut = self.k * row.crit.a;
        let cl = self.c * row.l as f64;
        let mut any = false;
        for ((o, x), x2) in out.iter_mut().zip(row.xs).zip(row.x2) {
            *o = if x.abs() >= cut {
                any = true;
                0.5 * x.abs().ln() + cl * x2
            } else {
                f64::NEG_INFINITY
            };
        }
        any
    }
}

/// `((1 + |m|)^{4/3} (1 + l)^{-2} + |x^2 - a^2|)^{-1/4}` on `|m| <= epsilon (l + 1/2)`.
pub struct BesselMain {
    eps: f64,
}

impl BesselMain {
    pub fn new(eps: f64) -> Self {
        Self { eps }
    }
}

fn bessel_floor(l: u32, m: u32) -> f64 {
    (1.0 + m as f64).powf(4.0 / 3.0) / (1.0 + l as f64).powi(2)
}

impl Envelope for BesselMain {
    fn family(&self) -> &'static str {
        "bessel_regime_main"
    }
    fn params(&self) -> EnvelopeParams {
        EnvelopeParams {
            epsilon: self.eps,
            ..unit_params()
        }
    }
    fn check(&self, l: u32, m: u32, _: f64) -> Result<(), &'static str> {
        if bessel_regime(self.eps, l, m) {
            Ok(())
        } else {
            Err("|m| <= epsilon (l + 1/2)")
        }
    }
    fn ln_value(&self, l: u32, m: u32, x: f64) -> f64 {
        ln_quartic(bessel_floor(l, m), l, m, x)
    }
    fn fill_inverse(&self, row: &RowContext<'_>, out: &mut [f64]) -> bool {
        if !bessel_regime(self.eps, row.l, row.m) {
            return false;
        }
        fill_quartic(row, bessel_floor(row.l, row.m), out);
        true
    }
}

/// `b^{-1/2} 2^{-|m|}` on `|m| <= epsilon (l + 1/2)`, `sqrt(1 - x^2) <= b/4`.
/// The index `m = 0` is excluded since `b = 0` there.
pub struct BesselTail {
    eps: f64,
}

impl BesselTail {
    pub fn new(eps: f64) -> Self {
        Self { eps }
    }
}

impl Envelope for BesselTail {
    fn family(&self) -> &'static str {
        "bessel_regime_tail"
    }
    fn params(&self) -> EnvelopeParams {
        EnvelopeParams {
            epsilon: self.eps,
            ..unit_params()
        }
    }
    fn check(&self, l: u32, m: u32, x: f64) -> Result<(), &'static str> {
        let b = critical_points_raw(l, m).b;
        if !bessel_regime(self.eps, l, m) {
            Err("|m| <= epsilon (l + 1/2)")
        } else if m == 0 {
            Err("m != 0")
        } else if ((1.0 - x) * (1.0 + x)).sqrt() > b / 4.0 {
            Err("sqrt(1 - x^2) <= b/4")
        } else {
            Ok(())
        }
    }
    fn ln_value(&self, l: u32, m: u32, _: f64) -> f64 {
        -0.5 * critical_points_raw(l, m).b.ln() - m as f64 * LN_2
    }
    fn log_domain(&self) -> bool {
        true
    }
    fn fill_inverse(&self, row: &RowContext<'_>, out: &mut [f64]) -> bool {
        if row.m == 0 || !bessel_regime(self.eps, row.l, row.m) {
            return false;
        }
        let b = row.crit.b;
        let inv = 0.5 * b.ln() + row.m as f64 * LN_2;
        let cut = b * b / 16.0;
        let mut any = false;
        for (o, x2) in out.iter_mut().zip(row.x2) {
            *o = if 1.0 - x2 <= cut {
                any = true;
                inv
            } else {
                f64::NEG_INFINITY
            };
        }
        any
    }
}

/// `((1 + |m|)(1 + l)^{-2} + |x^2 - a^2|)^{-1/4}`, valid for all indices.
pub struct Combined;

fn combined_floor(l: u32, m: u32) -> f64 {
    (1.0 + m as f64) / (1.0 + l as f64).powi(2)
}

impl Envelope for Combined {
    fn family(&self) -> &'static str {
        "combined"
    }
    fn params(&self) -> EnvelopeParams {
        unit_params()
    }
    fn check(&self, _: u32, _: u32, _: f64) -> Result<(), &'static str> {
        Ok(())
    }
    fn ln_value(&self, l: u32, m: u32, x: f64) -> f64 {
        ln_quartic(combined_floor(l, m), l, m, x)
    }
    fn fill_inverse(&self, row: &RowContext<'_>, out: &mut [f64]) -> bool {
        fill_quartic(row, combined_floor(row.l, row.m), out);
        true
    }
}
