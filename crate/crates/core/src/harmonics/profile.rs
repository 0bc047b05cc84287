use std::f64::consts::PI;
use std::ops::ControlFlow;

use statrs::function::gamma::ln_gamma;

use super::polys::jacobi_poly;
use super::quadrature::gauss_legendre;
use super::scaled::{ldexp, ScaledReal};
use crate::error::{domain, Error, Result};
use crate::numeric::{ln_one_minus_sq, CompensatedSum};

/// `1/sqrt(4 pi)`, the constant profile `Y(0, 0; x)`.
pub const INV_SQRT_4PI: f64 = 0.282_094_791_773_878_14;

const RESCALE_EXP: i64 = 600;

/// Coefficients of `Y_l = a (x Y_{l-1} - b Y_{l-2})` at fixed order `m`.
#[inline]
fn recurrence(l: u32, m: u32) -> (f64, f64) {
    let (l, m) = (l as f64, m as f64);
    let a = ((4.0 * l * l - 1.0) / (l * l - m * m)).sqrt();
    let k = l - 1.0;
    let b = ((k * k - m * m) / (4.0 * k * k - 1.0)).sqrt();
    (a, b)
}

#[inline]
fn flushed_factor(exp: i64) -> f64 {
    if exp < -1000 {
        0.0
    } else {
        ldexp(1.0, exp)
    }
}

fn check_args(l: u32, m: i32, x: f64) -> Result<u32> {
    if m.unsigned_abs() > l {
        return Err(Error::InvalidIndex {
            l: l as i64,
            m: m as i64,
        });
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(domain("x", x, "[-1, 1]"));
    }
    Ok(m.unsigned_abs())
}

/// Profile value with extended exponent range, so that e.g. `Y(4096, 4096; 0.9)`
/// is representable.
pub fn profile_scaled(l: u32, m: i32, x: f64) -> Result<ScaledReal> {
    let am = check_args(l, m, x)?;
    let s = ((1.0 - x) * (1.0 + x)).sqrt();
    if am > 0 && s == 0.0 {
        return Ok(ScaledReal::ZERO);
    }
    // Seed Y(m, m) as a running product, renormalized by powers of two.
    let mut v = INV_SQRT_4PI * (2.0 * am as f64 + 1.0).sqrt();
    let mut exp = 0i64;
    for k in 1..=am {
        let k = k as f64;
        v *= s * ((2.0 * k - 1.0) / (2.0 * k)).sqrt();
        if v < 1e-150 {
            v *= ldexp(1.0, RESCALE_EXP);
            exp -= RESCALE_EXP;
        }
    }
    if am % 2 == 1 {
        v = -v;
    }
    let (mut prev, mut cur) = (0.0, v);
    if l > am {
        prev = cur;
        cur *= x * (2.0 * am as f64 + 3.0).sqrt();
    }
    for ll in am + 2..=l {
        let (a, b) = recurrence(ll, am);
        let next = a * (x * cur - b * prev);
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            cur *= ldexp(1.0, -RESCALE_EXP);
            prev *= ldexp(1.0, -RESCALE_EXP);
            exp += RESCALE_EXP;
        }
    }
    if m < 0 && am % 2 == 1 {
        cur = -cur;
    }
    Ok(ScaledReal::from_parts(cur, exp))
}

/// `Y(l, m; x)`; values below the smallest normal double flush towards zero.
pub fn profile(l: u32, m: i32, x: f64) -> Result<f64> {
    Ok(profile_scaled(l, m, x)?.to_f64())
}

/// The same profile through the Jacobi representation
/// `P_l^m = (-1)^m (l+m)!/(2^m l!) (1-x^2)^{m/2} P^{(m,m)}_{l-m}`.
pub fn jacobi_form(l: u32, m: i32, x: f64) -> Result<f64> {
    let am = check_args(l, m, x)?;
    let (lf, mf) = (l as f64, am as f64);
    let ln_c = ln_gamma(lf + mf + 1.0) - mf * 2f64.ln() - ln_gamma(lf + 1.0)
        + 0.5
            * ((2.0 * lf + 1.0).ln() - (4.0 * PI).ln() + ln_gamma(lf - mf + 1.0)
                - ln_gamma(lf + mf + 1.0));
    let envelope = if am == 0 {
        1.0
    } else {
        (0.5 * mf * ln_one_minus_sq(x)).exp()
    };
    let sign = if am % 2 == 1 && m > 0 { -1.0 } else { 1.0 };
    Ok(sign * ln_c.exp() * envelope * jacobi_poly(l - am, mf, mf, x))
}

/// Prefix table of `ln prod_{k<=m} sqrt((2k-1)/(2k))`, giving `ln |Y(m, m; x)|`
/// in constant time.
#[derive(Debug, Clone)]
pub struct SeedTable {
    prefix: Vec<f64>,
}

impl SeedTable {
    pub fn new(m_max: u32) -> Self {
        let mut prefix = Vec::with_capacity(m_max as usize + 1);
        let mut acc = CompensatedSum::new();
        prefix.push(0.0);
        for k in 1..=m_max {
            acc.add(0.5 * (-0.5 / k as f64).ln_1p());
            prefix.push(acc.value());
        }
        Self { prefix }
    }

    pub fn m_max(&self) -> u32 {
        self.prefix.len() as u32 - 1
    }

    /// `ln |Y(m, m; x)|` given `ln(1 - x^2)`.
    #[inline]
    pub fn ln_seed(&self, m: u32, ln_1mx2: f64) -> f64 {
        let base = -0.5 * (4.0 * PI).ln() + 0.5 * (2.0 * m as f64 + 1.0).ln();
        if m == 0 {
            return base;
        }
        base + self.prefix[m as usize] + 0.5 * m as f64 * ln_1mx2
    }

    /// `Y(m, m; x)` with sign, in scaled form.
    pub fn seed(&self, m: u32, x: f64) -> ScaledReal {
        let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
        ScaledReal::from_ln(sign, self.ln_seed(m, ln_one_minus_sq(x)))
    }
}

/// Walks `Y(l, m; x)` for `l = m, m+1, ..., l_max` at a single point, calling
/// `f(l, value)`; `f` may stop the walk early.
pub fn for_each_in_order<F>(m: u32, l_max: u32, x: f64, seeds: &SeedTable, mut f: F)
where
    F: FnMut(u32, f64) -> ControlFlow<()>,
{
    if l_max < m {
        return;
    }
    let (mut cur, mut exp) = seeds.seed(m, x).parts();
    let mut fac = flushed_factor(exp);
    if f(m, cur * fac).is_break() || l_max == m {
        return;
    }
    let mut prev = cur;
    cur *= x * (2.0 * m as f64 + 3.0).sqrt();
    if f(m + 1, cur * fac).is_break() {
        return;
    }
    for l in m + 2..=l_max {
        let (a, b) = recurrence(l, m);
        let next = a * (x * cur - b * prev);
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            cur *= ldexp(1.0, -RESCALE_EXP);
            prev *= ldexp(1.0, -RESCALE_EXP);
            exp += RESCALE_EXP;
            fac = flushed_factor(exp);
        }
        if f(l, cur * fac).is_break() {
            return;
        }
    }
}

/// One row of a fixed-order sweep: `values[i] = mantissas[i] 2^{exponents[i]}`,
/// where `values` is flushed to zero below about `2^-1000`.
pub struct SweepRow<'a> {
    pub l: u32,
    pub values: &'a [f64],
    pub mantissas: &'a [f64],
    pub exponents: &'a [i64],
}

/// Evaluates `Y(l, m; x_i)` for every `x_i` and every `l = m..=l_max`, handing
/// each row of values to `f(l, values)`. The inner loop runs over the points.
pub fn sweep_fixed_order<F>(m: u32, l_max: u32, xs: &[f64], seeds: &SeedTable, mut f: F)
where
    F: FnMut(u32, &[f64]),
{
    sweep_fixed_order_rows(m, l_max, xs, seeds, |row| f(row.l, row.values));
}

/// Like [`sweep_fixed_order`] but also exposes the extended-range parts.
pub fn sweep_fixed_order_rows<F>(m: u32, l_max: u32, xs: &[f64], seeds: &SeedTable, mut f: F)
where
    F: FnMut(&SweepRow<'_>),
{
    if l_max < m {
        return;
    }
    let n = xs.len();
    let mut prev = vec![0.0; n];
    let mut cur = vec![0.0; n];
    let mut exp = vec![0i64; n];
    let mut fac = vec![0.0; n];
    let mut val = vec![0.0; n];
    for i in 0..n {
        let (c, e) = seeds.seed(m, xs[i]).parts();
        cur[i] = c;
        exp[i] = e;
        fac[i] = flushed_factor(e);
        val[i] = c * fac[i];
    }
    macro_rules! emit {
        ($l:expr) => {
            f(&SweepRow {
                l: $l,
                values: &val,
                mantissas: &cur,
                exponents: &exp,
            })
        };
    }
    emit!(m);
    if l_max == m {
        return;
    }
    let c1 = (2.0 * m as f64 + 3.0).sqrt();
    for i in 0..n {
        prev[i] = cur[i];
        cur[i] *= xs[i] * c1;
        val[i] = cur[i] * fac[i];
    }
    emit!(m + 1);
    let down = ldexp(1.0, -RESCALE_EXP);
    for l in m + 2..=l_max {
        let (a, b) = recurrence(l, m);
        let ab = a * b;
        for i in 0..n {
            let next = a * xs[i] * cur[i] - ab * prev[i];
            prev[i] = cur[i];
            cur[i] = next;
            val[i] = next * fac[i];
        }
        if (l - m) % 8 == 0 {
            for i in 0..n {
                if cur[i].abs() > 1e150 {
                    cur[i] *= down;
                    prev[i] *= down;
                    exp[i] += RESCALE_EXP;
                    fac[i] = flushed_factor(exp[i]);
                    val[i] = cur[i] * fac[i];
                }
            }
        }
        emit!(l);
    }
}

/// Largest relative deviation of `sum_m |Y(l, m; x)|^2` from `(2l+1)/(4 pi)`
/// over `l <= l_max` and the given points.
pub fn addition_theorem_residual(l_max: u32, xs: &[f64]) -> f64 {
    let n = xs.len();
    let stride = l_max as usize + 1;
    let mut sums = vec![0.0; stride * n];
    let seeds = SeedTable::new(l_max);
    for m in 0..=l_max {
        let w = if m == 0 { 1.0 } else { 2.0 };
        sweep_fixed_order(m, l_max, xs, &seeds, |l, vals| {
            let row = &mut sums[l as usize * n..(l as usize + 1) * n];
            for (s, v) in row.iter_mut().zip(vals) {
                *s += w * v * v;
            }
        });
    }
    let mut worst: f64 = 0.0;
    for l in 0..=l_max as usize {
        let expected = (2 * l + 1) as f64 / (4.0 * PI);
        for s in &sums[l * n..(l + 1) * n] {
            worst = worst.max((s - expected).abs() / expected);
        }
    }
    worst
}

/// Largest entry of `|G - I|` for the Gram matrix `2 pi int Y_l Y_l' dx` at
/// each order `m`, using a Gauss rule exact for the products.
pub fn orthonormality_residual(l_max: u32) -> f64 {
    let grid = gauss_legendre(l_max as usize + 2);
    let seeds = SeedTable::new(l_max);
    let mut worst: f64 = 0.0;
    for m in 0..=l_max {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        sweep_fixed_order(m, l_max, &grid.nodes, &seeds, |_, vals| {
            rows.push(vals.to_vec())
        });
        for (i, a) in rows.iter().enumerate() {
            for (j, b) in rows.iter().enumerate().skip(i) {
                let g = 2.0 * PI * grid.integrate_product(a, b);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
    }
    worst
}

/// Largest `|Y(l, m; -x) - (-1)^{l+m} Y(l, m; x)|` relative to
/// `sqrt((2l+1)/(4 pi))`.
pub fn parity_residual(l_max: u32, xs: &[f64]) -> f64 {
    let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
    let seeds = SeedTable::new(l_max);
    let mut worst: f64 = 0.0;
    for m in 0..=l_max {
        let mut plus: Vec<Vec<f64>> = Vec::new();
        sweep_fixed_order(m, l_max, xs, &seeds, |_, v| plus.push(v.to_vec()));
        sweep_fixed_order(m, l_max, &neg, &seeds, |l, v| {
            let sign = if (l + m) % 2 == 0 { 1.0 } else { -1.0 };
            let scale = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt();
            for (a, b) in plus[(l - m) as usize].iter().zip(v) {
                worst = worst.max((b - sign * a).abs() / scale);
            }
        });
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_closed_forms() {
        let x = 0.3f64;
        let s = (1.0 - x * x).sqrt();
        let c = |v: f64| v / (4.0 * PI).sqrt();
        let cases = [
            (0, 0, c(1.0)),
            (1, 0, c(3f64.sqrt() * x)),
            (1, 1, c(-(1.5f64).sqrt() * s)),
            (1, -1, c((1.5f64).sqrt() * s)),
            (2, 0, c(5f64.sqrt() * 0.5 * (3.0 * x * x - 1.0))),
            (2, 2, c(0.25 * 30f64.sqrt() * s * s)),
        ];
        for (l, m, expected) in cases {
            let v = profile(l, m, x).unwrap();
            assert!(
                (v - expected).abs() < 1e-15,
                "l={l} m={m}: {v} vs {expected}"
            );
        }
    }

    #[test]
    fn equator_zonal_value() {
        // Y(2, 0; 0) = -sqrt(5/(16 pi))
        let v = profile(2, 0, 0.0).unwrap();
        assert!((v + (5.0 / (16.0 * PI)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sectoral_matches_seed_table() {
        let seeds = SeedTable::new(5000);
        for &(m, x) in &[(10u32, 0.2), (700, 0.5), (4096, 0.9), (4999, 0.999)] {
            let a = profile_scaled(m, m as i32, x).unwrap();
            let b = seeds.seed(m, x);
            assert!((a.ln_abs() - b.ln_abs()).abs() < 1e-10, "m={m}");
            assert_eq!(a.signum(), b.signum());
        }
        assert!(profile_scaled(4096, 4096, 0.9).unwrap().ln_abs() < -3000.0);
    }

    #[test]
    fn scalar_walk_and_sweep_agree_with_pointwise() {
        let seeds = SeedTable::new(200);
        let xs = [-0.95, -0.2, 0.0, 0.31, 0.77, 0.999];
        for m in [0u32, 1, 5, 40, 150] {
            sweep_fixed_order(m, 200, &xs, &seeds, |l, vals| {
                for (x, v) in xs.iter().zip(vals) {
                    let p = profile(l, m as i32, *x).unwrap();
                    assert!(
                        (p - v).abs() <= 1e-12 * (1.0 + p.abs()),
                        "l={l} m={m} x={x}"
                    );
                }
            });
            for x in xs {
                for_each_in_order(m, 200, x, &seeds, |l, v| {
                    let p = profile(l, m as i32, x).unwrap();
                    assert!((p - v).abs() <= 1e-12 * (1.0 + p.abs()));
                    ControlFlow::Continue(())
                });
            }
        }
    }

    #[test]
    fn jacobi_representation_agrees() {
        for (l, m, x) in [
            (2u32, 1i32, 0.5),
            (7, -3, -0.4),
            (20, 11, 0.9),
            (30, 0, 0.1),
        ] {
            let a = profile(l, m, x).unwrap();
            let b = jacobi_form(l, m, x).unwrap();
            assert!(
                (a - b).abs() < 1e-13 * (1.0 + a.abs()),
                "{l} {m} {x}: {a} {b}"
            );
        }
    }

    #[test]
    fn identities_small() {
        let xs = crate::numeric::chebyshev_lobatto(65);
        assert!(addition_theorem_residual(40, &xs) < 1e-12);
        assert!(orthonormality_residual(20) < 1e-12);
        assert!(parity_residual(40, &xs) < 1e-13);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(profile(3, 4, 0.0).is_err());
        assert!(profile(3, 1, 1.5).is_err());
        assert_eq!(profile(3, 2, 1.0).unwrap(), 0.0);
    }
}
