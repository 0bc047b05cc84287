use std::collections::BTreeMap;
use std::f64::consts::{E, FRAC_PI_2, FRAC_PI_4, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::harmonics::{adaptive_integrate, graded_panels, profile, HarmonicIndex, QuadratureGrid};
use crate::numeric::CompensatedSum;

/// Relative slack allowed in `lhs <= rhs`.
pub const COMMUTATION_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub l: u32,
    pub m: i32,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutationCheck {
    pub alpha: f64,
    pub terms: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compares `int |tan theta|^{2 alpha} |f|^2 dmu` with
/// `sum lambda^alpha |m|^{-2 alpha} |c|^2` for
/// `f = sum c Y(l, m; sin theta) e^{i m phi}`. Repeated indices are summed.
pub fn weighted_commutation_check(coeffs: &[Coefficient], alpha: f64) -> Result<CommutationCheck> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(domain("alpha", alpha, "[0, 1]"));
    }
    let mut merged: BTreeMap<(i32, u32), Complex64> = BTreeMap::new();
    for c in coeffs {
        let idx = HarmonicIndex::new(c.l, c.m)?;
        if idx.m == 0 {
            return Err(Error::Precondition(format!(
                "coefficient ({}, 0) is not orthogonal to the zonal harmonics",
                c.l
            )));
        }
        *merged.entry((c.m, c.l)).or_default() += Complex64::new(c.re, c.im);
    }
    let mut rhs = CompensatedSum::new();
    for (&(m, l), c) in &merged {
        let lambda = HarmonicIndex { l, m }.eigenvalue();
        rhs.add(lambda.powf(alpha) * (m.unsigned_abs() as f64).powf(-2.0 * alpha) * c.norm_sqr());
    }
    let l_max = merged.keys().map(|k| k.1).max().unwrap_or(0) as usize;
    // theta^{2 alpha} at the equator and cos^{2|m| - 2 alpha} at the poles
    let n = 24 + l_max;
    let near_equator = graded_panels(0.0, FRAC_PI_4, 0.0, 0.25, 30, n);
    let near_pole = graded_panels(FRAC_PI_4, FRAC_PI_2, FRAC_PI_2, 0.25, 30, n);
    let mut lhs = CompensatedSum::new();
    for grid in [&near_equator, &near_pole] {
        for (&t, &w) in grid.nodes.iter().zip(&grid.weights) {
            for theta in [t, -t] {
                let x = theta.sin();
                let weight = theta.tan().abs().powf(2.0 * alpha) * theta.cos();
                let mut per_order = 0.0;
                let mut current: Option<(i32, Complex64)> = None;
                for (&(m, l), c) in &merged {
                    let y = profile(l, m, x)?;
                    match current {
                        Some((cm, ref mut g)) if cm == m => *g += c * y,
                        _ => {
                            if let Some((_, g)) = current {
                                per_order += g.norm_sqr();
                            }
                            current = Some((m, c * y));
                        }
                    }
                }
                if let Some((_, g)) = current {
                    per_order += g.norm_sqr();
                }
                lhs.add(2.0 * PI * w * weight * per_order);
            }
        }
    }
    let (lhs, rhs) = (lhs.value(), rhs.value());
    Ok(CommutationCheck {
        alpha,
        terms: merged.len(),
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + COMMUTATION_SLACK),
    })
}

/// Seeded coefficient set with `terms` entries, `1 <= |m| <= l <= l_max`.
pub fn random_coefficients(rng: &mut ChaCha8Rng, terms: usize, l_max: u32) -> Vec<Coefficient> {
    (0..terms)
        .map(|_| {
            let l = rng.gen_range(1..=l_max.max(1));
            let mag = rng.gen_range(1..=l) as i32;
            let m = if rng.gen_bool(0.5) { mag } else { -mag };
            Coefficient {
                l,
                m,
                re: rng.gen_range(-1.0..1.0),
                im: rng.gen_range(-1.0..1.0),
            }
        })
        .collect()
}

/// Built-in cases followed by `random` seeded instances with random `alpha`.
pub fn commutation_suite(seed: u64, random: usize) -> Result<Vec<CommutationCheck>> {
    let single = [Coefficient {
        l: 1,
        m: 1,
        re: 1.0,
        im: 0.0,
    }];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fixed = random_coefficients(&mut ChaCha8Rng::seed_from_u64(0), 10, 12);
    let mut out = Vec::new();
    for alpha in [0.0, 0.3, 0.7, 1.0] {
        out.push(weighted_commutation_check(&single, alpha)?);
        out.push(weighted_commutation_check(&fixed, alpha)?);
    }
    for _ in 0..random {
        let terms = rng.gen_range(1..=10);
        let coeffs = random_coefficients(&mut rng, terms, 24);
        let alpha = rng.gen_range(0.0..=1.0);
        out.push(weighted_commutation_check(&coeffs, alpha)?);
    }
    Ok(out)
}

/// Positive test function `phi` with `|phi'| <= kappa phi` for suitable `kappa`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogLipschitz {
    Constant {
        value: f64,
    },
    Exp {
        rate: f64,
    },
    /// `exp(sum a sin(b x + c))` for terms `(a, b, c)`.
    Trig {
        terms: Vec<(f64, f64, f64)>,
    },
}

impl LogLipschitz {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            LogLipschitz::Constant { value } => *value,
            LogLipschitz::Exp { rate } => (rate * x).exp(),
            LogLipschitz::Trig { terms } => terms
                .iter()
                .map(|(a, b, c)| a * (b * x + c).sin())
                .sum::<f64>()
                .exp(),
        }
    }

    /// `phi' / phi`.
    pub fn log_derivative(&self, x: f64) -> f64 {
        match self {
            LogLipschitz::Constant { .. } => 0.0,
            LogLipschitz::Exp { rate } => *rate,
            LogLipschitz::Trig { terms } => terms
                .iter()
                .map(|(a, b, c)| a * b * (b * x + c).cos())
                .sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumIntegralCheck {
    pub kappa: f64,
    pub sum: f64,
    pub integral: f64,
    pub ratio: f64,
    /// `2 e kappa`.
    pub bound: f64,
    pub holds: bool,
}

/// Samples used to verify `|phi'| <= kappa phi` on the interval.
const DERIVATIVE_SAMPLES: usize = 4097;

/// `sum_{x in points, a <= x <= b} phi(x)` against `2 e kappa int_a^b phi`.
pub fn sum_integral_check(
    phi: &LogLipschitz,
    points: &[f64],
    interval: (f64, f64),
    kappa: f64,
) -> Result<SumIntegralCheck> {
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(domain("kappa", kappa, "[1, inf)"));
    }
    let (a, b) = interval;
    if !(b - a >= 1.0 / kappa) {
        return Err(Error::Precondition(format!(
            "interval [{a}, {b}] is shorter than 1/kappa = {}",
            1.0 / kappa
        )));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    if let Some(w) = sorted
        .windows(2)
        .find(|w| w[1] - w[0] < 1.0 / kappa * (1.0 - 1e-12))
    {
        return Err(Error::Precondition(format!(
            "points {} and {} are closer than 1/kappa = {}",
            w[0],
            w[1],
            1.0 / kappa
        )));
    }
    for k in 0..DERIVATIVE_SAMPLES {
        let x = a + (b - a) * k as f64 / (DERIVATIVE_SAMPLES - 1) as f64;
        let (v, d) = (phi.eval(x), phi.log_derivative(x));
        if !(v > 0.0) || d.abs() > kappa * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!(
                "|phi'| <= kappa phi fails at x = {x}"
            )));
        }
    }
    let sum: f64 = sorted
        .iter()
        .filter(|x| (a..=b).contains(*x))
        .map(|&x| phi.eval(x))
        .sum();
    let coarse = QuadratureGrid::composite(&[a, b], 16)
        .integrate(|x| phi.eval(x))
        .abs();
    let integral = adaptive_integrate(|x| phi.eval(x), a, b, 1e-11 * coarse);
    let bound = 2.0 * E * kappa;
    Ok(SumIntegralCheck {
        kappa,
        sum,
        integral,
        ratio: sum / integral,
        bound,
        holds: sum <= bound * integral,
    })
}

/// A seeded instance: trigonometric `phi`, `kappa`, a `1/kappa`-separated set
/// and an interval of length at least `1/kappa`.
pub fn random_sum_integral_instance(
    rng: &mut ChaCha8Rng,
) -> (LogLipschitz, Vec<f64>, (f64, f64), f64) {
    let kappa = rng.gen_range(1.0..8.0);
    let n_terms = rng.gen_range(1..=3);
    let mut budget = kappa;
    let terms: Vec<(f64, f64, f64)> = (0..n_terms)
        .map(|_| {
            let b = rng.gen_range(0.1..4.0);
            let a = rng.gen_range(0.0..budget / b);
            budget -= a * b;
            (a, b, rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    let a = rng.gen_range(-5.0..5.0);
    let len = rng.gen_range(1.0 / kappa..20.0);
    let mut points = Vec::new();
    let mut x = a - rng.gen_range(0.0..2.0);
    while x <= a + len + 2.0 {
        points.push(x);
        x += (1.0 + rng.gen_range(0.0..3.0)) / kappa;
    }
    (LogLipschitz::Trig { terms }, points, (a, a + len), kappa)
}

/// Built-in cases followed by `random` seeded instances.
pub fn sum_integral_suite(seed: u64, random: usize) -> Result<Vec<SumIntegralCheck>> {
    let integers: Vec<f64> = (0..=10).map(f64::from).collect();
    let mut out = vec![
        sum_integral_check(
            &LogLipschitz::Constant { value: 1.0 },
            &integers,
            (0.0, 10.0),
            1.0,
        )?,
        sum_integral_check(&LogLipschitz::Exp { rate: 1.0 }, &integers, (0.0, 5.0), 1.0)?,
        sum_integral_check(
            &LogLipschitz::Exp { rate: -1.0 },
            &integers,
            (0.0, 5.0),
            1.0,
        )?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random {
        let (phi, points, interval, kappa) = random_sum_integral_instance(&mut rng);
        out.push(sum_integral_check(&phi, &points, interval, kappa)?);
    }
    Ok(out)
}

/// Smallest `sqrt(lambda)` over positive eigenvalues with `l <= l_max`, and
/// where it is attained.
pub fn spectral_gap(l_max: u32) -> Option<(f64, HarmonicIndex)> {
    let mut best: Option<(i64, HarmonicIndex)> = None;
    for l in 1..=l_max {
        for m in 0..=l as i32 {
            let idx = HarmonicIndex { l, m };
            let v = idx.eigenvalue_exact();
            if v > 0 && best.map_or(true, |(b, _)| v < b) {
                best = Some((v, idx));
            }
        }
    }
    best.map(|(v, idx)| ((v as f64).sqrt(), idx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commutation_examples() {
        let single = [Coefficient {
            l: 1,
            m: 1,
            re: 1.0,
            im: 0.0,
        }];
        let c = weighted_commutation_check(&single, 1.0).unwrap();
        assert!((c.lhs - 0.5).abs() < 1e-12, "{c:?}");
        assert_eq!(c.rhs, 1.0);
        let fixed = random_coefficients(&mut ChaCha8Rng::seed_from_u64(7), 10, 12);
        let p = weighted_commutation_check(&fixed, 0.0).unwrap();
        assert!((p.lhs - p.rhs).abs() < 1e-12 * p.rhs, "{p:?}");
        assert!(weighted_commutation_check(
            &[Coefficient {
                l: 2,
                m: 0,
                re: 1.0,
                im: 0.0
            }],
            0.5
        )
        .is_err());
        assert!(weighted_commutation_check(&single, 1.5).is_err());
    }

    #[test]
    fn sum_integral_examples() {
        let s = sum_integral_suite(1, 0).unwrap();
        assert_eq!(s[0].sum, 11.0);
        assert!((s[0].integral - 10.0).abs() < 1e-12);
        assert!((s[1].integral - (5f64.exp() - 1.0)).abs() < 1e-9);
        assert!((s[1].sum - (0..=5).map(|k| (k as f64).exp()).sum::<f64>()).abs() < 1e-9);
        assert!((s[1].ratio - 1.589).abs() < 1e-3);
        assert!(s.iter().all(|c| c.holds));
        let crowded = [0.0, 0.5];
        assert!(sum_integral_check(
            &LogLipschitz::Constant { value: 1.0 },
            &crowded,
            (0.0, 1.0),
            1.0
        )
        .is_err());
        assert!(
            sum_integral_check(&LogLipschitz::Exp { rate: 2.0 }, &[0.0], (0.0, 1.0), 1.0).is_err()
        );
    }

    #[test]
    fn gap_is_one() {
        let (v, idx) = spectral_gap(200).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!((idx.l, idx.m), (1, 1));
    }
}
