use std::f64::consts::PI;

use serde::Serialize;

use super::scaled::{ldexp, ScaledReal};

/// `L^2`-normalized Hermite function `h_nu(x) = (nu! 2^nu sqrt(pi))^{-1/2}
/// H_nu(x) e^{-x^2/2}` in scaled form.
pub fn hermite_function_scaled(nu: u32, x: f64) -> ScaledReal {
    let (mut cur, mut exp) = ScaledReal::from_ln(1.0, -0.5 * x * x - 0.25 * PI.ln()).parts();
    let mut prev = 0.0;
    for n in 0..nu {
        let n = n as f64;
        let next = (2.0 / (n + 1.0)).sqrt() * x * cur - (n / (n + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            cur *= ldexp(1.0, -500);
            prev *= ldexp(1.0, -500);
            exp += 500;
        }
    }
    ScaledReal::from_parts(cur, exp)
}

pub fn hermite_function(nu: u32, x: f64) -> f64 {
    hermite_function_scaled(nu, x).to_f64()
}

/// Measured constants in the bounds `|h_nu(x)| <= C (N^{-1/3} + |x^2 - N|)^{-1/4}`
/// and `|h_nu(x)| <= C_c e^{-c x^2}` for `x^2 >= 2N`, with `N = 2 nu + 1`.
#[derive(Debug, Clone, Serialize)]
pub struct HermiteBoundFit {
    pub nu: u32,
    pub main_constant: f64,
    /// `(c, C_c)` pairs for the Gaussian tail.
    pub tail: Vec<(f64, f64)>,
}

impl HermiteBoundFit {
    pub fn measure(nu: u32, tail_rates: &[f64], samples: usize) -> Self {
        let n = 2.0 * nu as f64 + 1.0;
        let x_hi = 2.0 * n.sqrt() + 20.0;
        let mut main_constant: f64 = 0.0;
        let mut tail: Vec<(f64, f64)> = tail_rates.iter().map(|c| (*c, 0.0)).collect();
        for i in 0..=samples {
            let x = x_hi * i as f64 / samples as f64;
            let h = hermite_function_scaled(nu, x);
            let env = (n.powf(-1.0 / 3.0) + (x * x - n).abs()).powf(0.25);
            main_constant = main_constant.max(h.to_f64().abs() * env);
            if x * x >= 2.0 * n {
                for (c, k) in tail.iter_mut() {
                    *k = k.max((h.ln_abs() + *c * x * x).exp());
                }
            }
        }
        Self {
            nu,
            main_constant,
            tail,
        }
    }
}
