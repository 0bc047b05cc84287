use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};

/// Bessel function of the first kind `J_nu(z)` for `nu >= -1/2`, `z >= 0`.
///
/// Power series where it converges without cancellation, otherwise Miller's
/// backward recurrence normalized by
/// `sum_k (nu0 + 2k) Gamma(nu0 + k)/k! J_{nu0+2k}(z) = (z/2)^{nu0}`.
pub fn bessel_j(nu: f64, z: f64) -> Result<f64> {
    if !(nu >= -0.5) || !nu.is_finite() {
        return Err(domain("nu", nu, "[-1/2, inf)"));
    }
    if !(z >= 0.0) || !z.is_finite() {
        return Err(domain("z", z, "[0, inf)"));
    }
    if z == 0.0 {
        return Ok(if nu == 0.0 {
            1.0
        } else if nu > 0.0 {
            0.0
        } else {
            f64::INFINITY
        });
    }
    if z <= 8.0 || 0.25 * z * z <= nu + 1.0 {
        Ok(series(nu, z))
    } else {
        Ok(miller(nu, z))
    }
}

fn series(nu: f64, z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = (nu * (0.5 * z).ln() - ln_gamma(nu + 1.0)).exp();
    let mut sum = term;
    for k in 0..500 {
        let k = k as f64;
        term *= -q / ((k + 1.0) * (k + 1.0 + nu));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn miller(nu: f64, z: f64) -> f64 {
    let nu0 = if nu >= 0.0 { nu - nu.floor() } else { nu };
    let steps = (nu - nu0).round() as usize;
    let mut top = (z + steps as f64 + 30.0 + 10.0 * z.cbrt()).ceil() as usize;
    top += top % 2;
    let coeff = |j: usize| -> f64 {
        if j == 0 {
            ln_gamma(nu0 + 1.0).exp()
        } else {
            let jf = j as f64;
            (nu0 + 2.0 * jf) * (ln_gamma(nu0 + jf) - ln_gamma(jf + 1.0)).exp()
        }
    };
    let (mut next, mut cur) = (0.0f64, 1e-30f64);
    let mut norm = 0.0;
    let mut target = 0.0;
    // `cur` holds order nu0 + k at the top of each iteration.
    let mut k = top;
    loop {
        if k % 2 == 0 {
            norm += coeff(k / 2) * cur;
        }
        if k == steps {
            target = cur;
        }
        if k == 0 {
            break;
        }
        let mu = nu0 + k as f64;
        let prev = 2.0 * mu / z * cur - next;
        next = cur;
        cur = prev;
        k -= 1;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            target *= 1e-250;
        }
    }
    target / norm * (0.5 * z).powf(nu0)
}

/// The elementary bound `|J_nu(z)| <= |z/2|^nu / Gamma(nu + 1)`.
pub fn bessel_power_bound(nu: f64, z: f64) -> f64 {
    (nu * (0.5 * z.abs()).ln() - ln_gamma(nu + 1.0)).exp()
}
