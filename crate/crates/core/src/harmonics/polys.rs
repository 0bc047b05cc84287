/// Legendre polynomial `P_n(x)` by Bonnet's recurrence.
pub fn legendre_poly(n: u32, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return p0;
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Jacobi polynomial `P_n^{(alpha, beta)}(x)` for `alpha, beta > -1`.
pub fn jacobi_poly(n: u32, alpha: f64, beta: f64, x: f64) -> f64 {
    let (a, b) = (alpha, beta);
    let mut p0 = 1.0;
    if n == 0 {
        return p0;
    }
    let mut p1 = (a + 1.0) + (a + b + 2.0) * (x - 1.0) / 2.0;
    for k in 2..=n {
        let k = k as f64;
        let s = 2.0 * k + a + b;
        let c0 = 2.0 * k * (k + a + b) * (s - 2.0);
        let c1 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
        let c2 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * s;
        let p2 = (c1 * p1 - c2 * p0) / c0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_known_values() {
        assert_eq!(legendre_poly(0, 0.3), 1.0);
        assert!((legendre_poly(2, 0.5) + 0.125).abs() < 1e-16);
        assert!((legendre_poly(3, 0.5) + 0.4375).abs() < 1e-16);
        for n in 0..50 {
            assert!((legendre_poly(n, 1.0) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn jacobi_reduces_to_legendre() {
        for n in 0..20 {
            for x in [-0.7, 0.1, 0.9] {
                assert!((jacobi_poly(n, 0.0, 0.0, x) - legendre_poly(n, x)).abs() < 1e-13);
            }
        }
    }
}
