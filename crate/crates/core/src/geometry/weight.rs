use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use super::{ball_volume_closed, SpherePoint};
use crate::error::{domain, Error, Result};
use crate::harmonics::QuadratureGrid;

/// Off-diagonal weight `w_r(z, z') = |theta| / max(r, |theta'|)`; not symmetric.
pub fn weight(r: f64, z: &SpherePoint, z_prime: &SpherePoint) -> Result<f64> {
    if !(r > 0.0) {
        return Err(domain("r", r, "(0, inf)"));
    }
    Ok(z.theta.abs() / r.max(z_prime.theta.abs()))
}

/// Composite Gauss rules graded geometrically towards the singular points
/// of the integrand in latitude and in longitude gap.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeightQuadrature {
    pub points_per_panel: usize,
    pub levels: usize,
    pub ratio: f64,
}

impl Default for WeightQuadrature {
    fn default() -> Self {
        Self {
            points_per_panel: 8,
            levels: 40,
            ratio: 0.5,
        }
    }
}

impl WeightQuadrature {
    pub fn refined(&self) -> Self {
        Self {
            points_per_panel: 2 * self.points_per_panel,
            levels: self.levels + self.levels / 2,
            ratio: self.ratio.sqrt(),
        }
    }

    fn breaks(&self, a: f64, b: f64, centers: &[f64]) -> Vec<f64> {
        let mut out = vec![a, b];
        for &c in centers {
            if c < a || c > b {
                continue;
            }
            out.push(c);
            for (len, sign) in [(c - a, -1.0), (b - c, 1.0)] {
                let mut d = len;
                for _ in 0..self.levels {
                    d *= self.ratio;
                    out.push(c + sign * d);
                }
            }
        }
        crate::numeric::sorted_unique(out, a, b)
    }

    fn rule(&self, a: f64, b: f64, centers: &[f64]) -> QuadratureGrid {
        QuadratureGrid::composite(&self.breaks(a, b, centers), self.points_per_panel)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightLemma {
    pub alpha: f64,
    pub beta: f64,
    pub r: f64,
    pub theta_prime: f64,
    /// `int (1 + Phi(z, z')/r)^{-beta} (1 + w_r(z, z'))^{-alpha} dmu(z)`
    pub lhs: f64,
    /// Model volume `V(z', r)`.
    pub rhs_model: f64,
    pub ratio: f64,
    /// `max (1 + w_r) / (1 + Phi/r)` over the quadrature nodes.
    pub pointwise_constant: f64,
    pub nodes: usize,
}

/// Evaluates the weighted integral against the model volume; the integral
/// only depends on `theta'`, so the longitude of `z'` is irrelevant.
pub fn weight_lemma_check(
    alpha: f64,
    beta: f64,
    r: f64,
    z_prime: &SpherePoint,
    quad: &WeightQuadrature,
) -> Result<WeightLemma> {
    if !(alpha + beta > 3.0) {
        return Err(Error::Precondition(format!(
            "alpha + beta > 3 violated (alpha = {alpha}, beta = {beta})"
        )));
    }
    if !(alpha < 1.0) {
        return Err(Error::Precondition(format!(
            "alpha < 1 violated (alpha = {alpha})"
        )));
    }
    if !(r > 0.0) {
        return Err(domain("r", r, "(0, inf)"));
    }
    let tp = z_prime.theta;
    let theta_rule = quad.rule(-FRAC_PI_2, FRAC_PI_2, &[tp, 0.0]);
    let tan_p = tp.tan().abs();
    let mut lhs = crate::numeric::CompensatedSum::new();
    let mut pointwise: f64 = 0.0;
    let mut nodes = 0;
    for (&t, &wt) in theta_rule.nodes.iter().zip(&theta_rule.weights) {
        let big_t = t.tan().abs().max(tan_p);
        let dt = (t - tp).abs();
        let w = t.abs() / r.max(tp.abs());
        let wfac = (1.0 + w).powf(-alpha);
        let phi_rule = quad.rule(0.0, PI, &[0.0, big_t * big_t]);
        let inner = phi_rule.integrate(|d| {
            let h = if big_t == 0.0 {
                d.sqrt()
            } else {
                d.sqrt().min(d / big_t)
            };
            let rho = (dt + h) / r;
            pointwise = pointwise.max((1.0 + w) / (1.0 + rho));
            (1.0 + rho).powf(-beta)
        });
        nodes += phi_rule.len();
        lhs.add(wt * t.cos() * 2.0 * inner * wfac);
    }
    let lhs = lhs.value();
    let rhs_model = ball_volume_closed(z_prime, r);
    Ok(WeightLemma {
        alpha,
        beta,
        r,
        theta_prime: tp,
        lhs,
        rhs_model,
        ratio: lhs / rhs_model,
        pointwise_constant: pointwise,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(t: f64) -> SpherePoint {
        SpherePoint::new(t, 0.0).unwrap()
    }

    #[test]
    fn weight_examples() {
        assert_eq!(weight(0.1, &pt(0.0), &pt(0.3)).unwrap(), 0.0);
        assert!((weight(0.1, &pt(0.2), &pt(0.05)).unwrap() - 2.0).abs() < 1e-15);
        assert!((weight(0.1, &pt(0.2), &pt(0.3)).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(weight(0.0, &pt(0.2), &pt(0.3)).is_err());
        assert_ne!(
            weight(0.1, &pt(0.2), &pt(0.3)).unwrap(),
            weight(0.1, &pt(0.3), &pt(0.2)).unwrap()
        );
    }

    #[test]
    fn pointwise_example() {
        // theta = 0.3, theta' = 0, r = 0.1, dphi = 0: both sides equal 4.
        let (z, zp) = (pt(0.3), pt(0.0));
        let w = weight(0.1, &z, &zp).unwrap();
        let rho = super::super::phi_distance(&z, &zp) / 0.1;
        assert!((1.0 + w - 4.0).abs() < 1e-12 && (1.0 + rho - 4.0).abs() < 1e-12);
    }

    #[test]
    fn preconditions_named() {
        let q = WeightQuadrature::default();
        let e = weight_lemma_check(0.4, 2.0, 0.1, &pt(0.0), &q)
            .unwrap_err()
            .to_string();
        assert!(e.contains("alpha + beta > 3"));
        let e = weight_lemma_check(1.2, 2.8, 0.1, &pt(0.0), &q)
            .unwrap_err()
            .to_string();
        assert!(e.contains("alpha < 1"));
    }

    #[test]
    fn large_radius_is_trivial() {
        let q = WeightQuadrature::default();
        for r in [1.0, 2.0, 5.0] {
            let c = weight_lemma_check(0.4, 2.8, r, &pt(0.3), &q).unwrap();
            assert!(c.lhs <= 4.0 * PI && c.ratio <= 4.0 * PI);
        }
    }

    #[test]
    fn ratio_stable_under_refinement() {
        let q = WeightQuadrature::default();
        for tp in [0.0, 0.02, 0.7] {
            let a = weight_lemma_check(0.4, 2.8, 0.05, &pt(tp), &q).unwrap();
            let b = weight_lemma_check(0.4, 2.8, 0.05, &pt(tp), &q.refined()).unwrap();
            assert!((a.ratio / b.ratio - 1.0).abs() < 0.01, "{a:?} {b:?}");
            assert!((a.pointwise_constant / b.pointwise_constant - 1.0).abs() < 0.1);
            assert!(a.pointwise_constant <= 2.0 + 1e-12);
        }
    }
}
