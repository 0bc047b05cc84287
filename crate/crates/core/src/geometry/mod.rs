//! Metric layer of the Grushin sphere: the closed-form distance model, a
//! grid-based sub-Riemannian distance, great-circle distance, ball volumes
//! and the off-diagonal weight `w_r`.
//!
//! Coordinates are latitude `theta in [-pi/2, pi/2]` and longitude
//! `phi in [0, 2 pi)`; the horizontal frame is `d_theta`, `tan(theta) d_phi`,
//! so the length element is `ds^2 = d theta^2 + d phi^2 / tan^2 theta`.

mod eikonal;
mod study;
mod weight;

pub use eikonal::{ball_volume_numeric, EikonalGrid};
pub use study::{
    distance_pairs, random_pairs, volume_slope, weight_stability, PairRow, PairStudy, VolumeRow,
    VolumeStudy, WeightStability, DISTANCE_BAND,
};
pub use weight::{weight, weight_lemma_check, WeightLemma, WeightQuadrature};

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub theta: f64,
    pub phi: f64,
}

impl SpherePoint {
    /// Validates the latitude and reduces the longitude to `[0, 2 pi)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(-FRAC_PI_2..=FRAC_PI_2).contains(&theta) {
            return Err(domain("theta", theta, "[-pi/2, pi/2]"));
        }
        if !phi.is_finite() {
            return Err(domain("phi", phi, "finite"));
        }
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        Ok(Self { theta, phi })
    }

    /// `(cos theta cos phi, cos theta sin phi, sin theta)`.
    pub fn embedding(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [ct * cp, ct * sp, st]
    }
}

/// Longitude separation as arclength on the circle, in `[0, pi]`.
pub fn longitude_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(TAU);
    d.min(TAU - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMethod {
    ClosedFormPhi,
    Eikonal,
    Riemannian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub value: f64,
    pub method: DistanceMethod,
    /// Grid spacing for grid methods, zero otherwise.
    pub resolution: f64,
    pub error_estimate: f64,
}

/// `|theta - theta'| + min(|dphi|^{1/2}, |dphi| / max(|tan theta|, |tan theta'|))`.
pub fn phi_distance(p: &SpherePoint, q: &SpherePoint) -> f64 {
    let dphi = longitude_gap(p.phi, q.phi);
    let t = p.theta.tan().abs().max(q.theta.tan().abs());
    let horizontal = if t == 0.0 {
        dphi.sqrt()
    } else {
        dphi.sqrt().min(dphi / t)
    };
    (p.theta - q.theta).abs() + horizontal
}

/// Great-circle distance in `[0, pi]`.
pub fn riemannian_distance(p: &SpherePoint, q: &SpherePoint) -> f64 {
    let (a, b) = (p.embedding(), q.embedding());
    let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let norm = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    norm.atan2(dot).clamp(0.0, PI)
}

/// Model ball volume `min(1, r^2 max(r, |theta|))`.
pub fn ball_volume_closed(p: &SpherePoint, r: f64) -> f64 {
    (r * r * r.max(p.theta.abs())).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(t: f64, p: f64) -> SpherePoint {
        SpherePoint::new(t, p).unwrap()
    }

    #[test]
    fn embedding_is_unit() {
        for k in 0..50 {
            let p = pt(-1.5 + 0.06 * k as f64, 0.37 * k as f64);
            let e = p.embedding();
            assert!(((e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt() - 1.0).abs() < 1e-14);
        }
        assert!(SpherePoint::new(2.0, 0.0).is_err());
        assert!((pt(0.0, -0.5).phi - (TAU - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn phi_distance_examples() {
        let p = pt(0.3, 1.0);
        assert_eq!(phi_distance(&p, &p), 0.0);
        assert!((phi_distance(&pt(0.0, 0.0), &pt(0.0, 0.25)) - 0.5).abs() < 1e-15);
        let v = phi_distance(&pt(PI / 4.0, 0.0), &pt(0.0, 0.1));
        assert!((v - (PI / 4.0 + 0.1)).abs() < 1e-15);
        let a = pt(-0.4, 6.2);
        let b = pt(0.9, 0.1);
        assert_eq!(phi_distance(&a, &b), phi_distance(&b, &a));
        assert!((longitude_gap(6.2, 0.1) - (TAU - 6.1)).abs() < 1e-14);
    }

    #[test]
    fn riemannian_examples() {
        let p = pt(0.2, 0.3);
        assert_eq!(riemannian_distance(&p, &p), 0.0);
        assert!((riemannian_distance(&pt(0.0, 0.0), &pt(0.0, PI)) - PI).abs() < 1e-15);
        assert!((riemannian_distance(&pt(0.0, 0.0), &pt(0.0, 0.25)) - 0.25).abs() < 1e-15);
        assert!(
            (riemannian_distance(&pt(FRAC_PI_2, 0.0), &pt(-FRAC_PI_2, 1.0)) - PI).abs() < 1e-15
        );
    }

    #[test]
    fn closed_volume_examples() {
        assert_eq!(ball_volume_closed(&pt(0.0, 0.0), 0.0), 0.0);
        assert!((ball_volume_closed(&pt(0.0, 0.0), 0.1) - 1e-3).abs() < 1e-18);
        assert!((ball_volume_closed(&pt(0.5, 0.0), 0.1) - 0.005).abs() < 1e-17);
        assert_eq!(ball_volume_closed(&pt(0.5, 0.0), 3.0), 1.0);
    }
}
