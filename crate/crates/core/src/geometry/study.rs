use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    ball_volume_closed, ball_volume_numeric, phi_distance, riemannian_distance, weight_lemma_check,
    EikonalGrid, SpherePoint, WeightQuadrature,
};
use crate::error::{Error, Result};

/// Acceptance band for `eikonal / phi_distance`.
pub const DISTANCE_BAND: (f64, f64) = (0.125, 8.0);

/// Pairs drawn uniformly with respect to surface measure.
pub fn random_pairs(seed: u64, count: usize) -> Vec<(SpherePoint, SpherePoint)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut point = || SpherePoint {
        theta: rng.gen_range(-1.0f64..=1.0).asin(),
        phi: rng.gen_range(0.0..TAU),
    };
    (0..count).map(|_| (point(), point())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub pair_id: usize,
    pub theta1: f64,
    pub phi1: f64,
    pub theta2: f64,
    pub phi2: f64,
    pub phi_dist: f64,
    pub eikonal_dist: f64,
    pub riemannian_dist: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairStudy {
    pub cells: usize,
    pub rows: Vec<PairRow>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Worst `riemannian - eikonal`, which should stay below `2 h`.
    pub lower_bound_excess: f64,
    pub within_band: bool,
}

/// Eikonal, model and great-circle distances for each pair, one global
/// grid with `cells` cells per axis; coincident pairs get ratio 1.
pub fn distance_pairs(pairs: &[(SpherePoint, SpherePoint)], cells: usize) -> Result<PairStudy> {
    let grid = EikonalGrid::global(cells)?;
    let rows: Vec<PairRow> = pairs
        .par_iter()
        .enumerate()
        .map(|(pair_id, (p, q))| {
            let phi_dist = phi_distance(p, q);
            let eikonal_dist = grid.distance(p, q).value;
            PairRow {
                pair_id,
                theta1: p.theta,
                phi1: p.phi,
                theta2: q.theta,
                phi2: q.phi,
                phi_dist,
                eikonal_dist,
                riemannian_dist: riemannian_distance(p, q),
                ratio: if phi_dist == 0.0 {
                    1.0
                } else {
                    eikonal_dist / phi_dist
                },
            }
        })
        .collect();
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let lower_bound_excess = rows
        .iter()
        .map(|r| r.riemannian_dist - r.eikonal_dist)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(PairStudy {
        cells,
        within_band: min_ratio >= DISTANCE_BAND.0 && max_ratio <= DISTANCE_BAND.1,
        rows,
        min_ratio,
        max_ratio,
        lower_bound_excess,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeRow {
    pub theta: f64,
    pub r: f64,
    pub numeric: f64,
    pub model: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeStudy {
    pub theta: f64,
    pub cells: usize,
    pub rows: Vec<VolumeRow>,
    /// Least-squares slope of `log V` against `log r`.
    pub slope: f64,
}

pub fn volume_slope(theta: f64, radii: &[f64], cells: usize) -> Result<VolumeStudy> {
    if radii.len() < 2 {
        return Err(Error::Precondition(
            "a slope needs at least two radii".into(),
        ));
    }
    let p = SpherePoint::new(theta, 0.0)?;
    let rows = radii
        .par_iter()
        .map(|&r| {
            Ok(VolumeRow {
                theta,
                r,
                numeric: ball_volume_numeric(&p, r, cells)?,
                model: ball_volume_closed(&p, r),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|v| (v.r.ln(), v.numeric.ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Ok(VolumeStudy {
        theta,
        cells,
        rows,
        slope: sxy / sxx,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightStability {
    pub alpha: f64,
    pub beta: f64,
    pub r: f64,
    pub theta_prime: f64,
    pub ratio: f64,
    pub ratio_refined: f64,
    pub pointwise_constant: f64,
    pub pointwise_constant_refined: f64,
    /// Largest relative change of either quantity under refinement.
    pub change: f64,
}

/// The weighted-volume ratio and pointwise constant on the default and the
/// refined quadrature.
pub fn weight_stability(
    alpha: f64,
    beta: f64,
    r: f64,
    theta_prime: f64,
) -> Result<WeightStability> {
    let z = SpherePoint::new(theta_prime, 0.0)?;
    let q = WeightQuadrature::default();
    let a = weight_lemma_check(alpha, beta, r, &z, &q)?;
    let b = weight_lemma_check(alpha, beta, r, &z, &q.refined())?;
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
    Ok(WeightStability {
        alpha,
        beta,
        r,
        theta_prime,
        ratio: a.ratio,
        ratio_refined: b.ratio,
        pointwise_constant: a.pointwise_constant,
        pointwise_constant_refined: b.pointwise_constant,
        change: rel(a.ratio, b.ratio).max(rel(a.pointwise_constant, b.pointwise_constant)),
    })
}
