use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::{DistanceMethod, DistanceResult, SpherePoint};
use crate::error::{domain, Error, Result};

/// Horizontal cost per unit longitude is `1/|tan theta|`, clamped here.
const PHI_COST_CLAMP: f64 = 1e3;
/// Points this close to a pole are snapped onto it.
const POLE_SNAP: f64 = 1e-3;
const MIN_CELLS: usize = 32;

#[inline]
fn phi_cost(theta: f64) -> f64 {
    (1.0 / theta.tan().abs()).min(PHI_COST_CLAMP)
}

/// Length of a short chart segment, with the metric frozen at its midpoint.
#[inline]
fn local_length(dtheta: f64, dphi: f64, theta_mid: f64) -> f64 {
    dtheta.hypot(dphi * phi_cost(theta_mid))
}

/// Length of the horizontal path that leaves `theta_a`, moves in longitude
/// at the latitude `s` of largest modulus it needs, then reaches `theta_b`.
/// `|sin s| = sqrt(dphi/2)` minimizes `2|s| + dphi/tan|s|`.
fn staircase_length(theta_a: f64, theta_b: f64, dphi: f64) -> f64 {
    let dtheta = (theta_a - theta_b).abs();
    if dphi == 0.0 {
        return dtheta;
    }
    let reach = theta_a.abs().max(theta_b.abs());
    let best = (dphi / 2.0)
        .sqrt()
        .min(1.0)
        .asin()
        .min(FRAC_PI_2 - POLE_SNAP);
    let s = reach.max(best);
    dtheta + 2.0 * (s - reach) + dphi * phi_cost(s)
}

/// Local distance estimate: the cheaper of the frozen-metric segment and
/// the staircase path, both lengths of admissible curves.
#[inline]
fn attach_length(theta_a: f64, theta_b: f64, dphi: f64) -> f64 {
    let dphi = dphi.abs();
    local_length(theta_b - theta_a, dphi, (theta_a + theta_b) / 2.0)
        .min(staircase_length(theta_a, theta_b, dphi))
}

/// Uniform `(theta, phi)` node grid carrying the discretized metric
/// `d theta^2 + d phi^2 / tan^2 theta`, 8-connected. Rows lying on a pole are
/// collapsed to a single node.
#[derive(Debug, Clone)]
pub struct EikonalGrid {
    theta0: f64,
    h_theta: f64,
    rows: usize,
    phi0: f64,
    h_phi: f64,
    cols: usize,
    periodic: bool,
    pole: Vec<bool>,
    /// `costs[i][3 (di + 1) + (dj + 1)]`
    costs: Vec<[f64; 9]>,
}

fn check_cells(cells: usize) -> Result<()> {
    if cells < MIN_CELLS {
        return Err(Error::Precondition(format!(
            "resolution too coarse: {cells} cells per axis, need at least {MIN_CELLS}"
        )));
    }
    Ok(())
}

impl EikonalGrid {
    /// Whole sphere with `cells` cells along each axis.
    pub fn global(cells: usize) -> Result<Self> {
        check_cells(cells)?;
        Ok(Self::build(
            -FRAC_PI_2,
            PI / cells as f64,
            cells + 1,
            0.0,
            TAU / cells as f64,
            cells,
            true,
        ))
    }

    /// Rectangle `center +- (half_theta, half_phi)` with `cells` cells per
    /// axis; `center` is a node. Fails if the rectangle reaches a pole.
    pub fn patch(
        center: &SpherePoint,
        half_theta: f64,
        half_phi: f64,
        cells: usize,
    ) -> Result<Self> {
        check_cells(cells)?;
        if center.theta.abs() + half_theta >= FRAC_PI_2 - POLE_SNAP {
            return Err(domain(
                "half_theta",
                half_theta,
                "patch away from the poles",
            ));
        }
        let cells = cells + cells % 2;
        Ok(Self::build(
            center.theta - half_theta,
            2.0 * half_theta / cells as f64,
            cells + 1,
            center.phi - half_phi,
            2.0 * half_phi / cells as f64,
            cells + 1,
            false,
        ))
    }

    fn build(
        theta0: f64,
        h_theta: f64,
        rows: usize,
        phi0: f64,
        h_phi: f64,
        cols: usize,
        periodic: bool,
    ) -> Self {
        let pole: Vec<bool> = (0..rows)
            .map(|i| (theta0 + i as f64 * h_theta).abs() >= FRAC_PI_2 - 1e-12)
            .collect();
        let costs = (0..rows)
            .map(|i| {
                let theta = theta0 + i as f64 * h_theta;
                let mut c = [0.0; 9];
                for di in -1i32..=1 {
                    for dj in -1i32..=1 {
                        let ni = i as i64 + di as i64;
                        let touches_pole =
                            pole[i] || (ni >= 0 && (ni as usize) < rows && pole[ni as usize]);
                        c[(3 * (di + 1) + dj + 1) as usize] = if touches_pole {
                            h_theta * di.abs() as f64
                        } else {
                            local_length(
                                di as f64 * h_theta,
                                dj as f64 * h_phi,
                                theta + di as f64 * h_theta / 2.0,
                            )
                        };
                    }
                }
                c
            })
            .collect();
        Self {
            theta0,
            h_theta,
            rows,
            phi0,
            h_phi,
            cols,
            periodic,
            pole,
            costs,
        }
    }

    /// Largest grid spacing in the chart.
    pub fn spacing(&self) -> f64 {
        self.h_theta.max(self.h_phi)
    }

    /// Attaching an off-grid point near the equator costs up to the
    /// sub-Riemannian length of a longitude shift `h_phi`, about `sqrt(2 h_phi)`.
    pub fn error_estimate(&self) -> f64 {
        2.0 * self.spacing() + (2.0 * self.h_phi).sqrt()
    }

    fn theta(&self, i: usize) -> f64 {
        self.theta0 + i as f64 * self.h_theta
    }

    fn phi(&self, j: usize) -> f64 {
        self.phi0 + j as f64 * self.h_phi
    }

    fn node(&self, i: usize, j: usize) -> usize {
        if self.pole[i] {
            i * self.cols
        } else {
            i * self.cols + j
        }
    }

    fn for_each_neighbour<F: FnMut(usize, f64)>(&self, n: usize, mut f: F) {
        let (i, j) = (n / self.cols, n % self.cols);
        if self.pole[i] {
            for ni in [i.wrapping_sub(1), i + 1] {
                if ni < self.rows {
                    for nj in 0..self.cols {
                        f(self.node(ni, nj), self.h_theta);
                    }
                }
            }
            return;
        }
        let c = &self.costs[i];
        for di in -1i64..=1 {
            let ni = i as i64 + di;
            if ni < 0 || ni as usize >= self.rows {
                continue;
            }
            for dj in -1i64..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let mut nj = j as i64 + dj;
                if self.periodic {
                    nj = nj.rem_euclid(self.cols as i64);
                } else if nj < 0 || nj as usize >= self.cols {
                    continue;
                }
                f(
                    self.node(ni as usize, nj as usize),
                    c[(3 * (di + 1) + dj + 1) as usize],
                );
            }
        }
    }

    /// Grid nodes at the corners of the cell containing `p`, with the local
    /// distance from `p` to each.
    fn attach(&self, p: &SpherePoint) -> Vec<(usize, f64)> {
        if self.periodic && p.theta.abs() > FRAC_PI_2 - POLE_SNAP {
            let i = if p.theta > 0.0 { self.rows - 1 } else { 0 };
            return vec![(self.node(i, 0), FRAC_PI_2 - p.theta.abs())];
        }
        let fi = ((p.theta - self.theta0) / self.h_theta).clamp(0.0, (self.rows - 1) as f64);
        let mut dphi = p.phi - self.phi0;
        if self.periodic {
            dphi = dphi.rem_euclid(TAU);
        }
        let max_j = if self.periodic {
            self.cols
        } else {
            self.cols - 1
        };
        let fj = (dphi / self.h_phi).clamp(0.0, max_j as f64);
        let (i0, j0) = (fi.floor() as usize, fj.floor() as usize);
        let mut out = Vec::with_capacity(4);
        for i in [i0, (i0 + 1).min(self.rows - 1)] {
            for j in [j0, j0 + 1] {
                let jj = if self.periodic {
                    j % self.cols
                } else {
                    j.min(self.cols - 1)
                };
                let t = self.theta(i);
                let cost = if self.pole[i] {
                    (t - p.theta).abs()
                } else {
                    let gap = self.phi(j) - (self.phi0 + fj * self.h_phi);
                    attach_length(p.theta, t, gap)
                };
                let n = self.node(i, jj);
                match out.iter_mut().find(|(m, _)| *m == n) {
                    Some((_, c)) => *c = f64::min(*c, cost),
                    None => out.push((n, cost)),
                }
            }
        }
        out
    }

    /// Shortest-path distances from the sources, stopping once all `targets`
    /// are settled or the frontier passes `radius`.
    fn dijkstra(&self, sources: &[(usize, f64)], targets: &[usize], radius: f64) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.rows * self.cols];
        let mut heap = BinaryHeap::new();
        for &(n, d) in sources {
            if d < dist[n] {
                dist[n] = d;
                heap.push(Reverse((d.to_bits(), n as u32)));
            }
        }
        let mut pending: Vec<usize> = targets.to_vec();
        while let Some(Reverse((bits, n))) = heap.pop() {
            let (d, n) = (f64::from_bits(bits), n as usize);
            if d > dist[n] {
                continue;
            }
            if d >= radius {
                break;
            }
            if let Some(k) = pending.iter().position(|t| *t == n) {
                pending.swap_remove(k);
                if pending.is_empty() && !targets.is_empty() {
                    break;
                }
            }
            self.for_each_neighbour(n, |m, c| {
                let nd = d + c;
                if nd < dist[m] {
                    dist[m] = nd;
                    heap.push(Reverse((nd.to_bits(), m as u32)));
                }
            });
        }
        dist
    }

    /// Grid approximation of the sub-Riemannian distance.
    pub fn distance(&self, p: &SpherePoint, q: &SpherePoint) -> DistanceResult {
        let src = self.attach(p);
        let dst = self.attach(q);
        let targets: Vec<usize> = dst.iter().map(|(n, _)| *n).collect();
        let dist = self.dijkstra(&src, &targets, f64::INFINITY);
        let mut best = dst
            .iter()
            .map(|(n, c)| dist[*n] + c)
            .fold(f64::INFINITY, f64::min);
        let same_cell = src.iter().map(|(n, _)| n).eq(dst.iter().map(|(n, _)| n));
        if same_cell {
            let gap = super::longitude_gap(p.phi, q.phi);
            best = best.min(attach_length(p.theta, q.theta, gap));
        }
        DistanceResult {
            value: best,
            method: DistanceMethod::Eikonal,
            resolution: self.spacing(),
            error_estimate: self.error_estimate(),
        }
    }

    fn node_area(&self, i: usize) -> f64 {
        let t = self.theta(i);
        let hi = (t + self.h_theta / 2.0).min(FRAC_PI_2);
        let lo = (t - self.h_theta / 2.0).max(-FRAC_PI_2);
        let band = hi.sin() - lo.sin();
        if self.pole[i] {
            TAU * band
        } else {
            self.h_phi * band
        }
    }

    /// Measure of nodes within `r` of the sources; the flag reports whether
    /// the ball reached a non-periodic longitude edge.
    fn ball_measure(&self, sources: &[(usize, f64)], r: f64) -> (f64, bool) {
        let dist = self.dijkstra(sources, &[], r);
        let mut total = 0.0;
        let mut touches = false;
        for i in 0..self.rows {
            let area = self.node_area(i);
            let cols = if self.pole[i] { 1 } else { self.cols };
            for j in 0..cols {
                if dist[i * self.cols + j] < r {
                    total += area;
                    if !self.periodic && (j == 0 || j == self.cols - 1) {
                        touches = true;
                    }
                }
            }
        }
        (total, touches)
    }
}

/// Measure of the grid ball `{z : d(z, p) < r}` with `d` the grid distance.
///
/// Small balls are computed on a local patch with `cells` cells per axis,
/// widened in longitude until the ball fits; balls reaching a pole or half
/// the sphere use the global grid.
pub fn ball_volume_numeric(p: &SpherePoint, r: f64, cells: usize) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(domain("r", r, "(0, inf)"));
    }
    check_cells(cells)?;
    let half_theta = 1.05 * r;
    let mut half_phi = 2.0 * r * (r + p.theta.abs());
    loop {
        if half_phi >= FRAC_PI_2 || p.theta.abs() + half_theta >= FRAC_PI_2 - POLE_SNAP {
            let grid = EikonalGrid::global(cells)?;
            return Ok(grid.ball_measure(&grid.attach(p), r).0);
        }
        let grid = EikonalGrid::patch(p, half_theta, half_phi, cells)?;
        let center = grid.node(grid.rows / 2, grid.cols / 2);
        let (v, touches) = grid.ball_measure(&[(center, 0.0)], r);
        if !touches {
            return Ok(v);
        }
        half_phi *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{phi_distance, riemannian_distance};
    use rand::{Rng, SeedableRng};

    fn pt(t: f64, p: f64) -> SpherePoint {
        SpherePoint::new(t, p).unwrap()
    }

    #[test]
    fn coarse_grid_rejected() {
        assert!(EikonalGrid::global(16).is_err());
        assert!(ball_volume_numeric(&pt(0.0, 0.0), 0.1, 8).is_err());
    }

    #[test]
    fn identity_and_symmetry() {
        let g = EikonalGrid::global(64).unwrap();
        let p = pt(0.3, 1.0);
        assert_eq!(g.distance(&p, &p).value, 0.0);
        let q = pt(-0.7, 4.0);
        let (a, b) = (g.distance(&p, &q).value, g.distance(&q, &p).value);
        assert!((a - b).abs() < 2.0 * g.spacing());
    }

    #[test]
    fn bounds_against_closed_forms() {
        let g = EikonalGrid::global(128).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let h = g.spacing();
        for _ in 0..40 {
            let p = pt(rng.gen_range(-1.0f64..1.0).asin(), rng.gen_range(0.0..TAU));
            let q = pt(rng.gen_range(-1.0f64..1.0).asin(), rng.gen_range(0.0..TAU));
            let d = g.distance(&p, &q).value;
            assert!(d >= riemannian_distance(&p, &q) - 2.0 * h);
            let ratio = d / phi_distance(&p, &q);
            assert!((0.125..=8.0).contains(&ratio), "{p:?} {q:?} {ratio}");
        }
    }

    #[test]
    fn triangle_inequality() {
        let g = EikonalGrid::global(96).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let mut p = || pt(rng.gen_range(-1.4..1.4), rng.gen_range(0.0..TAU));
            let (a, b, c) = (p(), p(), p());
            let ab = g.distance(&a, &b).value;
            let bc = g.distance(&b, &c).value;
            let ac = g.distance(&a, &c).value;
            assert!(ac <= ab + bc + 3.0 * g.spacing());
        }
    }

    #[test]
    fn poles_are_single_points() {
        let g = EikonalGrid::global(64).unwrap();
        let d = g
            .distance(&pt(FRAC_PI_2, 0.0), &pt(FRAC_PI_2 - 1e-4, 2.0))
            .value;
        assert!(d < 1e-3);
        let d = g.distance(&pt(FRAC_PI_2, 0.0), &pt(0.0, 1.0)).value;
        assert!((d - FRAC_PI_2).abs() < g.error_estimate(), "{d}");
        let d = g.distance(&pt(FRAC_PI_2, 0.0), &pt(0.0, 0.0)).value;
        assert!((d - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn whole_sphere_volume() {
        let v = ball_volume_numeric(&pt(0.2, 1.0), 4.0, 64).unwrap();
        assert!((v / (4.0 * PI) - 1.0).abs() < 0.02);
    }
}
