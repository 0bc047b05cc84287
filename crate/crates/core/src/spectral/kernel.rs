//! Kernel columns `K(z, z')` of a multiplier, as Fourier series in the
//! longitude difference.
//!
//! For `z = (theta, phi)` and `z' = (theta', 0)`,
//! `K = g_0 + 2 sum_{m>0} g_m cos(m phi)` with
//! `g_m(x) = sum_l F(lambda_{l,m}) Y(l, m; x) Y(l, m; x')`, `x = sin theta`.
//! The engine produces the coefficients `g_m` row by row on a latitude grid;
//! consumers turn them into norms, samples or fits.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use super::multiplier::{Multiplier, Truncation};
use crate::error::{domain, Error, Result};
use crate::harmonics::{
    eigenvalue, for_each_in_order, gauss_legendre, sweep_fixed_order, SeedTable,
};
use crate::numeric::CompensatedSum;

/// Latitude rows with quadrature weights for `int f dmu = int int f cos(theta) dtheta dphi`.
/// The weights already include `cos(theta)`.
#[derive(Debug, Clone, Serialize)]
pub struct RowGrid {
    pub thetas: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RowGrid {
    /// Composite Gauss-Legendre rule on `[-pi/2, pi/2]` with a break at the
    /// equator and node spacing at most about `spacing`.
    pub fn panels(spacing: f64, nodes: usize) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(domain("spacing", spacing, "(0, inf)"));
        }
        let per_side = ((FRAC_PI_2 / (spacing * nodes as f64)).ceil() as usize).max(2);
        let rule = gauss_legendre(nodes);
        let h = FRAC_PI_2 / per_side as f64;
        let mut half = Vec::with_capacity(per_side * nodes);
        for p in 0..per_side {
            let (a, b) = (p as f64 * h, (p + 1) as f64 * h);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let t = 0.5 * (a + b) + 0.5 * (b - a) * x;
                half.push((t, 0.5 * (b - a) * w * t.cos()));
            }
        }
        half.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut thetas = Vec::with_capacity(2 * half.len());
        let mut weights = Vec::with_capacity(2 * half.len());
        for &(t, w) in half.iter().rev() {
            thetas.push(-t);
            weights.push(w);
        }
        for &(t, w) in &half {
            thetas.push(t);
            weights.push(w);
        }
        Ok(Self { thetas, weights })
    }

    /// Rows resolving features of size `1/sqrt(bandwidth)` with about
    /// `quality` nodes each.
    pub fn for_bandwidth(bandwidth: f64, quality: f64) -> Result<Self> {
        Self::panels(1.0 / (quality * bandwidth.max(1.0).sqrt()), 8)
    }

    /// Evaluation-only rows (zero weights).
    pub fn points(thetas: Vec<f64>) -> Self {
        let weights = vec![0.0; thetas.len()];
        Self { thetas, weights }
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }
}

/// Tuning of a kernel computation.
#[derive(Debug, Clone, Serialize)]
pub struct KernelOptions {
    /// Certified bound on the truncated tail of non-compact multipliers.
    pub tail_tolerance: f64,
    /// Latitude nodes per `1/sqrt(bandwidth)`.
    pub quality: f64,
    /// Optional degree cap; an error if the spectral support needs more.
    pub l_max: Option<u32>,
    /// Rows processed together.
    pub chunk: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            tail_tolerance: 1e-12,
            quality: 4.0,
            l_max: None,
            chunk: 8,
        }
    }
}

/// Relative size, against the largest column diagonal, below which an order's
/// contribution on a row chunk is dropped.
const NEGLIGIBLE: f64 = 1e-16;

#[derive(Debug, Clone)]
struct OrderPlan {
    l_hi: u32,
    /// `F(lambda_{l,m})` for `l = m..=l_hi`.
    f: Vec<f64>,
    /// Rows with `|x| >= skip_from` receive a negligible contribution.
    skip_from: f64,
}

/// Coefficients of one kernel column on one latitude row.
pub struct KernelRow<'a> {
    pub row: usize,
    pub theta: f64,
    pub weight: f64,
    pub column: usize,
    pub theta_prime: f64,
    /// `g_m` for `m = 0..coeffs.len()`; omitted orders are negligible.
    pub coeffs: &'a [f64],
}

impl KernelRow<'_> {
    /// Default longitude sample count: a power of two at least `4 (M + 1)`.
    pub fn phi_samples(&self) -> usize {
        (4 * self.coeffs.len()).max(16).next_power_of_two()
    }

    /// `K` at `phi_j = 2 pi j / n`, `j < n`.
    pub fn values(&self, n: usize) -> Vec<f64> {
        synthesize(self.coeffs, n)
    }

    /// `int_0^{2 pi} K^2 dphi` by Parseval.
    pub fn l2_squared_in_phi(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for (m, g) in self.coeffs.iter().enumerate() {
            acc.add(if m == 0 { g * g } else { 2.0 * g * g });
        }
        2.0 * PI * acc.value()
    }
}

type FftCache = (FftPlanner<f64>, HashMap<usize, Arc<dyn Fft<f64>>>);

thread_local! {
    static PLANNER: RefCell<FftCache> = RefCell::new((FftPlanner::new(), HashMap::new()));
}

/// Exact samples of `g_0 + 2 sum_{m>0} g_m cos(m phi)` at `phi_j = 2 pi j/n`;
/// orders beyond `n` are folded, so any `n >= 1` is exact.
pub fn synthesize(coeffs: &[f64], n: usize) -> Vec<f64> {
    assert!(n > 0, "sample count must be positive");
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (m, g) in coeffs.iter().enumerate() {
        buf[m % n].re += if m == 0 { *g } else { 2.0 * g };
    }
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let (planner, cache) = &mut *p;
        cache
            .entry(n)
            .or_insert_with(|| planner.plan_fft_inverse(n))
            .clone()
    });
    fft.process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

/// Kernel coefficients of one multiplier for a set of columns `theta'`.
pub struct KernelEngine {
    multiplier: Arc<dyn Multiplier>,
    truncation: Truncation,
    columns: Vec<f64>,
    column_x: Vec<f64>,
    rows: RowGrid,
    chunk: usize,
    seeds: Arc<SeedTable>,
    plans: Vec<OrderPlan>,
    threshold: f64,
    diagonals: Vec<f64>,
}

impl KernelEngine {
    /// Engine on the default row grid for the multiplier's bandwidth.
    pub fn new(
        multiplier: Arc<dyn Multiplier>,
        columns: &[f64],
        options: &KernelOptions,
    ) -> Result<Self> {
        let truncation = Truncation::for_multiplier(&*multiplier, options.tail_tolerance)?;
        let bandwidth = multiplier
            .bandwidth()
            .map_or(truncation.lambda_max, |b| b.min(truncation.lambda_max));
        let rows = RowGrid::for_bandwidth(bandwidth, options.quality)?;
        Self::with_rows(multiplier, columns, rows, options)
    }

    pub fn with_rows(
        multiplier: Arc<dyn Multiplier>,
        columns: &[f64],
        rows: RowGrid,
        options: &KernelOptions,
    ) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Precondition(
                "kernel needs at least one column".into(),
            ));
        }
        for &t in columns.iter().chain(&rows.thetas) {
            if !(-FRAC_PI_2..=FRAC_PI_2).contains(&t) {
                return Err(domain("theta", t, "[-pi/2, pi/2]"));
            }
        }
        let truncation = Truncation::for_multiplier(&*multiplier, options.tail_tolerance)?;
        truncation.within(options.l_max)?;
        let lam = truncation.lambda_max as u64;
        let seeds = Arc::new(SeedTable::new(lam as u32));
        let column_x: Vec<f64> = columns.iter().map(|t| t.sin()).collect();

        let mut plans: Vec<OrderPlan> = (0..=lam)
            .into_par_iter()
            .map(|m| {
                let l_hi = top_degree(m, lam);
                let f = (m..=l_hi)
                    .map(|l| multiplier.eval(eigenvalue(l as u32, m as u32)))
                    .collect();
                OrderPlan {
                    l_hi: l_hi as u32,
                    f,
                    skip_from: f64::INFINITY,
                }
            })
            .collect();

        // |F|-weighted column diagonals fix the scale of negligible terms
        let partial: Vec<Vec<f64>> = plans
            .par_iter()
            .enumerate()
            .map(|(m, plan)| {
                let mult = if m == 0 { 1.0 } else { 2.0 };
                column_x
                    .iter()
                    .map(|&x| {
                        let mut s = 0.0;
                        walk(m as u32, plan.l_hi, x, &seeds, |k, v| {
                            s += plan.f[k].abs() * v * v
                        });
                        mult * s
                    })
                    .collect()
            })
            .collect();
        let mut diagonals = vec![CompensatedSum::new(); columns.len()];
        for p in &partial {
            for (d, v) in diagonals.iter_mut().zip(p) {
                d.add(*v);
            }
        }
        let diagonals: Vec<f64> = diagonals.iter().map(|d| d.value()).collect();
        let threshold = NEGLIGIBLE * diagonals.iter().cloned().fold(0.0, f64::max);

        plans.par_iter_mut().enumerate().for_each(|(m, plan)| {
            plan.skip_from = skip_threshold(m as u32, plan, &column_x, &seeds, threshold);
        });

        Ok(Self {
            multiplier,
            truncation,
            columns: columns.to_vec(),
            column_x,
            rows,
            chunk: options.chunk.max(1),
            seeds,
            plans,
            threshold,
            diagonals,
        })
    }

    pub fn multiplier(&self) -> &Arc<dyn Multiplier> {
        &self.multiplier
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn columns(&self) -> &[f64] {
        &self.columns
    }

    pub fn rows(&self) -> &RowGrid {
        &self.rows
    }

    /// `sum_{l,m} |F(lambda)| Y(l, m; x')^2` per column.
    pub fn abs_diagonals(&self) -> &[f64] {
        &self.diagonals
    }

    /// Number of `(l, m >= 0)` terms in the truncated expansion.
    pub fn term_count(&self) -> u64 {
        self.plans
            .iter()
            .enumerate()
            .map(|(m, p)| (p.l_hi as u64 + 1).saturating_sub(m as u64))
            .sum()
    }

    /// Applies `f` to every `(row, column)` pair and returns the results in
    /// row-major order. Deterministic regardless of the thread count.
    pub fn map_rows<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&KernelRow<'_>) -> T + Sync,
    {
        let n_rows = self.rows.len();
        let chunks: Vec<usize> = (0..n_rows).step_by(self.chunk).collect();
        chunks
            .into_par_iter()
            .map(|r0| self.process_chunk(r0, (r0 + self.chunk).min(n_rows), &f))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    }

    fn process_chunk<T, F>(&self, r0: usize, r1: usize, f: &F) -> Vec<T>
    where
        F: Fn(&KernelRow<'_>) -> T,
    {
        let c = r1 - r0;
        let j = self.columns.len();
        let cj = c * j;
        let mut xs: Vec<f64> = self.rows.thetas[r0..r1].iter().map(|t| t.sin()).collect();
        let x0 = xs.iter().fold(f64::INFINITY, |a, x| a.min(x.abs()));
        xs.extend_from_slice(&self.column_x);
        let active: Vec<u32> = self
            .plans
            .iter()
            .enumerate()
            .filter(|(_, p)| p.skip_from > x0)
            .map(|(m, _)| m as u32)
            .collect();
        let m_top = active.last().map_or(0, |m| *m as usize);
        let mut acc = vec![0.0; (m_top + 1) * cj];
        for &m in &active {
            let plan = &self.plans[m as usize];
            let base = m as usize * cj;
            let out = &mut acc[base..base + cj];
            sweep_fixed_order(m, plan.l_hi, &xs, &self.seeds, |l, vals| {
                let fl = plan.f[(l - m) as usize];
                if fl == 0.0 {
                    return;
                }
                let cols = &vals[c..];
                for r in 0..c {
                    let fr = fl * vals[r];
                    if fr == 0.0 {
                        continue;
                    }
                    let o = &mut out[r * j..(r + 1) * j];
                    for (a, v) in o.iter_mut().zip(cols) {
                        *a += fr * v;
                    }
                }
            });
        }
        let mut results = Vec::with_capacity(cj);
        let mut coeffs = vec![0.0; m_top + 1];
        for r in 0..c {
            for col in 0..j {
                for (m, g) in coeffs.iter_mut().enumerate() {
                    *g = acc[m * cj + r * j + col];
                }
                let len = coeffs
                    .iter()
                    .rposition(|g| g.abs() > self.threshold)
                    .map_or(1, |p| p + 1);
                results.push(f(&KernelRow {
                    row: r0 + r,
                    theta: self.rows.thetas[r0 + r],
                    weight: self.rows.weights[r0 + r],
                    column: col,
                    theta_prime: self.columns[col],
                    coeffs: &coeffs[..len],
                }));
            }
        }
        results
    }

    /// Sums a per-row quantity into one value per column, in row order.
    pub fn integrate_rows<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&KernelRow<'_>) -> f64 + Sync,
    {
        let j = self.columns.len();
        let vals = self.map_rows(|row| row.weight * f(row));
        let mut acc = vec![CompensatedSum::new(); j];
        for (i, v) in vals.iter().enumerate() {
            acc[i % j].add(*v);
        }
        acc.iter().map(|a| a.value()).collect()
    }
}

/// Largest `l` with `l(l+1) - m^2 <= lam`.
fn top_degree(m: u64, lam: u64) -> u64 {
    let target = lam + m * m;
    let mut l = ((-1.0 + (1.0 + 4.0 * target as f64).sqrt()) / 2.0).floor() as u64;
    while l * (l + 1) > target {
        l -= 1;
    }
    while (l + 1) * (l + 2) <= target {
        l += 1;
    }
    l
}

/// Calls `f(l - m, Y(l, m; x))` for `l = m..=l_hi`.
fn walk<F: FnMut(usize, f64)>(m: u32, l_hi: u32, x: f64, seeds: &SeedTable, mut f: F) {
    for_each_in_order(m, l_hi, x, seeds, |l, v| {
        f((l - m) as usize, v);
        std::ops::ControlFlow::Continue(())
    });
}

/// Smallest `|x|` beyond which order `m` contributes less than `threshold`
/// to every kernel coefficient. Past the turning point of the top degree each
/// profile decays monotonically in `|x|`, so a bisection on the bound is valid.
fn skip_threshold(
    m: u32,
    plan: &OrderPlan,
    column_x: &[f64],
    seeds: &SeedTable,
    threshold: f64,
) -> f64 {
    if m == 0 {
        return f64::INFINITY;
    }
    let n = plan.f.len();
    let mut w = vec![0.0f64; n];
    for &x in column_x {
        walk(m, plan.l_hi, x, seeds, |k, v| w[k] = w[k].max(v.abs()));
    }
    for (wk, f) in w.iter_mut().zip(&plan.f) {
        *wk *= f.abs();
    }
    let global: f64 = w
        .iter()
        .enumerate()
        .map(|(k, wk)| wk * ((2 * (m as usize + k) + 1) as f64 / (4.0 * PI)).sqrt())
        .sum();
    if global < threshold {
        return 0.0;
    }
    let bound = |x: f64| {
        let mut s = 0.0;
        walk(m, plan.l_hi, x, seeds, |k, v| s += w[k] * v.abs());
        s
    };
    let b = m as f64 / (plan.l_hi as f64 + 0.5);
    let a = ((1.0 - b) * (1.0 + b)).sqrt();
    if bound(a) < threshold {
        return a;
    }
    let (mut lo, mut hi) = (a, 1.0);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if bound(mid) < threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Samples of one kernel column on a `(theta, dphi)` grid.
#[derive(Debug, Clone, Serialize)]
pub struct KernelColumn {
    pub theta_prime: f64,
    pub thetas: Vec<f64>,
    /// `dphi_k = 2 pi k / n_phi` for `k <= n_phi / 2`; the column is even in `dphi`.
    pub dphi: Vec<f64>,
    /// `values[i][k] = K(N(theta_i, dphi_k), N(theta', 0))`.
    pub values: Vec<Vec<f64>>,
    pub lambda_max: f64,
    pub l_max: u32,
    pub tail_bound: f64,
}

/// Samples the kernel column at `theta'` on the given latitudes and on
/// `n_phi` equispaced longitude differences (the half `[0, pi]` is stored).
pub fn kernel_column(
    multiplier: Arc<dyn Multiplier>,
    theta_prime: f64,
    thetas: &[f64],
    n_phi: usize,
    options: &KernelOptions,
) -> Result<KernelColumn> {
    if n_phi == 0 {
        return Err(domain("n_phi", 0.0, "[1, inf)"));
    }
    let engine = KernelEngine::with_rows(
        multiplier,
        &[theta_prime],
        RowGrid::points(thetas.to_vec()),
        options,
    )?;
    let values = engine.map_rows(|row| {
        let mut v = row.values(n_phi);
        v.truncate(n_phi / 2 + 1);
        v
    });
    let t = engine.truncation();
    Ok(KernelColumn {
        theta_prime,
        thetas: thetas.to_vec(),
        dphi: (0..=n_phi / 2)
            .map(|k| 2.0 * PI * k as f64 / n_phi as f64)
            .collect(),
        values,
        lambda_max: t.lambda_max,
        l_max: t.l_max,
        tail_bound: t.tail_bound,
    })
}

/// `sum_{l,m in Z} F(lambda)^2 Y(l, m; sin theta')^2`, the squared `L^2` norm of
/// the kernel column, summed directly over the truncated spectrum.
pub fn column_l2_squared(
    multiplier: &dyn Multiplier,
    truncation: &Truncation,
    theta_prime: f64,
) -> f64 {
    let lam = truncation.lambda_max as u64;
    let x = theta_prime.sin();
    let seeds = SeedTable::new(lam as u32);
    let parts: Vec<f64> = (0..=lam)
        .into_par_iter()
        .map(|m| {
            let l_hi = top_degree(m, lam) as u32;
            let mut acc = CompensatedSum::new();
            walk(m as u32, l_hi, x, &seeds, |k, v| {
                let f = multiplier.eval(eigenvalue(m as u32 + k as u32, m as u32));
                acc.add(f * f * v * v);
            });
            if m == 0 {
                acc.value()
            } else {
                2.0 * acc.value()
            }
        })
        .collect();
    crate::numeric::compensated_sum(parts)
}

/// Direct evaluation of `sum F(lambda) Y(l,m; x) Y(l,m; x') e^{i m dphi}` over
/// signed `m`, without pairing `m` with `-m`. Quadratic cost; meant for checks.
pub fn kernel_value_direct(
    multiplier: &dyn Multiplier,
    lambda_max: f64,
    theta: f64,
    theta_prime: f64,
    dphi: f64,
) -> Complex64 {
    let lam = lambda_max.floor() as u64;
    let (x, xp) = (theta.sin(), theta_prime.sin());
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for m in -(lam as i64)..=lam as i64 {
        let am = m.unsigned_abs();
        let l_hi = top_degree(am, lam) as u32;
        for l in am as u32..=l_hi {
            let f = multiplier.eval(eigenvalue(l, am as u32));
            if f == 0.0 {
                continue;
            }
            let a = crate::harmonics::profile(l, m as i32, x).unwrap_or(0.0);
            let b = crate::harmonics::profile(l, m as i32, xp).unwrap_or(0.0);
            let (s, c) = (m as f64 * dphi).sin_cos();
            re.add(f * a * b * c);
            im.add(f * a * b * s);
        }
    }
    Complex64::new(re.value(), im.value())
}
