use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::harmonics::{sweep_fixed_order, SeedTable};
use crate::numeric::{chebyshev_points, geomspace, sorted_unique, spread};

/// Largest allowed max/min ratio across dyadic `i`-blocks.
pub const PLANCHEREL_BAND: f64 = 4.0;

/// Which part of the spectrum a Plancherel sum runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexRange {
    /// `|m| >= eps (l + 1/2)`.
    High,
    /// `|m| <= eps (l + 1/2)`.
    Low,
}

impl IndexRange {
    fn admits(self, l: u32, m: u32, eps: f64) -> bool {
        let bound = eps * (l as f64 + 0.5);
        match self {
            IndexRange::High => m as f64 >= bound,
            IndexRange::Low => m as f64 <= bound,
        }
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(domain("epsilon", eps, "(0, 1)"))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..0.5).contains(&alpha) {
        Ok(())
    } else {
        Err(domain("alpha", alpha, "[0, 1/2)"))
    }
}

/// Blocks `i` with `lambda in [i^2, (i+1)^2]` that contain `lambda`.
fn blocks_of(lambda: u64) -> (u64, Option<u64>) {
    let k = (lambda as f64).sqrt() as u64;
    let k = if (k + 1) * (k + 1) <= lambda {
        k + 1
    } else if k * k > lambda {
        k - 1
    } else {
        k
    };
    (k, (k * k == lambda && k > 0).then(|| k - 1))
}

/// Raw block sums `S[a][i - i_min][x]`, where `a` runs over `alphas` and the
/// summand is `lambda^a |m|^{-2a} |Y(l, m; x)|^2` (both signs of `m`).
fn block_sums(
    range: IndexRange,
    eps: f64,
    alphas: &[f64],
    i_min: u32,
    i_max: u32,
    xs: &[f64],
) -> Vec<Vec<f64>> {
    let bins = (i_max - i_min + 1) as usize;
    let n = xs.len();
    let top = (i_max as u64 + 1).pow(2);
    let bottom = (i_min as u64).pow(2);
    // largest l with l(l+1) - m^2 <= top
    let l_hi = |m: u32| -> u32 {
        let m2 = m as u64 * m as u64;
        let mut l = (((top + m2) as f64).sqrt()) as u64;
        while l * (l + 1) > top + m2 {
            l -= 1;
        }
        while (l + 1) * (l + 2) <= top + m2 {
            l += 1;
        }
        l as u32
    };
    let m_end = match range {
        IndexRange::High => top as u32,
        IndexRange::Low => (0..)
            .find(|&m: &u32| !(m..=l_hi(m)).any(|l| range.admits(l, m, eps)))
            .unwrap_or(0),
    };
    let seeds = SeedTable::new(m_end.max(1));
    let chunk = 16u32;
    let chunks: Vec<u32> = (0..=m_end / chunk).collect();
    let partial: Vec<Vec<f64>> = chunks
        .par_iter()
        .map(|&c| {
            let mut acc = vec![0.0; alphas.len() * bins * n];
            for m in c * chunk..((c + 1) * chunk).min(m_end + 1) {
                let hi = l_hi(m);
                if hi < m || !(m..=hi).any(|l| range.admits(l, m, eps)) {
                    continue;
                }
                let pair = if m == 0 { 1.0 } else { 2.0 };
                sweep_fixed_order(m, hi, xs, &seeds, |l, vals| {
                    let lambda = l as u64 * (l as u64 + 1) - m as u64 * m as u64;
                    if lambda < bottom || lambda > top || !range.admits(l, m, eps) {
                        return;
                    }
                    let (first, second) = blocks_of(lambda);
                    for (a, &alpha) in alphas.iter().enumerate() {
                        let factor = if alpha == 0.0 {
                            pair
                        } else {
                            pair * (lambda as f64).powf(alpha) * (m as f64).powf(-2.0 * alpha)
                        };
                        for i in std::iter::once(first).chain(second) {
                            if i < i_min as u64 || i > i_max as u64 {
                                continue;
                            }
                            let base = (a * bins + (i - i_min as u64) as usize) * n;
                            for (s, v) in acc[base..base + n].iter_mut().zip(vals) {
                                *s += factor * v * v;
                            }
                        }
                    }
                });
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; alphas.len() * bins * n];
    for p in &partial {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total.chunks(bins * n).map(<[f64]>::to_vec).collect()
}

fn normalize(range: IndexRange, alpha: f64, i: u32, x: f64, raw: f64) -> f64 {
    let i = i as f64;
    match range {
        IndexRange::High => raw / i * (1.0 / i).max(x.abs()).powf(1.0 - 2.0 * alpha),
        IndexRange::Low => raw / i,
    }
}

/// `(1/i) max(1/i, |x|)^{1-2 alpha} sum lambda^alpha |m|^{-2 alpha} |Y(l, m; x)|^2`
/// over `|m| >= eps (l + 1/2)` and `lambda in [i^2, (i+1)^2]`.
pub fn plancherel_sum_high(i: u32, eps: f64, alpha: f64, x: f64) -> Result<f64> {
    check_epsilon(eps)?;
    check_alpha(alpha)?;
    pointwise(IndexRange::High, i, eps, alpha, x)
}

/// `(1/i) sum |Y(l, m; x)|^2` over `|m| <= eps (l + 1/2)` and
/// `lambda in [i^2, (i+1)^2]`.
pub fn plancherel_sum_low(i: u32, eps: f64, x: f64) -> Result<f64> {
    check_epsilon(eps)?;
    pointwise(IndexRange::Low, i, eps, 0.0, x)
}

fn pointwise(range: IndexRange, i: u32, eps: f64, alpha: f64, x: f64) -> Result<f64> {
    if i == 0 {
        return Err(domain("i", 0.0, "[1, inf)"));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(domain("x", x, "[-1, 1]"));
    }
    let raw = block_sums(range, eps, &[alpha], i, i, &[x.abs()])[0][0];
    Ok(normalize(range, alpha, i, x, raw))
}

/// Grid of `x in [0, 1]` for the Plancherel scans; the sums are even in `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlancherelScanSpec {
    pub i_min: u32,
    pub i_max: u32,
    pub epsilon: f64,
    pub chebyshev: usize,
    /// Points geometric in `[small_x, 1]`.
    pub geometric: usize,
    pub small_x: f64,
    /// Smallest `i` whose dyadic block enters the stability ratio.
    pub stable_from: u32,
}

impl PlancherelScanSpec {
    pub fn new(i_max: u32, epsilon: f64) -> Self {
        Self {
            i_min: 2,
            i_max,
            epsilon,
            chebyshev: 256,
            geometric: 64,
            small_x: 1e-4,
            stable_from: 8,
        }
    }

    pub fn refined(&self) -> Self {
        Self {
            chebyshev: 2 * self.chebyshev,
            geometric: 2 * self.geometric,
            ..self.clone()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = chebyshev_points(self.chebyshev)
            .into_iter()
            .filter(|x| *x >= 0.0)
            .collect();
        xs.extend(geomspace(self.small_x, 1.0, self.geometric));
        xs.extend([0.0, 1.0]);
        sorted_unique(xs, 0.0, 1.0)
    }

    fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        if self.i_min == 0 || self.i_max < self.i_min {
            return Err(Error::Precondition(format!(
                "need 1 <= i_min <= i_max, got {}..={}",
                self.i_min, self.i_max
            )));
        }
        Ok(())
    }

    /// Rough count of profile evaluations.
    pub fn work_units(&self) -> u64 {
        let top = (self.i_max as u64 + 1).pow(2);
        self.points().len() as u64 * top * 4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlancherelRow {
    pub i: u32,
    pub sup: f64,
    pub argmax_x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlancherelBlock {
    pub i_lo: u32,
    pub i_hi: u32,
    pub sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlancherelReport {
    pub range: IndexRange,
    pub epsilon: f64,
    pub alpha: f64,
    pub rows: Vec<PlancherelRow>,
    pub blocks: Vec<PlancherelBlock>,
    /// Max over min of the block sups from `stable_from` on.
    pub variation: f64,
    pub stable: bool,
}

impl PlancherelReport {
    pub fn all_finite(&self) -> bool {
        self.rows.iter().all(|r| r.sup.is_finite())
    }
}

/// Sup over `x` of the normalized high-index sums, one report per `alpha`.
pub fn plancherel_scan_high(
    spec: &PlancherelScanSpec,
    alphas: &[f64],
) -> Result<Vec<PlancherelReport>> {
    spec.validate()?;
    for &a in alphas {
        check_alpha(a)?;
    }
    scan(IndexRange::High, spec, alphas)
}

/// Sup over `x` of the normalized low-index sums.
pub fn plancherel_scan_low(spec: &PlancherelScanSpec) -> Result<PlancherelReport> {
    spec.validate()?;
    Ok(scan(IndexRange::Low, spec, &[0.0])?.remove(0))
}

fn scan(
    range: IndexRange,
    spec: &PlancherelScanSpec,
    alphas: &[f64],
) -> Result<Vec<PlancherelReport>> {
    let xs = spec.points();
    let n = xs.len();
    let sums = block_sums(range, spec.epsilon, alphas, spec.i_min, spec.i_max, &xs);
    Ok(alphas
        .iter()
        .zip(&sums)
        .map(|(&alpha, raw)| {
            let rows: Vec<PlancherelRow> = (spec.i_min..=spec.i_max)
                .map(|i| {
                    let base = (i - spec.i_min) as usize * n;
                    let mut best = PlancherelRow {
                        i,
                        sup: 0.0,
                        argmax_x: xs[0],
                    };
                    for (k, &x) in xs.iter().enumerate() {
                        let v = normalize(range, alpha, i, x, raw[base + k]);
                        if v > best.sup || v.is_nan() {
                            best = PlancherelRow {
                                i,
                                sup: v,
                                argmax_x: x,
                            };
                        }
                    }
                    best
                })
                .collect();
            let blocks = dyadic_blocks(&rows);
            let tail: Vec<f64> = blocks
                .iter()
                .filter(|b| b.i_lo >= spec.stable_from)
                .map(|b| b.sup)
                .collect();
            let variation = if tail.is_empty() { 1.0 } else { spread(&tail) };
            let finite = rows.iter().all(|r| r.sup.is_finite());
            PlancherelReport {
                range,
                epsilon: spec.epsilon,
                alpha,
                rows,
                blocks,
                variation,
                stable: finite && variation < PLANCHEREL_BAND,
            }
        })
        .collect())
}

/// Sups over `[2^k, 2^{k+1})`; a final power of two joins the block below it.
fn dyadic_blocks(rows: &[PlancherelRow]) -> Vec<PlancherelBlock> {
    let mut blocks: Vec<PlancherelBlock> = Vec::new();
    let last = rows.last().map_or(0, |r| r.i);
    for r in rows {
        let lo = 1u32 << (31 - r.i.leading_zeros());
        let lone_top = r.i == last && r.i == lo && !blocks.is_empty();
        match blocks.last_mut() {
            Some(b) if b.i_lo == lo || lone_top => {
                b.sup = b.sup.max(r.sup);
                b.i_hi = b.i_hi.max(r.i);
            }
            _ => blocks.push(PlancherelBlock {
                i_lo: lo,
                i_hi: r.i,
                sup: r.sup,
            }),
        }
    }
    blocks
}
