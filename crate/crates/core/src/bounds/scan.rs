use std::cmp::Ordering;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{critical_points_raw, Envelope, RowContext};
use crate::harmonics::{profile_scaled, sweep_fixed_order_rows, SeedTable};
use crate::numeric::{chebyshev_points, geomspace, neighbour_spread, sorted_unique, spread};

const LN_2: f64 = std::f64::consts::LN_2;

/// Point grid used by [`sup_ratio_scan`]. Profiles have parity and every
/// envelope is even in `x`, so only `x in [0, 1]` is sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub l_max: u32,
    /// Chebyshev points on `[-1, 1]` (the non-negative half is used).
    pub chebyshev: usize,
    /// Points per side of each turning-point cluster.
    pub cluster_points: usize,
    /// Clusters span `a +- [cluster_min_offset, cluster_width]`.
    pub cluster_width: f64,
    pub cluster_min_offset: f64,
    /// Degrees per order whose turning points get a cluster.
    pub cluster_degrees: usize,
    /// Points `cos(t)` with `t` geometric in `[pole_min_angle, 0.2]`.
    pub pole_points: usize,
    pub pole_min_angle: f64,
}

impl ScanSpec {
    pub fn new(l_max: u32) -> Self {
        Self {
            l_max,
            chebyshev: 512,
            cluster_points: 16,
            cluster_width: 0.1,
            cluster_min_offset: 1e-7,
            cluster_degrees: 8,
            pole_points: 32,
            pole_min_angle: 1e-7,
        }
    }

    /// The same grid with every density doubled.
    pub fn refined(&self) -> Self {
        Self {
            chebyshev: 2 * self.chebyshev,
            cluster_points: 2 * self.cluster_points,
            cluster_degrees: 2 * self.cluster_degrees,
            pole_points: 2 * self.pole_points,
            ..self.clone()
        }
    }

    pub fn grid_for_order(&self, m: u32) -> Vec<f64> {
        let mut xs: Vec<f64> = chebyshev_points(self.chebyshev)
            .into_iter()
            .filter(|x| *x >= 0.0)
            .collect();
        xs.extend([0.0, 1.0]);
        xs.extend(
            geomspace(self.pole_min_angle, 0.2, self.pole_points)
                .into_iter()
                .map(f64::cos),
        );
        let lo = m.max(1) as f64;
        let offsets = geomspace(
            self.cluster_min_offset,
            self.cluster_width,
            self.cluster_points,
        );
        let mut degrees: Vec<u32> = geomspace(lo, self.l_max.max(1) as f64, self.cluster_degrees)
            .into_iter()
            .map(|l| l.round() as u32)
            .collect();
        degrees.dedup();
        for l in degrees {
            let a = critical_points_raw(l, m).a;
            xs.push(a);
            for d in &offsets {
                xs.push(a - d);
                xs.push(a + d);
            }
        }
        sorted_unique(xs, 0.0, 1.0)
    }

    /// Estimated profile evaluations, `sum_m (points(m) * (l_max - m + 1))`.
    pub fn work_units(&self) -> u64 {
        let per = (self.chebyshev / 2
            + self.pole_points
            + self.cluster_degrees * (2 * self.cluster_points + 1)) as u64;
        let l = self.l_max as u64 + 1;
        per * l * (l + 1) / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArgMax {
    pub l: u32,
    pub m: i32,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSup {
    pub l_lo: u32,
    pub l_hi: u32,
    pub sup_ratio: f64,
    pub argmax: Option<ArgMax>,
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub kind: String,
    #[serde(flatten)]
    pub spec: ScanSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub family: String,
    pub epsilon: f64,
    pub tail_k: f64,
    pub tail_c: f64,
    pub blocks: Vec<BlockSup>,
    pub grid: GridInfo,
}

impl EnvelopeReport {
    fn tail_blocks(&self, l_min: u32) -> Vec<f64> {
        self.blocks
            .iter()
            .filter(|b| !b.empty && b.l_lo >= l_min)
            .map(|b| b.sup_ratio)
            .collect()
    }

    /// Largest ratio between neighbouring non-empty blocks starting at `l_min`.
    pub fn neighbour_variation(&self, l_min: u32) -> f64 {
        neighbour_spread(&self.tail_blocks(l_min))
    }

    /// `max / min` over non-empty blocks starting at `l_min`.
    pub fn overall_variation(&self, l_min: u32) -> f64 {
        spread(&self.tail_blocks(l_min))
    }

    /// Largest factor by which a block sup exceeds its predecessor.
    pub fn growth(&self, l_min: u32) -> f64 {
        self.tail_blocks(l_min)
            .windows(2)
            .map(|w| w[1] / w[0])
            .fold(1.0, f64::max)
    }

    pub fn max_ratio(&self) -> f64 {
        self.blocks.iter().map(|b| b.sup_ratio).fold(0.0, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.blocks.iter().all(|b| b.sup_ratio.is_finite())
    }

    /// Finite everywhere, some admitted point, and no block more than doubles
    /// its predecessor from `l_min` on.
    pub fn holds(&self, l_min: u32) -> bool {
        self.all_finite() && self.blocks.iter().any(|b| !b.empty) && self.growth(l_min) < 2.0
    }
}

/// Dyadic block of a degree: `{0}`, `{1}`, `{2, 3}`, `{4..7}`, ...
fn block_of(l: u32) -> usize {
    if l == 0 {
        0
    } else {
        32 - l.leading_zeros() as usize
    }
}

fn block_bounds(k: usize, l_max: u32) -> (u32, u32) {
    if k == 0 {
        (0, 0)
    } else {
        let lo = 1u32 << (k - 1);
        (lo, ((lo << 1) - 1).min(l_max))
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    key: f64,
    l: u32,
    m: u32,
    x: f64,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    match a.key.total_cmp(&b.key) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => (a.l, a.m, a.x.to_bits()) < (b.l, b.m, b.x.to_bits()),
    }
}

/// `[family][block]` best candidate plus whether anything was admitted.
type Partial = Vec<Vec<(bool, Option<Candidate>)>>;

fn merge(mut a: Partial, b: Partial) -> Partial {
    for (fa, fb) in a.iter_mut().zip(b) {
        for (ca, cb) in fa.iter_mut().zip(fb) {
            ca.0 |= cb.0;
            ca.1 = match (ca.1, cb.1) {
                (Some(x), Some(y)) => Some(if better(&y, &x) { y } else { x }),
                (x, y) => x.or(y),
            };
        }
    }
    a
}

fn scan_order(
    m: u32,
    envelopes: &[Arc<dyn Envelope>],
    spec: &ScanSpec,
    seeds: &SeedTable,
) -> Partial {
    let n_blocks = block_of(spec.l_max) + 1;
    let mut best: Partial = vec![vec![(false, None); n_blocks]; envelopes.len()];
    let xs = spec.grid_for_order(m);
    let n = xs.len();
    let x2: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let quarter: Vec<f64> = xs
        .iter()
        .map(|x| ((1.0 - x) * (1.0 + x)).sqrt().sqrt())
        .collect();
    let sixth: Vec<f64> = xs
        .iter()
        .map(|x| (x * (1.0 - x) * (1.0 + x)).abs().powf(1.0 / 6.0))
        .collect();
    let mut inv = vec![0.0; n];
    sweep_fixed_order_rows(m, spec.l_max, &xs, seeds, |row| {
        let ctx = RowContext {
            l: row.l,
            m,
            crit: critical_points_raw(row.l, m),
            xs: &xs,
            x2: &x2,
            quarter: &quarter,
            sixth: &sixth,
        };
        let block = block_of(row.l);
        for (f, env) in envelopes.iter().enumerate() {
            if !env.fill_inverse(&ctx, &mut inv) {
                continue;
            }
            let mut top = f64::NEG_INFINITY;
            let mut arg = usize::MAX;
            if env.log_domain() {
                #[allow(clippy::needless_range_loop)]
                for i in 0..n {
                    if inv[i] > f64::NEG_INFINITY && row.mantissas[i] != 0.0 {
                        let k =
                            row.mantissas[i].abs().ln() + row.exponents[i] as f64 * LN_2 + inv[i];
                        if k > top {
                            top = k;
                            arg = i;
                        }
                    }
                }
                let admitted = inv.iter().any(|v| *v > f64::NEG_INFINITY);
                best[f][block].0 |= admitted;
            } else {
                #[allow(clippy::needless_range_loop)]
                for i in 0..n {
                    let k = row.values[i].abs() * inv[i];
                    if k > top {
                        top = k;
                        arg = i;
                    }
                }
                best[f][block].0 = true;
            }
            if arg != usize::MAX {
                let c = Candidate {
                    key: top,
                    l: row.l,
                    m,
                    x: xs[arg],
                };
                let slot = &mut best[f][block].1;
                if slot.map_or(true, |s| better(&c, &s)) {
                    *slot = Some(c);
                }
            }
        }
    });
    best
}

/// Per-block `sup |Y(l, m; x)| / envelope(l, m, x)` over `l <= l_max`, all
/// orders and the grid, for several envelopes in a single pass over the
/// profiles. Each reported sup is re-evaluated pointwise at its arg-max.
pub fn sup_ratio_scan(envelopes: &[Arc<dyn Envelope>], spec: &ScanSpec) -> Vec<EnvelopeReport> {
    let seeds = SeedTable::new(spec.l_max);
    let n_blocks = block_of(spec.l_max) + 1;
    let identity = || vec![vec![(false, None); n_blocks]; envelopes.len()];
    let merged = (0..=spec.l_max)
        .into_par_iter()
        .map(|m| scan_order(m, envelopes, spec, &seeds))
        .reduce(identity, merge);
    envelopes
        .iter()
        .zip(merged)
        .map(|(env, per_block)| {
            let blocks = per_block
                .into_iter()
                .enumerate()
                .map(|(k, (admitted, cand))| {
                    let (l_lo, l_hi) = block_bounds(k, spec.l_max);
                    let (sup_ratio, argmax) = match cand {
                        Some(c) => {
                            let y = profile_scaled(c.l, c.m as i32, c.x)
                                .map(|v| v.ln_abs())
                                .unwrap_or(f64::NEG_INFINITY);
                            let r = (y - env.ln_value(c.l, c.m, c.x)).exp();
                            (
                                r,
                                Some(ArgMax {
                                    l: c.l,
                                    m: c.m as i32,
                                    x: c.x,
                                }),
                            )
                        }
                        None => (0.0, None),
                    };
                    BlockSup {
                        l_lo,
                        l_hi,
                        sup_ratio,
                        argmax,
                        empty: !admitted,
                    }
                })
                .collect();
            let p = env.params();
            EnvelopeReport {
                family: env.family().to_owned(),
                epsilon: p.epsilon,
                tail_k: p.tail_k,
                tail_c: p.tail_c,
                blocks,
                grid: GridInfo {
                    kind: "chebyshev+turning-point clusters+pole cluster, x >= 0".to_owned(),
                    spec: spec.clone(),
                },
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct TailCandidate {
    pub k: f64,
    pub c: f64,
    pub holds: bool,
    /// Largest block sup, the measured constant.
    pub constant: f64,
    pub growth: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailSearch {
    pub epsilon: f64,
    pub l_min_for_growth: u32,
    pub candidates: Vec<TailCandidate>,
    /// Holding pairs not dominated by another holding pair with smaller or
    /// equal `K` and larger or equal `c`.
    pub pareto: Vec<(f64, f64)>,
}

/// Scans the Gaussian tail envelope for every `(K, c)` in the grid at once.
pub fn tail_constant_search(eps: f64, ks: &[f64], cs: &[f64], spec: &ScanSpec) -> TailSearch {
    let l_min = 64;
    let envs: Vec<Arc<dyn Envelope>> = ks
        .iter()
        .flat_map(|k| cs.iter().map(move |c| (*k, *c)))
        .map(|(k, c)| Arc::new(super::HermiteTail::new(eps, k, c)) as Arc<dyn Envelope>)
        .collect();
    let reports = sup_ratio_scan(&envs, spec);
    let candidates: Vec<TailCandidate> = reports
        .iter()
        .map(|r| TailCandidate {
            k: r.tail_k,
            c: r.tail_c,
            holds: r.holds(l_min),
            constant: r.max_ratio(),
            growth: r.growth(l_min),
        })
        .collect();
    let holding: Vec<&TailCandidate> = candidates.iter().filter(|c| c.holds).collect();
    let pareto = holding
        .iter()
        .filter(|a| {
            !holding
                .iter()
                .any(|b| b.k <= a.k && b.c >= a.c && (b.k < a.k || b.c > a.c))
        })
        .map(|a| (a.k, a.c))
        .collect();
    TailSearch {
        epsilon: eps,
        l_min_for_growth: l_min,
        candidates,
        pareto,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{EnvelopeParams, EnvelopeRegistry};

    fn build(names: &[&str]) -> Vec<Arc<dyn Envelope>> {
        let reg = EnvelopeRegistry::default();
        names
            .iter()
            .map(|n| reg.build(n, &EnvelopeParams::default()).unwrap())
            .collect()
    }

    #[test]
    fn blocks_are_dyadic() {
        assert_eq!(block_of(0), 0);
        assert_eq!(block_of(1), 1);
        assert_eq!(block_of(3), 2);
        assert_eq!(block_of(4), 3);
        assert_eq!(block_bounds(3, 100), (4, 7));
        assert_eq!(block_bounds(7, 100), (64, 100));
    }

    #[test]
    fn classical_i_ratios_at_most_one() {
        let r = &sup_ratio_scan(&build(&["classical_i"]), &ScanSpec::new(64))[0];
        assert_eq!(r.blocks.len(), 8);
        for b in &r.blocks {
            assert!(b.sup_ratio > 0.0 && b.sup_ratio <= 1.0, "{b:?}");
        }
    }

    #[test]
    fn argmax_reproduces_ratio() {
        let envs = build(&["combined", "classical_ii", "bessel_regime_tail"]);
        for (r, env) in sup_ratio_scan(&envs, &ScanSpec::new(128)).iter().zip(&envs) {
            for b in r.blocks.iter().filter(|b| !b.empty) {
                let a = b.argmax.unwrap();
                let y = crate::harmonics::profile(a.l, a.m, a.x).unwrap().abs();
                let e = crate::bounds::envelope_value(
                    &**env,
                    crate::harmonics::HarmonicIndex::new(a.l, a.m).unwrap(),
                    a.x,
                )
                .unwrap();
                assert!((y / e - b.sup_ratio).abs() <= 1e-12 * b.sup_ratio, "{b:?}");
            }
        }
    }

    #[test]
    fn grid_doubling_changes_little() {
        let envs = build(&["combined", "classical_iii"]);
        let spec = ScanSpec::new(256);
        let coarse = sup_ratio_scan(&envs, &spec);
        let fine = sup_ratio_scan(&envs, &spec.refined());
        for (c, f) in coarse.iter().zip(&fine) {
            for (a, b) in c.blocks.iter().zip(&f.blocks) {
                let change = (b.sup_ratio / a.sup_ratio - 1.0).abs();
                assert!(change < 0.05, "{}: {a:?} vs {b:?}", c.family);
            }
        }
    }

    #[test]
    fn empty_blocks_are_flagged() {
        let r = &sup_ratio_scan(&build(&["bessel_regime_tail"]), &ScanSpec::new(16))[0];
        assert!(r.blocks[0].empty && r.blocks[0].sup_ratio == 0.0);
        assert!(r.blocks.iter().any(|b| !b.empty));
    }
}
