use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::numeric::CompensatedSum;

/// Nodes and weights of a quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let mut acc = CompensatedSum::new();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(*x));
        }
        acc.value()
    }

    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        let mut acc = CompensatedSum::new();
        for (v, w) in values.iter().zip(&self.weights) {
            acc.add(w * v);
        }
        acc.value()
    }

    pub fn integrate_product(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = CompensatedSum::new();
        for ((u, v), w) in a.iter().zip(b).zip(&self.weights) {
            acc.add(w * u * v);
        }
        acc.value()
    }

    /// Affine image of a rule on `[-1, 1]` onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> Self {
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        Self {
            nodes: self.nodes.iter().map(|x| mid + half * x).collect(),
            weights: self.weights.iter().map(|w| w * half).collect(),
        }
    }

    /// Composite rule: `n`-point Gauss on each panel between consecutive breaks.
    pub fn composite(breaks: &[f64], n: usize) -> Self {
        let base = gauss_legendre(n);
        let mut out = Self {
            nodes: Vec::new(),
            weights: Vec::new(),
        };
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                let panel = base.mapped(w[0], w[1]);
                out.nodes.extend(panel.nodes);
                out.weights.extend(panel.weights);
            }
        }
        out
    }
}

fn compute_gauss_legendre(n: usize) -> QuadratureGrid {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    QuadratureGrid { nodes, weights }
}

/// `n`-point Gauss-Legendre rule on `[-1, 1]` with ascending nodes, cached.
pub fn gauss_legendre(n: usize) -> Arc<QuadratureGrid> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureGrid>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(g) = cache.lock().unwrap().get(&n) {
        return g.clone();
    }
    let g = Arc::new(compute_gauss_legendre(n));
    cache.lock().unwrap().insert(n, g.clone());
    g
}

/// Composite Gauss rule on `[a, b]` whose panels shrink geometrically (by
/// `ratio`) towards `center`, resolving an integrable singularity there.
pub fn graded_panels(
    a: f64,
    b: f64,
    center: f64,
    ratio: f64,
    levels: usize,
    n: usize,
) -> QuadratureGrid {
    let mut breaks = vec![a, b, center.clamp(a, b)];
    for (len, sign) in [(center - a, -1.0), (b - center, 1.0)] {
        let mut d = len;
        for _ in 0..levels {
            d *= ratio;
            if d > 0.0 {
                breaks.push(center + sign * d);
            }
        }
    }
    breaks.retain(|x| *x >= a && *x <= b);
    breaks.sort_by(|x, y| x.total_cmp(y));
    breaks.dedup();
    QuadratureGrid::composite(&breaks, n)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let s = f(c - h * XGK[j]) + f(c + h * XGK[j]);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) integration to absolute tolerance `tol`.
pub fn adaptive_integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    let mut stack = vec![(a, b, tol, 0u32)];
    let mut acc = CompensatedSum::new();
    while let Some((lo, hi, t, depth)) = stack.pop() {
        let (v, err) = gauss_kronrod(&mut f, lo, hi);
        if err <= t || depth >= 40 {
            acc.add(v);
        } else {
            let mid = (lo + hi) / 2.0;
            stack.push((mid, hi, t / 2.0, depth + 1));
            stack.push((lo, mid, t / 2.0, depth + 1));
        }
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_is_exact_for_polynomials() {
        for n in [1usize, 2, 5, 16, 65] {
            let g = gauss_legendre(n);
            for d in 0..2 * n {
                let exact = if d % 2 == 1 {
                    0.0
                } else {
                    2.0 / (d as f64 + 1.0)
                };
                let v = g.integrate(|x| x.powi(d as i32));
                assert!((v - exact).abs() < 1e-14, "n={n} d={d}");
            }
            assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn large_rule_weights_sum() {
        let g = gauss_legendre(3000);
        assert!((g.weights.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn graded_handles_singularity() {
        let q = graded_panels(0.0, 1.0, 0.0, 0.25, 30, 12);
        let v = q.integrate(|x| x.powf(-0.5));
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn adaptive_oscillatory() {
        let v = adaptive_integrate(|x| (30.0 * x).sin().powi(2), 0.0, PI, 1e-12);
        assert!((v - PI / 2.0).abs() < 1e-10);
    }
}
