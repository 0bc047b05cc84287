//! Small numerical utilities shared across modules.

use std::f64::consts::PI;

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

/// Sums in iteration order with compensation, so the result depends only on
/// the sequence of terms.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.extend(iter);
    acc.value()
}

/// Chebyshev points of the first kind, `cos((2k+1)pi/(2n))`, descending.
pub fn chebyshev_points(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| ((2 * k + 1) as f64 * PI / (2 * n) as f64).cos())
        .collect()
}

/// Chebyshev extrema `cos(k pi/(n-1))` including both endpoints, descending.
pub fn chebyshev_lobatto(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n)
            .map(|k| match k {
                0 => 1.0,
                k if k == n - 1 => -1.0,
                k => (k as f64 * PI / (n - 1) as f64).cos(),
            })
            .collect(),
    }
}

/// `n` points geometrically spaced from `lo` to `hi` inclusive (both > 0).
pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `n` points uniformly spaced from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Sorts, removes exact duplicates and values outside `[lo, hi]`.
pub fn sorted_unique(mut v: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    v.retain(|x| x.is_finite() && *x >= lo && *x <= hi);
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
    v
}

/// Largest ratio between any two entries of a positive sequence.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if values.is_empty() {
        1.0
    } else {
        max / min
    }
}

/// Largest ratio between neighbouring entries, taken in either direction.
pub fn neighbour_spread(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| (w[1] / w[0]).max(w[0] / w[1]))
        .fold(1.0, f64::max)
}

/// `ln(1 - x^2)` without cancellation near `|x| = 1`.
#[inline]
pub fn ln_one_minus_sq(x: f64) -> f64 {
    (-x).ln_1p() + x.ln_1p()
}
