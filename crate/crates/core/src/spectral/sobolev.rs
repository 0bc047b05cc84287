use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::multiplier::Multiplier;
use crate::error::{domain, Error, Result};
use crate::numeric::CompensatedSum;

/// Uniform sampling used for the Fourier-side Sobolev norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevGrid {
    /// Length of the sampled interval in units of the support width.
    pub pad: f64,
    pub min_samples: usize,
}

impl Default for SobolevGrid {
    fn default() -> Self {
        Self {
            pad: 8.0,
            min_samples: 1 << 14,
        }
    }
}

impl SobolevGrid {
    pub fn refined(&self) -> Self {
        Self {
            pad: 2.0 * self.pad,
            min_samples: 4 * self.min_samples,
        }
    }
}

/// `||(1 + xi^2)^{s/2} F^||_{L^2(R)}` with the unitary Fourier transform, for
/// `F` extended by zero to negative arguments.
pub fn sobolev_norm(f: &dyn Multiplier, s: f64, grid: &SobolevGrid) -> Result<f64> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(domain("s", s, "[0, inf)"));
    }
    if !(grid.pad >= 1.0) {
        return Err(domain("pad", grid.pad, "[1, inf)"));
    }
    let width = f.support_max().filter(|w| *w > 0.0).ok_or_else(|| {
        Error::Precondition(format!(
            "Sobolev norm needs compact support; `{}` has none",
            f.kind()
        ))
    })?;
    let length = grid.pad * width;
    let n = grid.min_samples.max(16).next_power_of_two();
    let h = length / n as f64;
    let start = 0.5 * width - 0.5 * length;
    let mut buf: Vec<Complex64> = (0..n)
        .map(|j| {
            let x = start + h * j as f64;
            Complex64::new(if x > 0.0 { f.eval(x) } else { 0.0 }, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut acc = CompensatedSum::new();
    for (k, c) in buf.iter().enumerate() {
        let kk = if k < n / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        };
        let xi = 2.0 * std::f64::consts::PI * kk / length;
        acc.add((1.0 + xi * xi).powf(s) * c.norm_sqr());
    }
    Ok((h / n as f64 * acc.value()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::adaptive_integrate;
    use crate::spectral::multiplier::{Bump, Heat, Rescaled};
    use std::sync::Arc;

    #[test]
    fn s_zero_is_the_l2_norm() {
        let b = Bump::standard();
        let direct = adaptive_integrate(|x| b.eval(x).powi(2), 0.25, 1.0, 1e-14).sqrt();
        let v = sobolev_norm(&b, 0.0, &SobolevGrid::default()).unwrap();
        assert!((v - direct).abs() < 1e-6 * direct, "{v} vs {direct}");
    }

    #[test]
    fn converges_under_refinement() {
        let b = Bump::standard();
        for s in [1.1, 3.0] {
            let g = SobolevGrid::default();
            let a = sobolev_norm(&b, s, &g).unwrap();
            let c = sobolev_norm(&b, s, &g.refined()).unwrap();
            assert!((a - c).abs() < 0.01 * c, "s = {s}: {a} vs {c}");
        }
    }

    #[test]
    fn scaling_law_at_s_zero() {
        let b: Arc<dyn Multiplier> = Arc::new(Bump::standard());
        let base = sobolev_norm(&*b, 0.0, &SobolevGrid::default()).unwrap();
        for t in [0.5, 2.0] {
            let r = Rescaled::new(b.clone(), t).unwrap();
            let v = sobolev_norm(&r, 0.0, &SobolevGrid::default()).unwrap();
            assert!((v - base / t.sqrt()).abs() < 1e-6 * base);
        }
    }

    #[test]
    fn increases_with_s_and_needs_support() {
        let b = Bump::standard();
        let g = SobolevGrid::default();
        let v: Vec<f64> = [0.0, 1.1, 2.0, 3.0]
            .iter()
            .map(|s| sobolev_norm(&b, *s, &g).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        assert!(sobolev_norm(&Heat::new(1.0).unwrap(), 1.0, &g).is_err());
        assert!(sobolev_norm(&b, -1.0, &g).is_err());
    }
}
