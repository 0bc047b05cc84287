use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::Arc;

use approx::assert_relative_eq;
use grushin::geometry::{phi_distance, riemannian_distance, SpherePoint};
use grushin::harmonics::{gauss_legendre, profile, profile_scaled};
use grushin::spectral::{
    default_columns, kernel_column, kernel_value_direct, l1_operator_norm, mihlin_statistic,
    BochnerRiesz, Bump, Heat, KernelEngine, KernelOptions, MihlinConfig, Multiplier, Truncation,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parity_in_order(l in 0u32..3000, frac in 0.0f64..=1.0, x in -1.0f64..=1.0) {
        let m = (frac * l as f64).round() as i32;
        let a = profile_scaled(l, m, x).unwrap();
        let b = profile_scaled(l, -m, x).unwrap();
        prop_assert_eq!(a.ln_abs(), b.ln_abs());
    }

    #[test]
    fn reflection_in_x(l in 0u32..500, frac in 0.0f64..=1.0, x in 0.0f64..=1.0) {
        let m = (frac * l as f64).round() as i32;
        let sign = if (l as i32 - m) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert_eq!(profile(l, m, -x).unwrap(), sign * profile(l, m, x).unwrap());
    }

    #[test]
    fn phi_distance_is_a_premetric(
        t1 in -FRAC_PI_2..FRAC_PI_2, p1 in 0.0..TAU,
        t2 in -FRAC_PI_2..FRAC_PI_2, p2 in 0.0..TAU,
    ) {
        let (a, b) = (SpherePoint::new(t1, p1).unwrap(), SpherePoint::new(t2, p2).unwrap());
        prop_assert_eq!(phi_distance(&a, &b), phi_distance(&b, &a));
        prop_assert_eq!(phi_distance(&a, &a), 0.0);
        prop_assert!(riemannian_distance(&a, &b) <= PI + 1e-12);
    }
}

#[test]
fn endpoint_values() {
    for l in [0u32, 1, 7, 100, 2500] {
        let zonal = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt();
        for x in [-1.0, 1.0] {
            assert_relative_eq!(profile(l, 0, x).unwrap().abs(), zonal, max_relative = 1e-12);
            for m in [1, -1, l as i32]
                .into_iter()
                .filter(|m| *m != 0 && m.unsigned_abs() <= l)
            {
                assert_eq!(profile(l, m, x).unwrap(), 0.0);
            }
        }
    }
}

/// `K_{a+b}(z, z') = int K_a(z, w) K_b(w, z') dw`, with the integral over `w`
/// done exactly on a Gauss grid in `sin theta` and a uniform grid in `phi`.
#[test]
fn heat_semigroup() {
    let (a, b) = (0.2, 0.3);
    let opts = KernelOptions::default();
    let top = Truncation::for_multiplier(&Heat::new(a).unwrap(), opts.tail_tolerance)
        .unwrap()
        .l_max as usize;
    let grid = gauss_legendre(top + 2);
    let thetas: Vec<f64> = grid.nodes.iter().map(|x| x.asin()).collect();
    let n_phi = 4 * top + 8;
    for (t1, t2) in [(0.0, 0.0), (0.3, -0.7), (1.2, 0.4)] {
        let left =
            kernel_column(Arc::new(Heat::new(a).unwrap()), t1, &thetas, n_phi, &opts).unwrap();
        let right =
            kernel_column(Arc::new(Heat::new(b).unwrap()), t2, &thetas, n_phi, &opts).unwrap();
        let mut sum = 0.0;
        for (i, w) in grid.weights.iter().enumerate() {
            let mut ring = 0.0;
            for k in 0..left.dphi.len() {
                let mult = if k == 0 || 2 * k == n_phi { 1.0 } else { 2.0 };
                ring += mult * left.values[i][k] * right.values[i][k];
            }
            sum += w * ring * TAU / n_phi as f64;
        }
        let whole = Heat::new(a + b).unwrap();
        let trunc = Truncation::for_multiplier(&whole, 1e-14).unwrap();
        let direct = kernel_value_direct(&whole, trunc.lambda_max, t1, t2, 0.0).re;
        assert_relative_eq!(sum, direct, max_relative = 1e-6);
    }
}

/// Doubling the row density moves the L1 norm by less than half a percent.
#[test]
fn l1_norm_is_grid_converged() {
    let cases: Vec<(Arc<dyn Multiplier>, f64)> = vec![
        (
            Arc::new(BochnerRiesz::new(0.75, 1.0 / 256.0).unwrap()),
            16.0,
        ),
        (Arc::new(Bump::new(25.0, 100.0).unwrap()), 10.0),
    ];
    for (f, scale) in cases {
        let cols = default_columns(scale);
        let coarse = KernelOptions::default();
        let fine = KernelOptions {
            quality: 2.0 * coarse.quality,
            ..KernelOptions::default()
        };
        let a = l1_operator_norm(&KernelEngine::new(f.clone(), &cols, &coarse).unwrap()).value;
        let b = l1_operator_norm(&KernelEngine::new(f.clone(), &cols, &fine).unwrap()).value;
        assert!((a - b).abs() < 5e-3 * b, "{}: {a} vs {b}", f.kind());
    }
}

#[test]
fn mihlin_ratio_decreases_with_s() {
    let f: Arc<dyn Multiplier> = Arc::new(Bump::new(0.25, 1.0).unwrap());
    let opts = KernelOptions::default();
    let mut last = f64::INFINITY;
    for s in [0.6, 1.1, 1.5, 2.0] {
        let r = mihlin_statistic(f.clone(), &MihlinConfig::new(12, s), &opts).unwrap();
        assert!(r.sup_ratio <= last, "s = {s}: {} > {last}", r.sup_ratio);
        last = r.sup_ratio;
    }
}
