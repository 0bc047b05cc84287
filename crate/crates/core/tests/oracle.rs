//! Comparison against frozen extended-precision tables (see fixtures/generate.py).

use grushin::harmonics::{
    bessel_j, hermite_function, jacobi_form, jacobi_poly, profile, profile_scaled,
};

fn rows(name: &str) -> Vec<Vec<String>> {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn profiles_match_rodrigues_table() {
    let table = rows("rodrigues_l30.csv");
    assert_eq!(table.len(), 31 * 31 * 21);
    let mut worst: f64 = 0.0;
    for r in &table {
        let l: u32 = r[0].parse().unwrap();
        let m: i32 = r[1].parse().unwrap();
        let x: f64 = r[2].parse().unwrap();
        let expected: f64 = r[3].parse().unwrap();
        let got = profile(l, m, x).unwrap();
        let err = rel_err(got, expected);
        assert!(err < 1e-9, "l={l} m={m} x={x}: {got} vs {expected}");
        worst = worst.max(err);
        let scaled = profile_scaled(l, m, x).unwrap().to_f64();
        assert!(rel_err(scaled, expected) < 1e-9);
    }
    println!("worst relative error {worst:e}");
}

#[test]
fn jacobi_form_matches_rodrigues_table() {
    for r in rows("rodrigues_l30.csv").iter().step_by(7) {
        let l: u32 = r[0].parse().unwrap();
        let m: i32 = r[1].parse().unwrap();
        let x: f64 = r[2].parse().unwrap();
        let expected: f64 = r[3].parse().unwrap();
        let got = jacobi_form(l, m, x).unwrap();
        assert!(rel_err(got, expected) < 1e-9, "l={l} m={m} x={x}");
    }
}

#[test]
fn special_functions_match_table() {
    for r in rows("special_values.csv") {
        let kind = r[0].as_str();
        let order: f64 = r[1].parse().unwrap();
        let arg: f64 = r[3].parse().unwrap();
        let expected: f64 = r[4].parse().unwrap();
        let (got, tol) = if kind == "bessel_j" {
            (bessel_j(order, arg).unwrap(), 1e-11)
        } else if kind == "hermite_fn" {
            (hermite_function(order as u32, arg), 1e-12)
        } else if let Some(ab) = kind.strip_prefix("jacobi_") {
            let (a, b) = ab.split_once('_').unwrap();
            let got = jacobi_poly(order as u32, a.parse().unwrap(), b.parse().unwrap(), arg);
            (got, 1e-12)
        } else {
            panic!("unknown kind {kind}");
        };
        let err = (got - expected).abs() / expected.abs().max(1.0);
        assert!(
            err < tol,
            "{kind} order={order} arg={arg}: {got} vs {expected}"
        );
    }
}
