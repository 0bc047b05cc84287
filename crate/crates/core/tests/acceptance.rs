//! Acceptance harness: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::f64::consts::FRAC_PI_2;
use std::time::{Duration, Instant};

use grushin::bounds::{
    sup_ratio_scan, tail_constant_search, EnvelopeParams, EnvelopeRegistry, ScanSpec,
};
use grushin::geometry::{distance_pairs, random_pairs, volume_slope, weight_stability};
use grushin::harmonics::{addition_theorem_residual, orthonormality_residual, profile};
use grushin::numeric::linspace;
use grushin::spectral::{
    bochner_riesz_sweep, commutation_suite, heat_sweep, mihlin_statistic, plancherel_scan_high,
    plancherel_scan_low, sum_integral_suite, weighted_plancherel_sweep, KernelOptions,
    MihlinConfig, MultiplierRegistry, MultiplierSpec, COMMUTATION_SLACK,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn dyadic(lo: u32, hi: u32) -> Vec<f64> {
    std::iter::successors(Some(lo), |v| Some(v * 2))
        .take_while(|v| *v <= hi)
        .map(f64::from)
        .collect()
}

fn addition() -> Outcome {
    let err = addition_theorem_residual(256, &linspace(-1.0, 1.0, 513));
    outcome(
        err < 1e-10,
        format!("max rel err {err:.2e} (l <= 256, 513 points)"),
    )
}

fn orthonormality() -> Outcome {
    let err = orthonormality_residual(64);
    outcome(
        err < 1e-10,
        format!("max Gram residual {err:.2e} (l <= 64)"),
    )
}

fn oracle() -> Outcome {
    let path = format!(
        "{}/tests/fixtures/rodrigues_l30.csv",
        env!("CARGO_MANIFEST_DIR")
    );
    let text = std::fs::read_to_string(&path).expect("oracle table");
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (l, m, x, want): (u32, i32, f64, f64) = (
            f[0].parse().unwrap(),
            f[1].parse().unwrap(),
            f[2].parse().unwrap(),
            f[3].parse().unwrap(),
        );
        let got = profile(l, m, x).unwrap();
        worst = worst.max((got - want).abs() / want.abs().max(1e-300));
        count += 1;
    }
    outcome(
        worst < 1e-9 && count == 961 * 21,
        format!("max rel err {worst:.2e} over {count} values (l <= 30)"),
    )
}

fn envelopes() -> Outcome {
    let reg = EnvelopeRegistry::default();
    let params = EnvelopeParams::default();
    let names = ["classical_i", "classical_ii", "classical_iii", "combined"];
    let envs: Vec<_> = names
        .iter()
        .map(|n| reg.build(n, &params).unwrap())
        .collect();
    let reports = sup_ratio_scan(&envs, &ScanSpec::new(4096));
    let mut pass = true;
    let mut parts = Vec::new();
    for r in &reports {
        let v = r.neighbour_variation(64);
        pass &= r.all_finite() && v < 2.0;
        parts.push(format!(
            "{} sup {:.3} var {:.3}",
            r.family,
            r.max_ratio(),
            v
        ));
    }
    outcome(pass, parts.join("; "))
}

fn regimes() -> Outcome {
    let reg = EnvelopeRegistry::default();
    let params = EnvelopeParams {
        epsilon: 0.5,
        ..EnvelopeParams::default()
    };
    let spec = ScanSpec::new(4096);
    let names = [
        "hermite_regime_main",
        "bessel_regime_main",
        "bessel_regime_tail",
    ];
    let envs: Vec<_> = names
        .iter()
        .map(|n| reg.build(n, &params).unwrap())
        .collect();
    let reports = sup_ratio_scan(&envs, &spec);
    let mut pass = true;
    let mut parts = Vec::new();
    for r in &reports[..2] {
        let v = r.neighbour_variation(64);
        pass &= r.all_finite() && v < 2.0;
        parts.push(format!("{} var {:.3}", r.family, v));
    }
    let bessel_tail = &reports[2];
    pass &= bessel_tail.holds(64);
    parts.push(format!(
        "{} sup {:.3}",
        bessel_tail.family,
        bessel_tail.max_ratio()
    ));
    let search = tail_constant_search(0.5, &[2.0, 3.0, 4.0], &[0.05, 0.1, 0.2, 0.5], &spec);
    pass &= !search.pareto.is_empty();
    parts.push(format!(
        "hermite tail holds for (K, c) in {:?}",
        search.pareto
    ));
    outcome(pass, parts.join("; "))
}

fn plancherel() -> Outcome {
    let spec = grushin::spectral::PlancherelScanSpec::new(128, 0.5);
    let mut reports = plancherel_scan_high(&spec, &[0.0, 0.25, 0.45]).unwrap();
    reports.push(plancherel_scan_low(&spec).unwrap());
    let pass = reports.iter().all(|r| r.all_finite() && r.variation < 4.0);
    let vars: Vec<String> = reports
        .iter()
        .map(|r| format!("{:?}/{}: {:.3}", r.range, r.alpha, r.variation))
        .collect();
    outcome(
        pass,
        format!("block variation (i >= 8) {}", vars.join(", ")),
    )
}

fn weighted_plancherel() -> Outcome {
    let bumps = [(0.25, 1.0), (0.5, 1.0), (0.1, 0.6)];
    let ns: Vec<usize> = dyadic(8, 256).into_iter().map(|n| n as usize).collect();
    let sweep =
        weighted_plancherel_sweep(&bumps, &ns, &[0.0, 0.25, 0.45], &KernelOptions::default())
            .unwrap();
    let worst = sweep
        .groups
        .iter()
        .map(|g| g.max_over_min)
        .fold(0.0, f64::max);
    let finite = sweep
        .rows
        .iter()
        .all(|r| r.ratio.is_finite() && r.ratio > 0.0);
    outcome(
        finite && worst <= 4.0,
        format!("worst max/min over N {worst:.3}"),
    )
}

fn heat() -> Outcome {
    let r2: Vec<f64> = (0..=6).map(|k| 4f64.powi(-k)).collect();
    let sweep = heat_sweep(&r2, &[0.0, 0.5], &KernelOptions::default()).unwrap();
    let b_min = sweep
        .rows
        .iter()
        .filter_map(|r| r.fit.as_ref().map(|f| f.b_fit))
        .fold(f64::INFINITY, f64::min);
    outcome(
        sweep.max_over_min <= 3.0 && sweep.gaussian_holds && b_min > 0.0,
        format!(
            "max/min {:.3}, Gaussian envelope holds {}, min fitted b {b_min:.3}",
            sweep.max_over_min, sweep.gaussian_holds
        ),
    )
}

fn mihlin() -> Outcome {
    let f = MultiplierRegistry::default()
        .build(&MultiplierSpec::bump(0.25, 1.0))
        .unwrap();
    let report =
        mihlin_statistic(f, &MihlinConfig::new(256, 1.1), &KernelOptions::default()).unwrap();
    let (half, full) = (report.sup_ratio_up_to(128), report.sup_ratio);
    let factor = (full / half).max(half / full);
    outcome(
        factor.is_finite() && factor < 2.0,
        format!("sup ratio l <= 128 {half:.4}, l <= 256 {full:.4}, factor {factor:.4}"),
    )
}

fn bochner_riesz() -> Outcome {
    let radii = dyadic(8, 256);
    let opts = KernelOptions::default();
    let smooth = bochner_riesz_sweep(0.75, &radii, &opts).unwrap();
    let rough = bochner_riesz_sweep(0.1, &radii, &opts).unwrap();
    let (first, last) = (rough.rows[0].l1_norm, rough.rows.last().unwrap().l1_norm);
    outcome(
        smooth.max_over_min <= 3.0 && last > first,
        format!(
            "delta 0.75 max/min {:.3}; delta 0.1 norm {first:.3} -> {last:.3}",
            smooth.max_over_min
        ),
    )
}

fn geometry() -> Outcome {
    let pairs = distance_pairs(&random_pairs(0, 1000), 512).unwrap();
    let eq = volume_slope(0.0, &[0.05, 0.1, 0.2], 512).unwrap();
    let off = volume_slope(0.8, &[0.05, 0.1], 512).unwrap();
    let mut change: f64 = 0.0;
    let mut finite = true;
    for r in [0.05, 0.2, 1.0] {
        for tp in [0.0, 0.3, 1.2, FRAC_PI_2] {
            let w = weight_stability(0.4, 2.8, r, tp).unwrap();
            finite &= w.ratio.is_finite();
            change = change.max(w.change);
        }
    }
    let pass = pairs.min_ratio >= 0.125
        && pairs.max_ratio <= 8.0
        && (eq.slope - 3.0).abs() <= 0.3
        && (off.slope - 2.0).abs() <= 0.3
        && finite
        && change < 0.1;
    outcome(
        pass,
        format!(
            "ratio in [{:.3}, {:.3}], slopes {:.3} and {:.3}, weight refinement change {change:.1e}",
            pairs.min_ratio, pairs.max_ratio, eq.slope, off.slope
        ),
    )
}

fn lemmas() -> Outcome {
    let comm = commutation_suite(0, 100).unwrap();
    let sums = sum_integral_suite(0, 100).unwrap();
    let comm_ok = comm
        .iter()
        .all(|c| c.lhs <= c.rhs * (1.0 + COMMUTATION_SLACK));
    let sums_ok = sums.iter().all(|c| c.sum <= c.bound * c.integral);
    let worst_comm = comm
        .iter()
        .filter(|c| c.rhs > 0.0)
        .map(|c| c.lhs / c.rhs)
        .fold(0.0, f64::max);
    let worst_sum = sums.iter().map(|c| c.ratio / c.bound).fold(0.0, f64::max);
    outcome(
        comm_ok && sums_ok,
        format!(
            "{} commutation cases, worst lhs/rhs {worst_comm:.6}; {} sum cases, worst ratio/bound {worst_sum:.3}",
            comm.len(),
            sums.len()
        ),
    )
}

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn main() {
    let minutes = |m: u64| Some(Duration::from_secs(60 * m));
    let criteria: [Criterion; 12] = [
        ("addition theorem", minutes(1), addition),
        ("orthonormality", minutes(1), orthonormality),
        ("oracle equivalence", None, oracle),
        ("envelope suite", minutes(15), envelopes),
        ("regime envelopes", None, regimes),
        ("plancherel sums", minutes(20), plancherel),
        ("weighted plancherel", None, weighted_plancherel),
        ("heat kernel", None, heat),
        ("mihlin statistic", minutes(30), mihlin),
        ("bochner-riesz", None, bochner_riesz),
        ("geometry", None, geometry),
        ("lemma checks", None, lemmas),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let in_time = limit.map_or(true, |l| elapsed < l);
        let pass = o.pass && in_time;
        failed += usize::from(!pass);
        println!(
            "{} {:>2} {name}: {} [{:.1}s{}]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", over time limit" }
        );
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
