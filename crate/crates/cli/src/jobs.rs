use std::f64::consts::FRAC_PI_2;

use anyhow::{bail, ensure, Result};
use grushin::bounds::{sup_ratio_scan, EnvelopeParams, EnvelopeRegistry, ScanSpec};
use grushin::geometry::{distance_pairs, random_pairs, volume_slope, weight_stability};
use grushin::harmonics::{
    addition_theorem_residual, orthonormality_residual, parity_residual, profile_scaled,
    HarmonicIndex,
};
use grushin::numeric::linspace;
use grushin::spectral::{
    bochner_riesz_sweep, commutation_suite, default_columns, heat_column_and_fit, heat_sweep,
    mihlin_statistic, plancherel_scan_high, plancherel_scan_low, sum_integral_suite, triple_norm,
    weighted_plancherel_sweep, KernelEngine, KernelOptions, MihlinConfig, MultiplierRegistry,
    MultiplierSpec, PlancherelReport, PlancherelScanSpec, TripleNormSpec, Truncation,
};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::report::{num, Output, Summary, Table};

/// Residual thresholds of the harmonic identities.
const ADDITION_TOL: f64 = 1e-10;
const ORTHONORMALITY_TOL: f64 = 1e-10;
const PARITY_TOL: f64 = 1e-12;
/// Allowed relative change of the weighted-volume ratio under refinement.
const WEIGHT_STABILITY_TOL: f64 = 0.1;
/// Allowed ratio between the Mihlin statistic of a sweep and its half-range restriction.
const MIHLIN_BAND: f64 = 2.0;
/// Allowed distance from the expected volume slope.
const SLOPE_TOL: f64 = 0.3;

/// A validated command with every parameter resolved.
#[derive(Debug, Clone)]
pub enum Job {
    Eval {
        l: u32,
        m: i32,
        x: f64,
    },
    Addition {
        l_max: u32,
        points: usize,
    },
    Orthonormality {
        l_max: u32,
    },
    Parity {
        l_max: u32,
        points: usize,
    },
    Lemma25 {
        seed: u64,
        instances: usize,
    },
    Lemma41 {
        seed: u64,
        instances: usize,
    },
    Weights {
        alpha: f64,
        beta: f64,
        radii: Vec<f64>,
        thetas: Vec<f64>,
    },
    Envelope {
        family: String,
        params: EnvelopeParams,
        spec: ScanSpec,
    },
    PlancherelHigh {
        spec: PlancherelScanSpec,
        alphas: Vec<f64>,
    },
    PlancherelLow {
        spec: PlancherelScanSpec,
    },
    Heat {
        r2: Vec<f64>,
        fit_columns: Vec<f64>,
        column: Option<f64>,
        options: KernelOptions,
    },
    BochnerRiesz {
        delta: f64,
        radii: Vec<f64>,
        options: KernelOptions,
    },
    Mihlin {
        multiplier: MultiplierSpec,
        config: MihlinConfig,
        options: KernelOptions,
    },
    TripleNorm {
        multiplier: MultiplierSpec,
        spec: TripleNormSpec,
        options: KernelOptions,
    },
    WeightedPlancherel {
        bumps: Vec<(f64, f64)>,
        ns: Vec<usize>,
        alphas: Vec<f64>,
        options: KernelOptions,
    },
    Pairs {
        count: usize,
        seed: u64,
        cells: usize,
    },
    Volume {
        cases: Vec<(f64, Vec<f64>)>,
        cells: usize,
    },
}

fn dyadic(lo: u64, hi: u64) -> Vec<u64> {
    std::iter::successors(Some(lo), |v| Some(v * 2))
        .take_while(|v| *v <= hi)
        .collect()
}

fn positive(name: &str, values: &[f64]) -> Result<()> {
    ensure!(!values.is_empty(), "{name} needs at least one value");
    for v in values {
        ensure!(
            *v > 0.0 && v.is_finite(),
            "{name} = {v} must be positive and finite"
        );
    }
    Ok(())
}

fn kernel_options(cfg: &RunConfig) -> KernelOptions {
    KernelOptions {
        l_max: cfg.params.l_max,
        ..KernelOptions::default()
    }
}

/// Checks every parameter and resolves defaults; performs no computation.
pub fn plan(cfg: &RunConfig) -> Result<Job> {
    let p = &cfg.params;
    let (group, leaf) = cfg.command_words()?;
    let job = match (group.as_str(), leaf.as_deref()) {
        ("eval", None) => {
            let (Some(l), Some(m), Some(x)) = (p.l, p.m, p.x) else {
                bail!("eval needs --l, --m and --x");
            };
            HarmonicIndex::new(l, m)?;
            ensure!((-1.0..=1.0).contains(&x), "x = {x} outside [-1, 1]");
            Job::Eval { l, m, x }
        }
        ("verify", Some("addition")) => Job::Addition {
            l_max: p.l_max.unwrap_or(256),
            points: 513,
        },
        ("verify", Some("orthonormality")) => Job::Orthonormality {
            l_max: p.l_max.unwrap_or(64),
        },
        ("verify", Some("parity")) => Job::Parity {
            l_max: p.l_max.unwrap_or(256),
            points: 257,
        },
        ("verify", Some("lemma25")) => Job::Lemma25 {
            seed: cfg.seed(),
            instances: p.instances.unwrap_or(100),
        },
        ("verify", Some("lemma41")) => Job::Lemma41 {
            seed: cfg.seed(),
            instances: p.instances.unwrap_or(100),
        },
        ("verify", Some("weights")) => {
            let alpha = p
                .alpha
                .as_ref()
                .and_then(|a| a.first().copied())
                .unwrap_or(0.4);
            let beta = p.beta.unwrap_or(2.8);
            ensure!(
                alpha + beta > 3.0 && alpha < 1.0,
                "need alpha + beta > 3 and alpha < 1"
            );
            let radii = p.radii.clone().unwrap_or_else(|| vec![0.05, 0.2, 1.0]);
            positive("radii", &radii)?;
            let thetas = match p.theta {
                Some(t) => vec![t],
                None => vec![0.0, 0.3, 1.2],
            };
            for t in &thetas {
                ensure!(t.abs() <= FRAC_PI_2, "theta = {t} outside [-pi/2, pi/2]");
            }
            Job::Weights {
                alpha,
                beta,
                radii,
                thetas,
            }
        }
        ("scan", Some("envelope")) => {
            let family = p.family.clone().unwrap_or_else(|| "combined".into());
            let mut params = EnvelopeParams::default();
            if let Some(e) = p.epsilon {
                params.epsilon = e;
            }
            if let Some(k) = p.tail_k {
                params.tail_k = k;
            }
            if let Some(c) = p.tail_c {
                params.tail_c = c;
            }
            EnvelopeRegistry::default().build(&family, &params)?;
            Job::Envelope {
                family,
                params,
                spec: ScanSpec::new(p.l_max.unwrap_or(512)),
            }
        }
        ("scan", Some(which @ ("plancherel-high" | "plancherel-low"))) => {
            let eps = p.epsilon.unwrap_or(0.5);
            ensure!(eps > 0.0 && eps < 1.0, "epsilon = {eps} outside (0, 1)");
            let i_max = p.i_max.unwrap_or(128);
            ensure!(i_max >= 2, "imax must be at least 2");
            let spec = PlancherelScanSpec::new(i_max, eps);
            if which == "plancherel-low" {
                Job::PlancherelLow { spec }
            } else {
                let alphas = p.alpha.clone().unwrap_or_else(|| vec![0.0, 0.25, 0.45]);
                for a in &alphas {
                    ensure!((0.0..0.5).contains(a), "alpha = {a} outside [0, 1/2)");
                }
                Job::PlancherelHigh { spec, alphas }
            }
        }
        ("sweep", Some("heat")) => {
            let r2 =
                p.r2.clone()
                    .unwrap_or_else(|| (0..=6).map(|k| 4f64.powi(-k)).collect());
            positive("r2", &r2)?;
            Job::Heat {
                r2,
                fit_columns: vec![0.0, 0.5],
                column: p.column,
                options: kernel_options(cfg),
            }
        }
        ("sweep", Some("bochner-riesz")) => {
            let delta = p.delta.unwrap_or(0.75);
            ensure!(delta >= 0.0, "delta = {delta} must be non-negative");
            let radii = p
                .big_r
                .clone()
                .unwrap_or_else(|| dyadic(8, 256).into_iter().map(|v| v as f64).collect());
            positive("R", &radii)?;
            Job::BochnerRiesz {
                delta,
                radii,
                options: kernel_options(cfg),
            }
        }
        ("sweep", Some("mihlin")) => {
            let s = p.s.unwrap_or(1.1);
            ensure!(s > 1.0, "s = {s} must exceed 1");
            let multiplier = p
                .multiplier
                .clone()
                .unwrap_or_else(|| MultiplierSpec::bump(0.25, 1.0));
            MultiplierRegistry::default().build(&multiplier)?;
            let mut config = MihlinConfig::new(p.l_max.unwrap_or(256), s);
            if let Some(a) = &p.alpha {
                positive("multiples", a)?;
                config.multiples = a.clone();
            }
            Job::Mihlin {
                multiplier,
                config,
                options: KernelOptions::default(),
            }
        }
        ("sweep", Some("triple-norm")) => match &p.multiplier {
            Some(multiplier) => {
                MultiplierRegistry::default().build(multiplier)?;
                let spec = TripleNormSpec {
                    p: p.p.unwrap_or(2),
                    beta: p.beta.unwrap_or(0.0),
                    alpha: p
                        .alpha
                        .as_ref()
                        .and_then(|a| a.first().copied())
                        .unwrap_or(0.0),
                    r: p.r.unwrap_or(1.0),
                };
                spec.validate()?;
                Job::TripleNorm {
                    multiplier: multiplier.clone(),
                    spec,
                    options: kernel_options(cfg),
                }
            }
            None => {
                let ns: Vec<usize> = match &p.big_n {
                    Some(n) => n.clone(),
                    None => dyadic(8, 256).into_iter().map(|v| v as usize).collect(),
                };
                ensure!(
                    !ns.is_empty() && ns.iter().all(|n| *n > 0),
                    "N values must be positive"
                );
                let alphas = p.alpha.clone().unwrap_or_else(|| vec![0.0, 0.25, 0.45]);
                for a in &alphas {
                    ensure!(*a >= 0.0, "alpha = {a} must be non-negative");
                }
                Job::WeightedPlancherel {
                    bumps: vec![(0.25, 1.0), (0.5, 1.0), (0.1, 0.6)],
                    ns,
                    alphas,
                    options: kernel_options(cfg),
                }
            }
        },
        ("distance", Some("pairs")) => {
            let cells = p.resolution.unwrap_or(512);
            ensure!(cells >= 32, "resolution needs at least 32 cells per axis");
            Job::Pairs {
                count: p.count.unwrap_or(1000),
                seed: cfg.seed(),
                cells,
            }
        }
        ("distance", Some("volume")) => {
            let cells = p.resolution.unwrap_or(512);
            ensure!(cells >= 32, "resolution needs at least 32 cells per axis");
            let cases = match p.theta {
                Some(t) => {
                    ensure!(t.abs() <= FRAC_PI_2, "theta = {t} outside [-pi/2, pi/2]");
                    vec![(t, p.radii.clone().unwrap_or_else(|| vec![0.05, 0.1, 0.2]))]
                }
                None => vec![(0.0, vec![0.05, 0.1, 0.2]), (0.8, vec![0.05, 0.1])],
            };
            for (_, radii) in &cases {
                positive("radii", radii)?;
                ensure!(radii.len() >= 2, "a volume slope needs at least two radii");
            }
            Job::Volume { cases, cells }
        }
        (g, l) => bail!(
            "unknown command `{}`",
            match l {
                Some(l) => format!("{g} {l}"),
                None => g.to_owned(),
            }
        ),
    };
    Ok(job)
}

/// Profile evaluations a kernel engine performs, roughly.
fn kernel_units(spec: &MultiplierSpec, columns: usize) -> Result<u64> {
    let f = MultiplierRegistry::default().build(spec)?;
    let t = Truncation::for_multiplier(&*f, KernelOptions::default().tail_tolerance)?;
    let l = t.l_max as u64 + 1;
    Ok(l * l * (columns as u64 + 8 * l))
}

impl Job {
    /// Estimated work in profile evaluations (or grid relaxations).
    pub fn work_units(&self) -> Result<u64> {
        Ok(match self {
            Job::Eval { l, .. } => *l as u64 + 1,
            Job::Addition { l_max, points } | Job::Parity { l_max, points } => {
                (*l_max as u64 + 1).pow(2) * *points as u64
            }
            Job::Orthonormality { l_max } => (*l_max as u64 + 1).pow(3),
            Job::Lemma25 { instances, .. } => (*instances as u64 + 8) * 10 * 24 * 8000,
            Job::Lemma41 { instances, .. } => (*instances as u64 + 3) * 8192,
            Job::Weights { radii, thetas, .. } => (radii.len() * thetas.len()) as u64 * 2_000_000,
            Job::Envelope { spec, .. } => spec.work_units(),
            Job::PlancherelHigh { spec, alphas } => spec.work_units() * alphas.len() as u64,
            Job::PlancherelLow { spec } => spec.work_units() / 8,
            Job::Heat { r2, .. } => {
                let mut total = 0;
                for &t in r2 {
                    total += kernel_units(&MultiplierSpec::heat(t), 2)?;
                }
                total
            }
            Job::BochnerRiesz { delta, radii, .. } => {
                let mut total = 0;
                for &r in radii {
                    total +=
                        kernel_units(&MultiplierSpec::bochner_riesz(*delta, 1.0 / (r * r)), 9)?;
                }
                total
            }
            Job::Mihlin { config, .. } => {
                let l = config.l_max as u64 + 1;
                l * l * l * 8 * config.multiples.len() as u64
            }
            Job::TripleNorm { multiplier, .. } => kernel_units(multiplier, 9)?,
            Job::WeightedPlancherel { bumps, ns, .. } => {
                let top = ns.iter().map(|n| *n as u64 + 1).sum::<u64>();
                bumps.len() as u64 * top.pow(3) * 8
            }
            Job::Pairs { count, cells, .. } => (*count as u64) * (*cells as u64).pow(2),
            Job::Volume { cases, cells } => {
                cases.iter().map(|(_, r)| r.len() as u64).sum::<u64>() * (*cells as u64).pow(2)
            }
        })
    }

    /// Runs the job, writes its artifacts and returns the stdout summary and
    /// whether the acceptance threshold was met.
    pub fn execute(&self, out: &mut Output) -> Result<(Value, bool)> {
        match self {
            Job::Eval { l, m, x } => {
                let v = profile_scaled(*l, *m, *x)?;
                let idx = HarmonicIndex::new(*l, *m)?;
                Ok((
                    json!({
                        "l": l, "m": m, "x": x,
                        "value": v.to_f64(),
                        "sign": v.signum(),
                        "log_magnitude": v.ln_abs(),
                        "eigenvalue": idx.eigenvalue(),
                    }),
                    true,
                ))
            }
            Job::Addition { l_max, points } => {
                let err = addition_theorem_residual(*l_max, &linspace(-1.0, 1.0, *points));
                let pass = err < ADDITION_TOL;
                let v = json!({"l_max": l_max, "points": points, "max_rel_err": err, "pass": pass});
                out.json("summary", &v)?;
                Ok((v, pass))
            }
            Job::Orthonormality { l_max } => {
                let err = orthonormality_residual(*l_max);
                let pass = err < ORTHONORMALITY_TOL;
                let v = json!({"l_max": l_max, "max_gram_residual": err, "pass": pass});
                out.json("summary", &v)?;
                Ok((v, pass))
            }
            Job::Parity { l_max, points } => {
                let err = parity_residual(*l_max, &linspace(0.0, 1.0, *points));
                let pass = err < PARITY_TOL;
                let v = json!({"l_max": l_max, "points": points, "max_rel_err": err, "pass": pass});
                out.json("summary", &v)?;
                Ok((v, pass))
            }
            Job::Lemma25 { seed, instances } => {
                let checks = commutation_suite(*seed, *instances)?;
                let mut t = Table::new(&["case", "alpha", "terms", "lhs", "rhs", "holds"]);
                for (i, c) in checks.iter().enumerate() {
                    t.push(vec![
                        i.to_string(),
                        num(c.alpha),
                        c.terms.to_string(),
                        num(c.lhs),
                        num(c.rhs),
                        c.holds.to_string(),
                    ]);
                }
                out.csv(None, &t)?;
                let worst = checks
                    .iter()
                    .filter(|c| c.rhs > 0.0)
                    .map(|c| c.lhs / c.rhs)
                    .fold(0.0, f64::max);
                let pass = checks.iter().all(|c| c.holds);
                let v = json!({"cases": checks.len(), "seed": seed, "max_lhs_over_rhs": worst, "pass": pass});
                out.json("summary", &v)?;
                Ok((v, pass))
            }
            Job::Lemma41 { seed, instances } => {
                let checks = sum_integral_suite(*seed, *instances)?;
                let mut t = Table::new(&[
                    "case", "kappa", "sum", "integral", "ratio", "bound", "holds",
                ]);
                for (i, c) in checks.iter().enumerate() {
                    t.push(vec![
                        i.to_string(),
                        num(c.kappa),
                        num(c.sum),
                        num(c.integral),
                        num(c.ratio),
                        num(c.bound),
                        c.holds.to_string(),
                    ]);
                }
                out.csv(None, &t)?;
                let worst = checks.iter().map(|c| c.ratio / c.bound).fold(0.0, f64::max);
                let pass = checks.iter().all(|c| c.holds);
                let v = json!({"cases": checks.len(), "seed": seed, "max_ratio_over_bound": worst, "pass": pass});
                out.json("summary", &v)?;
                Ok((v, pass))
            }
            Job::Weights {
                alpha,
                beta,
                radii,
                thetas,
            } => {
                let mut t = Table::new(&[
                    "theta_prime",
                    "r",
                    "ratio",
                    "ratio_refined",
                    "pointwise_constant",
                    "pointwise_constant_refined",
                    "change",
                ]);
                let mut worst_change: f64 = 0.0;
                let mut finite = true;
                for &tp in thetas {
                    for &r in radii {
                        let w = weight_stability(*alpha, *beta, r, tp)?;
                        finite &= w.ratio.is_finite() && w.pointwise_constant.is_finite();
                        worst_change = worst_change.max(w.change);
                        t.push(vec![
                            num(tp),
                            num(r),
                            num(w.ratio),
                            num(w.ratio_refined),
                            num(w.pointwise_constant),
                            num(w.pointwise_constant_refined),
                            num(w.change),
                        ]);
                    }
                }
                out.csv(None, &t)?;
                let pass = finite && worst_change < WEIGHT_STABILITY_TOL;
                let v = json!({"alpha": alpha, "beta": beta, "max_refinement_change": worst_change, "pass": pass});
                out.json("summary", &v)?;
                Ok((v, pass))
            }
            Job::Envelope {
                family,
                params,
                spec,
            } => {
                let env = EnvelopeRegistry::default().build(family, params)?;
                let report = sup_ratio_scan(&[env], spec).remove(0);
                let mut t = Table::new(&[
                    "l_lo",
                    "l_hi",
                    "sup_ratio",
                    "argmax_l",
                    "argmax_m",
                    "argmax_x",
                    "empty",
                ]);
                for b in &report.blocks {
                    let (l, m, x) = match b.argmax {
                        Some(a) => (a.l.to_string(), a.m.to_string(), num(a.x)),
                        None => (String::new(), String::new(), String::new()),
                    };
                    t.push(vec![
                        b.l_lo.to_string(),
                        b.l_hi.to_string(),
                        num(b.sup_ratio),
                        l,
                        m,
                        x,
                        b.empty.to_string(),
                    ]);
                }
                out.csv(None, &t)?;
                out.json("report", &report)?;
                let stable = report.holds(64);
                let summary = Summary {
                    sweep: "envelope".into(),
                    params: json!({"family": family, "epsilon": params.epsilon, "tail_k": params.tail_k,
                                   "tail_c": params.tail_c, "l_max": spec.l_max}),
                    sup_ratio: report.max_ratio(),
                    stable,
                    details: json!({"neighbour_variation_from_64": report.neighbour_variation(64),
                                    "overall_variation_from_64": report.overall_variation(64)}),
                };
                finish(out, summary)
            }
            Job::PlancherelHigh { spec, alphas } => {
                let reports = plancherel_scan_high(spec, alphas)?;
                plancherel_outputs(out, "plancherel-high", spec, &reports)
            }
            Job::PlancherelLow { spec } => {
                let report = plancherel_scan_low(spec)?;
                plancherel_outputs(out, "plancherel-low", spec, &[report])
            }
            Job::Heat {
                r2,
                fit_columns,
                column,
                options,
            } => {
                let sweep = heat_sweep(r2, fit_columns, options)?;
                let mut t = Table::new(&[
                    "r2",
                    "triple_norm",
                    "argmax_theta_prime",
                    "lambda_max",
                    "tail_bound",
                    "fit_c",
                    "fit_b_max",
                    "fit_log_c",
                    "fit_b",
                    "fit_residual",
                    "min_over_max",
                ]);
                for row in &sweep.rows {
                    let mut cells = vec![
                        num(row.r2),
                        num(row.triple_norm),
                        num(row.argmax_theta_prime),
                        num(row.lambda_max),
                        num(row.tail_bound),
                    ];
                    match &row.fit {
                        Some(f) => cells.extend([
                            num(f.c),
                            num(f.b_max),
                            num(f.log_c_fit),
                            num(f.b_fit),
                            num(f.residual),
                            num(f.min_over_max),
                        ]),
                        None => cells.extend(std::iter::repeat(String::new()).take(6)),
                    }
                    t.push(cells);
                }
                out.csv(None, &t)?;
                if let Some(tp) = column {
                    for (k, &rr) in r2.iter().enumerate() {
                        let thetas = linspace(-FRAC_PI_2, FRAC_PI_2, 129);
                        let (col, _) = heat_column_and_fit(rr, *tp, &thetas, 64, options)?;
                        let mut ct = Table::new(&["theta", "dphi", "value"]);
                        for (i, th) in col.thetas.iter().enumerate() {
                            for (j, dp) in col.dphi.iter().enumerate() {
                                ct.push(vec![num(*th), num(*dp), num(col.values[i][j])]);
                            }
                        }
                        out.csv(Some(&format!("column{k}")), &ct)?;
                    }
                }
                let positive = sweep
                    .rows
                    .iter()
                    .all(|r| r.fit.as_ref().map_or(true, |f| f.min_over_max >= -1e-8));
                let stable = sweep.stable && sweep.gaussian_holds && positive;
                let summary = Summary {
                    sweep: "heat".into(),
                    params: json!({"r2": r2, "fit_columns": fit_columns}),
                    sup_ratio: sweep.max_over_min,
                    stable,
                    details: json!({"gaussian_holds": sweep.gaussian_holds, "positive": positive}),
                };
                finish(out, summary)
            }
            Job::BochnerRiesz {
                delta,
                radii,
                options,
            } => {
                let sweep = bochner_riesz_sweep(*delta, radii, options)?;
                let mut t = Table::new(&["R", "l1_norm", "argmax_theta_prime", "l_max", "rows"]);
                for r in &sweep.rows {
                    t.push(vec![
                        num(r.radius),
                        num(r.l1_norm),
                        num(r.argmax_theta_prime),
                        r.l_max.to_string(),
                        r.rows.to_string(),
                    ]);
                }
                out.csv(None, &t)?;
                let summary = Summary {
                    sweep: "bochner-riesz".into(),
                    params: json!({"delta": delta, "R": radii}),
                    sup_ratio: sweep.max_over_min,
                    stable: sweep.stable,
                    details: json!({"grows": sweep.grows}),
                };
                finish(out, summary)
            }
            Job::Mihlin {
                multiplier,
                config,
                options,
            } => {
                let f = MultiplierRegistry::default().build(multiplier)?;
                let report = mihlin_statistic(f, config, options)?;
                let mut t = Table::new(&["lambda", "multiple", "t", "l1_norm", "ratio"]);
                for r in &report.rows {
                    t.push(vec![
                        r.lambda.to_string(),
                        num(r.multiple),
                        num(r.t),
                        num(r.l1_norm),
                        num(r.ratio),
                    ]);
                }
                out.csv(None, &t)?;
                let half = report.sup_ratio_up_to(config.l_max / 2);
                let ratio = if half > 0.0 {
                    report.sup_ratio / half
                } else {
                    f64::INFINITY
                };
                let summary = Summary {
                    sweep: "mihlin".into(),
                    params: json!({"multiplier": multiplier, "s": config.s, "l_max": config.l_max,
                                   "multiples": config.multiples}),
                    sup_ratio: report.sup_ratio,
                    stable: report.sup_ratio.is_finite() && ratio < MIHLIN_BAND,
                    details: json!({"sobolev_norm": report.sobolev_norm, "sup_ratio_half_range": half,
                                    "extension_ratio": ratio}),
                };
                finish(out, summary)
            }
            Job::TripleNorm {
                multiplier,
                spec,
                options,
            } => {
                let f = MultiplierRegistry::default().build(multiplier)?;
                let engine = KernelEngine::new(f, &default_columns(1.0 / spec.r), options)?;
                let sup = triple_norm(&engine, spec)?;
                let mut t = Table::new(&["theta_prime", "value"]);
                for c in &sup.columns {
                    t.push(vec![num(c.theta_prime), num(c.value)]);
                }
                out.csv(None, &t)?;
                let summary = Summary {
                    sweep: "triple-norm".into(),
                    params: json!({"multiplier": multiplier, "p": spec.p, "beta": spec.beta,
                                   "alpha": spec.alpha, "r": spec.r}),
                    sup_ratio: sup.value,
                    stable: sup.value.is_finite(),
                    details: json!({"argmax_theta_prime": sup.argmax_theta_prime}),
                };
                finish(out, summary)
            }
            Job::WeightedPlancherel {
                bumps,
                ns,
                alphas,
                options,
            } => {
                let sweep = weighted_plancherel_sweep(bumps, ns, alphas, options)?;
                let mut t = Table::new(&[
                    "bump_a",
                    "bump_b",
                    "N",
                    "alpha",
                    "triple_norm",
                    "norm_n2",
                    "ratio",
                ]);
                for r in &sweep.rows {
                    t.push(vec![
                        num(r.bump.0),
                        num(r.bump.1),
                        r.n.to_string(),
                        num(r.alpha),
                        num(r.triple_norm),
                        num(r.norm_n2),
                        num(r.ratio),
                    ]);
                }
                out.csv(None, &t)?;
                let worst = sweep
                    .groups
                    .iter()
                    .map(|g| g.max_over_min)
                    .fold(0.0, f64::max);
                let summary = Summary {
                    sweep: "weighted-plancherel".into(),
                    params: json!({"bumps": bumps, "N": ns, "alpha": alphas}),
                    sup_ratio: worst,
                    stable: sweep.stable,
                    details: serde_json::to_value(&sweep.groups)?,
                };
                finish(out, summary)
            }
            Job::Pairs { count, seed, cells } => {
                let study = distance_pairs(&random_pairs(*seed, *count), *cells)?;
                let mut t = Table::new(&[
                    "pair_id",
                    "theta1",
                    "phi1",
                    "theta2",
                    "phi2",
                    "phi_dist",
                    "eikonal_dist",
                    "riemannian_dist",
                    "ratio",
                ]);
                for r in &study.rows {
                    t.push(vec![
                        r.pair_id.to_string(),
                        num(r.theta1),
                        num(r.phi1),
                        num(r.theta2),
                        num(r.phi2),
                        num(r.phi_dist),
                        num(r.eikonal_dist),
                        num(r.riemannian_dist),
                        num(r.ratio),
                    ]);
                }
                out.csv(None, &t)?;
                let v = json!({"count": count, "seed": seed, "resolution": cells,
                               "min_ratio": study.min_ratio, "max_ratio": study.max_ratio,
                               "lower_bound_excess": study.lower_bound_excess, "pass": study.within_band});
                out.json("summary", &v)?;
                Ok((v, study.within_band))
            }
            Job::Volume { cases, cells } => {
                let mut t = Table::new(&["theta", "r", "numeric", "model"]);
                let mut slopes = Vec::new();
                let mut pass = true;
                for (theta, radii) in cases {
                    let study = volume_slope(*theta, radii, *cells)?;
                    for r in &study.rows {
                        t.push(vec![num(r.theta), num(r.r), num(r.numeric), num(r.model)]);
                    }
                    let expected = expected_slope(*theta, radii);
                    if let Some(e) = expected {
                        pass &= (study.slope - e).abs() <= SLOPE_TOL;
                    }
                    pass &= study.slope.is_finite();
                    slopes
                        .push(json!({"theta": theta, "slope": study.slope, "expected": expected}));
                }
                out.csv(None, &t)?;
                let v = json!({"resolution": cells, "slopes": slopes, "pass": pass});
                out.json("summary", &v)?;
                Ok((v, pass))
            }
        }
    }
}

/// 3 on the equator, 2 when every radius is well inside `|theta|`.
fn expected_slope(theta: f64, radii: &[f64]) -> Option<f64> {
    if theta == 0.0 {
        Some(3.0)
    } else if radii.iter().all(|r| 4.0 * r <= theta.abs()) {
        Some(2.0)
    } else {
        None
    }
}

fn finish(out: &mut Output, summary: Summary) -> Result<(Value, bool)> {
    out.json("summary", &summary)?;
    let stable = summary.stable;
    Ok((serde_json::to_value(summary)?, stable))
}

fn plancherel_outputs(
    out: &mut Output,
    name: &str,
    spec: &PlancherelScanSpec,
    reports: &[PlancherelReport],
) -> Result<(Value, bool)> {
    let mut t = Table::new(&["alpha", "i", "sup", "argmax_x"]);
    for r in reports {
        for row in &r.rows {
            t.push(vec![
                num(r.alpha),
                row.i.to_string(),
                num(row.sup),
                num(row.argmax_x),
            ]);
        }
    }
    out.csv(None, &t)?;
    let stable = reports.iter().all(|r| r.stable);
    let worst = reports.iter().map(|r| r.variation).fold(0.0, f64::max);
    let summary = Summary {
        sweep: name.into(),
        params: json!({"epsilon": spec.epsilon, "i_min": spec.i_min, "i_max": spec.i_max,
                       "alpha": reports.iter().map(|r| r.alpha).collect::<Vec<_>>()}),
        sup_ratio: worst,
        stable,
        details: json!(reports
            .iter()
            .map(|r| json!({"alpha": r.alpha, "blocks": r.blocks, "variation": r.variation}))
            .collect::<Vec<_>>()),
    };
    finish(out, summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(command: &str) -> RunConfig {
        RunConfig {
            command: command.into(),
            ..RunConfig::default()
        }
    }

    #[test]
    fn planning_rejects_bad_input() {
        assert!(plan(&cfg("bogus")).is_err());
        assert!(plan(&cfg("verify nothing")).is_err());
        assert!(plan(&cfg("eval")).is_err());
        let mut c = cfg("sweep bochner-riesz");
        c.params.big_r = Some(vec![8.0, -1.0]);
        assert!(plan(&c).is_err());
        let mut c = cfg("scan envelope");
        c.params.family = Some("nope".into());
        assert!(plan(&c).is_err());
    }

    #[test]
    fn defaults_and_work_units() {
        let job = plan(&cfg("sweep bochner-riesz")).unwrap();
        match &job {
            Job::BochnerRiesz { delta, radii, .. } => {
                assert_eq!(*delta, 0.75);
                assert_eq!(radii, &vec![8.0, 16.0, 32.0, 64.0, 128.0, 256.0]);
            }
            other => panic!("{other:?}"),
        }
        assert!(job.work_units().unwrap() > 0);
        assert_eq!(expected_slope(0.8, &[0.05, 0.1]), Some(2.0));
        assert_eq!(expected_slope(0.3, &[0.1]), None);
    }
}
