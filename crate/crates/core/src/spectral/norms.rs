use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::kernel::{KernelEngine, KernelRow};
use crate::error::{domain, Error, Result};
use crate::geometry::{ball_volume_closed, phi_distance, SpherePoint};
use crate::numeric::{geomspace, sorted_unique, CompensatedSum};

/// Column latitudes for a kernel whose spatial scale is `1/scale`: the
/// equator, a geometric ladder from `1/(2 scale)` to 1 and two high latitudes
/// including the pole.
pub fn default_columns(scale: f64) -> Vec<f64> {
    let lo = (0.5 / scale.max(1.0)).min(0.5);
    let mut c = vec![0.0, 1.3, FRAC_PI_2];
    c.extend(geomspace(lo, 1.0, 6));
    sorted_unique(c, 0.0, FRAC_PI_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnValue {
    pub theta_prime: f64,
    pub value: f64,
}

/// A supremum over kernel columns with the per-column values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSup {
    pub value: f64,
    pub argmax_theta_prime: f64,
    pub columns: Vec<ColumnValue>,
}

impl ColumnSup {
    fn from_values(thetas: &[f64], values: Vec<f64>) -> Self {
        let columns: Vec<ColumnValue> = thetas
            .iter()
            .zip(values)
            .map(|(&theta_prime, value)| ColumnValue { theta_prime, value })
            .collect();
        let best = columns
            .iter()
            .fold(None::<&ColumnValue>, |b, c| match b {
                Some(b) if b.value >= c.value => Some(b),
                _ => Some(c),
            })
            .expect("at least one column");
        Self {
            value: best.value,
            argmax_theta_prime: best.theta_prime,
            columns,
        }
    }
}

/// `int |K(z, z')| dmu(z)` per row, from samples at the row's default density.
fn row_l1(row: &KernelRow<'_>) -> f64 {
    let n = row.phi_samples();
    let vals = row.values(n);
    let mut acc = CompensatedSum::new();
    for v in &vals {
        acc.add(v.abs());
    }
    2.0 * PI * acc.value() / n as f64
}

/// `sup_{z'} int |K(z, z')| dmu(z)`, the `L^1 -> L^1` norm of the operator,
/// over the engine's columns.
pub fn l1_operator_norm(engine: &KernelEngine) -> ColumnSup {
    let per_column = engine.integrate_rows(row_l1);
    ColumnSup::from_values(engine.columns(), per_column)
}

/// Parameters of the weighted norm
/// `V(z', r)^{1/p'} || (1 + rho(., z')/r)^beta (1 + w_r(., z'))^alpha K(., z') ||_{L^p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleNormSpec {
    pub p: u8,
    pub beta: f64,
    pub alpha: f64,
    pub r: f64,
}

impl TripleNormSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p != 1 && self.p != 2 {
            return Err(domain("p", self.p as f64, "{1, 2}"));
        }
        if !(self.beta >= 0.0) {
            return Err(domain("beta", self.beta, "[0, inf)"));
        }
        if !(self.alpha >= 0.0) {
            return Err(domain("alpha", self.alpha, "[0, inf)"));
        }
        if !(self.r > 0.0) {
            return Err(domain("r", self.r, "(0, inf)"));
        }
        Ok(())
    }

    fn latitude_weight(&self, theta: f64, theta_prime: f64) -> f64 {
        let w = theta.abs() / self.r.max(theta_prime.abs());
        (1.0 + w).powf(self.alpha)
    }
}

/// The weighted column norm, as a supremum over the engine's columns. With
/// `beta = 0` and `p = 2` the longitude integral is done by Parseval;
/// otherwise each row is sampled in longitude.
pub fn triple_norm(engine: &KernelEngine, spec: &TripleNormSpec) -> Result<ColumnSup> {
    Ok(triple_norms(engine, std::slice::from_ref(spec))?.remove(0))
}

/// [`triple_norm`] for several parameter sets in one pass over the kernel.
pub fn triple_norms(engine: &KernelEngine, specs: &[TripleNormSpec]) -> Result<Vec<ColumnSup>> {
    for spec in specs {
        spec.validate()?;
    }
    if engine.columns().is_empty() {
        return Err(Error::Precondition(
            "triple norm needs at least one column".into(),
        ));
    }
    let k = specs.len();
    let j = engine.columns().len();
    let per_row = engine.map_rows(|row| {
        specs
            .iter()
            .map(|spec| {
                let v = if spec.beta == 0.0 && spec.p == 2 {
                    let w = spec.latitude_weight(row.theta, row.theta_prime);
                    w * w * row.l2_squared_in_phi()
                } else {
                    sampled_row(row, spec)
                };
                row.weight * v
            })
            .collect::<Vec<f64>>()
    });
    let mut acc = vec![CompensatedSum::new(); k * j];
    for (i, vals) in per_row.iter().enumerate() {
        for (s, v) in vals.iter().enumerate() {
            acc[s * j + i % j].add(*v);
        }
    }
    Ok(specs
        .iter()
        .enumerate()
        .map(|(s, spec)| {
            let values = engine
                .columns()
                .iter()
                .enumerate()
                .map(|(c, &tp)| {
                    let raw = acc[s * j + c].value();
                    let v = ball_volume_closed(
                        &SpherePoint {
                            theta: tp,
                            phi: 0.0,
                        },
                        spec.r,
                    );
                    if spec.p == 2 {
                        (v * raw).sqrt()
                    } else {
                        raw
                    }
                })
                .collect();
            ColumnSup::from_values(engine.columns(), values)
        })
        .collect())
}

fn sampled_row(row: &KernelRow<'_>, spec: &TripleNormSpec) -> f64 {
    let n = row.phi_samples();
    let vals = row.values(n);
    let lat = spec.latitude_weight(row.theta, row.theta_prime);
    let zp = SpherePoint {
        theta: row.theta_prime,
        phi: 0.0,
    };
    let mut acc = CompensatedSum::new();
    for (j, v) in vals.iter().enumerate() {
        let z = SpherePoint {
            theta: row.theta,
            phi: 2.0 * PI * j as f64 / n as f64,
        };
        let radial = if spec.beta == 0.0 {
            1.0
        } else {
            (1.0 + phi_distance(&z, &zp) / spec.r).powf(spec.beta)
        };
        let f = radial * lat * v.abs();
        acc.add(if spec.p == 2 { f * f } else { f });
    }
    2.0 * PI * acc.value() / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::kernel::{column_l2_squared, KernelOptions};
    use crate::spectral::multiplier::{Heat, IndicatorZero, Multiplier};
    use std::sync::Arc;

    #[test]
    fn indicator_zero_norms() {
        let e = KernelEngine::new(
            Arc::new(IndicatorZero),
            &[0.0, 0.7],
            &KernelOptions::default(),
        )
        .unwrap();
        let l1 = l1_operator_norm(&e);
        assert!((l1.value - 1.0).abs() < 1e-13);
        let spec = TripleNormSpec {
            p: 2,
            beta: 0.0,
            alpha: 0.0,
            r: 1.0,
        };
        let t = triple_norm(&e, &spec).unwrap();
        assert!((t.value - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-13);
        let sampled = triple_norm(
            &e,
            &TripleNormSpec {
                beta: 1e-300,
                ..spec
            },
        )
        .unwrap();
        assert!((sampled.value - t.value).abs() < 1e-13);
    }

    #[test]
    fn heat_is_markovian() {
        for r2 in [1.0, 0.1, 0.01] {
            let e = KernelEngine::new(
                Arc::new(Heat::new(r2).unwrap()),
                &default_columns((1.0 / r2).sqrt()),
                &KernelOptions::default(),
            )
            .unwrap();
            let l1 = l1_operator_norm(&e);
            for c in &l1.columns {
                assert!((c.value - 1.0).abs() < 1e-6, "r2 = {r2}: {c:?}");
            }
        }
    }

    #[test]
    fn weighted_parseval_matches_sampling() {
        let f: Arc<dyn Multiplier> = Arc::new(Heat::new(0.02).unwrap());
        let e = KernelEngine::new(f.clone(), &[0.0, 0.3], &KernelOptions::default()).unwrap();
        let spec = TripleNormSpec {
            p: 2,
            beta: 0.0,
            alpha: 0.45,
            r: 0.15,
        };
        let a = triple_norm(&e, &spec).unwrap();
        let b = triple_norm(
            &e,
            &TripleNormSpec {
                beta: 1e-300,
                ..spec
            },
        )
        .unwrap();
        for (x, y) in a.columns.iter().zip(&b.columns) {
            assert!((x.value - y.value).abs() < 1e-9 * x.value);
        }
        let plain = triple_norm(&e, &TripleNormSpec { alpha: 0.0, ..spec }).unwrap();
        for c in &plain.columns {
            let v = ball_volume_closed(
                &SpherePoint {
                    theta: c.theta_prime,
                    phi: 0.0,
                },
                spec.r,
            );
            let exact = (v * column_l2_squared(&*f, &e.truncation(), c.theta_prime)).sqrt();
            assert!((c.value - exact).abs() < 1e-8 * exact);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let e =
            KernelEngine::new(Arc::new(IndicatorZero), &[0.0], &KernelOptions::default()).unwrap();
        assert!(triple_norm(
            &e,
            &TripleNormSpec {
                p: 3,
                beta: 0.0,
                alpha: 0.0,
                r: 1.0
            }
        )
        .is_err());
        assert!(triple_norm(
            &e,
            &TripleNormSpec {
                p: 1,
                beta: -1.0,
                alpha: 0.0,
                r: 1.0
            }
        )
        .is_err());
        assert!(triple_norm(
            &e,
            &TripleNormSpec {
                p: 1,
                beta: 0.0,
                alpha: 0.0,
                r: 0.0
            }
        )
        .is_err());
    }
}
