use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{domain, Error, Result};

/// A real spectral function `F(lambda)`, `lambda >= 0`.
pub trait Multiplier: Send + Sync + fmt::Debug {
    fn kind(&self) -> &'static str;
    fn eval(&self, lambda: f64) -> f64;
    /// Smallest `h` with `F = 0` on `(h, inf)`, when the support is compact.
    fn support_max(&self) -> Option<f64>;
    /// `sup |F|` over `[lambda, inf)`, or an upper bound for it.
    fn sup_above(&self, lambda: f64) -> f64;
    /// Points where `|F|` may have an interior local maximum.
    fn critical_points(&self) -> Vec<f64> {
        Vec::new()
    }
    /// Spectral scale that sets the spatial resolution of the kernel when it
    /// is smaller than the truncation point.
    fn bandwidth(&self) -> Option<f64> {
        None
    }
    fn spec(&self) -> MultiplierSpec;
}

/// Serializable description of a multiplier: a `kind` tag plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSpec {
    pub kind: String,
    #[serde(flatten)]
    pub params: Map<String, Value>,
}

impl MultiplierSpec {
    pub fn new(kind: &str) -> Self {
        Self {
            kind: kind.to_owned(),
            params: Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_owned(), value.into());
        self
    }

    pub fn bump(a: f64, b: f64) -> Self {
        Self::new("bump").with("a", a).with("b", b)
    }

    pub fn bochner_riesz(delta: f64, t: f64) -> Self {
        Self::new("bochner_riesz").with("delta", delta).with("t", t)
    }

    pub fn heat(r2: f64) -> Self {
        Self::new("heat").with("r2", r2)
    }

    pub fn indicator_zero() -> Self {
        Self::new("indicator_zero")
    }

    pub fn tabulated(lambdas: Vec<f64>, values: Vec<f64>) -> Self {
        Self::new("tabulated")
            .with("lambdas", lambdas)
            .with("values", values)
    }

    /// `F(t lambda)` for the inner multiplier `F`.
    pub fn rescaled(inner: MultiplierSpec, t: f64) -> Self {
        Self::new("rescaled").with("t", t).with(
            "inner",
            serde_json::to_value(inner).expect("spec is serializable"),
        )
    }

    /// `F(sqrt(lambda))` for the inner multiplier `F`.
    pub fn sqrt_arg(inner: MultiplierSpec) -> Self {
        Self::new("sqrt_arg").with(
            "inner",
            serde_json::to_value(inner).expect("spec is serializable"),
        )
    }

    fn number(&self, key: &'static str) -> Result<f64> {
        self.params.get(key).and_then(Value::as_f64).ok_or_else(|| {
            Error::Precondition(format!("multiplier `{}` needs numeric `{key}`", self.kind))
        })
    }

    fn numbers(&self, key: &'static str) -> Result<Vec<f64>> {
        self.params
            .get(key)
            .and_then(Value::as_array)
            .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<_>>>())
            .ok_or_else(|| {
                Error::Precondition(format!(
                    "multiplier `{}` needs numeric array `{key}`",
                    self.kind
                ))
            })
    }

    fn inner(&self) -> Result<MultiplierSpec> {
        let v = self.params.get("inner").ok_or_else(|| {
            Error::Precondition(format!("multiplier `{}` needs `inner`", self.kind))
        })?;
        Ok(serde_json::from_value(v.clone())?)
    }
}

/// `exp(-1/((lambda-a)(b-lambda)))`, normalized to peak 1 at `(a+b)/2`.
#[derive(Debug, Clone)]
pub struct Bump {
    a: f64,
    b: f64,
}

impl Bump {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > a && b.is_finite()) {
            return Err(Error::Precondition(format!(
                "bump support [{a}, {b}] must satisfy 0 < a < b"
            )));
        }
        Ok(Self { a, b })
    }

    /// Standard bump on `[1/4, 1]`.
    pub fn standard() -> Self {
        Self { a: 0.25, b: 1.0 }
    }
}

impl Multiplier for Bump {
    fn kind(&self) -> &'static str {
        "bump"
    }

    fn eval(&self, lambda: f64) -> f64 {
        if lambda <= self.a || lambda >= self.b {
            return 0.0;
        }
        let w = self.b - self.a;
        (4.0 / (w * w) - 1.0 / ((lambda - self.a) * (self.b - lambda))).exp()
    }

    fn support_max(&self) -> Option<f64> {
        Some(self.b)
    }

    fn sup_above(&self, lambda: f64) -> f64 {
        if lambda >= self.b {
            0.0
        } else {
            1.0
        }
    }

    fn critical_points(&self) -> Vec<f64> {
        vec![0.5 * (self.a + self.b)]
    }

    fn spec(&self) -> MultiplierSpec {
        MultiplierSpec::bump(self.a, self.b)
    }
}

/// `(1 - t lambda)_+^delta`.
#[derive(Debug, Clone)]
pub struct BochnerRiesz {
    delta: f64,
    t: f64,
}

impl BochnerRiesz {
    pub fn new(delta: f64, t: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(domain("delta", delta, "[0, inf)"));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(domain("t", t, "(0, inf)"));
        }
        Ok(Self { delta, t })
    }
}

impl Multiplier for BochnerRiesz {
    fn kind(&self) -> &'static str {
        "bochner_riesz"
    }

    fn eval(&self, lambda: f64) -> f64 {
        let s = 1.0 - self.t * lambda;
        if s <= 0.0 {
            // delta = 0 is the sharp indicator of [0, 1/t)
            return 0.0;
        }
        if self.delta == 0.0 {
            1.0
        } else {
            s.powf(self.delta)
        }
    }

    fn support_max(&self) -> Option<f64> {
        Some(1.0 / self.t)
    }

    fn sup_above(&self, lambda: f64) -> f64 {
        self.eval(lambda.max(0.0))
    }

    fn spec(&self) -> MultiplierSpec {
        MultiplierSpec::bochner_riesz(self.delta, self.t)
    }
}

/// `exp(-r2 lambda)`.
#[derive(Debug, Clone)]
pub struct Heat {
    r2: f64,
}

impl Heat {
    pub fn new(r2: f64) -> Result<Self> {
        if !(r2 > 0.0 && r2.is_finite()) {
            return Err(domain("r2", r2, "(0, inf)"));
        }
        Ok(Self { r2 })
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }
}

impl Multiplier for Heat {
    fn kind(&self) -> &'static str {
        "heat"
    }

    fn eval(&self, lambda: f64) -> f64 {
        (-self.r2 * lambda).exp()
    }

    fn support_max(&self) -> Option<f64> {
        None
    }

    fn sup_above(&self, lambda: f64) -> f64 {
        self.eval(lambda.max(0.0))
    }

    fn bandwidth(&self) -> Option<f64> {
        Some(16.0 / self.r2)
    }

    fn spec(&self) -> MultiplierSpec {
        MultiplierSpec::heat(self.r2)
    }
}

/// Indicator of `{0}`: the projection onto constants.
#[derive(Debug, Clone, Copy)]
pub struct IndicatorZero;

impl Multiplier for IndicatorZero {
    fn kind(&self) -> &'static str {
        "indicator_zero"
    }

    fn eval(&self, lambda: f64) -> f64 {
        if lambda == 0.0 {
            1.0
        } else {
            0.0
        }
    }

    fn support_max(&self) -> Option<f64> {
        Some(0.0)
    }

    fn sup_above(&self, lambda: f64) -> f64 {
        if lambda <= 0.0 {
            1.0
        } else {
            0.0
        }
    }

    fn spec(&self) -> MultiplierSpec {
        MultiplierSpec::indicator_zero()
    }
}

/// Piecewise-linear interpolation of samples, zero outside their range.
#[derive(Debug, Clone)]
pub struct Tabulated {
    lambdas: Vec<f64>,
    values: Vec<f64>,
}

impl Tabulated {
    pub fn new(lambdas: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if lambdas.len() != values.len() || lambdas.is_empty() {
            return Err(Error::Precondition(
                "tabulated multiplier needs equally many (>= 1) samples and values".into(),
            ));
        }
        if lambdas[0] < 0.0 || lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition(
                "tabulated samples must be nonnegative and strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition(
                "tabulated values must be finite".into(),
            ));
        }
        Ok(Self { lambdas, values })
    }
}

impl Multiplier for Tabulated {
    fn kind(&self) -> &'static str {
        "tabulated"
    }

    fn eval(&self, lambda: f64) -> f64 {
        let n = self.lambdas.len();
        if lambda < self.lambdas[0] || lambda > self.lambdas[n - 1] {
            return 0.0;
        }
        let k = self.lambdas.partition_point(|&s| s <= lambda);
        if k == 0 {
            return self.values[0];
        }
        if k == n {
            return self.values[n - 1];
        }
        let (x0, x1) = (self.lambdas[k - 1], self.lambdas[k]);
        let s = (lambda - x0) / (x1 - x0);
        self.values[k - 1] * (1.0 - s) + self.values[k] * s
    }

    fn support_max(&self) -> Option<f64> {
        self.lambdas.last().copied()
    }

    fn sup_above(&self, lambda: f64) -> f64 {
        let tail = self
            .lambdas
            .iter()
            .zip(&self.values)
            .filter(|(s, _)| **s >= lambda)
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max);
        tail.max(self.eval(lambda).abs())
    }

    fn critical_points(&self) -> Vec<f64> {
        self.lambdas.clone()
    }

    fn spec(&self) -> MultiplierSpec {
        MultiplierSpec::tabulated(self.lambdas.clone(), self.values.clone())
    }
}

/// `F(t lambda)`.
#[derive(Debug, Clone)]
pub struct Rescaled {
    inner: Arc<dyn Multiplier>,
    t: f64,
}

impl Rescaled {
    pub fn new(inner: Arc<dyn Multiplier>, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(domain("t", t, "(0, inf)"));
        }
        Ok(Self { inner, t })
    }
}

impl Multiplier for Rescaled {
    fn kind(&self) -> &'static str {
        "rescaled"
    }

    fn eval(&self, lambda: f64) -> f64 {
        self.inner.eval(self.t * lambda)
    }

    fn support_max(&self) -> Option<f64> {
        self.inner.support_max().map(|h| h / self.t)
    }

    fn sup_above(&self, lambda: f64) -> f64 {
        self.inner.sup_above(self.t * lambda)
    }

    fn critical_points(&self) -> Vec<f64> {
        self.inner
            .critical_points()
            .iter()
            .map(|c| c / self.t)
            .collect()
    }

    fn bandwidth(&self) -> Option<f64> {
        self.inner.bandwidth().map(|b| b / self.t)
    }

    fn spec(&self) -> MultiplierSpec {
        MultiplierSpec::rescaled(self.inner.spec(), self.t)
    }
}

/// `F(sqrt(lambda))`.
#[derive(Debug, Clone)]
pub struct SqrtArg {
    inner: Arc<dyn Multiplier>,
}

impl SqrtArg {
    pub fn new(inner: Arc<dyn Multiplier>) -> Self {
        Self { inner }
    }
}

impl Multiplier for SqrtArg {
    fn kind(&self) -> &'static str {
        "sqrt_arg"
    }

    fn eval(&self, lambda: f64) -> f64 {
        self.inner.eval(lambda.max(0.0).sqrt())
    }

    fn support_max(&self) -> Option<f64> {
        self.inner.support_max().map(|h| h * h)
    }

    fn sup_above(&self, lambda: f64) -> f64 {
        self.inner.sup_above(lambda.max(0.0).sqrt())
    }

    fn critical_points(&self) -> Vec<f64> {
        self.inner
            .critical_points()
            .iter()
            .filter(|c| **c >= 0.0)
            .map(|c| c * c)
            .collect()
    }

    fn bandwidth(&self) -> Option<f64> {
        self.inner.bandwidth().map(|b| b * b)
    }

    fn spec(&self) -> MultiplierSpec {
        MultiplierSpec::sqrt_arg(self.inner.spec())
    }
}

type Factory = fn(&MultiplierSpec, &MultiplierRegistry) -> Result<Arc<dyn Multiplier>>;

/// Name-keyed constructors for multipliers, extensible at runtime.
pub struct MultiplierRegistry {
    factories: BTreeMap<&'static str, Factory>,
}

impl Default for MultiplierRegistry {
    fn default() -> Self {
        let mut r = Self {
            factories: BTreeMap::new(),
        };
        r.register("bump", |s, _| {
            Ok(Arc::new(Bump::new(s.number("a")?, s.number("b")?)?))
        });
        r.register("bochner_riesz", |s, _| {
            Ok(Arc::new(BochnerRiesz::new(
                s.number("delta")?,
                s.number("t")?,
            )?))
        });
        r.register("heat", |s, _| Ok(Arc::new(Heat::new(s.number("r2")?)?)));
        r.register("indicator_zero", |_, _| Ok(Arc::new(IndicatorZero)));
        r.register("tabulated", |s, _| {
            Ok(Arc::new(Tabulated::new(
                s.numbers("lambdas")?,
                s.numbers("values")?,
            )?))
        });
        r.register("rescaled", |s, reg| {
            Ok(Arc::new(Rescaled::new(
                reg.build(&s.inner()?)?,
                s.number("t")?,
            )?))
        });
        r.register("sqrt_arg", |s, reg| {
            Ok(Arc::new(SqrtArg::new(reg.build(&s.inner()?)?)))
        });
        r
    }
}

impl MultiplierRegistry {
    pub fn register(&mut self, kind: &'static str, factory: Factory) {
        self.factories.insert(kind, factory);
    }

    pub fn contains(&self, kind: &str) -> bool {
        self.factories.contains_key(kind)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn build(&self, spec: &MultiplierSpec) -> Result<Arc<dyn Multiplier>> {
        let factory = self
            .factories
            .get(spec.kind.as_str())
            .ok_or_else(|| Error::Unknown {
                kind: "multiplier",
                name: spec.kind.clone(),
                known: self.names().join(", "),
            })?;
        factory(spec, self)
    }
}

/// `(1/N sum_i sup_{[(i-1)/N, i/N]} |F|^2)^{1/2}` for `F` viewed on `[0, 1]`.
///
/// Each cell sup uses 64 interior samples, both endpoints and any critical
/// points the multiplier reports inside the cell.
pub fn norm_n2(f: &dyn Multiplier, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(domain("N", 0.0, "[1, inf)"));
    }
    const SAMPLES: usize = 64;
    let crit = f.critical_points();
    let nf = n as f64;
    let mut acc = crate::numeric::CompensatedSum::new();
    for i in 0..n {
        let (lo, hi) = (i as f64 / nf, (i + 1) as f64 / nf);
        let mut sup: f64 = 0.0;
        for k in 0..=SAMPLES + 1 {
            let x = lo + (hi - lo) * k as f64 / (SAMPLES + 1) as f64;
            sup = sup.max(f.eval(x).abs());
        }
        for &c in crit.iter().filter(|c| **c >= lo && **c <= hi) {
            sup = sup.max(f.eval(c).abs());
        }
        acc.add(sup * sup);
    }
    Ok((acc.value() / nf).sqrt())
}

/// Smallest `lambda_max` with a certified bound below `tol` on the kernel
/// tail `sum_{lambda > lambda_max} |F(lambda)| |Y(x)||Y(x')|`.
///
/// Every excluded index of degree `l` has `lambda >= max(lambda_max, l)`, and
/// `sum_m |Y(l, m; x) Y(l, m; x')| <= (2l+1)/(4 pi)`, so the tail is at most
/// `sum_l (2l+1)/(4 pi) sup_{mu >= max(lambda_max, l)} |F(mu)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub lambda_max: f64,
    pub l_max: u32,
    pub tail_bound: f64,
}

impl Truncation {
    pub fn for_multiplier(f: &dyn Multiplier, tol: f64) -> Result<Self> {
        if let Some(h) = f.support_max() {
            let lambda_max = h.floor().max(0.0);
            return Ok(Self {
                lambda_max,
                l_max: lambda_max as u32,
                tail_bound: 0.0,
            });
        }
        let mut hi = 1.0;
        while tail_bound(f, hi) >= tol {
            hi *= 2.0;
            if hi > 1e8 {
                return Err(Error::Precondition(format!(
                    "multiplier `{}` decays too slowly to truncate below {tol:e}",
                    f.kind()
                )));
            }
        }
        let mut lo = (hi / 2.0).floor();
        hi = hi.ceil();
        while hi - lo > 1.0 {
            let mid = (0.5 * (lo + hi)).floor();
            if tail_bound(f, mid) < tol {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Self {
            lambda_max: hi,
            l_max: hi as u32,
            tail_bound: tail_bound(f, hi),
        })
    }

    /// Checks a degree cap against the truncation.
    pub fn within(&self, l_max: Option<u32>) -> Result<()> {
        match l_max {
            Some(cap) if cap < self.l_max => Err(Error::Precondition(format!(
                "l_max = {cap} is insufficient; the spectral support requires l_max >= {}",
                self.l_max
            ))),
            _ => Ok(()),
        }
    }
}

fn tail_bound(f: &dyn Multiplier, lambda_max: f64) -> f64 {
    let lm = lambda_max.floor();
    // first degree with some eigenvalue above lambda_max
    let l0 = ((-1.0 + (1.0 + 4.0 * lm).sqrt()) / 2.0).floor().max(0.0) as u64;
    let l0 = (l0..).find(|&l| (l * (l + 1)) as f64 > lm).unwrap();
    let top = lm as u64;
    let mut total = 0.0;
    if l0 <= top {
        let count = ((top + 1) * (top + 1) - l0 * l0) as f64;
        total += f.sup_above(lm) * count / (4.0 * PI);
    }
    let mut l = top.max(l0.saturating_sub(1)) + 1;
    loop {
        let term = (2 * l + 1) as f64 / (4.0 * PI) * f.sup_above(l as f64);
        total += term;
        if term < 1e-18 * total.max(1e-300) || term == 0.0 || l > top + 50_000_000 {
            break;
        }
        l += 1;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn built_ins_evaluate() {
        let reg = MultiplierRegistry::default();
        let b = reg.build(&MultiplierSpec::bump(0.25, 1.0)).unwrap();
        assert_eq!(b.eval(0.25), 0.0);
        assert_eq!(b.eval(1.2), 0.0);
        assert!((b.eval(0.625) - 1.0).abs() < 1e-15);
        let br = reg.build(&MultiplierSpec::bochner_riesz(1.0, 0.5)).unwrap();
        assert!((br.eval(1.0) - 0.5).abs() < 1e-15);
        assert_eq!(br.eval(2.0), 0.0);
        let h = reg.build(&MultiplierSpec::heat(0.5)).unwrap();
        assert!((h.eval(2.0) - (-1.0f64).exp()).abs() < 1e-15);
        let z = reg.build(&MultiplierSpec::indicator_zero()).unwrap();
        assert_eq!((z.eval(0.0), z.eval(1.0)), (1.0, 0.0));
        let t = reg
            .build(&MultiplierSpec::tabulated(vec![0.0, 1.0], vec![0.0, 1.0]))
            .unwrap();
        assert!((t.eval(0.3) - 0.3).abs() < 1e-15);
        assert!(reg.build(&MultiplierSpec::new("nope")).is_err());
        assert!(reg.build(&MultiplierSpec::bump(0.5, 0.2)).is_err());
    }

    #[test]
    fn combinators_and_round_trip() {
        let reg = MultiplierRegistry::default();
        let spec = MultiplierSpec::rescaled(
            MultiplierSpec::sqrt_arg(MultiplierSpec::bump(0.25, 1.0)),
            0.01,
        );
        let f = reg.build(&spec).unwrap();
        // sqrt(0.01 lambda) = 0.625 at lambda = 39.0625
        assert!((f.eval(39.0625) - 1.0).abs() < 1e-12);
        assert!((f.support_max().unwrap() - 100.0).abs() < 1e-12);
        let json = serde_json::to_string(&f.spec()).unwrap();
        let back: MultiplierSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(reg.build(&back).unwrap().eval(30.0), f.eval(30.0));
    }

    #[test]
    fn norm_n2_examples() {
        let one = Tabulated::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!((norm_n2(&one, 7).unwrap() - 1.0).abs() < 1e-15);
        let ramp = Tabulated::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!((norm_n2(&ramp, 2).unwrap() - (5.0f64 / 8.0).sqrt()).abs() < 1e-15);
        // (1 - lambda)_+ is decreasing: each cell sup sits at its left end
        let br = BochnerRiesz::new(1.0, 1.0).unwrap();
        for n in [1, 3, 16] {
            let exact = ((0..n)
                .map(|i| (1.0 - i as f64 / n as f64).powi(2))
                .sum::<f64>()
                / n as f64)
                .sqrt();
            assert!((norm_n2(&br, n).unwrap() - exact).abs() < 1e-6);
        }
    }

    #[test]
    fn heat_truncation_is_certified() {
        let h = Heat::new(0.25).unwrap();
        let t = Truncation::for_multiplier(&h, 1e-12).unwrap();
        assert!(t.tail_bound < 1e-12);
        assert!(tail_bound(&h, t.lambda_max - 1.0) >= 1e-12);
        let b = Bump::standard();
        let t = Truncation::for_multiplier(&b, 1e-12).unwrap();
        assert_eq!((t.lambda_max, t.tail_bound), (1.0, 0.0));
        assert!(t.within(Some(0)).is_err());
        assert!(t.within(Some(1)).is_ok());
    }
}
