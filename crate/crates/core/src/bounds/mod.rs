//! Pointwise envelope bounds for the profiles and scans measuring the
//! constants in them.
//!
//! Every envelope is evaluated with its constant set to 1; a scan then
//! reports `sup |Y| / envelope` per dyadic block of degrees, which is the
//! empirical constant.

mod families;
mod scan;

pub use families::{
    BesselMain, BesselTail, ClassicalI, ClassicalII, ClassicalIII, Combined, HermiteMain,
    HermiteTail,
};
pub use scan::{
    sup_ratio_scan, tail_constant_search, ArgMax, BlockSup, EnvelopeReport, GridInfo, ScanSpec,
    TailCandidate, TailSearch,
};

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::harmonics::HarmonicIndex;

/// `(a, b)` with `b = |m|/(l + 1/2)` and `a = sqrt(1 - b^2)`: the turning
/// point of `Y(l, m; .)` sits at `|x| = a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoints {
    pub a: f64,
    pub b: f64,
}

pub fn critical_points(idx: HarmonicIndex) -> CriticalPoints {
    critical_points_raw(idx.l, idx.m.unsigned_abs())
}

#[inline]
pub(crate) fn critical_points_raw(l: u32, m: u32) -> CriticalPoints {
    let h = l as f64 + 0.5;
    let m = m as f64;
    let b = m / h;
    let a = ((1.0 - b) * (1.0 + b)).sqrt();
    CriticalPoints { a, b }
}

/// Parameters shared by the envelope families; unused fields are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeParams {
    /// Regime split `|m|` vs `epsilon (l + 1/2)`.
    pub epsilon: f64,
    /// Tail threshold multiplier `K >= 2`.
    pub tail_k: f64,
    /// Gaussian tail rate `c > 0`.
    pub tail_c: f64,
}

impl Default for EnvelopeParams {
    fn default() -> Self {
        Self {
            epsilon: 0.5,
            tail_k: 2.0,
            tail_c: 0.1,
        }
    }
}

impl EnvelopeParams {
    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(domain("epsilon", self.epsilon, "(0, 1)"));
        }
        if !(self.tail_k >= 2.0 && self.tail_k.is_finite()) {
            return Err(domain("K", self.tail_k, "[2, inf)"));
        }
        if !(self.tail_c > 0.0 && self.tail_c.is_finite()) {
            return Err(domain("c", self.tail_c, "(0, inf)"));
        }
        Ok(())
    }
}

/// Per-order data shared by all envelopes while scanning a row of points.
pub struct RowContext<'a> {
    pub l: u32,
    pub m: u32,
    pub crit: CriticalPoints,
    pub xs: &'a [f64],
    pub x2: &'a [f64],
    /// `(1 - x^2)^{1/4}`
    pub quarter: &'a [f64],
    /// `|x (1 - x^2)|^{1/6}`
    pub sixth: &'a [f64],
}

/// A pointwise upper envelope for `|Y(l, m; x)|` with unit constant.
pub trait Envelope: Send + Sync {
    fn family(&self) -> &'static str;

    fn params(&self) -> EnvelopeParams;

    /// `Err(guard)` names the violated domain condition.
    fn check(&self, l: u32, m: u32, x: f64) -> std::result::Result<(), &'static str>;

    /// Natural log of the envelope; only meaningful where `check` passes.
    fn ln_value(&self, l: u32, m: u32, x: f64) -> f64;

    /// Whether scans should compare in the log domain (for envelopes that
    /// leave the `f64` range).
    fn log_domain(&self) -> bool {
        false
    }

    /// Writes the reciprocal envelope (or its log when `log_domain`) at each
    /// point of the row, `0` (or `-inf`) outside the guard. Returns whether
    /// any point was admitted.
    fn fill_inverse(&self, row: &RowContext<'_>, out: &mut [f64]) -> bool {
        let mut any = false;
        let log = self.log_domain();
        for (o, &x) in out.iter_mut().zip(row.xs) {
            *o = if self.check(row.l, row.m, x).is_ok() {
                any = true;
                let v = -self.ln_value(row.l, row.m, x);
                if log {
                    v
                } else {
                    v.exp()
                }
            } else if log {
                f64::NEG_INFINITY
            } else {
                0.0
            };
        }
        any
    }
}

/// Envelope value at `(idx, x)`, checking the family's guards.
pub fn envelope_value(e: &dyn Envelope, idx: HarmonicIndex, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(domain("x", x, "[-1, 1]"));
    }
    let m = idx.m.unsigned_abs();
    e.check(idx.l, m, x)
        .map_err(|guard| Error::Precondition(format!("{} requires {guard}", e.family())))?;
    Ok(e.ln_value(idx.l, m, x).exp())
}

type Factory = fn(&EnvelopeParams) -> Arc<dyn Envelope>;

/// Envelope families registered by name.
pub struct EnvelopeRegistry {
    factories: BTreeMap<&'static str, Factory>,
}

impl Default for EnvelopeRegistry {
    fn default() -> Self {
        let mut r = Self {
            factories: BTreeMap::new(),
        };
        r.register("classical_i", |_| Arc::new(ClassicalI));
        r.register("classical_ii", |_| Arc::new(ClassicalII));
        r.register("classical_iii", |_| Arc::new(ClassicalIII));
        r.register("hermite_regime_main", |p| {
            Arc::new(HermiteMain::new(p.epsilon))
        });
        r.register("hermite_regime_tail", |p| {
            Arc::new(HermiteTail::new(p.epsilon, p.tail_k, p.tail_c))
        });
        r.register("bessel_regime_main", |p| {
            Arc::new(BesselMain::new(p.epsilon))
        });
        r.register("bessel_regime_tail", |p| {
            Arc::new(BesselTail::new(p.epsilon))
        });
        r.register("combined", |_| Arc::new(Combined));
        r
    }
}

impl EnvelopeRegistry {
    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.factories.insert(name, factory);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn build(&self, name: &str, params: &EnvelopeParams) -> Result<Arc<dyn Envelope>> {
        params.validate()?;
        let factory = self.factories.get(name).ok_or_else(|| Error::Unknown {
            kind: "envelope family",
            name: name.to_owned(),
            known: self.names().join(", "),
        })?;
        Ok(factory(params))
    }
}
