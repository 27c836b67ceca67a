//! Nonlinearities `f(u)` with derivative `f′` and antiderivative
//! `F(u) = ∫₀ᵘ f`, plus the structural checks run on them.

mod families;
mod recover;

use std::sync::Arc;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

pub use families::{Example1Printed, Linear, Power, Tabulated};
pub use recover::{recover_f_from_radial, Branch, BranchReport, CONFLICT_TOL, BranchConflict, RecoveredLaw, Recovery};

use crate::quadrature::QuadratureError;
use crate::registry::{check_keys, param_f64, Registry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinearityError {
    #[error("u = {u} is outside the domain [{lo}, {hi}] of the {family} family")]
    DomainViolation {
        family: &'static str,
        u: f64,
        lo: f64,
        hi: f64,
    },
    #[error("no sign change on [{lo}, {hi}] (f = {f_lo} and {f_hi} at the ends)")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("at least 100 samples are required, got {0}")]
    TooFewSamples(usize),
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("profile is not even at r = 0 (u'(0) = {0})")]
    NotEven(f64),
    #[error("invalid interval [{0}, {1}]")]
    BadInterval(f64, f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// One nonlinearity family. Implementations return raw values; the checked
/// entry points are [`eval_f`], [`eval_fprime`] and [`eval_big_f`].
pub trait NonlinearLaw: Send + Sync + std::fmt::Debug {
    fn family(&self) -> &'static str;

    /// Parameters in config form, e.g. `{"family": "power", "m": 3, ...}`.
    fn params(&self) -> Value;

    /// Closed interval on which `f` is defined.
    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    fn f(&self, u: f64) -> f64;
    fn fprime(&self, u: f64) -> f64;

    /// `F(u) = ∫_base^u f` with `base = 0` whenever 0 is in the domain.
    fn antiderivative(&self, u: f64) -> f64;

    fn contains(&self, u: f64) -> bool {
        let (lo, hi) = self.domain();
        let scale = |v: f64| if v.is_finite() { v.abs() } else { 0.0 };
        let slack = 1e-12 * (1.0 + scale(lo).max(scale(hi)));
        u.is_finite() && u >= lo - slack && u <= hi + slack
    }
}

pub type SharedLaw = Arc<dyn NonlinearLaw>;

fn check(nl: &dyn NonlinearLaw, u: f64) -> Result<f64, NonlinearityError> {
    if nl.contains(u) {
        let (lo, hi) = nl.domain();
        Ok(u.clamp(lo, hi))
    } else {
        let (lo, hi) = nl.domain();
        Err(NonlinearityError::DomainViolation {
            family: nl.family(),
            u,
            lo,
            hi,
        })
    }
}

pub fn eval_f(nl: &dyn NonlinearLaw, u: f64) -> Result<f64, NonlinearityError> {
    Ok(nl.f(check(nl, u)?))
}

pub fn eval_fprime(nl: &dyn NonlinearLaw, u: f64) -> Result<f64, NonlinearityError> {
    Ok(nl.fprime(check(nl, u)?))
}

pub fn eval_big_f(nl: &dyn NonlinearLaw, u: f64) -> Result<f64, NonlinearityError> {
    Ok(nl.antiderivative(check(nl, u)?))
}

/// Centered difference of `f` with step `10⁻⁶·max(1, |u|)`, shifted to stay
/// inside the domain.
pub(crate) fn centered_fprime(nl: &dyn NonlinearLaw, u: f64) -> f64 {
    let (lo, hi) = nl.domain();
    let h = 1e-6 * u.abs().max(1.0);
    let (a, b) = ((u - h).max(lo), (u + h).min(hi));
    if b <= a {
        return 0.0;
    }
    (nl.f(b) - nl.f(a)) / (b - a)
}

/// Nonlinearity families by name.
pub fn law_catalog() -> Registry<SharedLaw> {
    let mut reg: Registry<SharedLaw> = Registry::new("nonlinearity");
    reg.register("power", "a*u^m + c (m >= 0)", |p| {
        check_keys(p, &["m", "a", "c"])?;
        let law = Power::new(
            param_f64(p, "m", None)?,
            param_f64(p, "a", Some(1.0))?,
            param_f64(p, "c", Some(0.0))?,
        )
        .map_err(|e| e.to_string())?;
        Ok(Arc::new(law) as SharedLaw)
    })
    .register("linear", "lambda*u", |p| {
        check_keys(p, &["lambda"])?;
        Ok(Arc::new(Linear {
            lambda: param_f64(p, "lambda", None)?,
        }) as SharedLaw)
    })
    .register("constant", "f = value", |p| {
        check_keys(p, &["value"])?;
        let v = param_f64(p, "value", None)?;
        Ok(Arc::new(Power::new(0.0, 0.0, v).map_err(|e| e.to_string())?) as SharedLaw)
    })
    .register("example1_printed", "3 - sqrt(1 + 2 sqrt(u)) + 8 sqrt(u), u >= 0", |p| {
        check_keys(p, &[])?;
        Ok(Arc::new(Example1Printed) as SharedLaw)
    })
    .register("tabulated", "monotone cubic through (u, f) samples", |p| {
        check_keys(p, &["u", "f"])?;
        let us: Vec<f64> = serde_json::from_value(p.get("u").cloned().ok_or("missing 'u'")?)
            .map_err(|e| format!("u: {e}"))?;
        let fs: Vec<f64> = serde_json::from_value(p.get("f").cloned().ok_or("missing 'f'")?)
            .map_err(|e| format!("f: {e}"))?;
        Ok(Arc::new(Tabulated::new(us, fs).map_err(|e| e.to_string())?) as SharedLaw)
    });
    reg
}

/// Build a law from a config object carrying a `family` key.
pub fn law_from_config(cfg: &Value) -> Result<SharedLaw, crate::registry::RegistryError> {
    let family = cfg.get("family").and_then(Value::as_str).unwrap_or("");
    law_catalog().build(family, cfg)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct HypothesisVerdict {
    pub a_positive: bool,
    pub fprime_positive: bool,
    pub big_f_positive: bool,
    pub overall: bool,
}

/// Sampled check of `u·f(u) − 2F(u) > 0`, `f′ > 0` and `F > 0`.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct HypothesisAReport {
    pub law: Value,
    pub interval: [f64; 2],
    pub samples: usize,
    #[serde(rename = "min_A")]
    pub min_a: f64,
    #[serde(rename = "argmin_A")]
    pub argmin_a: f64,
    pub min_fprime: f64,
    #[serde(rename = "min_F")]
    pub min_big_f: f64,
    pub verdict: HypothesisVerdict,
}

/// Chebyshev points of the first kind mapped onto `(lo, hi)`, ascending.
pub fn chebyshev_nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .rev()
        .map(|k| {
            let x = ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos();
            0.5 * (lo + hi) + 0.5 * (hi - lo) * x
        })
        .collect()
}

pub fn check_hypothesis_a(
    nl: &dyn NonlinearLaw,
    interval: (f64, f64),
    n_samples: usize,
) -> Result<HypothesisAReport, NonlinearityError> {
    let (lo, hi) = interval;
    if n_samples < 100 {
        return Err(NonlinearityError::TooFewSamples(n_samples));
    }
    if !(lo < hi) {
        return Err(NonlinearityError::BadInterval(lo, hi));
    }
    check(nl, lo)?;
    check(nl, hi)?;
    let mut min_a = f64::INFINITY;
    let mut argmin_a = lo;
    let mut min_fp = f64::INFINITY;
    let mut min_ff = f64::INFINITY;
    let mut a_pos = true;
    for u in chebyshev_nodes(lo, hi, n_samples) {
        let f = eval_f(nl, u)?;
        let big = eval_big_f(nl, u)?;
        let a = u * f - 2.0 * big;
        // A sample counts as positive only above the rounding level of the
        // two terms it cancels.
        if a <= 1e-12 * ((u * f).abs() + 2.0 * big.abs()) {
            a_pos = false;
        }
        if a < min_a {
            min_a = a;
            argmin_a = u;
        }
        min_fp = min_fp.min(eval_fprime(nl, u)?);
        min_ff = min_ff.min(big);
    }
    let verdict = HypothesisVerdict {
        a_positive: a_pos,
        fprime_positive: min_fp > 0.0,
        big_f_positive: min_ff > 0.0,
        overall: a_pos && min_fp > 0.0 && min_ff > 0.0,
    };
    Ok(HypothesisAReport {
        law: nl.params(),
        interval: [lo, hi],
        samples: n_samples,
        min_a,
        argmin_a,
        min_fprime: min_fp,
        min_big_f: min_ff,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SignChange {
    pub u0: f64,
    pub f_u0: f64,
    /// Sign changes seen by a 1000-point scan of the interval.
    pub scan_sign_changes: usize,
    pub unique: bool,
}

/// Bisection for a root of `f` on `[lo, hi]`.
pub fn find_sign_change(nl: &dyn NonlinearLaw, interval: (f64, f64)) -> Result<SignChange, NonlinearityError> {
    let (mut a, mut b) = interval;
    if !(a < b) {
        return Err(NonlinearityError::BadInterval(a, b));
    }
    let mut fa = eval_f(nl, a)?;
    let fb = eval_f(nl, b)?;
    if fa == 0.0 || fb == 0.0 {
        let u0 = if fa == 0.0 { a } else { b };
        let n = count_sign_changes(nl, interval)?;
        return Ok(SignChange {
            u0,
            f_u0: 0.0,
            scan_sign_changes: n,
            unique: n <= 1,
        });
    }
    if fa * fb > 0.0 {
        return Err(NonlinearityError::NoSignChange {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }
    let mut mid = 0.5 * (a + b);
    let mut fm = eval_f(nl, mid)?;
    while fm.abs() >= 1e-12 && b - a >= 1e-14 {
        if (fa < 0.0) == (fm < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
        let next = 0.5 * (a + b);
        if next == mid {
            break;
        }
        mid = next;
        fm = eval_f(nl, mid)?;
    }
    let n = count_sign_changes(nl, interval)?;
    Ok(SignChange {
        u0: mid,
        f_u0: fm,
        scan_sign_changes: n,
        unique: n <= 1,
    })
}

fn count_sign_changes(nl: &dyn NonlinearLaw, (lo, hi): (f64, f64)) -> Result<usize, NonlinearityError> {
    let mut changes = 0;
    let mut prev = 0.0f64;
    for k in 0..1000 {
        let u = lo + (hi - lo) * k as f64 / 999.0;
        let v = eval_f(nl, u)?;
        if v != 0.0 {
            if prev != 0.0 && (v > 0.0) != (prev > 0.0) {
                changes += 1;
            }
            prev = v;
        }
    }
    Ok(changes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn build(cfg: Value) -> SharedLaw {
        law_from_config(&cfg).unwrap()
    }

    #[test]
    fn eval_examples() {
        let cube = build(json!({"family": "power", "m": 3, "a": 1, "c": 0}));
        assert_eq!(eval_big_f(cube.as_ref(), 1.0).unwrap(), 0.25);
        assert_eq!(eval_f(&Example1Printed, 0.0).unwrap(), 2.0);
        let lin = build(json!({"family": "linear", "lambda": 2}));
        assert_eq!(eval_fprime(lin.as_ref(), 7.0).unwrap(), 2.0);
        let half = build(json!({"family": "power", "m": 0.5}));
        assert!(matches!(
            eval_f(half.as_ref(), -1.0),
            Err(NonlinearityError::DomainViolation { .. })
        ));
        assert!(eval_f(&Example1Printed, -0.1).is_err());
        assert!(law_from_config(&json!({"family": "power", "m": 1, "q": 2})).is_err());
        assert!(law_from_config(&json!({"family": "cubic"})).is_err());
    }

    #[test]
    fn hypothesis_examples() {
        let r = check_hypothesis_a(&Power::new(3.0, 1.0, 0.0).unwrap(), (0.0, 1.0), 200).unwrap();
        assert!(r.verdict.overall);
        let r = check_hypothesis_a(&Power::new(0.5, 1.0, 0.0).unwrap(), (0.0, 1.0), 200).unwrap();
        assert!(!r.verdict.overall && r.min_a < 0.0);
        let r = check_hypothesis_a(&Linear { lambda: 2.0 }, (0.0, 1.0), 200).unwrap();
        assert!(!r.verdict.a_positive);
        assert_eq!(r.min_a, 0.0);
        assert!(matches!(
            check_hypothesis_a(&Linear { lambda: 2.0 }, (0.0, 1.0), 50),
            Err(NonlinearityError::TooFewSamples(50))
        ));
        let v = serde_json::to_value(&r).unwrap();
        assert!(v.get("min_A").is_some() && v.get("min_F").is_some());
    }

    #[test]
    fn sign_change_examples() {
        let s = find_sign_change(&Power::new(1.0, 1.0, -0.5).unwrap(), (0.0, 1.0)).unwrap();
        assert!((s.u0 - 0.5).abs() < 1e-12 && s.unique);
        assert!(matches!(
            find_sign_change(&Power::new(3.0, 1.0, 0.0).unwrap(), (1.0, 2.0)),
            Err(NonlinearityError::NoSignChange { .. })
        ));
        // The printed law stays above 2 for u >= 0, so there is no root to find.
        assert!(matches!(
            find_sign_change(&Example1Printed, (0.0, 0.1)),
            Err(NonlinearityError::NoSignChange { .. })
        ));
        let cos_like = Tabulated::new(vec![0.0, 1.0, 2.0, 3.0], vec![1.0, -1.0, 1.0, -1.0]).unwrap();
        let s = find_sign_change(&cos_like, (0.0, 3.0)).unwrap();
        assert!(!s.unique && s.scan_sign_changes == 3);
        assert!(s.f_u0.abs() < 1e-12);
    }

    #[test]
    fn chebyshev_nodes_are_interior_and_sorted() {
        let x = chebyshev_nodes(0.0, 1.0, 100);
        assert!(x[0] > 0.0 && x[99] < 1.0);
        assert!(x.windows(2).all(|w| w[0] < w[1]));
    }
}
