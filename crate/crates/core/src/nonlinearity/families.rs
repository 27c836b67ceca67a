//! Built-in nonlinearity families.

use serde_json::{json, Value};

use super::{NonlinearLaw, NonlinearityError};
use crate::quadrature::integrate_1d;

/// `f(u) = a·u^m + c`, `F(u) = a·u^(m+1)/(m+1) + c·u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Power {
    pub m: f64,
    pub a: f64,
    pub c: f64,
}

impl Power {
    pub fn new(m: f64, a: f64, c: f64) -> Result<Self, NonlinearityError> {
        if !(m >= 0.0 && m.is_finite() && a.is_finite() && c.is_finite()) {
            return Err(NonlinearityError::InvalidParams(format!(
                "power family needs finite m >= 0, a, c (got m={m}, a={a}, c={c})"
            )));
        }
        Ok(Power { m, a, c })
    }

    fn integer_exponent(&self) -> Option<i32> {
        (self.m.fract() == 0.0 && self.m <= 64.0).then_some(self.m as i32)
    }

    fn pow(&self, u: f64, e: f64) -> f64 {
        if e == 0.0 {
            1.0
        } else if e.fract() == 0.0 && e.abs() <= 64.0 {
            u.powi(e as i32)
        } else {
            u.powf(e)
        }
    }
}

impl NonlinearLaw for Power {
    fn family(&self) -> &'static str {
        "power"
    }
    fn params(&self) -> Value {
        json!({"family": "power", "m": self.m, "a": self.a, "c": self.c})
    }
    fn domain(&self) -> (f64, f64) {
        match self.integer_exponent() {
            Some(_) => (f64::NEG_INFINITY, f64::INFINITY),
            None => (0.0, f64::INFINITY),
        }
    }
    fn f(&self, u: f64) -> f64 {
        self.a * self.pow(u, self.m) + self.c
    }
    fn fprime(&self, u: f64) -> f64 {
        if self.m == 0.0 {
            0.0
        } else {
            self.a * self.m * self.pow(u, self.m - 1.0)
        }
    }
    fn antiderivative(&self, u: f64) -> f64 {
        self.a * self.pow(u, self.m + 1.0) / (self.m + 1.0) + self.c * u
    }
}

/// `f(u) = λu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear {
    pub lambda: f64,
}

impl NonlinearLaw for Linear {
    fn family(&self) -> &'static str {
        "linear"
    }
    fn params(&self) -> Value {
        json!({"family": "linear", "lambda": self.lambda})
    }
    fn f(&self, u: f64) -> f64 {
        self.lambda * u
    }
    fn fprime(&self, _u: f64) -> f64 {
        self.lambda
    }
    fn antiderivative(&self, u: f64) -> f64 {
        // Written as ½·f(u)·u so that u·f − 2F cancels exactly.
        0.5 * (self.lambda * u) * u
    }
}

/// `f(u) = 3 − √(1 + 2√u) + 8√u` on `u ≥ 0`, the law printed alongside the
/// quartic radial example. Kept verbatim.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Example1Printed;

impl NonlinearLaw for Example1Printed {
    fn family(&self) -> &'static str {
        "example1_printed"
    }
    fn params(&self) -> Value {
        json!({"family": "example1_printed"})
    }
    fn domain(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
    fn f(&self, u: f64) -> f64 {
        let s = u.sqrt();
        3.0 - (1.0 + 2.0 * s).sqrt() + 8.0 * s
    }
    fn fprime(&self, u: f64) -> f64 {
        if u == 0.0 {
            return f64::INFINITY;
        }
        let s = u.sqrt();
        let w = 1.0 + 2.0 * s;
        (4.0 - 0.5 / w.sqrt()) / s
    }
    fn antiderivative(&self, u: f64) -> f64 {
        // ∫₀ᵘ √(1+2√s) ds = W^{5/2}/5 − W^{3/2}/3 + 2/15 with W = 1 + 2√u.
        let s = u.sqrt();
        let w = 1.0 + 2.0 * s;
        let root = w.powf(2.5) / 5.0 - w.powf(1.5) / 3.0 + 2.0 / 15.0;
        3.0 * u - root + 16.0 / 3.0 * u * s
    }
}

/// Monotone cubic (PCHIP) interpolant through `(u_k, f_k)` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    us: Vec<f64>,
    fs: Vec<f64>,
    slopes: Vec<f64>,
    base: f64,
    /// `F` at every knot, measured from `base`.
    knot_f: Vec<f64>,
}

impl Tabulated {
    pub fn new(us: Vec<f64>, fs: Vec<f64>) -> Result<Self, NonlinearityError> {
        if us.len() != fs.len() {
            return Err(NonlinearityError::InvalidTable("u and f lengths differ".into()));
        }
        if us.len() < 2 {
            return Err(NonlinearityError::InvalidTable("need at least 2 samples".into()));
        }
        if us.iter().chain(&fs).any(|v| !v.is_finite()) {
            return Err(NonlinearityError::InvalidTable("non-finite sample".into()));
        }
        if us.windows(2).any(|w| w[1] <= w[0]) {
            return Err(NonlinearityError::InvalidTable("u samples must be strictly increasing".into()));
        }
        let slopes = pchip_slopes(&us, &fs);
        let base = if us[0] <= 0.0 && 0.0 <= us[us.len() - 1] { 0.0 } else { us[0] };
        let mut t = Tabulated {
            us,
            fs,
            slopes,
            base,
            knot_f: Vec::new(),
        };
        let mut knot_f = vec![0.0; t.us.len()];
        for k in 1..t.us.len() {
            knot_f[k] = knot_f[k - 1] + t.panel_integral(k - 1, t.us[k]);
        }
        let at_base = t.integral_from_first(base, &knot_f);
        t.knot_f = knot_f.into_iter().map(|v| v - at_base).collect();
        Ok(t)
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.us.iter().copied().zip(self.fs.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.us.is_empty()
    }

    /// Base point of `F`: 0 when the table covers it, else the first sample.
    pub fn base(&self) -> f64 {
        self.base
    }

    fn panel(&self, u: f64) -> usize {
        match self.us.binary_search_by(|v| v.partial_cmp(&u).unwrap()) {
            Ok(k) => k.min(self.us.len() - 2),
            Err(k) => k.saturating_sub(1).min(self.us.len() - 2),
        }
    }

    fn hermite(&self, k: usize, u: f64) -> f64 {
        let h = self.us[k + 1] - self.us[k];
        let t = (u - self.us[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.fs[k]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[k]
            + (-2.0 * t3 + 3.0 * t2) * self.fs[k + 1]
            + (t3 - t2) * h * self.slopes[k + 1]
    }

    fn panel_integral(&self, k: usize, u: f64) -> f64 {
        // G7–K15 is exact on the cubic pieces.
        integrate_1d(|s| self.hermite(k, s), self.us[k], u, 1e-14).unwrap_or(f64::NAN)
    }

    fn integral_from_first(&self, u: f64, knot_f: &[f64]) -> f64 {
        let k = self.panel(u);
        knot_f[k] + self.panel_integral(k, u)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["u", "f"])?;
        for (u, f) in self.samples() {
            w.write_record([format!("{u:.16e}"), format!("{f:.16e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fritsch–Carlson slopes for a shape-preserving cubic.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

impl NonlinearLaw for Tabulated {
    fn family(&self) -> &'static str {
        "tabulated"
    }
    fn params(&self) -> Value {
        json!({"family": "tabulated", "u": self.us, "f": self.fs})
    }
    fn domain(&self) -> (f64, f64) {
        (self.us[0], self.us[self.us.len() - 1])
    }
    fn f(&self, u: f64) -> f64 {
        self.hermite(self.panel(u), u)
    }
    fn fprime(&self, u: f64) -> f64 {
        super::centered_fprime(self, u)
    }
    fn antiderivative(&self, u: f64) -> f64 {
        self.integral_from_first(u, &self.knot_f)
    }
}
