//! Radially symmetric fields `u(x) = φ(|x − c|)`.

use std::sync::Arc;

use nalgebra::Matrix2;

use super::ScalarField;
use crate::geometry::{Point, Vec2};

/// A radial profile `φ(r)` with its first two derivatives.
pub trait RadialProfileFn: Send + Sync {
    fn u(&self, r: f64) -> f64;
    fn du(&self, r: f64) -> f64;
    fn d2u(&self, r: f64) -> f64;

    /// `φ′(r)/r`, continued by `φ″(0)` at the origin.
    fn du_over_r(&self, r: f64) -> f64 {
        if r < 1e-8 {
            self.d2u(r)
        } else {
            self.du(r) / r
        }
    }

    /// `−Δu = −(φ″ + φ′/r)`.
    fn neg_laplacian(&self, r: f64) -> f64 {
        -(self.d2u(r) + self.du_over_r(r))
    }

    /// Largest radius on which the profile is defined.
    fn extent(&self) -> f64 {
        f64::INFINITY
    }

    fn describe(&self) -> String;
}

/// `φ(r) = Σ c_k r^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPolynomial {
    pub coeffs: Vec<f64>,
}

impl RadialPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        RadialPolynomial { coeffs }
    }

    /// True when no odd power `r^1` spoils smoothness at the origin.
    pub fn is_even_at_origin(&self) -> bool {
        self.coeffs.get(1).is_none_or(|c| *c == 0.0)
    }
}

impl RadialProfileFn for RadialPolynomial {
    fn u(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c)
    }

    fn du(&self, r: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * r + k as f64 * c)
    }

    fn d2u(&self, r: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(2)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * r + (k * (k - 1)) as f64 * c)
    }

    fn du_over_r(&self, r: f64) -> f64 {
        // Σ k c_k r^(k−2); the k = 1 term is singular at 0 and only kept off it.
        let tail = self
            .coeffs
            .iter()
            .enumerate()
            .skip(2)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * r + k as f64 * c);
        match self.coeffs.get(1) {
            Some(c1) if *c1 != 0.0 => tail + c1 / r,
            _ => tail,
        }
    }

    fn describe(&self) -> String {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(k, c)| format!("{c}*r^{k}"))
            .collect();
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join(" + ")
        }
    }
}

/// `u(x) = φ(|x − center|)`.
#[derive(Clone)]
pub struct RadialField {
    pub name: String,
    pub center: Point,
    pub profile: Arc<dyn RadialProfileFn>,
}

impl RadialField {
    pub fn new(name: impl Into<String>, center: Point, profile: Arc<dyn RadialProfileFn>) -> Self {
        RadialField {
            name: name.into(),
            center,
            profile,
        }
    }
}

impl std::fmt::Debug for RadialField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialField")
            .field("name", &self.name)
            .field("center", &self.center)
            .field("profile", &self.profile.describe())
            .finish()
    }
}

impl ScalarField for RadialField {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn value(&self, x: Point) -> f64 {
        self.profile.u((x - self.center).norm())
    }

    fn gradient(&self, x: Point) -> Vec2 {
        let d = x - self.center;
        let r = d.norm();
        if r == 0.0 {
            return Vec2::zeros();
        }
        // φ′(r)·d/r written so that exact zeros of φ′ stay exact.
        self.profile.du(r) * (d / r)
    }

    fn laplacian(&self, x: Point) -> f64 {
        -self.profile.neg_laplacian((x - self.center).norm())
    }

    fn hessian(&self, x: Point) -> Matrix2<f64> {
        let d = x - self.center;
        let r = d.norm();
        let a = self.profile.du_over_r(r);
        if r < 1e-12 {
            return Matrix2::identity() * self.profile.d2u(r);
        }
        let e = d / r;
        Matrix2::identity() * a + (self.profile.d2u(r) - a) * e * e.transpose()
    }

    fn radial(&self) -> Option<(Point, Arc<dyn RadialProfileFn>)> {
        Some((self.center, self.profile.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives() {
        let p = RadialPolynomial::new(vec![0.0, 0.0, 1.0, -1.0, 0.25]);
        for &r in &[0.0, 0.3, 1.0, 1.7, 2.0] {
            assert!((p.du(r) - r * (r - 1.0) * (r - 2.0)).abs() < 1e-14);
            assert!((-p.neg_laplacian(r) - (4.0 * r * r - 9.0 * r + 4.0)).abs() < 1e-13);
        }
        assert_eq!(p.u(2.0), 0.0);
        assert!(p.is_even_at_origin());
        assert!(!RadialPolynomial::new(vec![0.0, 1.0]).is_even_at_origin());
    }

    #[test]
    fn hessian_trace_is_laplacian() {
        let f = RadialField::new(
            "p",
            Point::new(0.2, -0.1),
            Arc::new(RadialPolynomial::new(vec![0.0, 0.0, 1.0, -1.0, 0.25])),
        );
        for x in [Point::new(0.5, 0.1), Point::new(-1.0, 0.7), Point::new(0.2, -0.1)] {
            assert!((f.hessian(x).trace() - f.laplacian(x)).abs() < 1e-12);
        }
    }
}
