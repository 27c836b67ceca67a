//! Scalar fields `u` on a domain, with gradient and Laplacian.
//!
//! Two carriers implement [`ScalarField`]: closed forms with exact
//! derivatives ([`analytic`]) and lattice values with stencil calculus
//! ([`grid`]). Radially symmetric fields additionally expose their profile so
//! integrals can take the exact 1-D path.

pub mod analytic;
pub mod grid;
pub mod radial;

use std::sync::Arc;

use nalgebra::Matrix2;
use thiserror::Error;

use crate::geometry::{Containment, Domain, Point, Vec2};
use crate::lattice::Lattice;
use crate::quadrature::{self, IntegralResult, QuadratureError, Region};

pub use analytic::{field_catalog, AnalyticFn, Translated};
pub use grid::{GridField, NodeKind, Provenance};
pub use radial::{RadialField, RadialPolynomial, RadialProfileFn};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("query point ({0}, {1}) is outside the domain")]
    Exterior(f64, f64),
    #[error("no grid data near ({0}, {1})")]
    NoData(f64, f64),
    #[error("grid needs at least 16 nodes per axis, got {0}")]
    TooFewNodes(usize),
    #[error("degenerate bounding box")]
    DegenerateBox,
    #[error("malformed grid csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

pub type SharedField = Arc<dyn ScalarField>;

pub trait ScalarField: Send + Sync {
    fn name(&self) -> String;
    fn value(&self, x: Point) -> f64;
    fn gradient(&self, x: Point) -> Vec2;
    fn laplacian(&self, x: Point) -> f64;

    /// Second derivatives; central differences of the gradient by default.
    fn hessian(&self, x: Point) -> Matrix2<f64> {
        let e = self.fd_step();
        let gx = (self.gradient(x + Vec2::new(e, 0.0)) - self.gradient(x - Vec2::new(e, 0.0))) / (2.0 * e);
        let gy = (self.gradient(x + Vec2::new(0.0, e)) - self.gradient(x - Vec2::new(0.0, e))) / (2.0 * e);
        let off = 0.5 * (gx.y + gy.x);
        Matrix2::new(gx.x, off, off, gy.y)
    }

    fn fd_step(&self) -> f64 {
        1e-5
    }

    fn is_analytic(&self) -> bool {
        true
    }

    /// Center and profile when the field is `u(|x − c|)`.
    fn radial(&self) -> Option<(Point, Arc<dyn RadialProfileFn>)> {
        None
    }

    /// Node spacing of discrete carriers.
    fn spacing(&self) -> Option<f64> {
        None
    }

    fn as_grid(&self) -> Option<&GridField> {
        None
    }
}

fn check_query(field: &dyn ScalarField, domain: &Domain, x: Point) -> Result<(), FieldError> {
    if domain.contains(x) == Containment::Exterior {
        return Err(FieldError::Exterior(x.x, x.y));
    }
    if let Some(g) = field.as_grid() {
        if !g.value(x).is_finite() {
            return Err(FieldError::NoData(x.x, x.y));
        }
    }
    Ok(())
}

pub fn value_at(field: &dyn ScalarField, domain: &Domain, x: Point) -> Result<f64, FieldError> {
    check_query(field, domain, x)?;
    Ok(field.value(x))
}

pub fn gradient_at(field: &dyn ScalarField, domain: &Domain, x: Point) -> Result<Vec2, FieldError> {
    check_query(field, domain, x)?;
    Ok(field.gradient(x))
}

pub fn laplacian_at(field: &dyn ScalarField, domain: &Domain, x: Point) -> Result<f64, FieldError> {
    check_query(field, domain, x)?;
    let l = field.laplacian(x);
    if l.is_finite() {
        Ok(l)
    } else {
        Err(FieldError::NoData(x.x, x.y))
    }
}

/// Field data at one point, handed to integrands.
#[derive(Debug, Clone, Copy)]
pub struct FieldPoint {
    pub x: Point,
    pub u: f64,
    pub grad: Vec2,
    pub lap: f64,
}

impl FieldPoint {
    pub fn eval(field: &dyn ScalarField, x: Point) -> Self {
        FieldPoint {
            x,
            u: field.value(x),
            grad: field.gradient(x),
            lap: field.laplacian(x),
        }
    }
}

/// Quadrature lattice for integrals of `field` over `domain`: the field's own
/// lattice for grid fields, otherwise `n` nodes along the longer bbox side.
pub fn quadrature_lattice(field: &dyn ScalarField, domain: &Domain, n: usize) -> Lattice {
    match field.as_grid() {
        Some(g) => *g.lattice(),
        None => Lattice::for_domain(domain, n, 0),
    }
}

/// Integrate an expression of the field over a region (cut-cell rule).
pub fn integrate<E>(field: &dyn ScalarField, region: &Region<'_>, lattice: &Lattice, expr: E) -> IntegralResult
where
    E: Fn(&FieldPoint) -> f64 + Sync,
{
    quadrature::integrate_region(region, lattice, |x| expr(&FieldPoint::eval(field, x)))
}

/// Radial integrand data at radius `r`.
#[derive(Debug, Clone, Copy)]
pub struct RadialPoint {
    pub r: f64,
    pub u: f64,
    pub du: f64,
    pub lap: f64,
}

impl RadialPoint {
    pub fn eval(profile: &dyn RadialProfileFn, r: f64) -> Self {
        RadialPoint {
            r,
            u: profile.u(r),
            du: profile.du(r),
            lap: -profile.neg_laplacian(r),
        }
    }
}

/// Tolerance of the exact radial path.
pub const RADIAL_TOL: f64 = 1e-10;

/// `∫ expr` over the annulus `a < |x − c| < b` by adaptive Gauss–Kronrod.
pub fn integrate_radial<E>(profile: &dyn RadialProfileFn, a: f64, b: f64, tol: f64, expr: E) -> Result<f64, FieldError>
where
    E: Fn(&RadialPoint) -> f64,
{
    Ok(quadrature::integrate_annulus(
        |r| expr(&RadialPoint::eval(profile, r)),
        a,
        b,
        tol,
    )?)
}

/// Closed circle of `segments` vertices.
pub fn circle_polyline(center: Point, radius: f64, segments: usize) -> quadrature::Polyline {
    quadrature::Polyline::closed(
        (0..segments)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / segments as f64;
                center + radius * Vec2::new(t.cos(), t.sin())
            })
            .collect(),
    )
}
