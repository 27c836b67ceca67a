//! Closed-form fields and the named catalog.

use std::sync::Arc;

use nalgebra::Matrix2;
use serde_json::Value;

use super::radial::{RadialField, RadialPolynomial};
use super::{RadialProfileFn, ScalarField, SharedField};
use crate::geometry::{Point, Vec2};
use crate::registry::{check_keys, param_f64, Registry};

type ValueFn = dyn Fn(Point) -> f64 + Send + Sync;
type VectorFn = dyn Fn(Point) -> Vec2 + Send + Sync;
type MatrixFn = dyn Fn(Point) -> Matrix2<f64> + Send + Sync;

/// A field given by closures for value, gradient, Hessian.
pub struct AnalyticFn {
    name: String,
    value: Box<ValueFn>,
    gradient: Box<VectorFn>,
    hessian: Box<MatrixFn>,
}

impl AnalyticFn {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(Point) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(Point) -> Vec2 + Send + Sync + 'static,
        hessian: impl Fn(Point) -> Matrix2<f64> + Send + Sync + 'static,
    ) -> Self {
        AnalyticFn {
            name: name.into(),
            value: Box::new(value),
            gradient: Box::new(gradient),
            hessian: Box::new(hessian),
        }
    }
}

impl std::fmt::Debug for AnalyticFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticFn").field("name", &self.name).finish()
    }
}

impl ScalarField for AnalyticFn {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn value(&self, x: Point) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: Point) -> Vec2 {
        (self.gradient)(x)
    }
    fn laplacian(&self, x: Point) -> f64 {
        (self.hessian)(x).trace()
    }
    fn hessian(&self, x: Point) -> Matrix2<f64> {
        (self.hessian)(x)
    }
}

/// `v(x) = u(x + shift)`.
pub struct Translated {
    pub inner: SharedField,
    pub shift: Vec2,
}

impl Translated {
    pub fn new(inner: SharedField, shift: Vec2) -> Self {
        Translated { inner, shift }
    }
}

impl ScalarField for Translated {
    fn name(&self) -> String {
        format!("{}(x+[{}, {}])", self.inner.name(), self.shift.x, self.shift.y)
    }
    fn value(&self, x: Point) -> f64 {
        self.inner.value(x + self.shift)
    }
    fn gradient(&self, x: Point) -> Vec2 {
        self.inner.gradient(x + self.shift)
    }
    fn laplacian(&self, x: Point) -> f64 {
        self.inner.laplacian(x + self.shift)
    }
    fn hessian(&self, x: Point) -> Matrix2<f64> {
        self.inner.hessian(x + self.shift)
    }
    fn fd_step(&self) -> f64 {
        self.inner.fd_step()
    }
    fn is_analytic(&self) -> bool {
        self.inner.is_analytic()
    }
    fn radial(&self) -> Option<(Point, Arc<dyn RadialProfileFn>)> {
        self.inner.radial().map(|(c, p)| (c - self.shift, p))
    }
}

fn center_param(params: &Value) -> Result<Point, String> {
    match params.get("center") {
        None => Ok(Point::zeros()),
        Some(v) => {
            let arr: [f64; 2] = serde_json::from_value(v.clone()).map_err(|e| format!("center: {e}"))?;
            Ok(Point::new(arr[0], arr[1]))
        }
    }
}

fn radial(name: &str, params: &Value, coeffs: Vec<f64>) -> Result<SharedField, String> {
    check_keys(params, &["center"])?;
    Ok(Arc::new(RadialField::new(
        name,
        center_param(params)?,
        Arc::new(RadialPolynomial::new(coeffs)),
    )))
}

/// Named closed-form fields.
pub fn field_catalog() -> Registry<SharedField> {
    let mut reg = Registry::new("field");
    reg.register(
        "example1",
        "r^4/4 - r^3 + r^2: zero gradient on r = 1 and r = 2",
        |p| radial("example1", p, vec![0.0, 0.0, 1.0, -1.0, 0.25]),
    )
    .register("paraboloid", "x^2 + y^2", |p| radial("paraboloid", p, vec![0.0, 0.0, 1.0]))
    .register("neg_paraboloid", "-(x^2 + y^2)", |p| {
        radial("neg_paraboloid", p, vec![0.0, 0.0, -1.0])
    })
    .register("bump", "1 - r^2", |p| radial("bump", p, vec![1.0, 0.0, -1.0]))
    .register("poisson_disk", "(1 - r^2)/4, solves -Δu = 1 on the unit disk", |p| {
        radial("poisson_disk", p, vec![0.25, 0.0, -0.25])
    })
    .register("coscos", "cos(kx) cos(ky)", |p| {
        check_keys(p, &["k"])?;
        let k = param_f64(p, "k", Some(1.0))?;
        Ok(Arc::new(AnalyticFn::new(
            "coscos",
            move |x| (k * x.x).cos() * (k * x.y).cos(),
            move |x| {
                Vec2::new(
                    -k * (k * x.x).sin() * (k * x.y).cos(),
                    -k * (k * x.x).cos() * (k * x.y).sin(),
                )
            },
            move |x| {
                let (sx, cx) = (k * x.x).sin_cos();
                let (sy, cy) = (k * x.y).sin_cos();
                let k2 = k * k;
                Matrix2::new(-k2 * cx * cy, k2 * sx * sy, k2 * sx * sy, -k2 * cx * cy)
            },
        )) as SharedField)
    })
    .register("saddle_xy", "x y", |p| {
        check_keys(p, &[])?;
        Ok(Arc::new(AnalyticFn::new(
            "saddle_xy",
            |x| x.x * x.y,
            |x| Vec2::new(x.y, x.x),
            |_| Matrix2::new(0.0, 1.0, 1.0, 0.0),
        )) as SharedField)
    })
    .register("cubic_saddle", "x^3 - y^3, degenerate saddle at the origin", |p| {
        check_keys(p, &[])?;
        Ok(Arc::new(AnalyticFn::new(
            "cubic_saddle",
            |x| x.x.powi(3) - x.y.powi(3),
            |x| Vec2::new(3.0 * x.x * x.x, -3.0 * x.y * x.y),
            |x| Matrix2::new(6.0 * x.x, 0.0, 0.0, -6.0 * x.y),
        )) as SharedField)
    })
    .register("constant", "u = c", |p| {
        check_keys(p, &["c"])?;
        let c = param_f64(p, "c", Some(1.0))?;
        Ok(Arc::new(AnalyticFn::new(
            "constant",
            move |_| c,
            |_| Vec2::zeros(),
            |_| Matrix2::zeros(),
        )) as SharedField)
    })
    .register("zero", "u = 0", |p| {
        check_keys(p, &[])?;
        Ok(Arc::new(AnalyticFn::new(
            "zero",
            |_| 0.0,
            |_| Vec2::zeros(),
            |_| Matrix2::zeros(),
        )) as SharedField)
    });
    reg
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn central_gradient(f: &dyn ScalarField, x: Point, h: f64) -> Vec2 {
        Vec2::new(
            (f.value(x + Vec2::new(h, 0.0)) - f.value(x - Vec2::new(h, 0.0))) / (2.0 * h),
            (f.value(x + Vec2::new(0.0, h)) - f.value(x - Vec2::new(0.0, h))) / (2.0 * h),
        )
    }

    #[test]
    fn catalog_gradients_match_differences() {
        let cat = field_catalog();
        let pts = [Point::new(0.3, 0.7), Point::new(-0.4, 1.1), Point::new(1.3, -0.2)];
        for name in cat.names() {
            let f = cat.build(name, &json!({})).unwrap();
            for &x in &pts {
                let e1 = (central_gradient(f.as_ref(), x, 1e-3) - f.gradient(x)).norm();
                let e2 = (central_gradient(f.as_ref(), x, 5e-4) - f.gradient(x)).norm();
                if e1 > 1e-9 {
                    let order = (e1 / e2).log2();
                    assert!(order > 1.9, "{name} at {x:?}: order {order}");
                }
                let h = f.hessian(x);
                assert!((h.trace() - f.laplacian(x)).abs() < 1e-12, "{name}");
            }
        }
    }

    #[test]
    fn translated_field_shifts_everything() {
        let base = field_catalog().build("example1", &json!({})).unwrap();
        let t = Translated::new(base.clone(), Vec2::new(0.5, -0.25));
        let x = Point::new(0.1, 0.2);
        assert_eq!(t.value(x), base.value(x + Vec2::new(0.5, -0.25)));
        assert_eq!(t.radial().unwrap().0, Point::new(-0.5, 0.25));
    }

    #[test]
    fn unknown_params_rejected() {
        assert!(field_catalog().build("zero", &json!({"k": 2})).is_err());
        assert!(field_catalog().build("nope", &json!({})).is_err());
        let shifted = field_catalog().build("bump", &json!({"center": [1.0, 2.0]})).unwrap();
        assert_eq!(shifted.value(Point::new(1.0, 2.0)), 1.0);
    }
}
