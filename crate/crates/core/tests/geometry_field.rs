use std::f64::consts::PI;

use peaklab::field::{field_catalog, integrate, integrate_radial, quadrature_lattice, ScalarField, RADIAL_TOL};
use peaklab::geometry::{Containment, Domain};
use peaklab::quadrature::{integrate_domain, Region};
use peaklab::{Point, Vec2};
use proptest::prelude::*;
use serde_json::json;

fn shapes() -> Vec<Domain> {
    vec![
        Domain::disk(Point::new(0.3, -0.2), 1.5).unwrap(),
        Domain::rectangle(Point::new(-1.0, 0.0), Point::new(2.0, 1.0)).unwrap(),
        Domain::convex_polygon(vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.5, 1.0),
            Point::new(1.0, 2.0),
            Point::new(-0.5, 1.0),
        ])
        .unwrap(),
    ]
}

proptest! {
    #[test]
    fn disk_normal_is_radial(theta in 0.0..2.0 * PI, r in 0.1f64..10.0, cx in -5.0f64..5.0, cy in -5.0f64..5.0) {
        let c = Point::new(cx, cy);
        let d = Domain::disk(c, r).unwrap();
        let x = c + r * Vec2::new(theta.cos(), theta.sin());
        let n = d.outward_normal(x).unwrap();
        prop_assert!((n - (x - c) / r).norm() < 1e-12);
    }

    #[test]
    fn signed_distance_agrees_with_containment(x in -3.0f64..4.0, y in -3.0f64..4.0) {
        for d in shapes() {
            let p = Point::new(x, y);
            let sd = d.signed_distance(p);
            if sd.abs() > 1e-9 {
                prop_assert_eq!(sd < 0.0, d.contains(p) == Containment::Interior);
            }
        }
    }
}

fn catalog_fields() -> Vec<(&'static str, serde_json::Value)> {
    vec![
        ("example1", json!({})),
        ("paraboloid", json!({})),
        ("neg_paraboloid", json!({})),
        ("bump", json!({})),
        ("poisson_disk", json!({})),
        ("coscos", json!({})),
        ("coscos", json!({"k": 2.0})),
        ("saddle_xy", json!({})),
        ("cubic_saddle", json!({})),
        ("constant", json!({"c": 0.5})),
        ("zero", json!({})),
    ]
}

fn central_gradient(u: &dyn ScalarField, x: Point, h: f64) -> Vec2 {
    let ex = Vec2::new(h, 0.0);
    let ey = Vec2::new(0.0, h);
    Vec2::new(
        (u.value(x + ex) - u.value(x - ex)) / (2.0 * h),
        (u.value(x + ey) - u.value(x - ey)) / (2.0 * h),
    )
}

#[test]
fn analytic_gradients_match_central_differences_at_second_order() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for (name, params) in catalog_fields() {
        let u = field_catalog().build(name, &params).unwrap();
        let mut worst_order = f64::INFINITY;
        for _ in 0..100 {
            let x = Point::new(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9));
            let g = u.gradient(x);
            let e1 = (central_gradient(u.as_ref(), x, 1e-2) - g).norm();
            let e2 = (central_gradient(u.as_ref(), x, 5e-3) - g).norm();
            assert!(e1 <= 10.0 * 1e-4 * (1.0 + g.norm()), "{name} at {x:?}: {e1}");
            if e1 > 1e-9 {
                worst_order = worst_order.min((e1 / e2).log2());
            }
        }
        assert!(worst_order >= 1.9, "{name}: observed order {worst_order}");
    }
}

#[test]
fn laplacian_matches_hessian_trace() {
    for (name, params) in catalog_fields() {
        let u = field_catalog().build(name, &params).unwrap();
        for x in [Point::new(0.1, 0.2), Point::new(-0.4, 0.7), Point::new(0.55, -0.3)] {
            let h = u.hessian(x);
            assert!((h.trace() - u.laplacian(x)).abs() < 1e-9, "{name}");
        }
    }
}

#[test]
fn cut_cell_quadrature_converges_at_second_order() {
    let d = Domain::disk(Point::zeros(), 1.0).unwrap();
    let exact = PI / 4.0 + PI / 8.0;
    let errs: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|&n| (integrate_domain(&d, n, |x| x.x * x.x + x.y.powi(4)).value - exact).abs())
        .collect();
    for w in errs.windows(2) {
        if w[0] > 1e-12 {
            assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
        }
    }
    let tri = Domain::convex_polygon(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)]).unwrap();
    let area = integrate_domain(&tri, 128, |_| 1.0).value;
    assert!((area - 0.5).abs() < 1e-12);
}

#[test]
fn radial_fields_reduce_to_one_dimensional_integrals() {
    let d = Domain::disk(Point::zeros(), 1.0).unwrap();
    for name in ["example1", "bump", "paraboloid", "poisson_disk"] {
        let u = field_catalog().build(name, &json!({})).unwrap();
        let (_, profile) = u.radial().unwrap();
        let one_d = integrate_radial(profile.as_ref(), 0.0, 1.0, RADIAL_TOL, |p| p.u * p.u + p.du * p.du).unwrap();
        let errs: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&n| {
                let lat = quadrature_lattice(u.as_ref(), &d, n);
                let two_d = integrate(u.as_ref(), &Region::domain(&d), &lat, |p| p.u * p.u + p.grad.norm_squared()).value;
                (two_d - one_d).abs()
            })
            .collect();
        assert!(errs[2] < 1e-4 * one_d.abs().max(1.0), "{name}: {errs:?}");
        assert!(errs[2] < errs[0], "{name}: {errs:?}");
    }
}
