use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use peaklab::field::{field_catalog, SharedField};
use peaklab::nonlinearity::{check_hypothesis_a, recover_f_from_radial, Linear, Power, SharedLaw};
use peaklab::solver::{solver_catalog, BoundaryCondition, SolveRequest, SolverParams};
use peaklab::topology::{
    analyze_critical_points, check_extremum_signs, check_level_disjointness, check_sign_change_curve, classify_isolated, detect_nonisolated,
    euler_count, extract_level_set, gradient_transverse, CriticalKind, Probe, TopologyParams,
};
use peaklab::verify::uniqueness_check;
use peaklab::{Domain, Point};
use serde_json::json;

fn field(name: &str) -> SharedField {
    field_catalog().build(name, &json!({})).unwrap()
}

fn square(lo: f64, hi: f64) -> Domain {
    Domain::rectangle(Point::new(lo, lo), Point::new(hi, hi)).unwrap()
}

#[test]
fn classification_matches_analytic_types_at_every_scale() {
    let cases: Vec<(&str, Domain, Point, CriticalKind)> = vec![
        ("paraboloid", square(-1.0, 1.0), Point::zeros(), CriticalKind::LocalMin),
        ("neg_paraboloid", square(-1.0, 1.0), Point::zeros(), CriticalKind::LocalMax),
        ("saddle_xy", square(-1.0, 1.0), Point::zeros(), CriticalKind::Saddle),
        ("cubic_saddle", square(-1.0, 1.0), Point::zeros(), CriticalKind::Saddle),
        ("coscos", square(0.0, 2.0 * PI), Point::new(PI, PI), CriticalKind::LocalMax),
        ("coscos", square(0.0, 2.0 * PI), Point::new(FRAC_PI_2, FRAC_PI_2), CriticalKind::Saddle),
        ("coscos", square(0.0, 2.0 * PI), Point::new(3.0 * FRAC_PI_2, FRAC_PI_2), CriticalKind::Saddle),
    ];
    for (name, domain, p, expect) in cases {
        let u = field(name);
        let diam = domain.diameter();
        for delta in [1e-3 * diam, 1e-2 * diam, 1e-1 * diam] {
            let c = classify_isolated(u.as_ref(), &domain, p, &[delta], 64, 1e-10).unwrap();
            assert_eq!(c.kind, expect, "{name} at {p:?}, delta {delta}");
            for ring in &c.rings {
                assert!(ring.min_grad_norm > 1e-10, "{name}: ring gradient must stay positive");
            }
        }
    }
}

#[test]
fn paraboloid_level_curves_have_circle_length() {
    let u = field("paraboloid");
    let d = Domain::disk(Point::zeros(), 1.0).unwrap();
    let probe = Probe::new(u.as_ref(), &d, 256).unwrap();
    for r in [0.3, 0.6, 0.9] {
        let comps = extract_level_set(&probe, r * r).unwrap();
        assert_eq!(comps.len(), 1);
        let len: f64 = comps.iter().map(|c| c.length).sum();
        assert!((len / (2.0 * PI * r) - 1.0).abs() < 0.02, "r = {r}: {len}");
    }
}

#[test]
fn index_sum_is_one_when_the_gradient_is_transverse() {
    let cases: Vec<(&str, Domain)> = vec![
        ("paraboloid", Domain::rectangle(Point::new(-0.7, -0.5), Point::new(0.9, 1.1)).unwrap()),
        ("neg_paraboloid", Domain::disk(Point::new(0.1, -0.2), 0.8).unwrap()),
        ("coscos", square(FRAC_PI_2 + 0.3, 3.0 * FRAC_PI_2 - 0.3)),
    ];
    for (name, d) in cases {
        let u = field(name);
        assert!(gradient_transverse(u.as_ref(), &d, 512), "{name}");
        let params = TopologyParams { n: 128, ..Default::default() };
        let probe = Probe::from_params(u.as_ref(), &d, &params).unwrap();
        let (points, _) = analyze_critical_points(&probe, &params).unwrap();
        assert_eq!(euler_count(&points).index_sum, 1, "{name}: {points:?}");
    }
    assert!(!gradient_transverse(field("saddle_xy").as_ref(), &square(-1.0, 1.0), 512));
}

#[test]
fn example_field_critical_structure() {
    let u = field("example1");
    let d = Domain::disk(Point::zeros(), 2.0).unwrap();
    let params = TopologyParams { n: 128, ..Default::default() };
    let probe = Probe::from_params(u.as_ref(), &d, &params).unwrap();
    let (points, comps) = analyze_critical_points(&probe, &params).unwrap();
    let origin = points.iter().find(|p| p.point().norm() < 1e-6).expect("origin is critical");
    assert_eq!(origin.kind, Some(CriticalKind::LocalMin));
    assert!(comps.iter().any(|c| c.critical && (c.level - 0.25).abs() < 1e-9));
    let ring = detect_nonisolated(&probe, 0.25, probe.tau_g(&params)).unwrap();
    assert!(ring.iter().all(|c| c.vertices().all(|x| (x.norm() - 1.0).abs() < 2.0 * probe.h())));

    let (_, profile) = u.radial().unwrap();
    let law = recover_f_from_radial(profile, (0.0, 1.0)).unwrap().law;
    let signs = check_extremum_signs(u.as_ref(), &law, &points);
    assert!(signs.iter().all(|s| s.pass != Some(false)), "{signs:?}");
}

#[test]
fn level_components_stay_disjoint_except_at_crossings() {
    let d = Domain::disk(Point::zeros(), 1.0).unwrap();
    for name in ["paraboloid", "example1"] {
        let u = field(name);
        let probe = Probe::new(u.as_ref(), &d, 128).unwrap();
        let comps = extract_level_set(&probe, 0.1).unwrap();
        let r = check_level_disjointness(&comps, probe.h());
        assert!(r.pass && comps.len() == 1, "{name}: {r:?}");
    }

    // The zero set of cos x cos y is a grid of lines crossing at four points.
    let sq = square(0.0, 2.0 * PI);
    let u = field("coscos");
    let probe = Probe::new(u.as_ref(), &sq, 128).unwrap();
    let comps = extract_level_set(&probe, 0.0).unwrap();
    let r = check_level_disjointness(&comps, probe.h());
    assert!(!r.pass);
    assert_eq!(r.crossings.len(), 4, "{:?}", r.crossings);
    for c in &r.crossings {
        let near = [FRAC_PI_2, 3.0 * FRAC_PI_2]
            .iter()
            .flat_map(|a| [FRAC_PI_2, 3.0 * FRAC_PI_2].map(|b| Point::new(*a, b)))
            .any(|q| (Point::new(c[0], c[1]) - q).norm() < 2.0 * probe.h());
        assert!(near, "crossing {c:?}");
    }
    let hyp = check_hypothesis_a(&Linear { lambda: 2.0 }, (-1.0, 1.0), 1000).unwrap();
    assert!(!hyp.verdict.overall);
}

#[test]
fn sign_change_curve_reports() {
    // f(u) = u - 0.1 changes sign on an interior circle, which misses the boundary.
    let d = Domain::disk(Point::zeros(), 1.0).unwrap();
    let u = field("poisson_disk");
    let probe = Probe::new(u.as_ref(), &d, 128).unwrap();
    let r = check_sign_change_curve(&probe, &Power::new(1.0, 1.0, -0.1).unwrap(), probe.default_tau_g()).unwrap();
    assert_eq!(r.components, 1);
    assert!(!r.boundary_contact);
    assert_eq!(r.consistent, Some(false));

    let sq = square(0.0, 2.0 * PI);
    let u = field("coscos");
    let probe = Probe::new(u.as_ref(), &sq, 128).unwrap();
    let r = check_sign_change_curve(&probe, &Linear { lambda: 2.0 }, probe.default_tau_g()).unwrap();
    assert!(!r.precondition_met && r.consistent.is_none(), "{r:?}");
    assert!(!r.hypothesis.as_ref().unwrap().verdict.overall);

    let u = field("bump");
    let probe = Probe::new(u.as_ref(), &d, 64).unwrap();
    assert!(check_sign_change_curve(&probe, &Power::new(0.0, 0.0, 4.0).unwrap(), probe.default_tau_g()).is_err());
}

#[test]
fn solved_problem_has_a_single_maximum_at_the_centre() {
    let d = Domain::disk(Point::zeros(), 1.0).unwrap();
    let law: SharedLaw = Arc::new(Power::new(2.0, 1.0, 1.0).unwrap());
    let req = SolveRequest {
        domain: d.clone(),
        law: law.clone(),
        bc: BoundaryCondition::Dirichlet,
        n: 128,
        params: SolverParams::default(),
        initial: None,
        center_guess: 1.0,
    };
    let out = solver_catalog().build("grid", &json!({})).unwrap().solve(&req).unwrap();
    let r = uniqueness_check(&out.grid, Some(law.as_ref()), &d, &TopologyParams::default()).unwrap();
    assert_eq!(r.counts.local_max, 1);
    assert_eq!(r.counts.interior_min + r.counts.interior_saddle + r.counts.nonisolated, 0);
    assert!(Point::new(r.maxima[0][0], r.maxima[0][1]).norm() <= 2.0 * r.h);
}
