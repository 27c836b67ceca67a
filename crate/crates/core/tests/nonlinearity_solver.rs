use std::sync::Arc;

use peaklab::field::GridField;
use peaklab::nonlinearity::{check_hypothesis_a, law_catalog, recover_f_from_radial, NonlinearLaw, Power, SharedLaw};
use peaklab::solver::{solver_catalog, BoundaryCondition, SolveRequest, SolverParams};
use peaklab::{Domain, Point};
use proptest::prelude::*;
use serde_json::json;

fn unit_disk() -> Domain {
    Domain::disk(Point::zeros(), 1.0).unwrap()
}

fn laws() -> Vec<SharedLaw> {
    [
        json!({"family": "power", "m": 0.5, "a": 2.0, "c": 0.1}),
        json!({"family": "power", "m": 2.0, "a": 1.0, "c": 1.0}),
        json!({"family": "power", "m": 3.0, "a": -0.5}),
        json!({"family": "linear", "lambda": 2.5}),
        json!({"family": "constant", "value": 4.0}),
        json!({"family": "example1_printed"}),
        json!({"family": "tabulated", "u": [0.0, 0.5, 1.0, 2.0], "f": [1.0, 1.2, 2.0, 5.0]}),
    ]
    .iter()
    .map(|v| law_catalog().build(v["family"].as_str().unwrap(), v).unwrap())
    .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn antiderivative_differentiates_to_f(t in 0.05f64..0.95) {
        for law in laws() {
            let (lo, hi) = law.domain();
            let (lo, hi) = (lo.max(0.0), hi.min(2.0));
            let u = lo + t * (hi - lo);
            let h = 1e-5;
            let d = (law.antiderivative(u + h) - law.antiderivative(u - h)) / (2.0 * h);
            prop_assert!((d - law.f(u)).abs() <= 1e-6 * (1.0 + law.f(u).abs()), "{} at {u}: {d} vs {}", law.family(), law.f(u));
        }
    }

    #[test]
    fn hypothesis_verdict_ignores_scale(m in prop::sample::select(vec![0.5, 1.0, 2.0, 3.0]), a in 0.01f64..100.0) {
        let unit = check_hypothesis_a(&Power::new(m, 1.0, 0.0).unwrap(), (0.0, 1.0), 200).unwrap();
        let scaled = check_hypothesis_a(&Power::new(m, a, 0.0).unwrap(), (0.0, 1.0), 200).unwrap();
        prop_assert_eq!(unit.verdict.overall, scaled.verdict.overall);
    }
}

#[test]
fn hypothesis_gate_on_power_family() {
    for (m, expect) in [(0.5, false), (1.0, false), (2.0, true), (3.0, true)] {
        let r = check_hypothesis_a(&Power::new(m, 1.0, 0.0).unwrap(), (0.0, 1.0), 1000).unwrap();
        assert_eq!(r.verdict.overall, expect, "m = {m}: {r:?}");
    }
}

fn request(law: SharedLaw, bc: BoundaryCondition, n: usize) -> SolveRequest {
    SolveRequest {
        domain: unit_disk(),
        law,
        bc,
        n,
        params: SolverParams::default(),
        initial: None,
        center_guess: 0.3,
    }
}

#[test]
fn poisson_grid_error_decreases_at_first_order_or_better() {
    let law: SharedLaw = Arc::new(Power::new(0.0, 0.0, 1.0).unwrap());
    let grid = solver_catalog().build("grid", &json!({})).unwrap();
    let errs: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|&n| {
            let out = grid.solve(&request(law.clone(), BoundaryCondition::Dirichlet, n)).unwrap();
            let g = out.grid;
            let lat = g.lattice();
            (0..lat.len())
                .filter_map(|k| {
                    let (i, j) = lat.coords(k);
                    let x = lat.node(i, j);
                    let v = g.values()[k];
                    (v.is_finite() && unit_disk().contains_closed(x)).then(|| (v - (1.0 - x.norm_squared()) / 4.0).abs())
                })
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(errs[2] < 5e-3, "{errs:?}");
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 0.9, "{errs:?}");
    }
}

#[test]
fn radial_and_grid_solvers_agree() {
    let law: SharedLaw = Arc::new(Power::new(2.0, 1.0, 1.0).unwrap());
    let radial = solver_catalog().build("radial", &json!({})).unwrap();
    let grid = solver_catalog().build("grid", &json!({})).unwrap();
    let r = radial.solve(&request(law.clone(), BoundaryCondition::Dirichlet, 128)).unwrap();
    let g = grid.solve(&request(law, BoundaryCondition::Dirichlet, 128)).unwrap();
    let lat = g.grid.lattice();
    let mut sup: f64 = 0.0;
    for k in 0..lat.len() {
        let (i, j) = lat.coords(k);
        let x = lat.node(i, j);
        let v = g.grid.values()[k];
        if v.is_finite() && unit_disk().contains_closed(x) {
            sup = sup.max((v - r.field.value(x)).abs());
        }
    }
    assert!(sup < 1e-3, "sup difference {sup}");
}

#[test]
fn neumann_solution_satisfies_the_compatibility_integral() {
    let law: SharedLaw = Arc::new(Power::new(1.0, 1.0, -1.0).unwrap());
    let mut req = request(law, BoundaryCondition::Neumann, 64);
    let constant = peaklab::field::field_catalog().build("constant", &json!({"c": 0.5})).unwrap();
    req.initial = Some(GridField::sample(constant.as_ref(), &unit_disk(), 64).unwrap());
    let out = solver_catalog().build("grid", &json!({})).unwrap().solve(&req).unwrap();
    let tol = 1e-8;
    assert!(out.log.neumann_integral.unwrap().abs() < 10.0 * tol * std::f64::consts::PI);
}

#[test]
fn recovered_law_reproduces_the_solved_law() {
    let law: SharedLaw = Arc::new(Power::new(2.0, 1.0, 1.0).unwrap());
    let out = solver_catalog()
        .build("radial", &json!({}))
        .unwrap()
        .solve(&request(law.clone(), BoundaryCondition::Dirichlet, 64))
        .unwrap();
    let profile = out.profile.expect("radial solver keeps its profile");
    let rec = recover_f_from_radial(profile.clone(), (0.0, 1.0)).unwrap();
    assert!(rec.autonomous);
    let (lo, hi) = (profile_u(&profile, 1.0), profile_u(&profile, 0.0));
    for k in 1..20 {
        let u = lo + (hi - lo) * k as f64 / 20.0;
        let d = (rec.law.f(u) - law.f(u)).abs();
        assert!(d < 10.0 * 1e-6 * (1.0 + law.f(u)), "u = {u}: {} vs {}", rec.law.f(u), law.f(u));
    }
}

fn profile_u(p: &Arc<peaklab::solver::RadialProfile>, r: f64) -> f64 {
    use peaklab::field::RadialProfileFn;
    p.u(r)
}
