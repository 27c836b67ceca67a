//! Scripted end-to-end verdicts: the audit of the closed-form example
//! `u = r⁴/4 − r³ + r²` on disks of radius 1 and 2, the Neumann
//! compatibility integral `∫ f(u) = 0`, and the single-maximum check for
//! positive Dirichlet solutions.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::field::{field_catalog, integrate_radial, FieldError, GridField, NodeKind, ScalarField, SharedField};
use crate::geometry::{Domain, GeometryError, Point, Vec2};
use crate::nonlinearity::{
    check_hypothesis_a, recover_f_from_radial, Example1Printed, HypothesisAReport, NonlinearLaw, NonlinearityError,
};
use crate::quadrature::integrate_domain;
use crate::solver::grid::dual_volumes;
use crate::solver::residual_norm;
use crate::topology::{analyze_critical_points, detect_nonisolated, CriticalKind, Probe, TopologyError, TopologyParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("example radius must be 1 or 2, got {0}")]
    InvalidRadius(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("{0}")]
    Registry(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// The property of the example the check is about.
    pub anchor: String,
    pub expected: String,
    pub observed: Value,
    pub tolerance: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub case: String,
    pub checks: Vec<Check>,
    pub overall: bool,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(case: impl Into<String>) -> Self {
        VerificationReport {
            case: case.into(),
            checks: Vec::new(),
            overall: true,
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.overall &= check.pass;
        self.checks.push(check);
    }

    /// JUnit-style XML: one test suite, one test case per check.
    pub fn to_junit(&self) -> String {
        let failures = self.checks.iter().filter(|c| !c.pass).count();
        let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(
            out,
            "<testsuite name=\"{}\" tests=\"{}\" failures=\"{}\">",
            xml_escape(&self.case),
            self.checks.len(),
            failures
        );
        for c in &self.checks {
            let _ = write!(
                out,
                "  <testcase classname=\"{}\" name=\"{}\"",
                xml_escape(&self.case),
                xml_escape(&c.name)
            );
            if c.pass {
                out.push_str("/>\n");
            } else {
                let _ = writeln!(
                    out,
                    ">\n    <failure message=\"expected {}; observed {}\"/>\n  </testcase>",
                    xml_escape(&c.expected),
                    xml_escape(&c.observed.to_string())
                );
            }
        }
        out.push_str("</testsuite>\n");
        out
    }
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn check(name: &str, anchor: &str, expected: &str, observed: Value, tolerance: Option<f64>, pass: bool) -> Check {
    Check {
        name: name.into(),
        anchor: anchor.into(),
        expected: expected.into(),
        observed,
        tolerance,
        pass,
    }
}

/// Closed-form tolerance for values of the example polynomial.
const EXACT_TOL: f64 = 1e-12;
/// Boundary points and angles for the one-sided maximum test.
const BOUNDARY_POINTS: usize = 64;
const RING_SAMPLES: usize = 64;

pub fn example1_field() -> Result<SharedField, VerifyError> {
    field_catalog()
        .build("example1", &json!({}))
        .map_err(|e| VerifyError::Registry(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryMaxProbe {
    /// Largest `u(x) − u(q)` over interior ring points `x` near boundary points `q`.
    pub max_rise: f64,
    /// Largest `∇u(x)·(x − q)` for `x = q − ρ n(q)` on the inward normal.
    pub max_inward_slope: f64,
    /// Share of interior ring points with `∇u(x)·(x − q) < 0`.
    pub ring_gradient_fraction: f64,
    pub samples: usize,
}

/// One-sided maximum test at boundary points `q`, on rings of radius
/// `ρ ∈ {10⁻³, 10⁻², 10⁻¹}·diam` restricted to the interior.
pub fn boundary_max_probe(field: &dyn ScalarField, domain: &Domain) -> Result<BoundaryMaxProbe, VerifyError> {
    let diam = domain.diameter();
    let mut out = BoundaryMaxProbe {
        max_rise: f64::NEG_INFINITY,
        max_inward_slope: f64::NEG_INFINITY,
        ring_gradient_fraction: 0.0,
        samples: 0,
    };
    let mut negative = 0usize;
    for q in domain.boundary_samples(BOUNDARY_POINTS) {
        let uq = field.value(q);
        let nq = domain.outward_normal(q)?;
        for rho in [1e-3 * diam, 1e-2 * diam, 1e-1 * diam] {
            let x = q - rho * nq;
            out.max_inward_slope = out.max_inward_slope.max(field.gradient(x).dot(&(x - q)));
            for k in 0..RING_SAMPLES {
                let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / RING_SAMPLES as f64;
                let x = q + rho * Vec2::new(t.cos(), t.sin());
                if domain.signed_distance(x) >= -1e-9 * diam {
                    continue;
                }
                out.max_rise = out.max_rise.max(field.value(x) - uq);
                if field.gradient(x).dot(&(x - q)) < 0.0 {
                    negative += 1;
                }
                out.samples += 1;
            }
        }
    }
    out.ring_gradient_fraction = negative as f64 / out.samples.max(1) as f64;
    Ok(out)
}

/// The closed-form example on `Disk(0, R)`, `R ∈ {1, 2}`: non-negativity,
/// boundary conditions, the critical circle `r = 1`, boundary maxima
/// (`R = 1`), non-convexity (`R = 2`) and the audit of the printed law.
pub fn verify_example1(radius: f64, n: usize) -> Result<VerificationReport, VerifyError> {
    if radius != 1.0 && radius != 2.0 {
        return Err(VerifyError::InvalidRadius(radius));
    }
    let u = example1_field()?;
    let (_, profile) = u.radial().expect("example field is radial");
    let domain = Domain::disk(Point::zeros(), radius)?;
    let mut report = VerificationReport::new(format!("example1_R{radius}"));

    // (a) u ≥ 0 on the closed disk.
    let probe = Probe::new(u.as_ref(), &domain, n)?;
    let (node_min, _) = probe.range();
    let boundary_min = domain
        .boundary_samples(2048)
        .into_iter()
        .map(|x| u.value(x))
        .fold(f64::INFINITY, f64::min);
    let min_u = node_min.min(boundary_min);
    report.push(check(
        "a_nonnegative",
        "u is non-negative on the closed disk",
        "min u >= 0",
        json!(min_u),
        Some(EXACT_TOL),
        min_u >= -EXACT_TOL,
    ));

    // (b) Neumann condition u′(R) = 0.
    let du = profile.du(radius);
    report.push(check(
        "b_neumann",
        "zero normal derivative on the outer circle",
        "u'(R) = 0",
        json!(du),
        Some(EXACT_TOL),
        du.abs() <= EXACT_TOL,
    ));

    // (c) Dirichlet condition on the larger disk.
    if radius == 2.0 {
        let ub = profile.u(radius);
        report.push(check(
            "c_dirichlet",
            "zero boundary values on the larger disk",
            "u(2) = 0",
            json!(ub),
            Some(EXACT_TOL),
            ub.abs() <= EXACT_TOL,
        ));
    }

    // (d) r = 1 is a level component on which ∇u vanishes.
    let tau_g = probe.default_tau_g();
    let comps = detect_nonisolated(&probe, profile.u(1.0), tau_g)?;
    let h = probe.h();
    let circle = comps.iter().find(|c| {
        c.points.iter().all(|p| (Vec2::new(p[0], p[1]).norm() - 1.0).abs() <= 2.0 * h)
            && c.length >= 0.9 * 2.0 * std::f64::consts::PI
    });
    report.push(check(
        "d_critical_circle",
        "the circle r = 1 is a non-isolated critical component",
        "one level-0.25 component on r = 1 with vanishing gradient",
        json!({
            "components": comps.len(),
            "length": circle.map(|c| c.length),
            "max_grad_norm": circle.map(|c| c.max_grad_norm),
        }),
        Some(2.0 * h),
        circle.is_some(),
    ));

    // (e) Every boundary point of the unit disk is a one-sided maximum.
    if radius == 1.0 {
        let probe = boundary_max_probe(u.as_ref(), &domain)?;
        report.push(check(
            "e_boundary_maxima",
            "every boundary point is a maximum over the closed disk",
            "u(x) < u(q) near each boundary point q and grad u(x).(x - q) < 0 along the inward normal",
            serde_json::to_value(&probe).unwrap_or(Value::Null),
            None,
            probe.samples > 0 && probe.max_rise < 0.0 && probe.max_inward_slope < 0.0,
        ));
        if probe.ring_gradient_fraction < 1.0 {
            report.notes.push(format!(
                "grad u(x).(x - q) < 0 holds at {:.1}% of interior ring points; tangentially displaced points have a positive radial component, so the full ring test cannot hold on a curved boundary",
                100.0 * probe.ring_gradient_fraction
            ));
        }
    }

    // (f) Non-convexity along the diameter through the critical circle.
    if radius == 2.0 {
        let mid = u.value(Point::new(1.0, 0.0));
        let chord = 0.5 * (u.value(Point::zeros()) + u.value(Point::new(2.0, 0.0)));
        report.push(check(
            "f_non_convexity",
            "u lies above a chord, so it is not convex",
            "u(1, 0) > (u(0, 0) + u(2, 0)) / 2",
            json!({"u_mid": mid, "chord": chord}),
            None,
            mid - chord > EXACT_TOL,
        ));
    }

    // (g) The printed law does not reproduce −Δu; recovering f from the
    // profile shows whether any autonomous law does.
    let res = residual_norm(u.as_ref(), &Example1Printed, &domain);
    report.push(check(
        "g_printed_law_residual",
        "the printed nonlinearity is inconsistent with the closed form",
        "sup |-Δu - f(u)| >= 5",
        serde_json::to_value(&res).unwrap_or(Value::Null),
        None,
        res.sup >= 5.0,
    ));
    let recovery = recover_f_from_radial(profile, (0.0, radius))?;
    let branches = recovery.report();
    let expect_autonomous = radius == 1.0;
    report.push(check(
        "g_branch_report",
        "whether -Δu is a single-valued function of u on the disk",
        if expect_autonomous {
            "single branch, autonomous"
        } else {
            "branch conflict at u = 0, not autonomous"
        },
        serde_json::to_value(&branches).unwrap_or(Value::Null),
        Some(crate::nonlinearity::CONFLICT_TOL),
        branches.autonomous == expect_autonomous,
    ));
    if !branches.autonomous {
        if let Some(c) = recovery.conflict_near(0.0) {
            let vals: Vec<String> = c.values.iter().map(|(r, v)| format!("{v:.6} at r = {r}")).collect();
            report.notes.push(format!(
                "no autonomous f on the disk of radius {radius}: u = {} is attained with -Δu = {}",
                c.u,
                vals.join(" and ")
            ));
        }
        report
            .notes
            .push("the boundary values satisfy both Neumann and Dirichlet conditions".into());
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeumannConstraint {
    /// `exact_radial`, `dual_volume` (grid fields) or `quadrature`.
    pub path: String,
    pub integral: f64,
    pub area: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `∫_D f(u)`, which vanishes for Neumann solutions. Passes when
/// `|∫ f(u)| < τ·|D|` with `τ = 10⁻⁶` (analytic fields) or the supplied
/// solver tolerance times 10 (grid fields, summed over the dual cells the
/// solver uses).
pub fn check_neumann_constraint(
    field: &dyn ScalarField,
    law: &dyn NonlinearLaw,
    domain: &Domain,
    n: usize,
    solver_tol: Option<f64>,
) -> Result<NeumannConstraint, VerifyError> {
    let area = domain.area();
    let f_of = |u: f64| -> Result<f64, VerifyError> { Ok(crate::nonlinearity::eval_f(law, u)?) };
    if let Some(g) = field.as_grid() {
        let vols = dual_volumes(domain, g.lattice());
        let mut terms = Vec::new();
        for (k, v) in vols.iter().enumerate() {
            let u = g.values()[k];
            if *v > 0.0 && u.is_finite() {
                terms.push(v * f_of(u)?);
            }
        }
        let tau = 10.0 * solver_tol.unwrap_or(1e-8);
        let integral = crate::quadrature::pairwise_sum(&terms);
        return Ok(NeumannConstraint {
            path: "dual_volume".into(),
            integral,
            area,
            tolerance: tau * area,
            pass: integral.abs() < tau * area,
        });
    }
    let tau = 1e-6;
    let radial = field.radial().and_then(|(c, prof)| {
        domain
            .as_disk()
            .filter(|(dc, _)| (dc - c).norm() <= 1e-12 * c.norm().max(1.0))
            .map(|(_, r)| (prof, r))
    });
    let (path, integral) = match radial {
        Some((prof, r)) => {
            for k in 0..=1024 {
                f_of(prof.u(r * k as f64 / 1024.0))?;
            }
            ("exact_radial", integrate_radial(prof.as_ref(), 0.0, r, 1e-12, |p| law.f(p.u))?)
        }
        None => {
            let lattice = crate::lattice::Lattice::for_domain(domain, n, 0);
            for k in 0..lattice.len() {
                let (i, j) = lattice.coords(k);
                let x = lattice.node(i, j);
                if domain.contains_closed(x) {
                    f_of(field.value(x))?;
                }
            }
            ("quadrature", integrate_domain(domain, n, |x| law.f(field.value(x))).value)
        }
    };
    Ok(NeumannConstraint {
        path: path.into(),
        integral,
        area,
        tolerance: tau * area,
        pass: integral.abs() < tau * area,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremumCounts {
    pub local_max: usize,
    pub local_min: usize,
    pub saddle: usize,
    pub interior_min: usize,
    pub interior_saddle: usize,
    /// Critical curves, plus isolated candidates that could not be classified.
    pub nonisolated: usize,
    pub unclassified: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Precondition {
    pub name: String,
    pub holds: Option<bool>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub counts: ExtremumCounts,
    pub maxima: Vec<[f64; 2]>,
    pub h: f64,
    /// Exactly one local maximum and no interior minima, saddles or critical
    /// curves.
    pub consistent: bool,
    pub preconditions: Vec<Precondition>,
    pub hypothesis: Option<HypothesisAReport>,
    pub notes: Vec<String>,
}

/// Count and classify the critical points of a positive Dirichlet solution;
/// consistent when there is a single maximum and nothing else in the
/// interior. The preconditions (positivity, `f(0) ≥ 0`, growth condition on
/// `(0, M]`) are evaluated and attached, not enforced. Without a law only
/// the counts and positivity are reported.
pub fn uniqueness_check(
    field: &dyn ScalarField,
    law: Option<&dyn NonlinearLaw>,
    domain: &Domain,
    params: &TopologyParams,
) -> Result<UniquenessReport, VerifyError> {
    let probe = Probe::from_params(field, domain, params)?;
    let (points, comps) = analyze_critical_points(&probe, params)?;
    let count = |k: CriticalKind, interior_only: bool| {
        points
            .iter()
            .filter(|p| p.kind == Some(k) && !(interior_only && p.on_boundary))
            .count()
    };
    let critical_curves = comps.iter().filter(|c| c.critical).count();
    let counts = ExtremumCounts {
        local_max: count(CriticalKind::LocalMax, false),
        local_min: count(CriticalKind::LocalMin, false),
        saddle: count(CriticalKind::Saddle, false),
        interior_min: count(CriticalKind::LocalMin, true),
        interior_saddle: count(CriticalKind::Saddle, true),
        nonisolated: critical_curves,
        unclassified: points.iter().filter(|p| p.kind.is_none()).count(),
    };
    let maxima = points
        .iter()
        .filter(|p| p.kind == Some(CriticalKind::LocalMax))
        .map(|p| p.position)
        .collect();
    let consistent = counts.local_max == 1
        && counts.interior_min == 0
        && counts.interior_saddle == 0
        && counts.nonisolated == 0
        && counts.unclassified == 0;

    let mut preconditions = Vec::new();
    let mut notes = Vec::new();
    let (lo, hi) = probe.range();
    let interior_min = interior_minimum(field, domain, &probe);
    let boundary_max = domain
        .boundary_samples(1024)
        .into_iter()
        .map(|x| field.value(x).abs())
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    let scale = hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE);
    let boundary_tol = match field.spacing() {
        Some(h) => h * h * scale.max(1.0) * 10.0,
        None => 1e-12 * scale.max(1.0),
    };
    preconditions.push(Precondition {
        name: "positive in the interior".into(),
        holds: Some(interior_min > 0.0),
        detail: format!("min u over interior samples = {interior_min:e}"),
    });
    preconditions.push(Precondition {
        name: "zero on the boundary".into(),
        holds: Some(boundary_max <= boundary_tol),
        detail: format!("max |u| on the boundary = {boundary_max:e} (tolerance {boundary_tol:e})"),
    });
    let mut hypothesis = None;
    match law {
        Some(law) => {
            let f0 = law.contains(0.0).then(|| law.f(0.0));
            preconditions.push(Precondition {
                name: "f(0) >= 0".into(),
                holds: f0.map(|v| v >= 0.0),
                detail: match f0 {
                    Some(v) => format!("f(0) = {v}"),
                    None => "0 is outside the domain of f".into(),
                },
            });
            if hi > 0.0 {
                match check_hypothesis_a(law, (0.0, hi), 1000) {
                    Ok(r) => {
                        preconditions.push(Precondition {
                            name: "growth condition on (0, M]".into(),
                            holds: Some(r.verdict.a_positive && r.verdict.fprime_positive),
                            detail: format!("min A = {:e}, min f' = {:e}", r.min_a, r.min_fprime),
                        });
                        hypothesis = Some(r);
                    }
                    Err(e) => preconditions.push(Precondition {
                        name: "growth condition on (0, M]".into(),
                        holds: None,
                        detail: e.to_string(),
                    }),
                }
            }
        }
        None => notes.push("no autonomous law supplied; law preconditions not evaluated".into()),
    }
    if counts.local_max + counts.local_min + counts.nonisolated > 1 {
        notes.push(format!(
            "{} extrema and {} critical curves: more than one extremal set",
            counts.local_max + counts.local_min,
            counts.nonisolated
        ));
    }
    Ok(UniquenessReport {
        counts,
        maxima,
        h: probe.h(),
        consistent,
        preconditions,
        hypothesis,
        notes,
    })
}

fn interior_minimum(field: &dyn ScalarField, domain: &Domain, probe: &Probe) -> f64 {
    if let Some(g) = field.as_grid() {
        return g
            .mask()
            .iter()
            .zip(g.values())
            .filter(|(m, v)| **m == NodeKind::Interior && v.is_finite())
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min);
    }
    let h = probe.h();
    (0..probe.lattice.len())
        .filter(|&k| probe.inside[k] && domain.signed_distance(probe.node(k)) < -0.5 * h)
        .map(|k| probe.values[k])
        .fold(f64::INFINITY, f64::min)
}

/// Grid samples of the example field, for pipelines that need a grid.
pub fn example1_grid(radius: f64, n: usize) -> Result<GridField, VerifyError> {
    let u = example1_field()?;
    let domain = Domain::disk(Point::zeros(), radius)?;
    Ok(GridField::sample(u.as_ref(), &domain, n)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::{Linear, Power};
    use crate::solver::{solver_catalog, BoundaryCondition, SolveRequest, SolverParams};
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn example_unit_disk() {
        let r = verify_example1(1.0, 128).unwrap();
        let by = |n: &str| r.checks.iter().find(|c| c.name == n).unwrap().pass;
        for name in ["a_nonnegative", "b_neumann", "d_critical_circle", "e_boundary_maxima", "g_printed_law_residual", "g_branch_report"] {
            assert!(by(name), "{name}: {r:#?}");
        }
        assert!(r.overall);
    }

    #[test]
    fn example_radius_two() {
        let r = verify_example1(2.0, 128).unwrap();
        assert!(r.overall, "{r:#?}");
        assert!(r.checks.iter().any(|c| c.name == "c_dirichlet"));
        assert!(r.checks.iter().any(|c| c.name == "f_non_convexity"));
        assert!(r.notes.iter().any(|n| n.contains("no autonomous f")), "{:?}", r.notes);
    }

    #[test]
    fn bad_radius() {
        assert_eq!(verify_example1(3.0, 64), Err(VerifyError::InvalidRadius(3.0)));
    }

    #[test]
    fn junit_counts_failures() {
        let mut r = VerificationReport::new("demo<1>");
        r.push(check("ok", "", "", json!(1), None, true));
        r.push(check("bad", "", "x & y", json!("z"), None, false));
        assert!(!r.overall);
        let x = r.to_junit();
        assert!(x.contains("tests=\"2\" failures=\"1\""));
        assert!(x.contains("demo&lt;1&gt;") && x.contains("x &amp; y"));
    }

    #[test]
    fn neumann_constraint_examples() {
        let u = example1_field().unwrap();
        let (_, prof) = u.radial().unwrap();
        let law = recover_f_from_radial(prof, (0.0, 1.0)).unwrap().law;
        let d = Domain::disk(Point::zeros(), 1.0).unwrap();
        let c = check_neumann_constraint(u.as_ref(), &law, &d, 256, None).unwrap();
        assert_eq!(c.path, "exact_radial");
        assert!(c.integral.abs() < 1e-8 && c.pass, "{c:?}");

        let u = field_catalog().build("coscos", &json!({})).unwrap();
        let sq = Domain::rectangle(Point::zeros(), Point::new(2.0 * PI, 2.0 * PI)).unwrap();
        let c = check_neumann_constraint(u.as_ref(), &Linear { lambda: 2.0 }, &sq, 256, None).unwrap();
        assert_eq!(c.path, "quadrature");
        assert!(c.integral.abs() < 1e-6 && c.pass, "{c:?}");

        let u = field_catalog().build("bump", &json!({})).unwrap();
        let c = check_neumann_constraint(u.as_ref(), &Power::new(0.0, 4.0, 0.0).unwrap(), &d, 256, None).unwrap();
        assert!((c.integral - 4.0 * PI).abs() < 1e-8 && !c.pass, "{c:?}");
    }

    #[test]
    fn solved_problem_has_one_maximum() {
        let d = Domain::disk(Point::zeros(), 1.0).unwrap();
        let law: Arc<dyn NonlinearLaw> = Arc::new(Power::new(2.0, 1.0, 1.0).unwrap());
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
        assert!(r.consistent, "{r:#?}");
        let m = r.maxima[0];
        assert!(Vec2::new(m[0], m[1]).norm() <= 2.0 * r.h, "{m:?}");
        // u f - 2F = u³/3 - u is negative for small u, so the growth condition fails for this law.
        let a = r.preconditions.iter().find(|p| p.name.starts_with("growth condition")).unwrap();
        assert_eq!(a.holds, Some(false));
        assert!(r.preconditions[..3].iter().all(|p| p.holds == Some(true)), "{:?}", r.preconditions);
    }

    #[test]
    fn example_on_large_disk_has_several_extremal_sets() {
        let u = example1_field().unwrap();
        let d = Domain::disk(Point::zeros(), 2.0).unwrap();
        let r = uniqueness_check(u.as_ref(), None, &d, &TopologyParams { n: 128, ..Default::default() }).unwrap();
        assert!(!r.consistent);
        assert_eq!(r.counts.local_min, 1, "{r:#?}");
        assert!(r.counts.nonisolated >= 1, "{r:#?}");
    }
}
