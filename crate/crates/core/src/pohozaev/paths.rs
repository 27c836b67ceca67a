//! The two ways of evaluating a ledger: 1-D adaptive quadrature when the
//! field is radial about `p` and the region is a union of annuli, and 2-D
//! cut-cell quadrature with trapezoid line integrals otherwise.

use std::sync::Arc;

use nalgebra::Matrix2;

use super::partition::{partition_ball, radial_derivative, Run};
use super::{
    assemble, Assembly, BoundaryTerms, LedgerInput, LedgerPath, Local, PohozaevError, PohozaevLedger, SegmentTerms, Side,
};
use crate::field::{RadialProfileFn, RADIAL_TOL};
use crate::geometry::{Point, Vec2};
use crate::quadrature::{
    integrate_1d, integrate_region, line_integral_with_normals, BallConstraint, DomainConstraint, FnConstraint,
    Region,
};

/// Radial fields centred at `p` on a disk centred at `p`, or with the ball
/// inside the domain.
pub struct ExactRadial;

/// Cut-cell quadrature over `𝓑` and trapezoid rule on `N`, `Dseg`, `Bseg`.
pub struct GridQuadrature;

/// Which piece of the boundary the outer circle of the radial region is.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Outer {
    Sphere,
    DomainBoundary,
}

struct RadialSetup {
    profile: Arc<dyn RadialProfileFn>,
    rho: f64,
    outer: Outer,
}

fn radial_setup(input: &LedgerInput) -> Result<RadialSetup, String> {
    let (c, profile) = input.field.radial().ok_or("field is not radial")?;
    let tol = 1e-12 * input.p.norm().max(1.0);
    if (c - input.p).norm() > tol {
        return Err(format!("field is radial about ({}, {}), not about p", c.x, c.y));
    }
    let delta = input.delta;
    let (rho, outer) = match input.domain.as_disk() {
        Some((dc, r)) if (dc - input.p).norm() <= tol => {
            if delta <= r * (1.0 + 1e-12) {
                (delta, Outer::Sphere)
            } else {
                (r, Outer::DomainBoundary)
            }
        }
        _ if input.domain.signed_distance(input.p) <= -delta => (delta, Outer::Sphere),
        _ => return Err("the ball is not an annulus of the domain".into()),
    };
    if profile.extent() < rho {
        return Err(format!("profile is only defined up to r = {}", profile.extent()));
    }
    Ok(RadialSetup { profile, rho, outer })
}

/// Field data at radius `r` on the ray `θ = 0`, where `∇u = u′ e_r` and the
/// Hessian is `diag(u″, u′/r)`.
fn radial_local(profile: &dyn RadialProfileFn, input: &LedgerInput, r: f64) -> Local {
    let u = profile.u(r);
    let du = profile.du(r);
    let d2u = profile.d2u(r);
    let dur = profile.du_over_r(r);
    Local {
        xp: Vec2::new(r, 0.0),
        u,
        grad: Vec2::new(du, 0.0),
        hess: Matrix2::new(d2u, 0.0, 0.0, dur),
        lap: d2u + dur,
        f: input.law.f(u),
        big_f: input.law.antiderivative(u),
    }
}

const SCAN: usize = 4096;

/// Split `[0, ρ]` into intervals on which `g = r u′(r)` is `> τ`, `< −τ`
/// or neither, with breakpoints refined by bisection.
fn sign_intervals(profile: &dyn RadialProfileFn, rho: f64, tau: f64) -> Vec<(f64, f64, i8)> {
    let class = |r: f64| {
        let g = r * profile.du(r);
        if g > tau {
            1
        } else if g < -tau {
            -1
        } else {
            0
        }
    };
    let mids: Vec<f64> = (0..SCAN).map(|k| rho * (k as f64 + 0.5) / SCAN as f64).collect();
    let mut out: Vec<(f64, f64, i8)> = Vec::new();
    let mut start = 0.0;
    let mut current = class(mids[0]);
    for w in mids.windows(2) {
        let next = class(w[1]);
        if next == current {
            continue;
        }
        let (mut lo, mut hi) = (w[0], w[1]);
        while hi - lo > 1e-15 * rho.max(1.0) {
            let m = 0.5 * (lo + hi);
            if m <= lo || m >= hi {
                break;
            }
            if class(m) == current {
                lo = m;
            } else {
                hi = m;
            }
        }
        let cut = 0.5 * (lo + hi);
        out.push((start, cut, current));
        start = cut;
        current = next;
    }
    out.push((start, rho, current));
    out
}

fn check_law_radial(profile: &dyn RadialProfileFn, input: &LedgerInput, rho: f64) -> Result<(), PohozaevError> {
    for k in 0..=SCAN {
        let r = rho * k as f64 / SCAN as f64;
        let u = profile.u(r);
        if !input.law.contains(u) {
            return Err(PohozaevError::DomainViolation {
                u,
                x: input.p.x + r,
                y: input.p.y,
            });
        }
    }
    Ok(())
}

/// `2π ∫_a^b φ(r) r dr` to the radial tolerance.
fn annulus(a: f64, b: f64, phi: impl Fn(f64) -> f64) -> Result<f64, PohozaevError> {
    if b <= a {
        return Ok(0.0);
    }
    let tau = 2.0 * std::f64::consts::PI;
    Ok(tau * integrate_1d(|r| phi(r) * r, a, b, RADIAL_TOL / tau)?)
}

impl LedgerPath for ExactRadial {
    fn name(&self) -> &'static str {
        "exact_radial"
    }

    fn applies(&self, input: &LedgerInput) -> Result<(), String> {
        radial_setup(input).map(|_| ())
    }

    fn ledger(&self, input: &LedgerInput) -> Result<PohozaevLedger, PohozaevError> {
        let setup = radial_setup(input).map_err(|reason| PohozaevError::PathNotApplicable {
            path: "exact_radial",
            reason,
        })?;
        let prof = setup.profile.as_ref();
        let rho = setup.rho;
        check_law_radial(prof, input, rho)?;
        let tau_g = input.params.tau_g.unwrap_or(1e-10);
        let intervals = sign_intervals(prof, rho, tau_g);
        let kept: Vec<(f64, f64)> = match input.side {
            Side::Whole => vec![(0.0, rho)],
            Side::Plus => intervals.iter().filter(|i| i.2 == 1).map(|i| (i.0, i.1)).collect(),
            Side::Minus => intervals.iter().filter(|i| i.2 == -1).map(|i| (i.0, i.1)).collect(),
        };
        let local = |r: f64| radial_local(prof, input, r);

        let mut volume = [0.0; 4];
        let mut divergence = [0.0; 4];
        let mut area = 0.0;
        for &(a, b) in &kept {
            for k in 0..4 {
                volume[k] += annulus(a, b, |r| local(r).volume()[k])?;
                divergence[k] += annulus(a, b, |r| local(r).divergence()[k])?;
            }
            area += std::f64::consts::PI * (b * b - a * a);
        }
        let mut neutral_measure = 0.0;
        for &(a, b, c) in &intervals {
            if c == 0 {
                neutral_measure += std::f64::consts::PI * (b * b - a * a);
            }
        }

        // Circles bounding the kept annuli: the outer radius ρ is the sphere
        // or ∂D, every other radius is a zero of g and belongs to N.
        let mut n_terms = Vec::new();
        let mut outer_terms = Vec::new();
        let circle = |r: f64, outward: f64| {
            let l = local(r);
            let len = 2.0 * std::f64::consts::PI * r;
            let d = l.boundary(Vec2::new(outward, 0.0));
            BoundaryTerms::from_array(d.map(|v| v * len), len)
        };
        for &(a, b) in &kept {
            if a > 0.0 {
                n_terms.push(circle(a, -1.0));
            }
            let t = circle(b, 1.0);
            if b >= rho {
                outer_terms.push(t);
            } else {
                n_terms.push(t);
            }
        }
        let outer = BoundaryTerms::sum(&outer_terms);
        let segments = SegmentTerms {
            n: BoundaryTerms::sum(&n_terms),
            d: if setup.outer == Outer::DomainBoundary { outer } else { BoundaryTerms::default() },
            b: if setup.outer == Outer::Sphere { outer } else { BoundaryTerms::default() },
        };
        assemble(
            input,
            Assembly {
                path: "exact_radial",
                h: None,
                tau_g,
                volume,
                area,
                segments,
                divergence,
                neutral_measure,
                rel_tol: RADIAL_TOL,
            },
        )
    }
}

fn line_terms(runs: &[Run], local: &(dyn Fn(Point) -> Local + Sync)) -> Result<BoundaryTerms, PohozaevError> {
    let mut parts = Vec::new();
    for r in runs {
        let mut v = [0.0; 4];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = line_integral_with_normals(&r.line, &r.normals, |x, n| local(x).boundary(n)[k])?;
        }
        parts.push(BoundaryTerms::from_array(v, r.length()));
    }
    Ok(BoundaryTerms::sum(&parts))
}

impl LedgerPath for GridQuadrature {
    fn name(&self) -> &'static str {
        "grid"
    }

    fn applies(&self, _input: &LedgerInput) -> Result<(), String> {
        Ok(())
    }

    fn ledger(&self, input: &LedgerInput) -> Result<PohozaevLedger, PohozaevError> {
        let part = partition_ball(input.field, input.domain, input.p, input.delta, input.params)?;
        let lat = part.lattice;
        let h = lat.h;
        let (field, law, p) = (input.field, input.law, input.p);
        for k in 0..lat.len() {
            if part.ball[k] {
                let (i, j) = lat.coords(k);
                let x = lat.node(i, j);
                let u = field.value(x);
                if !law.contains(u) {
                    return Err(PohozaevError::DomainViolation { u, x: x.x, y: x.y });
                }
            }
        }
        let local = |x: Point| Local::eval(field, law, p, x);

        let step = if field.as_grid().is_some() { field.fd_step() } else { 1e-7 * input.delta };
        let sign = match input.side {
            Side::Plus => Some(-1.0),
            Side::Minus => Some(1.0),
            Side::Whole => None,
        };
        let region = || {
            let r = Region::new()
                .with(DomainConstraint(input.domain))
                .with(BallConstraint { center: p, radius: input.delta });
            match sign {
                Some(s) => r.with(FnConstraint {
                    phi: move |x: Point| s * radial_derivative(field, p, x),
                    step,
                }),
                None => r,
            }
        };
        let mut volume = [0.0; 4];
        let mut divergence = [0.0; 4];
        let mut area = 0.0;
        for k in 0..4 {
            let v = integrate_region(&region(), &lat, |x| local(x).volume()[k]);
            volume[k] = v.value;
            area = v.area;
            divergence[k] = integrate_region(&region(), &lat, |x| local(x).divergence()[k]).value;
        }
        let whole = Region::new()
            .with(DomainConstraint(input.domain))
            .with(BallConstraint { center: p, radius: input.delta });
        let tau_g = part.tau_g;
        let neutral_measure = integrate_region(&whole, &lat, |x| {
            if radial_derivative(field, p, x).abs() <= tau_g {
                1.0
            } else {
                0.0
            }
        })
        .value;

        let segments = SegmentTerms {
            n: line_terms(&part.n_runs(input.side), &local)?,
            d: line_terms(&part.side_runs(&part.d_seg, input.side), &local)?,
            b: line_terms(&part.side_runs(&part.b_seg, input.side), &local)?,
        };
        assemble(
            input,
            Assembly {
                path: "grid",
                h: Some(h),
                tau_g,
                volume,
                area,
                segments,
                divergence,
                neutral_measure,
                rel_tol: h * h / (input.delta * input.delta).min(1.0),
            },
        )
    }
}
