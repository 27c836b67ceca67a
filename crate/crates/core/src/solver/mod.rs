//! Solution fields for `−Δu = f(u)`: radial shooting on disks and damped
//! Newton on embedded-boundary grids, under Dirichlet or Neumann conditions.

pub mod grid;
pub mod linear;
pub mod radial;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::field::{FieldError, GridField, NodeKind, RadialField, ScalarField, SharedField};
use crate::geometry::{Containment, Domain, Point};
use crate::nonlinearity::{NonlinearLaw, NonlinearityError, SharedLaw};
use crate::quadrature::radical_inverse;
use crate::registry::Registry;

pub use grid::{solve_grid, Discretization, NewtonStep};
pub use linear::LinearMode;
pub use radial::{integrate_profile, solve_radial, RadialProfile, ShootingStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    /// Stopping tolerance; `None` picks `10⁻¹⁰` (radial) or `10⁻⁸·max|f|` (grid).
    pub tol_residual: Option<f64>,
    pub max_newton: usize,
    /// Backtracking factor.
    pub damping: f64,
    pub max_halvings: usize,
    /// Homotopy steps on `s·f`, `s = 1/k, …, 1`; 0 solves directly.
    pub continuation_steps: usize,
    pub max_shooting: usize,
    pub radial_nodes: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tol_residual: None,
            max_newton: 50,
            damping: 0.5,
            max_halvings: 20,
            continuation_steps: 0,
            max_shooting: 100,
            radial_nodes: 2048,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidParams(m.to_string()));
        if let Some(t) = self.tol_residual {
            if !(t > 0.0) {
                return bad("tol_residual must be positive");
            }
        }
        if self.max_newton < 1 {
            return bad("max_newton must be at least 1");
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return bad("damping must lie in (0, 1)");
        }
        if self.max_shooting < 1 {
            return bad("max_shooting must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("shooting did not converge after {iterations} steps (boundary miss {miss:e}): {reason}")]
    ShootingNoConvergence {
        iterations: usize,
        miss: f64,
        reason: String,
    },
    #[error("u = {u} left the domain of f at {at}")]
    DomainViolation { u: f64, at: String },
    #[error("Newton stagnated at iteration {iteration} (residual {residual:e}): damping exhausted")]
    NewtonStagnation { iteration: usize, residual: f64 },
    #[error("linear solve broke down at Newton iteration {iteration} (residual {residual:e}): {detail}")]
    CgBreakdown {
        iteration: usize,
        residual: f64,
        detail: String,
    },
    #[error("no convergence after {iterations} Newton steps (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("the radial solver needs a disk")]
    NotADisk,
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
}

impl SolverError {
    /// Final residual for failures that have one.
    pub fn residual(&self) -> Option<f64> {
        match self {
            SolverError::ShootingNoConvergence { miss, .. } => Some(miss.abs()),
            SolverError::NewtonStagnation { residual, .. }
            | SolverError::CgBreakdown { residual, .. }
            | SolverError::MaxIterations { residual, .. } => Some(*residual),
            _ => None,
        }
    }
}

/// `s·f(u)`, the homotopy used for continuation.
#[derive(Debug, Clone)]
pub struct ScaledLaw {
    pub inner: SharedLaw,
    pub s: f64,
}

impl NonlinearLaw for ScaledLaw {
    fn family(&self) -> &'static str {
        self.inner.family()
    }

    fn params(&self) -> Value {
        let mut p = self.inner.params();
        if let Some(obj) = p.as_object_mut() {
            obj.insert("homotopy".into(), self.s.into());
        }
        p
    }

    fn domain(&self) -> (f64, f64) {
        self.inner.domain()
    }

    fn f(&self, u: f64) -> f64 {
        self.s * self.inner.f(u)
    }

    fn fprime(&self, u: f64) -> f64 {
        self.s * self.inner.fprime(u)
    }

    fn antiderivative(&self, u: f64) -> f64 {
        self.s * self.inner.antiderivative(u)
    }

    fn contains(&self, u: f64) -> bool {
        self.inner.contains(u)
    }
}

fn homotopy(law: &SharedLaw, steps: usize) -> Vec<(f64, SharedLaw)> {
    if steps == 0 {
        return vec![(1.0, law.clone())];
    }
    (1..=steps)
        .map(|j| {
            let s = j as f64 / steps as f64;
            let l: SharedLaw = if j == steps {
                law.clone()
            } else {
                Arc::new(ScaledLaw { inner: law.clone(), s })
            };
            (s, l)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterateRecord {
    /// Homotopy parameter of the stage this iterate belongs to.
    pub stage: f64,
    pub iteration: usize,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub halvings: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cg_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear_mode: Option<LinearMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant_mode_projected: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceLog {
    pub solver: String,
    pub bc: BoundaryCondition,
    pub converged: bool,
    pub final_residual: f64,
    pub iterates: Vec<IterateRecord>,
    /// `∫_D f(u)`, which must vanish for Neumann solutions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neumann_integral: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Clone)]
pub struct SolveRequest {
    pub domain: Domain,
    pub law: SharedLaw,
    pub bc: BoundaryCondition,
    /// Grid nodes along the longer side of the bounding box.
    pub n: usize,
    pub params: SolverParams,
    pub initial: Option<GridField>,
    /// Starting centre value for shooting.
    pub center_guess: f64,
}

#[derive(Clone)]
pub struct SolveOutcome {
    pub field: SharedField,
    /// Grid carrier of the solution (sampled for the radial solver).
    pub grid: GridField,
    pub profile: Option<Arc<RadialProfile>>,
    pub log: ConvergenceLog,
}

pub trait Solver: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, req: &SolveRequest) -> Result<SolveOutcome, SolverError>;
}

pub struct RadialShooting;

impl Solver for RadialShooting {
    fn name(&self) -> &'static str {
        "radial"
    }

    fn solve(&self, req: &SolveRequest) -> Result<SolveOutcome, SolverError> {
        req.params.validate()?;
        let (center, radius) = req.domain.as_disk().ok_or(SolverError::NotADisk)?;
        let mut guess = req.center_guess;
        let mut iterates = Vec::new();
        let mut last = None;
        for (s, law) in homotopy(&req.law, req.params.continuation_steps) {
            let (profile, steps) = solve_radial(law, radius, req.bc, guess, &req.params)?;
            guess = profile.alpha;
            iterates.extend(steps.iter().map(|st| IterateRecord {
                stage: s,
                iteration: st.iteration,
                residual: st.miss.abs(),
                step_norm: None,
                damping: None,
                halvings: None,
                cg_iterations: None,
                linear_mode: None,
                constant_mode_projected: None,
                alpha: Some(st.alpha),
            }));
            last = Some(profile);
        }
        let profile = Arc::new(last.expect("homotopy has at least one stage"));
        let field: SharedField = Arc::new(RadialField::new("solution", center, profile.clone()));
        let grid = GridField::sample(field.as_ref(), &req.domain, req.n)?;
        let final_residual = iterates.last().map_or(0.0, |r| r.residual);
        let neumann_integral = (req.bc == BoundaryCondition::Neumann).then(|| {
            let two_pi = 2.0 * std::f64::consts::PI;
            // ∫ f(u) r dr = −R u′(R)
            -two_pi * radius * profile.du[profile.du.len() - 1]
        });
        Ok(SolveOutcome {
            field,
            grid,
            profile: Some(profile.clone()),
            log: ConvergenceLog {
                solver: "radial".into(),
                bc: req.bc,
                converged: true,
                final_residual,
                iterates,
                neumann_integral,
                notes: vec![format!(
                    "RK4 shooting on {} nodes, centre value {}, node residual {:e}",
                    profile.u.len() - 1,
                    profile.alpha,
                    profile.node_residual()
                )],
            },
        })
    }
}

pub struct GridNewton;

impl Solver for GridNewton {
    fn name(&self) -> &'static str {
        "grid"
    }

    fn solve(&self, req: &SolveRequest) -> Result<SolveOutcome, SolverError> {
        req.params.validate()?;
        let mut iterates = Vec::new();
        let mut current = req.initial.clone();
        let mut last = None;
        for (s, law) in homotopy(&req.law, req.params.continuation_steps) {
            let (g, disc, res) = solve_grid(&req.domain, law.as_ref(), req.bc, req.n, current.as_ref(), &req.params)?;
            iterates.extend(res.steps.iter().map(|st| IterateRecord {
                stage: s,
                iteration: st.iteration,
                residual: st.residual,
                step_norm: Some(st.step_norm),
                damping: Some(st.damping),
                halvings: Some(st.halvings),
                cg_iterations: Some(st.cg_iterations),
                linear_mode: Some(st.linear_mode),
                constant_mode_projected: Some(st.constant_mode_projected),
                alpha: None,
            }));
            iterates.push(IterateRecord {
                stage: s,
                iteration: res.steps.len(),
                residual: res.residual,
                step_norm: None,
                damping: None,
                halvings: None,
                cg_iterations: None,
                linear_mode: None,
                constant_mode_projected: None,
                alpha: None,
            });
            current = Some(g.clone());
            last = Some((g, disc, res));
        }
        let (grid, disc, res) = last.expect("homotopy has at least one stage");
        let neumann_integral = (req.bc == BoundaryCondition::Neumann).then(|| {
            let terms: Vec<f64> = res.values.iter().zip(&disc.w).map(|(u, w)| w * req.law.f(*u)).collect();
            crate::quadrature::pairwise_sum(&terms)
        });
        let scheme = match req.bc {
            BoundaryCondition::Dirichlet => "5-point stencil, boundary values by linear interpolation across cut edges",
            BoundaryCondition::Neumann => "cut-cell finite volumes with zero boundary flux",
        };
        Ok(SolveOutcome {
            field: Arc::new(grid.clone()),
            grid,
            profile: None,
            log: ConvergenceLog {
                solver: "grid".into(),
                bc: req.bc,
                converged: true,
                final_residual: res.residual,
                iterates,
                neumann_integral,
                notes: vec![format!("damped Newton on {} unknowns; {scheme}", disc.len())],
            },
        })
    }
}

pub type SharedSolver = Arc<dyn Solver>;

pub fn solver_catalog() -> Registry<SharedSolver> {
    let mut reg = Registry::new("solver");
    reg.register("radial", "RK4 shooting on the centre value (disks only)", |_| {
        Ok(Arc::new(RadialShooting) as SharedSolver)
    })
    .register("grid", "damped Newton on an embedded-boundary grid", |_| {
        Ok(Arc::new(GridNewton) as SharedSolver)
    });
    reg
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    /// Sup-norm of `−Δu − f(u)` over the samples that could be evaluated.
    pub sup: f64,
    pub argmax: [f64; 2],
    pub samples: usize,
    /// Samples where `u` left the domain of `f`; they are skipped.
    pub skipped: usize,
    pub first_violation: Option<f64>,
}

pub const RESIDUAL_SAMPLES: usize = 10_000;

/// Quasi-random (Halton 2, 3) points strictly inside `domain`, optionally
/// shifted modulo 1 by a seeded random offset.
pub fn interior_samples(domain: &Domain, count: usize, seed: Option<u64>) -> Vec<Point> {
    let (lo, hi) = domain.bbox();
    let shift = seed.map_or([0.0, 0.0], |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        [rng.gen::<f64>(), rng.gen::<f64>()]
    });
    let mut out = Vec::with_capacity(count);
    let mut k = 1u64;
    while out.len() < count {
        let a = (radical_inverse(k, 2) + shift[0]).fract();
        let b = (radical_inverse(k, 3) + shift[1]).fract();
        let x = Point::new(lo.x + a * (hi.x - lo.x), lo.y + b * (hi.y - lo.y));
        if domain.contains(x) == Containment::Interior {
            out.push(x);
        }
        k += 1;
    }
    out
}

fn residual_at(points: &[Point], field: &dyn ScalarField, law: &dyn NonlinearLaw) -> ResidualReport {
    let mut report = ResidualReport {
        sup: 0.0,
        argmax: [f64::NAN, f64::NAN],
        samples: 0,
        skipped: 0,
        first_violation: None,
    };
    for &x in points {
        let u = field.value(x);
        if !law.contains(u) {
            report.skipped += 1;
            report.first_violation.get_or_insert(u);
            continue;
        }
        report.samples += 1;
        let r = (-field.laplacian(x) - law.f(u)).abs();
        if r > report.sup || report.argmax[0].is_nan() {
            report.sup = r;
            report.argmax = [x.x, x.y];
        }
    }
    if report.skipped > 0 {
        log::warn!("residual: {} samples outside the domain of f were skipped", report.skipped);
    }
    report
}

/// Sup-norm of the pointwise residual `−Δu − f(u)`: over 10⁴ quasi-random
/// interior points for analytic fields, over interior nodes for grid fields.
pub fn residual_norm(field: &dyn ScalarField, law: &dyn NonlinearLaw, domain: &Domain) -> ResidualReport {
    residual_norm_seeded(field, law, domain, None)
}

pub fn residual_norm_seeded(field: &dyn ScalarField, law: &dyn NonlinearLaw, domain: &Domain, seed: Option<u64>) -> ResidualReport {
    match field.as_grid() {
        Some(g) => {
            let lat = g.lattice();
            let points: Vec<Point> = g
                .mask()
                .iter()
                .enumerate()
                .filter(|(_, m)| **m == NodeKind::Interior)
                .map(|(k, _)| {
                    let (i, j) = lat.coords(k);
                    lat.node(i, j)
                })
                .filter(|x| domain.contains(*x) == Containment::Interior)
                .collect();
            residual_at(&points, field, law)
        }
        None => residual_at(&interior_samples(domain, RESIDUAL_SAMPLES, seed), field, law),
    }
}
