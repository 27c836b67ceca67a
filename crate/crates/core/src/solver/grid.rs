//! Damped Newton on a masked Cartesian grid.
//!
//! Both boundary conditions are written as `K u = W f(u)` with `K` symmetric:
//!
//! * Dirichlet: 5-point stencil on nodes strictly inside `D`; a neighbour
//!   across `∂D` at fraction `θ` of the edge is replaced by the ghost value
//!   `−u_i(1−θ)/θ` (linear through `u = 0` on the boundary), which adds
//!   `(1−θ)/θ` to the diagonal. `W = h²`.
//! * Neumann: cut-cell finite volumes on dual cells. Fluxes cross dual faces
//!   in proportion to their aperture inside `D`, and `W` is the dual-cell
//!   area inside `D`. Zero flux through `∂D` is built in, and summing the
//!   rows gives `Σ W f(u) = 0`, the discrete compatibility condition.

use serde::Serialize;

use super::linear::{cg_normal, norm2, pcg, CgOutcome, Csr, LinearMode, NullSpace};
use super::{BoundaryCondition, SolverError, SolverParams};
use crate::field::{GridField, Provenance};
use crate::geometry::{Containment, Domain, Vec2};
use crate::lattice::Lattice;
use crate::nonlinearity::NonlinearLaw;
use crate::quadrature::{integrate_region, pairwise_sum, Region};

const THETA_MIN: f64 = 1e-3;
const MIN_VOLUME: f64 = 1e-4;

/// Ghost value of an exterior node as a combination of unknowns.
#[derive(Debug, Clone)]
struct Ghost {
    node: usize,
    terms: Vec<(usize, f64)>,
}

/// The assembled linear part of the discrete problem.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub bc: BoundaryCondition,
    pub lattice: Lattice,
    /// Lattice index of every unknown.
    pub nodes: Vec<usize>,
    pub k: Csr,
    /// Weights multiplying `f(u)`.
    pub w: Vec<f64>,
    /// Residual scale per unknown: `r_i / scale_i` approximates `−Δu − f`.
    pub scale: Vec<f64>,
    ghosts: Vec<Ghost>,
    zero_nodes: Vec<usize>,
}

impl Discretization {
    pub fn new(domain: &Domain, lattice: Lattice, bc: BoundaryCondition) -> Self {
        match bc {
            BoundaryCondition::Dirichlet => dirichlet(domain, lattice),
            BoundaryCondition::Neumann => neumann(domain, lattice),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node values on the full lattice, ghosts included.
    pub fn expand(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![f64::NAN; self.lattice.len()];
        for (k, &node) in self.nodes.iter().enumerate() {
            out[node] = u[k];
        }
        for &node in &self.zero_nodes {
            out[node] = 0.0;
        }
        for g in &self.ghosts {
            if out[g.node].is_nan() {
                out[g.node] = g.terms.iter().map(|(k, c)| c * u[*k]).sum();
            }
        }
        out
    }

    /// `K u − W f(u)`, or the first unknown whose value leaves the law's domain.
    pub fn residual(&self, law: &dyn NonlinearLaw, u: &[f64]) -> Result<Vec<f64>, f64> {
        if let Some(bad) = u.iter().find(|v| !law.contains(**v)) {
            return Err(*bad);
        }
        let ku = self.k.matvec(u);
        Ok(ku.iter()
            .zip(u)
            .zip(&self.w)
            .map(|((kv, uv), w)| kv - w * law.f(*uv))
            .collect())
    }

    pub fn scaled_sup(&self, r: &[f64]) -> f64 {
        r.iter().zip(&self.scale).map(|(a, s)| (a / s).abs()).fold(0.0, f64::max)
    }

    fn scaled(&self, r: &[f64]) -> Vec<f64> {
        r.iter().zip(&self.scale).map(|(a, s)| a / s).collect()
    }
}

fn dirichlet(domain: &Domain, lattice: Lattice) -> Discretization {
    let kinds: Vec<Containment> = (0..lattice.len())
        .map(|k| {
            let (i, j) = lattice.coords(k);
            domain.contains(lattice.node(i, j))
        })
        .collect();
    let mut index = vec![usize::MAX; lattice.len()];
    let mut nodes = Vec::new();
    for (k, c) in kinds.iter().enumerate() {
        if *c == Containment::Interior {
            index[k] = nodes.len();
            nodes.push(k);
        }
    }
    let mut rows = Vec::with_capacity(nodes.len());
    let mut ghost_terms: std::collections::BTreeMap<usize, Vec<(usize, f64)>> = Default::default();
    let mut zero_nodes = Vec::new();
    for (row, &node) in nodes.iter().enumerate() {
        let (i, j) = lattice.coords(node);
        let x = lattice.node(i, j);
        let mut entries = Vec::with_capacity(5);
        let mut diag = 0.0;
        for (_, a, b) in lattice.neighbours4(i, j) {
            let nb = lattice.index(a, b);
            if index[nb] != usize::MAX {
                diag += 1.0;
                entries.push((index[nb], -1.0));
                continue;
            }
            let theta = domain.crossing_fraction(x, lattice.node(a, b)).clamp(THETA_MIN, 1.0);
            diag += 1.0 / theta;
            if kinds[nb] == Containment::Boundary {
                zero_nodes.push(nb);
            } else {
                ghost_terms.entry(nb).or_default().push((row, -(1.0 - theta) / theta));
            }
        }
        entries.push((row, diag));
        rows.push(entries);
    }
    zero_nodes.sort_unstable();
    zero_nodes.dedup();
    let ghosts = ghost_terms
        .into_iter()
        .map(|(node, terms)| {
            let n = terms.len() as f64;
            Ghost {
                node,
                terms: terms.into_iter().map(|(r, c)| (r, c / n)).collect(),
            }
        })
        .collect();
    let h2 = lattice.h * lattice.h;
    let n = nodes.len();
    Discretization {
        bc: BoundaryCondition::Dirichlet,
        lattice,
        k: Csr::from_rows(rows),
        w: vec![h2; n],
        scale: vec![h2; n],
        nodes,
        ghosts,
        zero_nodes,
    }
}

/// Area of the dual cell of every node inside `D`.
pub fn dual_volumes(domain: &Domain, lattice: &Lattice) -> Vec<f64> {
    let h = lattice.h;
    let region = Region::domain(domain);
    (0..lattice.len())
        .map(|k| {
            let (i, j) = lattice.coords(k);
            let c = lattice.node(i, j);
            let d = domain.signed_distance(c);
            if d > 0.75 * h {
                return 0.0;
            }
            if d < -0.75 * h {
                return h * h;
            }
            let cell = Lattice {
                lo: [c.x - 0.5 * h, c.y - 0.5 * h],
                h,
                nx: 2,
                ny: 2,
            };
            integrate_region(&region, &cell, |_| 1.0).area
        })
        .collect()
}

fn neumann(domain: &Domain, lattice: Lattice) -> Discretization {
    let h = lattice.h;
    let volumes = dual_volumes(domain, &lattice);
    let aperture = |k: usize, a: usize, b: usize| -> f64 {
        let (i, j) = lattice.coords(k);
        let p = lattice.node(i, j);
        let q = lattice.node(a, b);
        let mid = 0.5 * (p + q);
        let t = (q - p) / h;
        let n = Vec2::new(-t.y, t.x) * (0.5 * h);
        domain.segment_overlap(mid - n, mid + n).map_or(0.0, |(s0, s1)| s1 - s0)
    };
    let candidate: Vec<bool> = volumes.iter().map(|v| *v > MIN_VOLUME * h * h).collect();
    let mut index = vec![usize::MAX; lattice.len()];
    let mut nodes = Vec::new();
    for k in 0..lattice.len() {
        if !candidate[k] {
            continue;
        }
        let (i, j) = lattice.coords(k);
        let connected = lattice
            .neighbours4(i, j)
            .any(|(_, a, b)| candidate[lattice.index(a, b)] && aperture(k, a, b) > 0.0);
        if connected {
            index[k] = nodes.len();
            nodes.push(k);
        }
    }
    let mut rows = Vec::with_capacity(nodes.len());
    let mut ghost_terms: std::collections::BTreeMap<usize, Vec<(usize, f64)>> = Default::default();
    for (row, &node) in nodes.iter().enumerate() {
        let (i, j) = lattice.coords(node);
        let mut entries = Vec::with_capacity(5);
        let mut diag = 0.0;
        for (_, a, b) in lattice.neighbours4(i, j) {
            let nb = lattice.index(a, b);
            if index[nb] == usize::MAX {
                ghost_terms.entry(nb).or_default().push((row, 1.0));
                continue;
            }
            let ap = aperture(node, a, b);
            if ap > 0.0 {
                diag += ap;
                entries.push((index[nb], -ap));
            }
        }
        entries.push((row, diag));
        rows.push(entries);
    }
    let ghosts = ghost_terms
        .into_iter()
        .map(|(node, terms)| {
            let n = terms.len() as f64;
            Ghost {
                node,
                terms: terms.into_iter().map(|(r, c)| (r, c / n)).collect(),
            }
        })
        .collect();
    let w: Vec<f64> = nodes.iter().map(|&k| volumes[k]).collect();
    let scale = w.iter().map(|v| v.max(0.25 * h * h)).collect();
    Discretization {
        bc: BoundaryCondition::Neumann,
        lattice,
        k: Csr::from_rows(rows),
        w,
        scale,
        nodes,
        ghosts,
        zero_nodes: Vec::new(),
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct NewtonStep {
    pub iteration: usize,
    pub residual: f64,
    pub step_norm: f64,
    pub damping: f64,
    pub halvings: usize,
    pub cg_iterations: usize,
    pub linear_mode: LinearMode,
    pub constant_mode_projected: bool,
}

#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub values: Vec<f64>,
    pub residual: f64,
    pub steps: Vec<NewtonStep>,
}

fn linear_solve(j: &Csr, rhs: &[f64], null: Option<&NullSpace>, max_iter: usize) -> Result<(Vec<f64>, usize, LinearMode), String> {
    let tol = 1e-11;
    match pcg(j, rhs, tol, max_iter, null) {
        (x, CgOutcome::Converged { iterations, mode }) => Ok((x, iterations, mode)),
        (_, CgOutcome::Indefinite { .. }) => match cg_normal(j, rhs, tol, 4 * max_iter, null) {
            (x, CgOutcome::Converged { iterations, mode }) => Ok((x, iterations, mode)),
            (x, CgOutcome::Stalled { iterations, residual }) if residual < 1e-6 => {
                log::warn!("normal-equation CG stopped at relative residual {residual:e}");
                Ok((x, iterations, LinearMode::NormalEquations))
            }
            (_, other) => Err(format!("{other:?}")),
        },
        (x, CgOutcome::Stalled { iterations, residual }) if residual < 1e-6 => {
            log::warn!("CG stopped at relative residual {residual:e}");
            Ok((x, iterations, LinearMode::Cg))
        }
        (_, other) => Err(format!("{other:?}")),
    }
}

/// Damped Newton from `u0` on an assembled discretization.
pub fn newton(disc: &Discretization, law: &dyn NonlinearLaw, u0: Vec<f64>, params: &SolverParams) -> Result<NewtonResult, SolverError> {
    let n = disc.len();
    let mut u = u0;
    let mut steps = Vec::new();
    let max_cg = (20 * n).max(1000);
    let ones = vec![1.0 / (n as f64).sqrt(); n];
    for it in 0..=params.max_newton {
        let r = disc.residual(law, &u).map_err(|v| SolverError::DomainViolation {
            u: v,
            at: format!("Newton iterate {it}"),
        })?;
        let sup = disc.scaled_sup(&r);
        let f_scale = u.iter().map(|v| law.f(*v).abs()).fold(0.0, f64::max);
        let tol = params.tol_residual.unwrap_or(1e-8 * f_scale.max(1.0));
        if sup < tol {
            log::debug!("newton converged after {it} steps, residual {sup:e}");
            return Ok(NewtonResult {
                values: u,
                residual: sup,
                steps,
            });
        }
        if it == params.max_newton {
            return Err(SolverError::MaxIterations {
                iterations: it,
                residual: sup,
            });
        }
        let wfp: Vec<f64> = u.iter().zip(&disc.w).map(|(v, w)| w * law.fprime(*v)).collect();
        let jac = disc.k.minus_diagonal(&wfp);
        let d = jac.diagonal();
        let rayleigh = pairwise_sum(&jac.matvec(&ones).iter().zip(&ones).map(|(a, b)| a * b).collect::<Vec<_>>())
            / pairwise_sum(&d.iter().zip(&ones).map(|(a, b)| a.abs() * b * b).collect::<Vec<_>>());
        let project = disc.bc == BoundaryCondition::Neumann && rayleigh.abs() < 1e-8;
        let null = NullSpace(&ones);
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let (delta, cg_iterations, mode) = linear_solve(&jac, &rhs, project.then_some(&null), max_cg)
            .map_err(|detail| SolverError::CgBreakdown {
                iteration: it,
                residual: sup,
                detail,
            })?;

        let merit = norm2(&disc.scaled(&r));
        let mut t = 1.0;
        let mut halvings = 0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, b)| a + t * b).collect();
            if let Ok(rt) = disc.residual(law, &trial) {
                if norm2(&disc.scaled(&rt)) < (1.0 - 1e-4 * t) * merit {
                    u = trial;
                    break;
                }
            }
            if halvings == params.max_halvings {
                return Err(SolverError::NewtonStagnation {
                    iteration: it,
                    residual: sup,
                });
            }
            t *= params.damping;
            halvings += 1;
        }
        steps.push(NewtonStep {
            iteration: it,
            residual: sup,
            step_norm: t * norm2(&delta),
            damping: t,
            halvings,
            cg_iterations,
            linear_mode: mode,
            constant_mode_projected: project,
        });
    }
    unreachable!("loop returns on its last iteration")
}

/// Newton solve of `−Δu = f(u)` on `domain` with `n` nodes across.
pub fn solve_grid(
    domain: &Domain,
    law: &dyn NonlinearLaw,
    bc: BoundaryCondition,
    n: usize,
    initial: Option<&GridField>,
    params: &SolverParams,
) -> Result<(GridField, Discretization, NewtonResult), SolverError> {
    let lattice = GridField::lattice_for(domain, n)?;
    let disc = Discretization::new(domain, lattice, bc);
    let u0: Vec<f64> = disc
        .nodes
        .iter()
        .map(|&k| {
            let (i, j) = lattice.coords(k);
            initial
                .map(|g| crate::field::ScalarField::value(g, lattice.node(i, j)))
                .filter(|v| v.is_finite())
                .unwrap_or(0.0)
        })
        .collect();
    let result = newton(&disc, law, u0, params)?;
    let field = GridField::from_values(
        "solution",
        domain.clone(),
        lattice,
        disc.expand(&result.values),
        Provenance::Solved { solver: "grid".into() },
    );
    Ok((field, disc, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::geometry::Point;
    use crate::nonlinearity::Power;

    fn disk() -> Domain {
        Domain::disk(Point::zeros(), 1.0).unwrap()
    }

    #[test]
    fn operators_are_symmetric() {
        let lat = GridField::lattice_for(&disk(), 24).unwrap();
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
            let d = Discretization::new(&disk(), lat, bc);
            assert!(d.k.is_symmetric(1e-14), "{bc:?}");
        }
    }

    #[test]
    fn neumann_rows_sum_to_zero_and_volumes_cover_domain() {
        let lat = GridField::lattice_for(&disk(), 64).unwrap();
        let d = Discretization::new(&disk(), lat, BoundaryCondition::Neumann);
        let ones = vec![1.0; d.len()];
        assert!(d.k.matvec(&ones).iter().all(|v| v.abs() < 1e-12));
        let area: f64 = pairwise_sum(&d.w);
        assert!((area - std::f64::consts::PI).abs() < 1e-3, "{area}");
    }

    #[test]
    fn zero_law_returns_zero_immediately() {
        let zero = Power::new(0.0, 0.0, 0.0).unwrap();
        let (g, _, res) = solve_grid(&disk(), &zero, BoundaryCondition::Dirichlet, 32, None, &SolverParams::default()).unwrap();
        assert!(res.steps.is_empty());
        assert!(g.inside_nodes().all(|k| g.values()[k] == 0.0));
    }

    #[test]
    fn poisson_center_value() {
        let one = Power::new(0.0, 1.0, 0.0).unwrap();
        let (g, _, _) = solve_grid(&disk(), &one, BoundaryCondition::Dirichlet, 128, None, &SolverParams::default()).unwrap();
        assert!((g.value(Point::zeros()) - 0.25).abs() < 5e-4);
    }

    #[test]
    fn neumann_linear_problem_keeps_compatibility() {
        // −Δu = u − 1 has the solution u = 1; Newton must find it and the
        // weighted sum of f vanishes.
        let law = Power::new(1.0, 1.0, -1.0).unwrap();
        let params = SolverParams::default();
        let lat = GridField::lattice_for(&disk(), 32).unwrap();
        let d = Discretization::new(&disk(), lat, BoundaryCondition::Neumann);
        let u0 = vec![0.5; d.len()];
        let res = newton(&d, &law, u0, &params).unwrap();
        let s: Vec<f64> = res.values.iter().zip(&d.w).map(|(u, w)| w * law.f(*u)).collect();
        assert!(pairwise_sum(&s).abs() < 1e-8);
    }
}
