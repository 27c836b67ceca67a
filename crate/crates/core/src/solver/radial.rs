//! Radial shooting on disks: `u″ + u′/r + f(u) = 0`, `u(0) = α`, `u′(0) = 0`,
//! with `α` adjusted by secant steps until the boundary condition holds.

use serde::Serialize;

use super::{BoundaryCondition, SolverError, SolverParams};
use crate::field::RadialProfileFn;
use crate::nonlinearity::{NonlinearLaw, SharedLaw};

/// Solution profile on uniform nodes `r_k = k·R/N`, cubic Hermite in between.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub radius: f64,
    pub h: f64,
    pub alpha: f64,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub d2u: Vec<f64>,
    law: SharedLaw,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct ShootingStep {
    pub iteration: usize,
    pub alpha: f64,
    pub miss: f64,
}

fn rhs(law: &dyn NonlinearLaw, r: f64, u: f64, v: f64) -> Result<(f64, f64), SolverError> {
    if !law.contains(u) {
        return Err(SolverError::DomainViolation { u, at: format!("r = {r}") });
    }
    Ok((v, -v / r - law.f(u)))
}

/// Integrate from the centre value `alpha` out to `radius` on `nodes`
/// intervals.
pub fn integrate_profile(law: SharedLaw, alpha: f64, radius: f64, nodes: usize) -> Result<RadialProfile, SolverError> {
    if !law.contains(alpha) {
        return Err(SolverError::DomainViolation {
            u: alpha,
            at: "r = 0".into(),
        });
    }
    let h = radius / nodes as f64;
    let f0 = law.f(alpha);
    let mut u = vec![0.0; nodes + 1];
    let mut du = vec![0.0; nodes + 1];
    let mut d2u = vec![0.0; nodes + 1];
    u[0] = alpha;
    du[0] = 0.0;
    d2u[0] = -0.5 * f0;
    // Removable singularity at r = 0: Taylor step to r = h.
    u[1] = alpha - f0 * h * h / 4.0;
    du[1] = -f0 * h / 2.0;
    for k in 1..nodes {
        let r = k as f64 * h;
        let (y, v) = (u[k], du[k]);
        let (k1u, k1v) = rhs(law.as_ref(), r, y, v)?;
        let (k2u, k2v) = rhs(law.as_ref(), r + h / 2.0, y + h / 2.0 * k1u, v + h / 2.0 * k1v)?;
        let (k3u, k3v) = rhs(law.as_ref(), r + h / 2.0, y + h / 2.0 * k2u, v + h / 2.0 * k2v)?;
        let (k4u, k4v) = rhs(law.as_ref(), r + h, y + h * k3u, v + h * k3v)?;
        u[k + 1] = y + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        du[k + 1] = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if !u[k + 1].is_finite() || !du[k + 1].is_finite() {
            return Err(SolverError::DomainViolation {
                u: u[k + 1],
                at: format!("r = {}", r + h),
            });
        }
    }
    for k in 1..=nodes {
        let r = k as f64 * h;
        if !law.contains(u[k]) {
            return Err(SolverError::DomainViolation {
                u: u[k],
                at: format!("r = {r}"),
            });
        }
        d2u[k] = -du[k] / r - law.f(u[k]);
    }
    Ok(RadialProfile {
        radius,
        h,
        alpha,
        u,
        du,
        d2u,
        law,
    })
}

/// Shoot on the centre value until `u(R) = 0` (Dirichlet) or `u′(R) = 0`
/// (Neumann).
pub fn solve_radial(
    law: SharedLaw,
    radius: f64,
    bc: BoundaryCondition,
    guess: f64,
    params: &SolverParams,
) -> Result<(RadialProfile, Vec<ShootingStep>), SolverError> {
    let tol = params.tol_residual.unwrap_or(1e-10);
    let nodes = params.radial_nodes.max(1024);
    let miss = |p: &RadialProfile| match bc {
        BoundaryCondition::Dirichlet => p.u[p.u.len() - 1],
        BoundaryCondition::Neumann => p.du[p.du.len() - 1],
    };
    let mut history = Vec::new();
    let mut a0 = guess;
    let p0 = integrate_profile(law.clone(), a0, radius, nodes)?;
    let mut m0 = miss(&p0);
    history.push(ShootingStep {
        iteration: 0,
        alpha: a0,
        miss: m0,
    });
    if m0.abs() < tol {
        return Ok((p0, history));
    }
    let mut a1 = guess + (0.1 * guess.abs()).max(1e-3);
    let mut p1 = integrate_profile(law.clone(), a1, radius, nodes)?;
    let mut m1 = miss(&p1);
    for it in 1..=params.max_shooting {
        history.push(ShootingStep {
            iteration: it,
            alpha: a1,
            miss: m1,
        });
        if m1.abs() < tol {
            return Ok((p1, history));
        }
        let denom = m1 - m0;
        if denom == 0.0 || !denom.is_finite() {
            return Err(SolverError::ShootingNoConvergence {
                iterations: it,
                miss: m1,
                reason: "boundary miss does not depend on the centre value".into(),
            });
        }
        let a2 = a1 - m1 * (a1 - a0) / denom;
        if !a2.is_finite() {
            break;
        }
        (a0, m0) = (a1, m1);
        a1 = a2;
        p1 = integrate_profile(law.clone(), a1, radius, nodes)?;
        m1 = miss(&p1);
    }
    Err(SolverError::ShootingNoConvergence {
        iterations: params.max_shooting,
        miss: m1,
        reason: "secant iteration exhausted".into(),
    })
}

impl RadialProfile {
    fn locate(&self, r: f64) -> (usize, f64) {
        let n = self.u.len() - 1;
        let s = (r / self.h).clamp(0.0, n as f64);
        let k = (s.floor() as usize).min(n - 1);
        (k, s - k as f64)
    }

    fn hermite(y0: f64, y1: f64, m0: f64, m1: f64, h: f64, t: f64) -> f64 {
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * m1
    }

    /// Largest `|−Δu − f(u)|` over the nodes, from the stored derivatives.
    pub fn node_residual(&self) -> f64 {
        (1..self.u.len())
            .map(|k| {
                let r = k as f64 * self.h;
                (-(self.d2u[k] + self.du[k] / r) - self.law.f(self.u[k])).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn law(&self) -> &SharedLaw {
        &self.law
    }
}

impl RadialProfileFn for RadialProfile {
    fn u(&self, r: f64) -> f64 {
        let (k, t) = self.locate(r);
        Self::hermite(self.u[k], self.u[k + 1], self.du[k], self.du[k + 1], self.h, t)
    }

    fn du(&self, r: f64) -> f64 {
        let (k, t) = self.locate(r);
        Self::hermite(self.du[k], self.du[k + 1], self.d2u[k], self.d2u[k + 1], self.h, t)
    }

    fn d2u(&self, r: f64) -> f64 {
        // From the equation itself, so −Δu matches f(u) along the profile.
        -self.du_over_r(r) - self.law.f(self.u(r))
    }

    fn du_over_r(&self, r: f64) -> f64 {
        if r == 0.0 {
            // u′(r)/r → u″(0) = −f(α)/2
            self.d2u[0]
        } else {
            self.du(r) / r
        }
    }

    fn extent(&self) -> f64 {
        self.radius
    }

    fn describe(&self) -> String {
        format!("shooting profile (alpha = {}, R = {})", self.alpha, self.radius)
    }
}
