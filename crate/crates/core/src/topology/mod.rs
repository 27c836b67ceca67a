//! Critical points and level sets of a field on a domain: detection,
//! classification by the sign of `∇u·(x−p)` on small rings, non-isolated
//! critical curves, marching-squares contours and the sign regions of
//! `f(u(x))`.

mod checks;
mod contour;
mod critical;
mod regions;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldError, GridField, ScalarField};
use crate::geometry::{Domain, Point, Vec2};
use crate::lattice::Lattice;
use crate::nonlinearity::NonlinearityError;

pub use checks::{
    check_extremum_signs, check_level_disjointness, check_sign_change_curve, euler_count, gradient_transverse,
    DisjointnessReport, EulerCount, ExtremumSignVerdict, SignChangeCurveReport,
};
pub use contour::{extract_level_set, marching_squares, write_level_csv, LevelComponent, MAX_COMPONENTS};
pub use critical::{
    absorb_nonisolated, analyze_critical_points, classify_isolated, detect_nonisolated, find_critical_points,
    refine_critical, Classification, CriticalKind, CriticalPoint, RingEvidence,
};
pub use regions::{sign_regions, ExtremumSet, SignRegions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("level set has more than {0} components")]
    TooManyComponents(usize),
    #[error("every ring sample has |∇u·(x−p)| below tolerance at ({x}, {y}); the point is not isolated at these scales")]
    NonIsolatedHint { x: f64, y: f64 },
    #[error("no ring sample lies in the closed domain around ({x}, {y})")]
    EmptyRing { x: f64, y: f64 },
    #[error("sign-change value {u0} is outside the range [{m}, {big_m}] of u")]
    OutOfRange { u0: f64, m: f64, big_m: f64 },
    #[error("u = {u} at ({x}, {y}) is outside the domain of f")]
    DomainViolation { u: f64, x: f64, y: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
}

/// Sampling and tolerance choices shared by the topology operations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyParams {
    /// Nodes along the longer bbox side when sampling analytic fields.
    pub n: usize,
    /// Gradient tolerance; `None` picks `10⁻¹⁰` (analytic) or `10·h²` (grid).
    pub tau_g: Option<f64>,
    /// Ring radii; `None` picks `{10⁻³, 10⁻², 10⁻¹}·diam` (analytic) or `{2h, 4h, 8h}` (grid).
    pub deltas: Option<Vec<f64>>,
    pub ring_samples: usize,
}

impl Default for TopologyParams {
    fn default() -> Self {
        TopologyParams {
            n: 256,
            tau_g: None,
            deltas: None,
            ring_samples: 64,
        }
    }
}

/// A field sampled on a lattice covering the domain: node values and
/// gradients (`NaN` where a grid field has no data) and the nodes in `D̄`.
pub struct Probe<'a> {
    pub field: &'a dyn ScalarField,
    pub domain: &'a Domain,
    pub lattice: Lattice,
    pub values: Vec<f64>,
    pub grads: Vec<Vec2>,
    pub inside: Vec<bool>,
    pub analytic: bool,
}

impl<'a> Probe<'a> {
    /// Grid fields keep their own lattice; other fields are sampled with `n`
    /// nodes along the longer side of the bounding box.
    pub fn new(field: &'a dyn ScalarField, domain: &'a Domain, n: usize) -> Result<Self, TopologyError> {
        let (lattice, values, grads) = match field.as_grid() {
            Some(g) => {
                let lat = *g.lattice();
                let grads = (0..lat.len())
                    .map(|k| {
                        let (i, j) = lat.coords(k);
                        g.node_gradient(i, j)
                    })
                    .collect();
                (lat, g.values().to_vec(), grads)
            }
            None => {
                let lat = GridField::lattice_for(domain, n)?;
                let pairs: Vec<(f64, Vec2)> = (0..lat.len())
                    .into_par_iter()
                    .map(|k| {
                        let (i, j) = lat.coords(k);
                        let x = lat.node(i, j);
                        (field.value(x), field.gradient(x))
                    })
                    .collect();
                let (v, g) = pairs.into_iter().unzip();
                (lat, v, g)
            }
        };
        let inside = (0..lattice.len())
            .map(|k| {
                let (i, j) = lattice.coords(k);
                domain.contains_closed(lattice.node(i, j)) && values[k].is_finite()
            })
            .collect();
        Ok(Probe {
            field,
            domain,
            lattice,
            values,
            grads,
            inside,
            analytic: field.as_grid().is_none(),
        })
    }

    pub fn from_params(field: &'a dyn ScalarField, domain: &'a Domain, params: &TopologyParams) -> Result<Self, TopologyError> {
        Self::new(field, domain, params.n)
    }

    pub fn h(&self) -> f64 {
        self.lattice.h
    }

    pub fn node(&self, k: usize) -> Point {
        let (i, j) = self.lattice.coords(k);
        self.lattice.node(i, j)
    }

    pub fn default_tau_g(&self) -> f64 {
        if self.analytic {
            1e-10
        } else {
            10.0 * self.h() * self.h()
        }
    }

    pub fn default_deltas(&self) -> Vec<f64> {
        if self.analytic {
            let d = self.domain.diameter();
            vec![1e-3 * d, 1e-2 * d, 1e-1 * d]
        } else {
            let h = self.h();
            vec![2.0 * h, 4.0 * h, 8.0 * h]
        }
    }

    pub fn tau_g(&self, params: &TopologyParams) -> f64 {
        params.tau_g.unwrap_or_else(|| self.default_tau_g())
    }

    pub fn deltas(&self, params: &TopologyParams) -> Vec<f64> {
        params.deltas.clone().unwrap_or_else(|| self.default_deltas())
    }

    /// Smallest and largest node value in `D̄`.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .zip(&self.inside)
            .filter(|(_, i)| **i)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (v, _)| (lo.min(*v), hi.max(*v)))
    }
}

pub(crate) fn pt(x: Point) -> [f64; 2] {
    [x.x, x.y]
}
