//! Local Pohozaev bookkeeping on `𝓑_δ(p) = B_δ(p) ∩ D` and its halves
//! `𝓑±` where `g = ∇u·(x − p)` is positive or negative.
//!
//! Every volume and boundary term is evaluated on its own, so the printed
//! identity and the one obtained from the divergence theorem can be checked
//! against each other. In two dimensions
//!
//! ```text
//! ∫ ∇u·∇g = ∮ (|∇u|²/2)((x−p)·n)          (no volume term)
//! ∫ f(u) g = ∮ F(u)((x−p)·n) − 2∫ F(u)
//! ```
//!
//! so with `−Δu = f(u)` the oracle identity reads
//! `T_energy − T_F − T_flux + 2 V_F = 0`.

mod partition;
mod paths;

use std::sync::Arc;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::field::{FieldError, ScalarField};
use crate::geometry::{Domain, Point, Vec2};
use crate::nonlinearity::{check_hypothesis_a, HypothesisAReport, NonlinearLaw, NonlinearityError};
use crate::quadrature::QuadratureError;
use crate::registry::{check_keys, Registry};

pub use partition::{
    partition_ball, radial_derivative, radial_derivative_gradient, split_runs, BallPartition, NormalRule,
    PartitionSummary, Run,
};
pub use paths::{ExactRadial, GridQuadrature};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PohozaevError {
    #[error("ball radius {delta} must exceed 4h = {min} on this grid")]
    DeltaTooSmall { delta: f64, min: f64 },
    #[error("ball of radius {delta} around ({x}, {y}) does not meet the domain")]
    EmptyBall { x: f64, y: f64, delta: f64 },
    #[error("ledger path '{path}' does not apply: {reason}")]
    PathNotApplicable { path: &'static str, reason: String },
    #[error("u = {u} at ({x}, {y}) is outside the domain of f")]
    DomainViolation { u: f64, x: f64, y: f64 },
    #[error("ledger term {0} is not finite")]
    NonFinite(&'static str),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
}

/// Which part of `𝓑_δ(p)` a ledger integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
    Whole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PohozaevParams {
    /// Nodes across the ball for the 2-D path on analytic fields.
    pub n: usize,
    /// `|g| ≤ τ_g` counts as neither side; `None` picks `10⁻¹⁰` (analytic)
    /// or `10·h²` (grid).
    pub tau_g: Option<f64>,
    /// Vertices on the full sphere `∂B_δ(p)`; `∂D` is sampled at the same
    /// spacing.
    pub arc_vertices: usize,
}

impl Default for PohozaevParams {
    fn default() -> Self {
        PohozaevParams {
            n: 256,
            tau_g: None,
            arc_vertices: 4096,
        }
    }
}

/// Boundary integrals over one piece of `∂𝓑`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTerms {
    /// `∫ (|∇u|²/2)((x−p)·n)`
    #[serde(rename = "T_energy")]
    pub energy: f64,
    /// `∫ F(u)((x−p)·n)`
    #[serde(rename = "T_F")]
    pub big_f: f64,
    /// `∫ (∂u/∂n)(∇u·(x−p))`
    #[serde(rename = "T_flux")]
    pub flux: f64,
    /// `∫ (∂u/∂n) u`
    #[serde(rename = "T_un_u")]
    pub un_u: f64,
    pub length: f64,
}

impl BoundaryTerms {
    fn from_array(v: [f64; 4], length: f64) -> Self {
        BoundaryTerms {
            energy: v[0],
            big_f: v[1],
            flux: v[2],
            un_u: v[3],
            length,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.energy, self.big_f, self.flux, self.un_u]
    }

    pub fn sum(parts: &[BoundaryTerms]) -> Self {
        let mut acc = BoundaryTerms::default();
        for p in parts {
            acc.energy += p.energy;
            acc.big_f += p.big_f;
            acc.flux += p.flux;
            acc.un_u += p.un_u;
            acc.length += p.length;
        }
        acc
    }
}

/// Boundary terms per piece of `∂𝓑`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentTerms {
    #[serde(rename = "N")]
    pub n: BoundaryTerms,
    #[serde(rename = "Dseg")]
    pub d: BoundaryTerms,
    #[serde(rename = "Bseg")]
    pub b: BoundaryTerms,
}

impl SegmentTerms {
    pub fn total(&self) -> BoundaryTerms {
        BoundaryTerms::sum(&[self.n, self.d, self.b])
    }
}

/// Volume integrals over the chosen region.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VolumeTerms {
    /// `∫ (u f(u) − 2F(u))`
    #[serde(rename = "V_A")]
    pub a: f64,
    /// `∫ F(u)`
    #[serde(rename = "V_F")]
    pub big_f: f64,
    /// `∫ |∇u|²`
    #[serde(rename = "V_E")]
    pub energy: f64,
    /// `∫ f(u) u`
    #[serde(rename = "V_fu")]
    pub fu: f64,
    /// `∫ (−Δu) u`, from the field rather than the law.
    #[serde(rename = "V_lap_u")]
    pub lap_u: f64,
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerVerdicts {
    pub all_finite: bool,
    /// Largest gap between a summed boundary term and the volume integral of
    /// its divergence.
    pub additivity_gap: f64,
    pub segment_additivity: bool,
    pub green_identity: bool,
    pub oracle_identity: bool,
    pub printed_identity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PohozaevLedger {
    pub path: String,
    pub region: Side,
    pub p: [f64; 2],
    pub delta: f64,
    /// Lattice spacing of the 2-D path; absent for the exact radial path.
    pub h: Option<f64>,
    pub tau_g: f64,
    #[serde(flatten)]
    pub volume: VolumeTerms,
    pub segments: SegmentTerms,
    pub boundary: BoundaryTerms,
    /// Each boundary term again, as the volume integral of its divergence.
    pub boundary_by_divergence: BoundaryTerms,
    /// `T_energy − T_F − T_flux − T_un_u` over the whole boundary.
    pub rhs_printed: f64,
    /// `V_A − rhs_printed`.
    pub residual_printed: f64,
    /// `T_energy − T_F − T_flux + 2 V_F`.
    pub residual_oracle: f64,
    pub printed_minus_energy: f64,
    /// `V_E − T_un_u − V_lap_u`.
    pub green_residual: f64,
    /// Measure of `{|g| ≤ τ_g}` in the ball.
    pub neutral_measure: f64,
    pub quadrature_tol: f64,
    pub verdicts: LedgerVerdicts,
}

impl PohozaevLedger {
    /// Largest magnitude among the terms; tolerances scale with it.
    pub fn scale(&self) -> f64 {
        let v = &self.volume;
        let b = &self.boundary;
        [v.a, v.big_f, v.energy, v.fu, b.energy, b.big_f, b.flux, b.un_u]
            .iter()
            .fold(0.0f64, |a, x| a.max(x.abs()))
    }
}

/// Field data at one point, in the form every density needs.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Local {
    pub xp: Vec2,
    pub u: f64,
    pub grad: Vec2,
    pub hess: Matrix2<f64>,
    pub lap: f64,
    pub f: f64,
    pub big_f: f64,
}

impl Local {
    pub fn eval(field: &dyn ScalarField, law: &dyn NonlinearLaw, p: Point, x: Point) -> Self {
        let u = field.value(x);
        Local {
            xp: x - p,
            u,
            grad: field.gradient(x),
            hess: field.hessian(x),
            lap: field.laplacian(x),
            f: law.f(u),
            big_f: law.antiderivative(u),
        }
    }

    /// `[F, |∇u|², f u, (−Δu) u]`.
    pub fn volume(&self) -> [f64; 4] {
        [self.big_f, self.grad.norm_squared(), self.f * self.u, -self.lap * self.u]
    }

    /// Divergences of the four boundary fluxes, in the order of
    /// [`BoundaryTerms::as_array`].
    pub fn divergence(&self) -> [f64; 4] {
        let g2 = self.grad.norm_squared();
        let g = self.grad.dot(&self.xp);
        let dg = self.hess * self.xp + self.grad;
        [
            self.grad.dot(&(self.hess * self.xp)) + g2,
            self.f * g + 2.0 * self.big_f,
            dg.dot(&self.grad) + g * self.lap,
            g2 + self.u * self.lap,
        ]
    }

    /// Boundary densities with outward normal `n`.
    pub fn boundary(&self, n: Vec2) -> [f64; 4] {
        let xn = self.xp.dot(&n);
        let un = self.grad.dot(&n);
        [
            0.5 * self.grad.norm_squared() * xn,
            self.big_f * xn,
            un * self.grad.dot(&self.xp),
            un * self.u,
        ]
    }
}

/// Everything a ledger path needs.
#[derive(Clone, Copy)]
pub struct LedgerInput<'a> {
    pub field: &'a dyn ScalarField,
    pub law: &'a dyn NonlinearLaw,
    pub domain: &'a Domain,
    pub p: Point,
    pub delta: f64,
    pub side: Side,
    pub params: &'a PohozaevParams,
}

/// One way of evaluating the ledger terms.
pub trait LedgerPath: Send + Sync {
    fn name(&self) -> &'static str;

    /// `Err(reason)` when the path cannot handle this input.
    fn applies(&self, input: &LedgerInput) -> Result<(), String>;

    fn ledger(&self, input: &LedgerInput) -> Result<PohozaevLedger, PohozaevError>;
}

pub type SharedPath = Arc<dyn LedgerPath>;

/// Ledger paths by name.
pub fn ledger_catalog() -> Registry<SharedPath> {
    let mut reg: Registry<SharedPath> = Registry::new("ledger path");
    reg.register(
        "exact_radial",
        "1-D adaptive quadrature for radial fields centred at p",
        |p| {
            check_keys(p, &[])?;
            Ok(Arc::new(ExactRadial) as SharedPath)
        },
    )
    .register(
        "grid",
        "cut-cell quadrature over the ball and trapezoid rule on its boundary pieces",
        |p| {
            check_keys(p, &[])?;
            Ok(Arc::new(GridQuadrature) as SharedPath)
        },
    );
    reg
}

/// The exact radial path when it applies, otherwise the 2-D path.
pub fn ledger(input: &LedgerInput) -> Result<PohozaevLedger, PohozaevError> {
    if ExactRadial.applies(input).is_ok() {
        ExactRadial.ledger(input)
    } else {
        GridQuadrature.ledger(input)
    }
}

/// Build a path by name with empty parameters.
pub fn path_by_name(name: &str) -> Result<SharedPath, crate::registry::RegistryError> {
    ledger_catalog().build(name, &Value::Null)
}

pub(crate) struct Assembly {
    pub path: &'static str,
    pub h: Option<f64>,
    pub tau_g: f64,
    pub volume: [f64; 4],
    pub area: f64,
    pub segments: SegmentTerms,
    pub divergence: [f64; 4],
    pub neutral_measure: f64,
    /// Absolute quadrature tolerance per unit of term scale.
    pub rel_tol: f64,
}

pub(crate) fn assemble(input: &LedgerInput, a: Assembly) -> Result<PohozaevLedger, PohozaevError> {
    let [vf, ve, vfu, vlap] = a.volume;
    let volume = VolumeTerms {
        a: vfu - 2.0 * vf,
        big_f: vf,
        energy: ve,
        fu: vfu,
        lap_u: vlap,
        area: a.area,
    };
    let boundary = a.segments.total();
    let rhs_printed = boundary.energy - boundary.big_f - boundary.flux - boundary.un_u;
    let residual_printed = volume.a - rhs_printed;
    let residual_oracle = boundary.energy - boundary.big_f - boundary.flux + 2.0 * vf;
    let green_residual = ve - boundary.un_u - vlap;
    let by_div = BoundaryTerms::from_array(a.divergence, 0.0);
    let additivity_gap = boundary
        .as_array()
        .iter()
        .zip(by_div.as_array())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let mut ledger = PohozaevLedger {
        path: a.path.to_string(),
        region: input.side,
        p: [input.p.x, input.p.y],
        delta: input.delta,
        h: a.h,
        tau_g: a.tau_g,
        volume,
        segments: a.segments,
        boundary,
        boundary_by_divergence: by_div,
        rhs_printed,
        residual_printed,
        residual_oracle,
        printed_minus_energy: residual_printed - ve,
        green_residual,
        neutral_measure: a.neutral_measure,
        quadrature_tol: 0.0,
        verdicts: LedgerVerdicts {
            all_finite: true,
            additivity_gap,
            segment_additivity: false,
            green_identity: false,
            oracle_identity: false,
            printed_identity: false,
        },
    };
    let tol = a.rel_tol * ledger.scale().max(1.0);
    ledger.quadrature_tol = tol;
    let named = [
        ("V_A", volume.a),
        ("V_F", vf),
        ("V_E", ve),
        ("V_fu", vfu),
        ("V_lap_u", vlap),
        ("T_energy", boundary.energy),
        ("T_F", boundary.big_f),
        ("T_flux", boundary.flux),
        ("T_un_u", boundary.un_u),
    ];
    if let Some((name, _)) = named.iter().find(|(_, v)| !v.is_finite()) {
        return Err(PohozaevError::NonFinite(name));
    }
    ledger.verdicts.segment_additivity = additivity_gap <= 10.0 * tol;
    ledger.verdicts.green_identity = green_residual.abs() <= 10.0 * tol;
    ledger.verdicts.oracle_identity = residual_oracle.abs() <= 10.0 * tol;
    ledger.verdicts.printed_identity = residual_printed.abs() <= 10.0 * tol;
    Ok(ledger)
}

/// Ledgers of one path at `n`, `2n`, `4n` (the 2-D path on analytic fields).
pub fn refinement_ledgers(
    path: &dyn LedgerPath,
    input: &LedgerInput,
    n: usize,
) -> Result<Vec<PohozaevLedger>, PohozaevError> {
    [n, 2 * n, 4 * n]
        .iter()
        .map(|&m| {
            let params = PohozaevParams {
                n: m,
                ..input.params.clone()
            };
            path.ledger(&LedgerInput {
                params: &params,
                ..*input
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub h: Option<f64>,
    #[serde(rename = "V_E")]
    pub energy: f64,
    pub residual_printed: f64,
    pub residual_oracle: f64,
    pub printed_minus_energy: f64,
    pub green_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityAudit {
    pub path: String,
    pub region: Side,
    pub rows: Vec<RefinementRow>,
    /// Observed orders between successive rows; empty without spacings.
    pub order_printed: Vec<f64>,
    pub order_oracle: Vec<f64>,
    pub printed_holds: bool,
    pub oracle_holds: bool,
    /// `residual_printed − residual_oracle` on the finest row.
    pub difference: f64,
    pub printed_minus_energy: f64,
    /// Residuals below this count as zero.
    pub floor: f64,
    pub notes: Vec<String>,
}

fn observed_orders(rows: &[RefinementRow], pick: impl Fn(&RefinementRow) -> f64) -> Vec<f64> {
    rows.windows(2)
        .filter_map(|w| {
            let (h0, h1) = (w[0].h?, w[1].h?);
            let (e0, e1) = (pick(&w[0]).abs(), pick(&w[1]).abs());
            Some((e0 / e1).ln() / (h0 / h1).ln())
        })
        .collect()
}

/// Whether a residual sequence tends to zero: the finest value is below the
/// floor, or every observed order is at least 1.
fn tends_to_zero(last: f64, orders: &[f64], floor: f64) -> bool {
    last.abs() <= floor || (!orders.is_empty() && orders.iter().all(|p| *p >= 1.0))
}

/// Compare the printed and the oracle identity over a refinement sequence
/// (coarse to fine).
pub fn audit_identity(ledgers: &[PohozaevLedger]) -> IdentityAudit {
    let rows: Vec<RefinementRow> = ledgers
        .iter()
        .map(|l| RefinementRow {
            h: l.h,
            energy: l.volume.energy,
            residual_printed: l.residual_printed,
            residual_oracle: l.residual_oracle,
            printed_minus_energy: l.printed_minus_energy,
            green_residual: l.green_residual,
        })
        .collect();
    let scale = ledgers.iter().map(|l| l.scale()).fold(0.0f64, f64::max).max(1.0);
    let floor = 1e-8 * scale;
    let order_printed = observed_orders(&rows, |r| r.residual_printed);
    let order_oracle = observed_orders(&rows, |r| r.residual_oracle);
    let mut notes = Vec::new();
    let Some(last) = rows.last() else {
        return IdentityAudit {
            path: String::new(),
            region: Side::Whole,
            rows,
            order_printed,
            order_oracle,
            printed_holds: false,
            oracle_holds: false,
            difference: f64::NAN,
            printed_minus_energy: f64::NAN,
            floor,
            notes: vec!["no ledgers".into()],
        };
    };
    if rows.iter().all(|r| r.h.is_none()) {
        notes.push("resolution-free path: verdicts use the floor only".into());
    }
    let printed_holds = tends_to_zero(last.residual_printed, &order_printed, floor);
    let oracle_holds = tends_to_zero(last.residual_oracle, &order_oracle, floor);
    if !printed_holds && (last.printed_minus_energy).abs() <= 1e-4 * scale {
        notes.push("printed residual equals the Dirichlet energy V_E".into());
    }
    IdentityAudit {
        path: ledgers[0].path.clone(),
        region: ledgers[0].region,
        printed_holds,
        oracle_holds,
        difference: last.residual_printed - last.residual_oracle,
        printed_minus_energy: last.printed_minus_energy,
        rows,
        order_printed,
        order_oracle,
        floor,
        notes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    fn of(v: f64, tol: f64) -> Self {
        if v > tol {
            Sign::Positive
        } else if v < -tol {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedTerm {
    pub segment: String,
    pub term: String,
    pub integral: f64,
    pub sign: Sign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaddleVerdict {
    /// `V_A > 0` and every listed boundary term is `≤ 0`.
    Realized,
    /// Hypotheses hold but the sign structure does not.
    Contradicted,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaddleExclusionReport {
    pub p: [f64; 2],
    pub delta: f64,
    pub grad_norm_at_p: f64,
    pub path: String,
    #[serde(rename = "V_A")]
    pub v_a: f64,
    pub terms: Vec<SignedTerm>,
    pub hypothesis: Option<HypothesisAReport>,
    pub failing_preconditions: Vec<String>,
    pub verdict: SaddleVerdict,
    pub tolerance: f64,
    pub notes: Vec<String>,
}

/// Evaluate the sign structure of the half-ball identity on `𝓑⁺_δ(p)`: the
/// sphere terms `−δ|∇u|²/2`, `−δF(u)`, `−(∂u/∂n)u` and the `N` term
/// `−(∂u/∂n)u`, against `V_A`. The growth condition and `F > 0` are checked on
/// `range = [m, M]`.
pub fn saddle_exclusion_test(
    field: &dyn ScalarField,
    law: &dyn NonlinearLaw,
    domain: &Domain,
    p: Point,
    delta: f64,
    range: (f64, f64),
    params: &PohozaevParams,
) -> Result<SaddleExclusionReport, PohozaevError> {
    let input = LedgerInput {
        field,
        law,
        domain,
        p,
        delta,
        side: Side::Plus,
        params,
    };
    let l = ledger(&input)?;
    let tol = 10.0 * l.quadrature_tol;
    let b = l.segments.b;
    let n = l.segments.n;
    let terms: Vec<SignedTerm> = [
        ("Bseg", "-delta*|grad u|^2/2", -b.energy),
        ("Bseg", "-delta*F(u)", -b.big_f),
        ("Bseg", "-du/dn*u", -b.un_u),
        ("N", "-du/dn*u", -n.un_u),
    ]
    .into_iter()
    .map(|(segment, term, integral)| SignedTerm {
        segment: segment.into(),
        term: term.into(),
        integral,
        sign: Sign::of(integral, tol),
    })
    .collect();

    let mut failing = Vec::new();
    let mut notes = Vec::new();
    let hypothesis = if range.1 > range.0 {
        match check_hypothesis_a(law, range, 1000) {
            Ok(r) => Some(r),
            Err(e) => {
                failing.push(format!("growth condition could not be evaluated: {e}"));
                None
            }
        }
    } else {
        failing.push(format!("u has no range to test: [{}, {}]", range.0, range.1));
        None
    };
    if let Some(h) = &hypothesis {
        if !h.verdict.a_positive {
            failing.push(format!("u f(u) - 2F(u) > 0 fails (min {:e} at u = {})", h.min_a, h.argmin_a));
        }
        if !h.verdict.fprime_positive {
            failing.push(format!("f' > 0 fails (min {:e})", h.min_fprime));
        }
        if !h.verdict.big_f_positive {
            failing.push(format!("F > 0 fails (min {:e})", h.min_big_f));
        }
    }
    let structure = l.volume.a > tol && terms.iter().all(|t| t.sign != Sign::Positive);
    let verdict = if !failing.is_empty() {
        SaddleVerdict::NotApplicable
    } else if structure {
        SaddleVerdict::Realized
    } else {
        SaddleVerdict::Contradicted
    };
    if l.segments.d.length > 0.0 {
        notes.push(format!(
            "ball meets the domain boundary (length {:.6}); those terms are left out of the sign ledger",
            l.segments.d.length
        ));
    }
    if l.boundary.length == 0.0 {
        notes.push("the positive half-ball is empty".into());
    }
    Ok(SaddleExclusionReport {
        p: [p.x, p.y],
        delta,
        grad_norm_at_p: field.gradient(p).norm(),
        path: l.path,
        v_a: l.volume.a,
        terms,
        hypothesis,
        failing_preconditions: failing,
        verdict,
        tolerance: tol,
        notes,
    })
}
