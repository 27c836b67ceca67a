//! Structural checks on classified points and level sets.

use serde::Serialize;

use super::contour::{extract_level_set, LevelComponent};
use super::critical::{CriticalKind, CriticalPoint};
use super::regions::{sign_regions, ExtremumSet};
use super::{pt, Probe, TopologyError};
use crate::field::ScalarField;
use crate::geometry::{cross, point_segment_distance, Domain, Point};
use crate::nonlinearity::{check_hypothesis_a, find_sign_change, HypothesisAReport, NonlinearLaw};

/// Sign tolerance for `f(u(p))` at extrema.
pub const EXTREMUM_SIGN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremumSignVerdict {
    pub position: [f64; 2],
    pub kind: Option<CriticalKind>,
    pub f_value: Option<f64>,
    /// `None` for points the check does not apply to.
    pub pass: Option<bool>,
}

/// At a local maximum `f(u(p)) ≥ 0`, at a local minimum `f(u(p)) ≤ 0`;
/// other points are exempt.
pub fn check_extremum_signs(field: &dyn ScalarField, law: &dyn NonlinearLaw, points: &[CriticalPoint]) -> Vec<ExtremumSignVerdict> {
    points
        .iter()
        .map(|p| {
            let u = field.value(p.point());
            let f = law.contains(u).then(|| law.f(u));
            let pass = match (p.kind, f) {
                (Some(CriticalKind::LocalMax), Some(f)) => Some(f >= -EXTREMUM_SIGN_TOL),
                (Some(CriticalKind::LocalMin), Some(f)) => Some(f <= EXTREMUM_SIGN_TOL),
                (Some(CriticalKind::LocalMax | CriticalKind::LocalMin), None) => Some(false),
                _ => None,
            };
            ExtremumSignVerdict {
                position: p.position,
                kind: p.kind,
                f_value: f,
                pass,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosePair {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisjointnessReport {
    pub level: Option<f64>,
    pub components: usize,
    pub min_separation: f64,
    pub pass: bool,
    /// Component pairs closer than the separation threshold.
    pub close_pairs: Vec<ClosePair>,
    /// Components whose polyline crosses itself, with the crossing point.
    pub self_intersections: Vec<(usize, [f64; 2])>,
    /// Distinct places where components meet or cross.
    pub crossings: Vec<[f64; 2]>,
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> Option<Point> {
    let r = b - a;
    let s = d - c;
    let den = cross(r, s);
    if den == 0.0 {
        return None;
    }
    let t = cross(c - a, s) / den;
    let u = cross(c - a, r) / den;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then(|| a + t * r)
}

fn segment_distance(a: Point, b: Point, c: Point, d: Point) -> (f64, Point) {
    if let Some(x) = segments_intersect(a, b, c, d) {
        return (0.0, x);
    }
    let cands = [
        (point_segment_distance(a, c, d).0, a),
        (point_segment_distance(b, c, d).0, b),
        (point_segment_distance(c, a, b).0, c),
        (point_segment_distance(d, a, b).0, d),
    ];
    cands.into_iter().min_by(|x, y| x.0.total_cmp(&y.0)).unwrap()
}

fn bbox(c: &LevelComponent) -> (Point, Point) {
    c.vertices().fold(
        (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
        |(lo, hi), x| (Point::new(lo.x.min(x.x), lo.y.min(x.y)), Point::new(hi.x.max(x.x), hi.y.max(x.y))),
    )
}

fn cluster(points: &[Point], radius: f64) -> Vec<Point> {
    let mut centers: Vec<(Point, usize)> = Vec::new();
    for x in points {
        match centers.iter_mut().find(|(c, _)| (c - x).norm() <= radius) {
            Some((c, n)) => {
                *c = (*c * *n as f64 + x) / (*n + 1) as f64;
                *n += 1;
            }
            None => centers.push((*x, 1)),
        }
    }
    centers.into_iter().map(|c| c.0).collect()
}

/// Components at one level must be pairwise farther apart than `2h` and
/// individually simple.
pub fn check_level_disjointness(components: &[LevelComponent], h: f64) -> DisjointnessReport {
    let sep = 2.0 * h;
    let mut close_pairs = Vec::new();
    let mut contacts: Vec<Point> = Vec::new();
    let mut min_separation = f64::INFINITY;
    let boxes: Vec<(Point, Point)> = components.iter().map(bbox).collect();
    for i in 0..components.len() {
        for j in i + 1..components.len() {
            let (lo1, hi1) = boxes[i];
            let (lo2, hi2) = boxes[j];
            let gap = (lo2.x - hi1.x).max(lo1.x - hi2.x).max(lo2.y - hi1.y).max(lo1.y - hi2.y);
            if gap > sep {
                min_separation = min_separation.min(gap);
                continue;
            }
            let mut best = f64::INFINITY;
            let (a, b) = (&components[i], &components[j]);
            if a.points.len() == 1 || b.points.len() == 1 {
                for x in a.vertices() {
                    for y in b.vertices() {
                        best = best.min((x - y).norm());
                    }
                }
            }
            for (p, q) in a.segments() {
                for (r, s) in b.segments() {
                    let (d, at) = segment_distance(p, q, r, s);
                    best = best.min(d);
                    if d <= sep {
                        contacts.push(at);
                    }
                }
            }
            min_separation = min_separation.min(best);
            if best <= sep {
                close_pairs.push(ClosePair { a: i, b: j, distance: best });
            }
        }
    }
    let mut self_intersections = Vec::new();
    for (ci, c) in components.iter().enumerate() {
        let segs: Vec<(Point, Point)> = c.segments().collect();
        let n = segs.len();
        for i in 0..n {
            for j in i + 2..n {
                if c.closed && i == 0 && j == n - 1 {
                    continue;
                }
                if let Some(x) = segments_intersect(segs[i].0, segs[i].1, segs[j].0, segs[j].1) {
                    self_intersections.push((ci, pt(x)));
                    contacts.push(x);
                }
            }
        }
    }
    let crossings = cluster(&contacts, 4.0 * h).into_iter().map(pt).collect();
    DisjointnessReport {
        level: components.first().map(|c| c.level),
        components: components.len(),
        min_separation,
        pass: close_pairs.is_empty() && self_intersections.is_empty(),
        close_pairs,
        self_intersections,
        crossings,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignChangeCurveReport {
    pub u0: f64,
    pub m: f64,
    pub big_m: f64,
    /// Components of `S_{u₀}`.
    pub components: usize,
    pub single_component: bool,
    pub boundary_contact: bool,
    pub min_grad_norm: f64,
    pub max_on_plus_boundary: Option<ExtremumSet>,
    pub min_on_minus_boundary: Option<ExtremumSet>,
    pub precondition_met: bool,
    /// Only decided when `S_{u₀}` is a single component.
    pub consistent: Option<bool>,
    pub violations: Vec<String>,
    pub hypothesis: Option<HypothesisAReport>,
    pub notes: Vec<String>,
}

/// Structure of the level set where `f(u)` changes sign: component count,
/// boundary contact, gradient along it, and the extreme values of `u` on
/// `∂D±` with their multiplicity.
pub fn check_sign_change_curve(probe: &Probe, law: &dyn NonlinearLaw, tau_g: f64) -> Result<SignChangeCurveReport, TopologyError> {
    let regions = sign_regions(probe, law)?;
    let (m, big_m) = (regions.m, regions.big_m);
    let sc = find_sign_change(law, (m, big_m))?;
    let u0 = sc.u0;
    if !(m..=big_m).contains(&u0) {
        return Err(TopologyError::OutOfRange { u0, m, big_m });
    }
    let comps: Vec<LevelComponent> = extract_level_set(probe, u0)?;
    let components = comps.len();
    let boundary_contact = comps.iter().any(|c| c.touches_boundary);
    let min_grad_norm = comps.iter().map(|c| c.min_grad_norm).fold(f64::INFINITY, f64::min);
    let mut notes = Vec::new();
    if !sc.unique {
        notes.push(format!("f changes sign {} times on [m, M]", sc.scan_sign_changes));
    }
    let hypothesis = if m < big_m {
        match check_hypothesis_a(law, (m, big_m), 200) {
            Ok(r) => {
                if !r.verdict.overall {
                    notes.push(format!(
                        "structural condition fails on [m, M] (uf − 2F > 0: {}, f′ > 0: {}, F > 0: {})",
                        r.verdict.a_positive, r.verdict.fprime_positive, r.verdict.big_f_positive
                    ));
                }
                Some(r)
            }
            Err(e) => {
                notes.push(format!("structural condition not evaluated: {e}"));
                None
            }
        }
    } else {
        None
    };
    let single = components == 1;
    let mut violations = Vec::new();
    let consistent = if single {
        if !boundary_contact {
            violations.push("the sign-change curve does not reach ∂D".to_string());
        }
        if !(min_grad_norm > tau_g) {
            violations.push(format!("∇u vanishes on the sign-change curve (min |∇u| = {min_grad_norm:e})"));
        }
        for (name, set) in [("max of u on ∂D⁺", &regions.p_plus), ("min of u on ∂D⁻", &regions.p_minus)] {
            if let Some(s) = set {
                if !s.unique {
                    violations.push(format!("{name} attained at {} samples in {} clusters", s.count, s.clusters));
                }
            }
        }
        Some(violations.is_empty())
    } else {
        notes.push(format!("precondition not met: S_u0 has {components} components"));
        None
    };
    Ok(SignChangeCurveReport {
        u0,
        m,
        big_m,
        components,
        single_component: single,
        boundary_contact,
        min_grad_norm,
        max_on_plus_boundary: regions.p_plus,
        min_on_minus_boundary: regions.p_minus,
        precondition_met: single,
        consistent,
        violations,
        hypothesis,
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EulerCount {
    pub maxima: usize,
    pub minima: usize,
    pub saddles: usize,
    pub nonisolated: usize,
    /// `#max + #min − #saddles`.
    pub index_sum: i64,
}

pub fn euler_count(points: &[CriticalPoint]) -> EulerCount {
    let count = |k: CriticalKind| points.iter().filter(|p| p.kind == Some(k)).count();
    let (maxima, minima, saddles) = (count(CriticalKind::LocalMax), count(CriticalKind::LocalMin), count(CriticalKind::Saddle));
    EulerCount {
        maxima,
        minima,
        saddles,
        nonisolated: count(CriticalKind::NonIsolatedComponent),
        index_sum: maxima as i64 + minima as i64 - saddles as i64,
    }
}

/// True when `∇u·n` keeps one strict sign along `∂D`, so the index sum of
/// the interior critical points equals the Euler characteristic 1.
pub fn gradient_transverse(field: &dyn ScalarField, domain: &Domain, samples: usize) -> bool {
    let signs: Vec<f64> = domain
        .boundary_samples(samples)
        .into_iter()
        .filter_map(|x| domain.outward_normal(x).ok().map(|n| field.gradient(x).dot(&n)))
        .collect();
    let scale = signs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-8 * scale.max(1e-300);
    signs.iter().all(|v| *v > tol) || signs.iter().all(|v| *v < -tol)
}
