//! Critical points: candidates from node gradients refined by Newton on
//! `∇u = 0`, classification from the sign of `∇u·(x−p)` on rings, and
//! curves of critical points along a level set.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contour::{extract_level_set, LevelComponent};
use super::{pt, Probe, TopologyError, TopologyParams};
use crate::field::ScalarField;
use crate::geometry::{Domain, Point, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CriticalKind {
    LocalMax,
    LocalMin,
    Saddle,
    NonIsolatedComponent,
}

/// Signs of `∇u·(x−p)` on one ring `|x−p| = δ` inside `D̄`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RingEvidence {
    pub delta: f64,
    pub samples: usize,
    pub positive: usize,
    pub negative: usize,
    pub near_zero: usize,
    pub min_grad_norm: f64,
    pub kind: Option<CriticalKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub kind: CriticalKind,
    pub tau_g: f64,
    pub rings: Vec<RingEvidence>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub position: [f64; 2],
    pub u_value: f64,
    pub grad_norm: f64,
    pub kind: Option<CriticalKind>,
    pub on_boundary: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evidence: Option<Classification>,
}

impl CriticalPoint {
    pub fn point(&self) -> Point {
        Point::new(self.position[0], self.position[1])
    }
}

/// Newton iteration on `∇u = 0` from `x0` with a pseudo-inverse Hessian,
/// steps capped at `h` and kept in `D̄`. Returns the best point seen.
pub fn refine_critical(field: &dyn ScalarField, domain: &Domain, x0: Point, h: f64) -> (Point, f64) {
    let mut x = x0;
    let mut best = (x0, field.gradient(x0).norm());
    for _ in 0..60 {
        let g = field.gradient(x);
        let gn = g.norm();
        if !gn.is_finite() {
            break;
        }
        if gn < best.1 {
            best = (x, gn);
        }
        if gn == 0.0 {
            break;
        }
        let eig = field.hessian(x).symmetric_eigen();
        let lmax = eig.eigenvalues.amax();
        let mut step = Vec2::zeros();
        for i in 0..2 {
            let l = eig.eigenvalues[i];
            if l.abs() > 1e-8 * lmax {
                let v: Vec2 = eig.eigenvectors.column(i).into();
                step -= v * (v.dot(&g) / l);
            }
        }
        let len = step.norm();
        if len == 0.0 || !len.is_finite() {
            break;
        }
        if len > h {
            step *= h / len;
        }
        let mut y = x + step;
        if !domain.contains_closed(y) {
            if !domain.contains_closed(x) {
                break;
            }
            y = x + domain.crossing_fraction(x, y) * step;
        }
        if (y - x).norm() < 1e-15 * (1.0 + x.norm()) {
            break;
        }
        x = y;
    }
    let gn = field.gradient(x).norm();
    if gn < best.1 {
        best = (x, gn);
    }
    best
}

fn on_boundary(domain: &Domain, x: Point) -> bool {
    domain.signed_distance(x) > -1e-8 * domain.diameter()
}

/// Nodes in `D̄` whose `|∇u|` is within one cell's gradient variation of
/// zero, optionally only those where `|∇u|²` is a local minimum over the
/// 8-neighbourhood.
fn seeds(probe: &Probe, tau_g: f64, local_min_only: bool) -> Vec<usize> {
    let lat = &probe.lattice;
    (0..lat.len())
        .filter(|&k| {
            if !probe.inside[k] {
                return false;
            }
            let g = probe.grads[k];
            if !(g.x.is_finite() && g.y.is_finite()) {
                return false;
            }
            let (i, j) = lat.coords(k);
            let g2 = g.norm_squared();
            let mut variation: f64 = 0.0;
            for (a, b) in lat.neighbours8(i, j) {
                let nb = lat.index(a, b);
                if !probe.inside[nb] {
                    continue;
                }
                let gn = probe.grads[nb];
                if !(gn.x.is_finite() && gn.y.is_finite()) {
                    continue;
                }
                if local_min_only && gn.norm_squared() < g2 {
                    return false;
                }
                variation = variation.max((gn - g).norm());
            }
            g.norm() <= tau_g + variation
        })
        .collect()
}

/// Refine seeds by Newton, keep those with `|∇u| < τ_g` that pass `keep`,
/// and thin them so no two are closer than `radius` (smaller `|∇u|` wins).
fn refine_and_thin<K>(probe: &Probe, seeds: &[usize], tau_g: f64, radius: f64, keep: K) -> Vec<(Point, f64)>
where
    K: Fn(Point) -> bool,
{
    let h = probe.h();
    let refined: Vec<(Point, f64)> = seeds
        .par_iter()
        .map(|&k| refine_critical(probe.field, probe.domain, probe.node(k), h))
        .collect();
    let mut accepted: Vec<(Point, f64)> = refined
        .into_iter()
        .filter(|(x, g)| *g < tau_g && probe.domain.contains_closed(*x) && keep(*x))
        .collect();
    accepted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.x.total_cmp(&b.0.x)).then(a.0.y.total_cmp(&b.0.y)));
    let mut buckets: HashMap<(i64, i64), Vec<Point>> = HashMap::new();
    let key = |x: Point| ((x.x / radius).floor() as i64, (x.y / radius).floor() as i64);
    let mut out = Vec::new();
    for (x, g) in accepted {
        let (bi, bj) = key(x);
        let near = (-1..=1).any(|di| {
            (-1..=1).any(|dj| {
                buckets
                    .get(&(bi + di, bj + dj))
                    .is_some_and(|v| v.iter().any(|y| (x - y).norm() < radius))
            })
        });
        if !near {
            buckets.entry((bi, bj)).or_default().push(x);
            out.push((x, g));
        }
    }
    out
}

/// Critical-point candidates: nodes in `D̄` where `|∇u|²` is a local minimum
/// over the 8-neighbourhood and `|∇u|` is within one cell's gradient
/// variation of zero, refined by Newton and kept when `|∇u| < τ_g`.
/// Points closer than `2h` to a better one are dropped.
pub fn find_critical_points(probe: &Probe, tau_g: f64) -> Vec<CriticalPoint> {
    let s = seeds(probe, tau_g, true);
    refine_and_thin(probe, &s, tau_g, 2.0 * probe.h(), |_| true)
        .into_iter()
        .map(|(x, g)| CriticalPoint {
            position: pt(x),
            u_value: probe.field.value(x),
            grad_norm: g,
            kind: None,
            on_boundary: on_boundary(probe.domain, x),
            evidence: None,
        })
        .collect()
}

fn ring(field: &dyn ScalarField, domain: &Domain, p: Point, delta: f64, samples: usize, tau_g: f64) -> RingEvidence {
    let tau = tau_g * delta;
    let mut ev = RingEvidence {
        delta,
        samples: 0,
        positive: 0,
        negative: 0,
        near_zero: 0,
        min_grad_norm: f64::INFINITY,
        kind: None,
    };
    for k in 0..samples {
        let a = 2.0 * PI * (k as f64 + 0.5) / samples as f64;
        let d = Vec2::new(a.cos(), a.sin()) * delta;
        let x = p + d;
        if !domain.contains_closed(x) {
            continue;
        }
        let g = field.gradient(x);
        if !(g.x.is_finite() && g.y.is_finite()) {
            continue;
        }
        ev.samples += 1;
        ev.min_grad_norm = ev.min_grad_norm.min(g.norm());
        let s = g.dot(&d);
        if s > tau {
            ev.positive += 1;
        } else if s < -tau {
            ev.negative += 1;
        } else {
            ev.near_zero += 1;
        }
    }
    if ev.samples > 0 && ev.near_zero < ev.samples && ev.min_grad_norm > tau_g {
        ev.kind = Some(if ev.negative == ev.samples {
            CriticalKind::LocalMax
        } else if ev.positive == ev.samples {
            CriticalKind::LocalMin
        } else {
            CriticalKind::Saddle
        });
    }
    ev
}

/// Classify `p` by the sign of `∇u(x)·(x−p)` on rings of each radius in
/// `deltas`: all negative is a maximum, all positive a minimum, anything
/// else a saddle. Rings must agree, otherwise the point is reported as a
/// scale-inconsistent saddle. Points on `∂D` use ring samples in `D̄` only.
pub fn classify_isolated(
    field: &dyn ScalarField,
    domain: &Domain,
    p: Point,
    deltas: &[f64],
    ring_samples: usize,
    tau_g: f64,
) -> Result<Classification, TopologyError> {
    let rings: Vec<RingEvidence> = deltas
        .iter()
        .map(|&d| ring(field, domain, p, d, ring_samples, tau_g))
        .collect();
    if rings.iter().all(|r| r.samples == 0) {
        return Err(TopologyError::EmptyRing { x: p.x, y: p.y });
    }
    if rings.iter().all(|r| r.samples == 0 || r.near_zero == r.samples) {
        return Err(TopologyError::NonIsolatedHint { x: p.x, y: p.y });
    }
    let mut notes = Vec::new();
    for r in &rings {
        if r.kind == Some(CriticalKind::Saddle) && (r.positive == 0 || r.negative == 0) {
            notes.push(format!("ring δ = {:e}: one sign plus {} near-zero samples", r.delta, r.near_zero));
        }
        if r.samples > 0 && r.min_grad_norm <= tau_g {
            notes.push(format!("ring δ = {:e}: gradient vanishes on the ring", r.delta));
        }
    }
    let first = rings[0].kind;
    let kind = if let Some(k) = first.filter(|_| rings.iter().all(|r| r.kind == first)) {
        k
    } else {
        notes.push("scale-inconsistent".into());
        CriticalKind::Saddle
    };
    Ok(Classification {
        kind,
        tau_g,
        rings,
        notes,
    })
}

/// Chains of critical points at level `t`: curves where `u` only touches
/// `t`, which contouring `u − t` cannot see. Every node near a zero of `∇u`
/// is refined, so the chain is sampled at spacing about `h`.
fn ridges(probe: &Probe, t: f64, tau_g: f64) -> Vec<LevelComponent> {
    let h = probe.h();
    let tol_t = (1e-9 * t.abs().max(1.0)).max(tau_g * h);
    let link = 3.0 * h;
    let s = seeds(probe, tau_g, false);
    let pts: Vec<Point> = refine_and_thin(probe, &s, tau_g, h, |x| (probe.field.value(x) - t).abs() <= tol_t)
        .into_iter()
        .map(|p| p.0)
        .collect();
    let mut label = vec![usize::MAX; pts.len()];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for s in 0..pts.len() {
        if label[s] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        label[s] = id;
        let mut members = vec![s];
        let mut head = 0;
        while head < members.len() {
            let a = members[head];
            head += 1;
            for b in 0..pts.len() {
                if label[b] == usize::MAX && (pts[a] - pts[b]).norm() <= link {
                    label[b] = id;
                    members.push(b);
                }
            }
        }
        clusters.push(members);
    }
    let mut out = Vec::new();
    for members in clusters {
        if members.len() < 3 {
            continue;
        }
        // Order by nearest-neighbour walk from the point farthest from the
        // cluster centroid (an endpoint for open chains).
        let c = members.iter().fold(Vec2::zeros(), |acc, &m| acc + pts[m]) / members.len() as f64;
        let start = *members
            .iter()
            .max_by(|&&a, &&b| (pts[a] - c).norm().total_cmp(&(pts[b] - c).norm()))
            .unwrap();
        let mut order = vec![start];
        let mut left: Vec<usize> = members.iter().copied().filter(|&m| m != start).collect();
        while !left.is_empty() {
            let last = pts[*order.last().unwrap()];
            let (pos, _) = left
                .iter()
                .enumerate()
                .min_by(|a, b| (pts[*a.1] - last).norm().total_cmp(&(pts[*b.1] - last).norm()))
                .unwrap();
            order.push(left.swap_remove(pos));
        }
        let points: Vec<Point> = order.iter().map(|&m| pts[m]).collect();
        let extent = points
            .iter()
            .flat_map(|a| points.iter().map(move |b| (a - b).norm()))
            .fold(0.0, f64::max);
        if extent <= 4.0 * h {
            continue;
        }
        let closed = (points[0] - points[points.len() - 1]).norm() <= link;
        let touches = points.iter().any(|x| on_boundary(probe.domain, *x));
        let mut c = LevelComponent::from_points(probe.field, t, points, closed, touches);
        c.critical = true;
        out.push(c);
    }
    out
}

/// Level-set components of `u` at `t` along which `∇u` vanishes:
/// contour components with `max |∇u| < τ_g`, and curves of critical points
/// where `t` is an extremal value of `u`.
pub fn detect_nonisolated(probe: &Probe, t: f64, tau_g: f64) -> Result<Vec<LevelComponent>, TopologyError> {
    let mut out: Vec<LevelComponent> = extract_level_set(probe, t)?
        .into_iter()
        .filter(|c| !c.singleton && c.points.len() > 1 && c.max_grad_norm < tau_g)
        .collect();
    for r in ridges(probe, t, tau_g) {
        let dup = out.iter().any(|c| {
            c.points
                .iter()
                .any(|p| (Point::new(p[0], p[1]) - Point::new(r.points[0][0], r.points[0][1])).norm() < 2.0 * probe.h())
        });
        if !dup {
            out.push(r);
        }
    }
    for (j, c) in out.iter_mut().enumerate() {
        c.index = j;
        c.critical = true;
    }
    Ok(out)
}

/// Mark points lying within `radius` of a critical component.
pub fn absorb_nonisolated(points: &mut [CriticalPoint], components: &[LevelComponent], radius: f64) {
    for p in points.iter_mut() {
        let x = p.point();
        let hit = components.iter().any(|c| {
            c.critical
                && c.points.len() > 1
                && c.segments().any(|(a, b)| crate::geometry::point_segment_distance(x, a, b).0 <= radius)
        });
        if hit {
            p.kind = Some(CriticalKind::NonIsolatedComponent);
        }
    }
}

/// Find, classify and group critical points. Candidates that share a level
/// and chain into a curve are reported as non-isolated components.
pub fn analyze_critical_points(
    probe: &Probe,
    params: &TopologyParams,
) -> Result<(Vec<CriticalPoint>, Vec<LevelComponent>), TopologyError> {
    let tau_g = probe.tau_g(params);
    let deltas = probe.deltas(params);
    let mut points = find_critical_points(probe, tau_g);
    let classified: Vec<Result<Classification, TopologyError>> = points
        .par_iter()
        .map(|p| classify_isolated(probe.field, probe.domain, p.point(), &deltas, params.ring_samples, tau_g))
        .collect();
    for (p, c) in points.iter_mut().zip(classified) {
        match c {
            Ok(c) => {
                p.kind = Some(c.kind);
                p.evidence = Some(c);
            }
            Err(TopologyError::NonIsolatedHint { .. }) | Err(TopologyError::EmptyRing { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let mut levels: Vec<f64> = Vec::new();
    let h = probe.h();
    for p in &points {
        let tol = (1e-9 * p.u_value.abs().max(1.0)).max(tau_g * h);
        if !levels.iter().any(|t| (t - p.u_value).abs() <= tol) {
            levels.push(p.u_value);
        }
    }
    let mut components = Vec::new();
    for t in levels {
        components.extend(ridges(probe, t, tau_g));
    }
    for (j, c) in components.iter_mut().enumerate() {
        c.index = j;
    }
    absorb_nonisolated(&mut points, &components, 2.0 * h);
    Ok((points, components))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::field_catalog;
    use crate::field::SharedField;
    use serde_json::json;

    fn field(name: &str) -> SharedField {
        field_catalog().build(name, &json!({})).unwrap()
    }

    fn square(a: f64, b: f64) -> Domain {
        Domain::rectangle(Point::new(a, a), Point::new(b, b)).unwrap()
    }

    fn disk(r: f64) -> Domain {
        Domain::disk(Point::zeros(), r).unwrap()
    }

    #[test]
    fn coscos_candidates() {
        let u = field_catalog().build("coscos", &json!({"k": 1.0})).unwrap();
        let d = square(0.0, 2.0 * PI);
        let probe = Probe::new(u.as_ref(), &d, 128).unwrap();
        let pts = find_critical_points(&probe, probe.default_tau_g());
        let h = probe.h();
        for target in [Point::new(PI, PI), Point::new(PI / 2.0, PI / 2.0)] {
            assert!(pts.iter().any(|p| (p.point() - target).norm() < 2.0 * h), "{target}");
        }
    }

    #[test]
    fn paraboloid_has_single_candidate() {
        let u = field("paraboloid");
        let d = disk(1.0);
        let probe = Probe::new(u.as_ref(), &d, 128).unwrap();
        let pts = find_critical_points(&probe, probe.default_tau_g());
        assert_eq!(pts.len(), 1);
        assert!(pts[0].point().norm() < 1e-12);
    }

    #[test]
    fn coscos_classification() {
        let u = field_catalog().build("coscos", &json!({"k": 1.0})).unwrap();
        let d = square(0.0, 2.0 * PI);
        let probe = Probe::new(u.as_ref(), &d, 128).unwrap();
        let deltas = probe.default_deltas();
        let max = classify_isolated(u.as_ref(), &d, Point::new(PI, PI), &deltas, 64, 1e-10).unwrap();
        assert_eq!(max.kind, CriticalKind::LocalMax);
        let saddle = classify_isolated(u.as_ref(), &d, Point::new(PI / 2.0, PI / 2.0), &deltas, 64, 1e-10).unwrap();
        assert_eq!(saddle.kind, CriticalKind::Saddle);
        assert!(saddle.rings.iter().all(|r| r.kind == Some(CriticalKind::Saddle)));
    }

    #[test]
    fn example_origin_is_minimum() {
        let u = field("example1");
        let d = disk(1.0);
        let probe = Probe::new(u.as_ref(), &d, 64).unwrap();
        let c = classify_isolated(u.as_ref(), &d, Point::zeros(), &probe.default_deltas(), 64, 1e-10).unwrap();
        assert_eq!(c.kind, CriticalKind::LocalMin);
    }

    #[test]
    fn example_circle_is_nonisolated() {
        let u = field("example1");
        let d = disk(2.0);
        let probe = Probe::new(u.as_ref(), &d, 128).unwrap();
        let comps = detect_nonisolated(&probe, 0.25, probe.default_tau_g()).unwrap();
        assert_eq!(comps.len(), 1, "{comps:?}");
        let c = &comps[0];
        assert!(c.closed);
        assert!(c.points.iter().all(|p| ((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs() < 1e-6));
        assert!(c.max_grad_norm < 1e-10);
        let (points, _) = analyze_critical_points(&probe, &TopologyParams { n: 128, ..Default::default() }).unwrap();
        let origin = points.iter().find(|p| p.point().norm() < 1e-9).unwrap();
        assert_eq!(origin.kind, Some(CriticalKind::LocalMin));
        assert!(points
            .iter()
            .filter(|p| (p.point().norm() - 1.0).abs() < 1e-6)
            .all(|p| p.kind == Some(CriticalKind::NonIsolatedComponent)));
    }

    #[test]
    fn regular_levels_are_not_critical() {
        let u = field_catalog().build("coscos", &json!({"k": 1.0})).unwrap();
        let d = square(0.0, 2.0 * PI);
        let probe = Probe::new(u.as_ref(), &d, 128).unwrap();
        assert!(detect_nonisolated(&probe, 0.0, 1e-10).unwrap().is_empty());
        let p = field("paraboloid");
        let d = disk(1.0);
        let probe = Probe::new(p.as_ref(), &d, 128).unwrap();
        assert!(detect_nonisolated(&probe, 0.5, 1e-10).unwrap().is_empty());
    }

    #[test]
    fn catalog_ground_truth() {
        let cases: Vec<(SharedField, Domain, Point, CriticalKind)> = vec![
            (field("paraboloid"), disk(1.0), Point::zeros(), CriticalKind::LocalMin),
            (field("neg_paraboloid"), disk(1.0), Point::zeros(), CriticalKind::LocalMax),
            (field("saddle_xy"), disk(1.0), Point::zeros(), CriticalKind::Saddle),
            (field("cubic_saddle"), disk(1.0), Point::zeros(), CriticalKind::Saddle),
        ];
        for (u, d, p, kind) in cases {
            let probe = Probe::new(u.as_ref(), &d, 64).unwrap();
            let c = classify_isolated(u.as_ref(), &d, p, &probe.default_deltas(), 64, 1e-10).unwrap();
            assert_eq!(c.kind, kind, "{}", u.name());
            assert!(c.rings.iter().all(|r| r.kind == Some(kind)));
        }
    }

    #[test]
    fn flat_field_gives_nonisolated_hint() {
        let u = field("zero");
        let d = disk(1.0);
        let err = classify_isolated(u.as_ref(), &d, Point::zeros(), &[0.1], 64, 1e-10).unwrap_err();
        assert!(matches!(err, TopologyError::NonIsolatedHint { .. }));
    }
}
