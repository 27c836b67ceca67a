//! The sign regions `D⁺ = {f(u) > 0}` and `D⁻ = {f(u) < 0}` and the extreme
//! values of `u` on their boundaries.

use serde::Serialize;

use super::contour::{contour_in_domain, LevelComponent};
use super::critical::refine_critical;
use super::{pt, Probe, TopologyError};
use crate::geometry::Point;
use crate::nonlinearity::NonlinearLaw;

/// Dense sampling of `∂D` used for boundary extrema.
pub const BOUNDARY_SAMPLES: usize = 2048;
/// Values within this of the extreme value count as attaining it.
pub const VALUE_TOL: f64 = 1e-8;

/// All sample points attaining an extreme value, grouped into clusters of
/// neighbouring samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremumSet {
    pub value: f64,
    pub points: Vec<[f64; 2]>,
    pub count: usize,
    pub clusters: usize,
    /// One cluster of diameter at most the linking radius.
    pub unique: bool,
}

impl ExtremumSet {
    fn from_candidates(cands: &[(Point, f64)], maximize: bool, link: f64) -> Option<Self> {
        let best = cands.iter().map(|c| c.1).fold(None, |acc: Option<f64>, v| {
            Some(match acc {
                None => v,
                Some(a) if maximize => a.max(v),
                Some(a) => a.min(v),
            })
        })?;
        let tol = VALUE_TOL * best.abs().max(1.0);
        let pts: Vec<Point> = cands.iter().filter(|c| (c.1 - best).abs() <= tol).map(|c| c.0).collect();
        let mut label = vec![usize::MAX; pts.len()];
        let mut clusters = 0;
        for s in 0..pts.len() {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = clusters;
            let mut stack = vec![s];
            while let Some(a) = stack.pop() {
                for b in 0..pts.len() {
                    if label[b] == usize::MAX && (pts[a] - pts[b]).norm() <= link {
                        label[b] = clusters;
                        stack.push(b);
                    }
                }
            }
            clusters += 1;
        }
        let diameter = pts
            .iter()
            .flat_map(|a| pts.iter().map(move |b| (a - b).norm()))
            .fold(0.0, f64::max);
        Some(ExtremumSet {
            value: best,
            count: pts.len(),
            clusters,
            unique: clusters == 1 && diameter <= link,
            points: pts.into_iter().map(pt).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignRegions {
    /// Per lattice node: `f(u) > 0`, `f(u) < 0` (both false outside `D̄`).
    #[serde(skip)]
    pub plus: Vec<bool>,
    #[serde(skip)]
    pub minus: Vec<bool>,
    pub plus_nodes: usize,
    pub minus_nodes: usize,
    pub interface_nodes: usize,
    /// Zero set of `f∘u`.
    pub interface: Vec<LevelComponent>,
    pub m: f64,
    pub big_m: f64,
    /// Maximum of `u` over `∂D⁺`.
    pub p_plus: Option<ExtremumSet>,
    /// Minimum of `u` over `∂D⁻`.
    pub p_minus: Option<ExtremumSet>,
}

/// Classify the nodes of `D̄` by the sign of `f(u)`, trace the interface
/// `f(u) = 0` and locate the extreme values of `u` on `∂D±` from dense
/// boundary samples and interface vertices.
pub fn sign_regions(probe: &Probe, law: &dyn NonlinearLaw) -> Result<SignRegions, TopologyError> {
    let n = probe.lattice.len();
    let mut g = vec![f64::NAN; n];
    for k in 0..n {
        let u = probe.values[k];
        if !u.is_finite() {
            continue;
        }
        if law.contains(u) {
            g[k] = law.f(u);
        } else if probe.inside[k] {
            let x = probe.node(k);
            return Err(TopologyError::DomainViolation { u, x: x.x, y: x.y });
        }
    }
    let scale = g.iter().filter(|v| v.is_finite()).fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let zero_tol = 1e-12 * scale;
    let plus: Vec<bool> = (0..n).map(|k| probe.inside[k] && g[k] > zero_tol).collect();
    let minus: Vec<bool> = (0..n).map(|k| probe.inside[k] && g[k] < -zero_tol).collect();
    let inside_count = probe.inside.iter().filter(|v| **v).count();
    let plus_nodes = plus.iter().filter(|v| **v).count();
    let minus_nodes = minus.iter().filter(|v| **v).count();

    let interface: Vec<LevelComponent> = contour_in_domain(probe, &g, 0.0)?
        .into_iter()
        .enumerate()
        .map(|(j, (pts, closed, touches))| {
            let mut c = LevelComponent::from_points(probe.field, 0.0, pts, closed, touches);
            c.index = j;
            c
        })
        .collect();

    let boundary: Vec<(Point, f64)> = probe
        .domain
        .boundary_samples(BOUNDARY_SAMPLES)
        .into_iter()
        .map(|x| (x, probe.field.value(x)))
        .filter(|(_, u)| u.is_finite())
        .collect();
    let (mut m, mut big_m) = probe.range();
    for (_, u) in &boundary {
        m = m.min(*u);
        big_m = big_m.max(*u);
    }
    // Node extrema sharpened by a Newton step onto the critical point.
    for k in [argmin(probe, true), argmin(probe, false)].into_iter().flatten() {
        let (x, _) = refine_critical(probe.field, probe.domain, probe.node(k), probe.h());
        if probe.domain.contains_closed(x) {
            let u = probe.field.value(x);
            if u.is_finite() {
                m = m.min(u);
                big_m = big_m.max(u);
            }
        }
    }

    let sign_at = |u: f64| if law.contains(u) { law.f(u) } else { f64::NAN };
    let iface: Vec<(Point, f64)> = interface
        .iter()
        .flat_map(|c| c.vertices())
        .map(|x| (x, probe.field.value(x)))
        .collect();
    let on_plus: Vec<(Point, f64)> = boundary
        .iter()
        .filter(|(_, u)| sign_at(*u) > zero_tol)
        .chain(&iface)
        .copied()
        .collect();
    let on_minus: Vec<(Point, f64)> = boundary
        .iter()
        .filter(|(_, u)| sign_at(*u) < -zero_tol)
        .chain(&iface)
        .copied()
        .collect();
    let link = 2.5 * (probe.domain.perimeter() / BOUNDARY_SAMPLES as f64).max(probe.h());
    Ok(SignRegions {
        interface_nodes: inside_count - plus_nodes - minus_nodes,
        plus,
        minus,
        plus_nodes,
        minus_nodes,
        interface,
        m,
        big_m,
        p_plus: if plus_nodes > 0 { ExtremumSet::from_candidates(&on_plus, true, link) } else { None },
        p_minus: if minus_nodes > 0 { ExtremumSet::from_candidates(&on_minus, false, link) } else { None },
    })
}

fn argmin(probe: &Probe, lowest: bool) -> Option<usize> {
    (0..probe.lattice.len())
        .filter(|&k| probe.inside[k])
        .min_by(|&a, &b| {
            let o = probe.values[a].total_cmp(&probe.values[b]);
            if lowest {
                o
            } else {
                o.reverse()
            }
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::field_catalog;
    use crate::geometry::Domain;
    use crate::nonlinearity::{recover_f_from_radial, Linear, Power};
    use serde_json::json;
    use std::f64::consts::PI;

    #[test]
    fn example_regions_split_at_r_star() {
        let u = field_catalog().build("example1", &json!({})).unwrap();
        let d = Domain::disk(Point::zeros(), 1.0).unwrap();
        let (_, prof) = u.radial().unwrap();
        let rec = recover_f_from_radial(prof, (0.0, 1.0)).unwrap();
        let probe = Probe::new(u.as_ref(), &d, 128).unwrap();
        let s = sign_regions(&probe, &rec.law).unwrap();
        let r_star = (9.0 - 17f64.sqrt()) / 8.0;
        for k in 0..probe.lattice.len() {
            let r = probe.node(k).norm();
            if probe.inside[k] && (r - r_star).abs() > 2.0 * probe.h() {
                assert_eq!(s.minus[k], r < r_star, "r = {r}");
                assert_eq!(s.plus[k], r > r_star, "r = {r}");
            }
        }
        assert_eq!(s.interface.len(), 1);
        assert!(s.interface[0].vertices().all(|x| (x.norm() - r_star).abs() < 1e-3));
        assert!(s.m.abs() < 1e-12 && (s.big_m - 0.25).abs() < 1e-12);
        let pp = s.p_plus.unwrap();
        assert!((pp.value - 0.25).abs() < 1e-12);
        assert!(!pp.unique);
    }

    #[test]
    fn coscos_interface_is_zero_set() {
        let u = field_catalog().build("coscos", &json!({"k": 1.0})).unwrap();
        let d = Domain::rectangle(Point::zeros(), Point::new(2.0 * PI, 2.0 * PI)).unwrap();
        let probe = Probe::new(u.as_ref(), &d, 65).unwrap();
        let s = sign_regions(&probe, &Linear { lambda: 2.0 }).unwrap();
        for k in 0..probe.lattice.len() {
            if probe.inside[k] && probe.values[k].abs() > 1e-9 {
                assert_eq!(s.plus[k], probe.values[k] > 0.0);
            }
        }
        assert!(s.interface.iter().all(|c| c.vertices().all(|x| u.value(x).abs() < 1e-2)));
    }

    #[test]
    fn constant_field_is_all_plus() {
        let u = field_catalog().build("constant", &json!({"c": 0.5})).unwrap();
        let d = Domain::disk(Point::zeros(), 1.0).unwrap();
        let probe = Probe::new(u.as_ref(), &d, 32).unwrap();
        let s = sign_regions(&probe, &Power::new(0.0, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!(s.minus_nodes, 0);
        assert_eq!(s.plus_nodes, probe.inside.iter().filter(|v| **v).count());
        assert!(s.p_minus.is_none());
    }
}
