//! Marching squares on sampled node values, chained into polylines and
//! clipped to the closed domain.

use std::collections::HashMap;
use std::io::Write;

use serde::Serialize;

use super::critical::refine_critical;
use super::{pt, Probe, TopologyError};
use crate::field::{FieldError, ScalarField};
use crate::geometry::{Domain, Point};
use crate::lattice::Lattice;

/// More components than this at one level is treated as an error.
pub const MAX_COMPONENTS: usize = 10_000;

/// One connected piece `s^j_t` of the level set `{u = t}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelComponent {
    pub level: f64,
    pub index: usize,
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
    pub touches_boundary: bool,
    /// A single point where `u` attains `t` as a strict extremum.
    pub singleton: bool,
    /// Set when `∇u` vanishes along the whole component.
    pub critical: bool,
    pub min_grad_norm: f64,
    pub max_grad_norm: f64,
    pub length: f64,
}

impl LevelComponent {
    pub fn from_points(field: &dyn ScalarField, level: f64, points: Vec<Point>, closed: bool, touches_boundary: bool) -> Self {
        let norms: Vec<f64> = points.iter().map(|x| field.gradient(*x).norm()).collect();
        let mut length: f64 = points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        if closed && points.len() > 2 {
            length += (points[0] - points[points.len() - 1]).norm();
        }
        LevelComponent {
            level,
            index: 0,
            singleton: points.len() == 1,
            points: points.into_iter().map(pt).collect(),
            closed,
            touches_boundary,
            critical: false,
            min_grad_norm: norms.iter().copied().fold(f64::INFINITY, f64::min),
            max_grad_norm: norms.iter().copied().fold(0.0, f64::max),
            length,
        }
    }

    pub fn vertices(&self) -> impl Iterator<Item = Point> + '_ {
        self.points.iter().map(|p| Point::new(p[0], p[1]))
    }

    /// Consecutive vertex pairs, including the closing one.
    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.points.len();
        let count = if self.closed && n > 2 { n } else { n.saturating_sub(1) };
        (0..count).map(move |k| {
            let a = self.points[k];
            let b = self.points[(k + 1) % n];
            (Point::new(a[0], a[1]), Point::new(b[0], b[1]))
        })
    }
}

// Cell edges: bottom, right, top, left.
const B: usize = 0;
const R: usize = 1;
const T: usize = 2;
const L: usize = 3;

fn cell_segments(case: u8, center_above: bool) -> &'static [(usize, usize)] {
    match case {
        0 | 15 => &[],
        1 | 14 => &[(L, B)],
        2 | 13 => &[(B, R)],
        4 | 11 => &[(R, T)],
        8 | 7 => &[(T, L)],
        3 | 12 => &[(L, R)],
        6 | 9 => &[(B, T)],
        // Saddle cells: the centre value decides which diagonal pair of
        // corners is connected.
        5 if center_above => &[(B, R), (T, L)],
        5 => &[(L, B), (R, T)],
        10 if center_above => &[(L, B), (R, T)],
        10 => &[(B, R), (T, L)],
        _ => unreachable!(),
    }
}

/// Contour of node `values` at `t` as polylines with a closed flag. Cells
/// with a non-finite corner are skipped.
pub fn marching_squares(lattice: &Lattice, values: &[f64], t: f64) -> Vec<(Vec<Point>, bool)> {
    let (nx, ny) = (lattice.nx, lattice.ny);
    // Edge ids: 2·node for the edge to the east neighbour, 2·node + 1 for
    // the edge to the north neighbour.
    let edge_of = |i: usize, j: usize, side: usize| -> usize {
        match side {
            B => 2 * lattice.index(i, j),
            R => 2 * lattice.index(i + 1, j) + 1,
            T => 2 * lattice.index(i, j + 1),
            _ => 2 * lattice.index(i, j) + 1,
        }
    };
    let mut segments: Vec<(usize, usize)> = Vec::new();
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            let c = [
                values[lattice.index(i, j)],
                values[lattice.index(i + 1, j)],
                values[lattice.index(i + 1, j + 1)],
                values[lattice.index(i, j + 1)],
            ];
            if c.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let case = c
                .iter()
                .enumerate()
                .fold(0u8, |acc, (k, v)| acc | (((*v >= t) as u8) << k));
            let center_above = 0.25 * (c[0] + c[1] + c[2] + c[3]) >= t;
            for &(a, b) in cell_segments(case, center_above) {
                segments.push((edge_of(i, j, a), edge_of(i, j, b)));
            }
        }
    }
    let point_on = |e: usize| -> Point {
        let node = e / 2;
        let (i, j) = lattice.coords(node);
        let other = if e.is_multiple_of(2) { lattice.index(i + 1, j) } else { lattice.index(i, j + 1) };
        let (pa, pb) = (lattice.node(i, j), {
            let (a, b) = lattice.coords(other);
            lattice.node(a, b)
        });
        let (va, vb) = (values[node], values[other]);
        let s = if vb == va { 0.5 } else { ((t - va) / (vb - va)).clamp(0.0, 1.0) };
        pa + s * (pb - pa)
    };
    let mut adjacency: HashMap<usize, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        adjacency.entry(a).or_default().push(s);
        adjacency.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let walk = |start_seg: usize, start_edge: usize, used: &mut Vec<bool>| -> (Vec<usize>, bool) {
        let mut edges = vec![start_edge];
        let (mut seg, mut at) = (start_seg, start_edge);
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            if next == start_edge {
                return (edges, true);
            }
            edges.push(next);
            match adjacency[&next].iter().find(|s| !used[**s]) {
                Some(&s) => {
                    seg = s;
                    at = next;
                }
                None => return (edges, false),
            }
        }
    };
    let mut out = Vec::new();
    for s in 0..segments.len() {
        if used[s] {
            continue;
        }
        let (a, b) = segments[s];
        let start = if adjacency[&a].len() == 1 {
            Some(a)
        } else if adjacency[&b].len() == 1 {
            Some(b)
        } else {
            None
        };
        if let Some(e) = start {
            let (edges, closed) = walk(s, e, &mut used);
            out.push((edges.into_iter().map(point_on).collect(), closed));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            let (edges, closed) = walk(s, segments[s].0, &mut used);
            out.push((edges.into_iter().map(point_on).collect(), closed));
        }
    }
    out
}

/// Split a polyline into its runs inside `D̄`, ending each run exactly on
/// `∂D`. Returns `(points, closed, clipped)`.
pub(crate) fn clip(domain: &Domain, pts: Vec<Point>, closed: bool) -> Vec<(Vec<Point>, bool, bool)> {
    let inside: Vec<bool> = pts.iter().map(|x| domain.contains_closed(*x)).collect();
    if inside.iter().all(|v| *v) {
        return vec![(pts, closed, false)];
    }
    let (pts, inside) = if closed {
        let first_out = inside.iter().position(|v| !v).unwrap();
        let mut p: Vec<Point> = pts[first_out..].iter().chain(&pts[..first_out]).copied().collect();
        let mut q: Vec<bool> = inside[first_out..].iter().chain(&inside[..first_out]).copied().collect();
        p.push(p[0]);
        q.push(q[0]);
        (p, q)
    } else {
        (pts, inside)
    };
    let mut runs = Vec::new();
    let mut current: Vec<Point> = Vec::new();
    let mut clipped = false;
    for k in 0..pts.len() {
        if !inside[k] {
            continue;
        }
        if k == 0 || !inside[k - 1] {
            current.clear();
            clipped = false;
            if k > 0 {
                let th = domain.crossing_fraction(pts[k], pts[k - 1]);
                current.push(pts[k] + th * (pts[k - 1] - pts[k]));
                clipped = true;
            }
        }
        current.push(pts[k]);
        if k + 1 == pts.len() || !inside[k + 1] {
            if k + 1 < pts.len() {
                let th = domain.crossing_fraction(pts[k], pts[k + 1]);
                current.push(pts[k] + th * (pts[k + 1] - pts[k]));
                clipped = true;
            }
            runs.push((std::mem::take(&mut current), false, clipped));
        }
    }
    runs
}

/// Contour runs of arbitrary node values at `t`, clipped to `D̄`, as
/// `(points, closed, touches_boundary)`.
pub(crate) fn contour_in_domain(probe: &Probe, values: &[f64], t: f64) -> Result<Vec<(Vec<Point>, bool, bool)>, TopologyError> {
    let h = probe.h();
    let near_boundary = |x: Point| probe.domain.signed_distance(x) > -1.5 * h;
    let mut out = Vec::new();
    for (pts, closed) in marching_squares(&probe.lattice, values, t) {
        for (run, closed, clipped) in clip(probe.domain, pts, closed) {
            if run.len() < 2 {
                continue;
            }
            let touches = clipped || (!closed && (near_boundary(run[0]) || near_boundary(run[run.len() - 1])));
            out.push((run, closed, touches));
        }
        if out.len() > MAX_COMPONENTS {
            return Err(TopologyError::TooManyComponents(MAX_COMPONENTS));
        }
    }
    Ok(out)
}

/// Components of `{u = t}` in `D̄`: marching squares (saddle cells decided
/// by the cell-centre average), plus singleton components at strict local
/// extrema where `u` equals `t`.
pub fn extract_level_set(probe: &Probe, t: f64) -> Result<Vec<LevelComponent>, TopologyError> {
    let mut comps: Vec<LevelComponent> = contour_in_domain(probe, &probe.values, t)?
        .into_iter()
        .map(|(pts, closed, touches)| LevelComponent::from_points(probe.field, t, pts, closed, touches))
        .collect();
    let lat = &probe.lattice;
    let h = probe.h();
    let tol = 1e-9 * t.abs().max(1.0);
    let mut singles: Vec<Point> = Vec::new();
    for k in 0..lat.len() {
        if !probe.inside[k] {
            continue;
        }
        let v = probe.values[k];
        let (i, j) = lat.coords(k);
        let nbs: Vec<f64> = lat
            .neighbours8(i, j)
            .map(|(a, b)| probe.values[lat.index(a, b)])
            .filter(|w| w.is_finite())
            .collect();
        // Ties allowed: an extremum between nodes shows up as several
        // equal neighbours, all refined onto the same point.
        let strict_min = nbs.iter().all(|w| *w >= v) && nbs.iter().any(|w| *w > v);
        let strict_max = nbs.iter().all(|w| *w <= v) && nbs.iter().any(|w| *w < v);
        let spread = nbs.iter().map(|w| (w - v).abs()).fold(0.0, f64::max);
        if !(strict_min || strict_max) || (v - t).abs() > spread + tol {
            continue;
        }
        let (x, _) = refine_critical(probe.field, probe.domain, lat.node(i, j), h);
        if (probe.field.value(x) - t).abs() > tol {
            continue;
        }
        let taken = singles.iter().any(|y| (x - y).norm() < 2.0 * h)
            || comps.iter().any(|c| c.vertices().any(|y| (x - y).norm() < 2.0 * h));
        if !taken {
            singles.push(x);
        }
    }
    for x in singles {
        let touches = probe.domain.signed_distance(x) > -1e-8 * probe.domain.diameter();
        comps.push(LevelComponent::from_points(probe.field, t, vec![x], true, touches));
    }
    for (j, c) in comps.iter_mut().enumerate() {
        c.index = j;
    }
    Ok(comps)
}

/// Level-set vertices as CSV rows: `t, component_id, vertex_index, x, y,
/// closed, touches_boundary`.
pub fn write_level_csv<W: Write>(components: &[LevelComponent], out: W) -> Result<(), FieldError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| FieldError::Csv(e.to_string());
    w.write_record(["t", "component_id", "vertex_index", "x", "y", "closed", "touches_boundary"])
        .map_err(err)?;
    for c in components {
        for (k, p) in c.points.iter().enumerate() {
            w.write_record([
                format!("{:.12e}", c.level),
                c.index.to_string(),
                k.to_string(),
                format!("{:.12e}", p[0]),
                format!("{:.12e}", p[1]),
                c.closed.to_string(),
                c.touches_boundary.to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| FieldError::Csv(e.to_string()))
}
