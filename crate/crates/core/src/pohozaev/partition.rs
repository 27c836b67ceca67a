//! Splitting `B_δ(p) ∩ D` by the sign of `g(x) = ∇u(x)·(x − p)` and tracing
//! the three kinds of boundary: the zero set `N` of `g`, the part of `∂D`
//! inside the ball and the part of the sphere inside `D̄`.

use serde::Serialize;

use super::{PohozaevError, PohozaevParams, Side};
use crate::field::ScalarField;
use crate::geometry::{BoundaryPiece, Domain, Point, Vec2};
use crate::lattice::Lattice;
use crate::quadrature::Polyline;
use crate::topology::marching_squares;

/// How the outward normal of a boundary run is computed at any point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalRule {
    /// `(x − c)/|x − c|`: ball spheres and disk boundaries.
    Radial(Point),
    /// Straight boundary pieces.
    Constant(Vec2),
    /// `sign·∇g/|∇g|` on the zero set of `g`.
    Level(f64),
}

/// A boundary polyline with one unit normal per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub line: Polyline,
    pub normals: Vec<Vec2>,
    pub rule: NormalRule,
}

impl Run {
    pub fn length(&self) -> f64 {
        self.line.length()
    }
}

pub struct BallPartition<'a> {
    pub field: &'a dyn ScalarField,
    pub domain: &'a Domain,
    pub p: Point,
    pub delta: f64,
    pub tau_g: f64,
    pub lattice: Lattice,
    /// `g` at the lattice nodes (`NaN` where the field has no data).
    pub g: Vec<f64>,
    /// Nodes in `B̄_δ(p) ∩ D̄`, and those with `g > τ_g`, `g < −τ_g`.
    pub ball: Vec<bool>,
    pub plus: Vec<bool>,
    pub minus: Vec<bool>,
    /// Zero set of `g` inside the ball, oriented with no preferred side.
    pub n_seg: Vec<Polyline>,
    /// `∂D ∩ B_δ(p)` with the outward normal of `D`.
    pub d_seg: Vec<Run>,
    /// `∂B_δ(p) ∩ D̄` with the outward normal of the ball.
    pub b_seg: Vec<Run>,
    /// Inward offset used to decide which side a boundary point bounds.
    pub side_probe: f64,
}

/// Node and length counts of a partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionSummary {
    pub p: [f64; 2],
    pub delta: f64,
    pub tau_g: f64,
    pub h: f64,
    pub ball_nodes: usize,
    pub plus_nodes: usize,
    pub minus_nodes: usize,
    pub neutral_nodes: usize,
    #[serde(rename = "N_length")]
    pub n_length: f64,
    #[serde(rename = "Dseg_length")]
    pub d_length: f64,
    #[serde(rename = "Bseg_length")]
    pub b_length: f64,
}

/// `g(x) = ∇u(x)·(x − p)`.
pub fn radial_derivative(field: &dyn ScalarField, p: Point, x: Point) -> f64 {
    field.gradient(x).dot(&(x - p))
}

/// `∇g = H(x − p) + ∇u`.
pub fn radial_derivative_gradient(field: &dyn ScalarField, p: Point, x: Point) -> Vec2 {
    field.hessian(x) * (x - p) + field.gradient(x)
}

/// Point where `inside` flips along `a → b`, with `inside(a)` true.
fn bisect(inside: &dyn Fn(Point) -> bool, a: Point, b: Point) -> Point {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if inside(a + mid * (b - a)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    a + lo * (b - a)
}

/// Maximal runs of a polyline on which `inside` holds, ended by bisection
/// where it flips. A closed polyline that is inside everywhere stays closed.
pub fn split_runs(points: &[Point], closed: bool, inside: &dyn Fn(Point) -> bool) -> Vec<(Vec<Point>, bool)> {
    let flags: Vec<bool> = points.iter().map(|x| inside(*x)).collect();
    if flags.iter().all(|v| *v) {
        return vec![(points.to_vec(), closed)];
    }
    let (pts, flags): (Vec<Point>, Vec<bool>) = if closed {
        let first_out = flags.iter().position(|v| !v).unwrap();
        let mut p: Vec<Point> = points[first_out..].iter().chain(&points[..first_out]).copied().collect();
        let mut q: Vec<bool> = flags[first_out..].iter().chain(&flags[..first_out]).copied().collect();
        p.push(p[0]);
        q.push(q[0]);
        (p, q)
    } else {
        (points.to_vec(), flags)
    };
    let mut runs = Vec::new();
    let mut current = Vec::new();
    for k in 0..pts.len() {
        if !flags[k] {
            continue;
        }
        if k > 0 && !flags[k - 1] {
            current.push(bisect(inside, pts[k], pts[k - 1]));
        }
        current.push(pts[k]);
        if k + 1 == pts.len() || !flags[k + 1] {
            if k + 1 < pts.len() {
                current.push(bisect(inside, pts[k], pts[k + 1]));
            }
            if current.len() >= 2 {
                runs.push((std::mem::take(&mut current), false));
            } else {
                current.clear();
            }
        }
    }
    runs
}

impl<'a> BallPartition<'a> {
    pub fn in_ball(&self, x: Point) -> bool {
        (x - self.p).norm() <= self.delta * (1.0 + 1e-12)
    }

    pub fn g(&self, x: Point) -> f64 {
        radial_derivative(self.field, self.p, x)
    }

    pub fn normal(&self, rule: NormalRule, x: Point) -> Vec2 {
        match rule {
            NormalRule::Radial(c) => (x - c) / (x - c).norm().max(f64::MIN_POSITIVE),
            NormalRule::Constant(n) => n,
            NormalRule::Level(sign) => {
                let dg = radial_derivative_gradient(self.field, self.p, x);
                let n = dg.norm();
                if n > 0.0 {
                    sign * dg / n
                } else {
                    Vec2::zeros()
                }
            }
        }
    }

    fn run(&self, points: Vec<Point>, closed: bool, rule: NormalRule) -> Run {
        let normals = points.iter().map(|x| self.normal(rule, *x)).collect();
        Run {
            line: if closed { Polyline::closed(points) } else { Polyline::open(points) },
            normals,
            rule,
        }
    }

    /// Whether a point of `∂(B ∩ D)` with outward normal `n` bounds the
    /// given side: decided by `g` a small step inside.
    pub fn bounds_side(&self, x: Point, n: Vec2, side: Side) -> bool {
        let g = self.g(x - self.side_probe * n);
        match side {
            Side::Plus => g > self.tau_g,
            Side::Minus => g < -self.tau_g,
            Side::Whole => true,
        }
    }

    /// The parts of boundary runs that bound the chosen side.
    pub fn side_runs(&self, runs: &[Run], side: Side) -> Vec<Run> {
        if side == Side::Whole {
            return runs.to_vec();
        }
        runs.iter()
            .flat_map(|r| {
                let keep = |x: Point| self.bounds_side(x, self.normal(r.rule, x), side);
                split_runs(&r.line.points, r.line.closed, &keep)
                    .into_iter()
                    .map(|(pts, closed)| self.run(pts, closed, r.rule))
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    /// `N` with the outward normal of the chosen side: `−∇g/|∇g|` for `𝓑⁺`,
    /// `+∇g/|∇g|` for `𝓑⁻`. Empty for the whole ball.
    pub fn n_runs(&self, side: Side) -> Vec<Run> {
        let sign = match side {
            Side::Plus => -1.0,
            Side::Minus => 1.0,
            Side::Whole => return Vec::new(),
        };
        self.n_seg
            .iter()
            .map(|l| self.run(l.points.clone(), l.closed, NormalRule::Level(sign)))
            .collect()
    }

    pub fn summary(&self) -> PartitionSummary {
        let count = |m: &[bool]| m.iter().filter(|v| **v).count();
        let ball_nodes = count(&self.ball);
        let plus_nodes = count(&self.plus);
        let minus_nodes = count(&self.minus);
        PartitionSummary {
            p: [self.p.x, self.p.y],
            delta: self.delta,
            tau_g: self.tau_g,
            h: self.lattice.h,
            ball_nodes,
            plus_nodes,
            minus_nodes,
            neutral_nodes: ball_nodes - plus_nodes - minus_nodes,
            n_length: self.n_seg.iter().map(|l| l.length()).sum(),
            d_length: self.d_seg.iter().map(|r| r.length()).sum(),
            b_length: self.b_seg.iter().map(|r| r.length()).sum(),
        }
    }
}

/// Lattice on which the ball is partitioned: the field's own lattice for
/// grid fields, otherwise `n` nodes across the bounding box of `B_δ(p) ∩ D`.
fn ball_lattice(field: &dyn ScalarField, domain: &Domain, p: Point, delta: f64, n: usize) -> Result<Lattice, PohozaevError> {
    if let Some(g) = field.as_grid() {
        let h = g.lattice().h;
        if delta <= 4.0 * h {
            return Err(PohozaevError::DeltaTooSmall { delta, min: 4.0 * h });
        }
        return Ok(*g.lattice());
    }
    let (dlo, dhi) = domain.bbox();
    let lo = Point::new((p.x - delta).max(dlo.x), (p.y - delta).max(dlo.y));
    let hi = Point::new((p.x + delta).min(dhi.x), (p.y + delta).min(dhi.y));
    if !(hi.x > lo.x && hi.y > lo.y) {
        return Err(PohozaevError::EmptyBall { x: p.x, y: p.y, delta });
    }
    Ok(Lattice::covering(lo, hi, n.max(16), 2))
}

/// Partition `B_δ(p) ∩ D` by the sign of `g = ∇u·(x − p)`.
pub fn partition_ball<'a>(
    field: &'a dyn ScalarField,
    domain: &'a Domain,
    p: Point,
    delta: f64,
    params: &PohozaevParams,
) -> Result<BallPartition<'a>, PohozaevError> {
    if !(delta > 0.0 && delta.is_finite()) || domain.signed_distance(p) >= delta {
        return Err(PohozaevError::EmptyBall { x: p.x, y: p.y, delta });
    }
    let lattice = ball_lattice(field, domain, p, delta, params.n)?;
    let h = lattice.h;
    let analytic = field.as_grid().is_none();
    let tau_g = params.tau_g.unwrap_or(if analytic { 1e-10 } else { 10.0 * h * h });
    let g: Vec<f64> = (0..lattice.len())
        .map(|k| {
            let (i, j) = lattice.coords(k);
            radial_derivative(field, p, lattice.node(i, j))
        })
        .collect();
    let in_region = |x: Point| (x - p).norm() <= delta * (1.0 + 1e-12) && domain.contains_closed(x);
    let ball: Vec<bool> = (0..lattice.len())
        .map(|k| {
            let (i, j) = lattice.coords(k);
            in_region(lattice.node(i, j)) && g[k].is_finite()
        })
        .collect();
    let plus = (0..lattice.len()).map(|k| ball[k] && g[k] > tau_g).collect();
    let minus = (0..lattice.len()).map(|k| ball[k] && g[k] < -tau_g).collect();

    // N: the zero set of g, clipped to the closed region. Runs hugging the
    // boundary of the region are contour noise along a boundary where g
    // vanishes and are dropped.
    let boundary_gap = |x: Point| (delta - (x - p).norm()).min(-domain.signed_distance(x));
    let mut n_seg = Vec::new();
    for (pts, closed) in marching_squares(&lattice, &g, 0.0) {
        for (run, closed) in split_runs(&pts, closed, &in_region) {
            if run.iter().all(|x| boundary_gap(*x) < 0.5 * h) {
                continue;
            }
            n_seg.push(if closed { Polyline::closed(run) } else { Polyline::open(run) });
        }
    }

    let spacing = 2.0 * std::f64::consts::PI * delta / params.arc_vertices as f64;
    let circle: Vec<Point> = (0..params.arc_vertices)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / params.arc_vertices as f64;
            p + delta * Vec2::new(t.cos(), t.sin())
        })
        .collect();
    let b_pts: Vec<(Vec<Point>, bool)> = split_runs(&circle, true, &|x| domain.contains_closed(x));

    let open_ball = |x: Point| (x - p).norm() < delta * (1.0 - 1e-9);
    let mut d_pts = Vec::new();
    for piece in domain.boundary_pieces() {
        let count = ((piece.length() / spacing).ceil() as usize).clamp(64, 1 << 20);
        let closed = (piece.point(0.0) - piece.point(1.0)).norm() < 1e-12 * piece.length();
        let pts: Vec<Point> = if closed {
            (0..count).map(|k| piece.point(k as f64 / count as f64)).collect()
        } else {
            (0..=count).map(|k| piece.point(k as f64 / count as f64)).collect()
        };
        let rule = match piece {
            BoundaryPiece::Arc { center, .. } => NormalRule::Radial(center),
            BoundaryPiece::Segment { .. } => NormalRule::Constant(piece.normal(0.5)),
        };
        for (run, closed) in split_runs(&pts, closed, &open_ball) {
            d_pts.push((run, closed, rule));
        }
    }

    let mut part = BallPartition {
        field,
        domain,
        p,
        delta,
        tau_g,
        lattice,
        g,
        ball,
        plus,
        minus,
        n_seg,
        d_seg: Vec::new(),
        b_seg: Vec::new(),
        side_probe: if analytic { 1e-6 * delta } else { h },
    };
    part.b_seg = b_pts
        .into_iter()
        .map(|(pts, closed)| part.run(pts, closed, NormalRule::Radial(p)))
        .collect();
    part.d_seg = d_pts
        .into_iter()
        .map(|(pts, closed, rule)| part.run(pts, closed, rule))
        .collect();
    Ok(part)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::field_catalog;
    use serde_json::json;
    use std::f64::consts::PI;

    fn params() -> PohozaevParams {
        PohozaevParams {
            n: 128,
            ..PohozaevParams::default()
        }
    }

    #[test]
    fn example_ball_is_all_plus() {
        let u = field_catalog().build("example1", &json!({})).unwrap();
        let d = Domain::disk(Point::zeros(), 1.0).unwrap();
        let part = partition_ball(u.as_ref(), &d, Point::zeros(), 0.5, &params()).unwrap();
        let s = part.summary();
        assert_eq!(s.minus_nodes, 0);
        // Only the centre node sits on g = 0.
        assert!(s.neutral_nodes <= 1, "{s:?}");
        assert!(part.n_seg.is_empty());
        assert!(part.d_seg.is_empty());
        assert_eq!(part.b_seg.len(), 1);
        assert!((s.b_length - PI).abs() < 1e-4);
    }

    #[test]
    fn coscos_saddle_has_four_sectors() {
        let u = field_catalog().build("coscos", &json!({})).unwrap();
        let d = Domain::rectangle(Point::zeros(), Point::new(2.0 * PI, 2.0 * PI)).unwrap();
        let p = Point::new(PI / 2.0, PI / 2.0);
        let part = partition_ball(u.as_ref(), &d, p, 0.3, &params()).unwrap();
        let s = part.summary();
        assert!(s.plus_nodes > 0 && s.minus_nodes > 0);
        // N is two crossing diameters: total length 4δ.
        assert!((s.n_length - 1.2).abs() < 0.02, "{s:?}");
        let plus_arcs = part.side_runs(&part.b_seg, Side::Plus);
        assert_eq!(plus_arcs.len(), 2);
        let arc: f64 = plus_arcs.iter().map(|r| r.length()).sum();
        assert!((arc - 0.3 * PI).abs() < 1e-6, "{arc}");
    }

    #[test]
    fn ball_crossing_the_boundary() {
        let u = field_catalog().build("paraboloid", &json!({})).unwrap();
        let d = Domain::rectangle(Point::zeros(), Point::new(1.0, 1.0)).unwrap();
        let part = partition_ball(u.as_ref(), &d, Point::new(0.5, 0.0), 0.25, &params()).unwrap();
        let s = part.summary();
        assert!((s.d_length - 0.5).abs() < 1e-9, "{s:?}");
        assert!((s.b_length - 0.25 * PI).abs() < 1e-4, "{s:?}");
    }

    #[test]
    fn split_runs_reopen_closed_loops() {
        let pts: Vec<Point> = (0..8).map(|k| Point::new(k as f64, 0.0)).collect();
        let runs = split_runs(&pts, true, &|x| x.x < 2.5 || x.x > 5.5);
        assert_eq!(runs.len(), 1);
        let (r, closed) = &runs[0];
        assert!(!closed);
        assert!((r[0].x - 5.5).abs() < 1e-12 && (r[r.len() - 1].x - 2.5).abs() < 1e-12);
    }
}
