//! Planar domains: disks, axis-aligned rectangles and convex polygons.
//!
//! A [`Domain`] is immutable after construction. Polygons are validated to be
//! simple, counter-clockwise and convex; rectangles share the polygon code
//! path for distances and normals.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point = Vector2<f64>;
pub type Vec2 = Vector2<f64>;

/// Relative boundary tolerance applied to the domain diameter.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("disk radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("rectangle requires lo < hi componentwise")]
    DegenerateRectangle,
    #[error("polygon needs at least three vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is not convex and counter-clockwise: {0}")]
    NotConvex(String),
    #[error("point ({0}, {1}) is not on the boundary")]
    NotOnBoundary(f64, f64),
    #[error("outward normal is undefined at polygon vertex ({0}, {1})")]
    VertexAmbiguity(f64, f64),
    #[error("non-finite coordinate in domain description")]
    NonFinite,
}

/// Serializable description, as found in config files:
/// `{"type":"disk","center":[0,0],"radius":2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Disk { center: [f64; 2], radius: f64 },
    Rectangle { lo: [f64; 2], hi: [f64; 2] },
    Polygon { vertices: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Containment {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Disk { center: Point, radius: f64 },
    Rectangle { lo: Point, hi: Point },
    Polygon { vertices: Vec<Point> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    shape: Shape,
    // polygon vertices (also filled for rectangles)
    ring: Vec<Point>,
    tol: f64,
}

/// A smooth piece of the boundary, parametrized by `t ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryPiece {
    Arc {
        center: Point,
        radius: f64,
        theta0: f64,
        theta1: f64,
    },
    Segment {
        a: Point,
        b: Point,
    },
}

impl BoundaryPiece {
    pub fn point(&self, t: f64) -> Point {
        match *self {
            BoundaryPiece::Arc {
                center,
                radius,
                theta0,
                theta1,
            } => {
                let th = theta0 + t * (theta1 - theta0);
                center + radius * Vec2::new(th.cos(), th.sin())
            }
            BoundaryPiece::Segment { a, b } => a + t * (b - a),
        }
    }

    /// Outward normal for counter-clockwise traversal.
    pub fn normal(&self, t: f64) -> Vec2 {
        match *self {
            BoundaryPiece::Arc { theta0, theta1, .. } => {
                let th = theta0 + t * (theta1 - theta0);
                Vec2::new(th.cos(), th.sin())
            }
            BoundaryPiece::Segment { a, b } => {
                let e = (b - a).normalize();
                Vec2::new(e.y, -e.x)
            }
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            BoundaryPiece::Arc {
                radius,
                theta0,
                theta1,
                ..
            } => radius * (theta1 - theta0).abs(),
            BoundaryPiece::Segment { a, b } => (b - a).norm(),
        }
    }
}

pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Distance from `x` to the segment `a b` and the parameter of the closest point.
pub fn point_segment_distance(x: Point, a: Point, b: Point) -> (f64, f64) {
    let e = b - a;
    let len2 = e.norm_squared();
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((x - a).dot(&e) / len2).clamp(0.0, 1.0)
    };
    ((x - (a + t * e)).norm(), t)
}

impl Domain {
    pub fn disk(center: Point, radius: f64) -> Result<Self, GeometryError> {
        if !(center.x.is_finite() && center.y.is_finite() && radius.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if radius <= 0.0 {
            return Err(GeometryError::NonPositiveRadius(radius));
        }
        Ok(Domain {
            shape: Shape::Disk { center, radius },
            ring: Vec::new(),
            tol: DEFAULT_BOUNDARY_TOL * 2.0 * radius,
        })
    }

    pub fn rectangle(lo: Point, hi: Point) -> Result<Self, GeometryError> {
        if !(lo.iter().chain(hi.iter()).all(|v| v.is_finite())) {
            return Err(GeometryError::NonFinite);
        }
        if !(lo.x < hi.x && lo.y < hi.y) {
            return Err(GeometryError::DegenerateRectangle);
        }
        let ring = vec![
            lo,
            Point::new(hi.x, lo.y),
            hi,
            Point::new(lo.x, hi.y),
        ];
        Ok(Domain {
            shape: Shape::Rectangle { lo, hi },
            ring,
            tol: DEFAULT_BOUNDARY_TOL * (hi - lo).norm(),
        })
    }

    pub fn convex_polygon(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::TooFewVertices(n));
        }
        if !vertices.iter().all(|v| v.x.is_finite() && v.y.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let mut strictly = 0;
        let mut turning = 0.0;
        for i in 0..n {
            let e0 = vertices[(i + 1) % n] - vertices[i];
            let e1 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
            if e0.norm() == 0.0 {
                return Err(GeometryError::NotConvex(format!("repeated vertex {i}")));
            }
            let c = cross(e0, e1);
            if c < 0.0 {
                return Err(GeometryError::NotConvex(format!(
                    "clockwise turn at vertex {}",
                    (i + 1) % n
                )));
            }
            if c > 0.0 {
                strictly += 1;
            }
            turning += c.atan2(e0.dot(&e1));
        }
        if strictly < 3 {
            return Err(GeometryError::NotConvex(
                "fewer than three strict corners".into(),
            ));
        }
        if (turning - 2.0 * std::f64::consts::PI).abs() > 1e-9 {
            return Err(GeometryError::NotConvex(format!(
                "total turning {turning} differs from 2π (self-intersecting)"
            )));
        }
        let diam = vertices
            .iter()
            .flat_map(|a| vertices.iter().map(move |b| (a - b).norm()))
            .fold(0.0, f64::max);
        Ok(Domain {
            ring: vertices.clone(),
            shape: Shape::Polygon { vertices },
            tol: DEFAULT_BOUNDARY_TOL * diam,
        })
    }

    pub fn from_spec(spec: &DomainSpec) -> Result<Self, GeometryError> {
        match spec {
            DomainSpec::Disk { center, radius } => {
                Domain::disk(Point::new(center[0], center[1]), *radius)
            }
            DomainSpec::Rectangle { lo, hi } => {
                Domain::rectangle(Point::new(lo[0], lo[1]), Point::new(hi[0], hi[1]))
            }
            DomainSpec::Polygon { vertices } => Domain::convex_polygon(
                vertices.iter().map(|v| Point::new(v[0], v[1])).collect(),
            ),
        }
    }

    pub fn spec(&self) -> DomainSpec {
        match &self.shape {
            Shape::Disk { center, radius } => DomainSpec::Disk {
                center: [center.x, center.y],
                radius: *radius,
            },
            Shape::Rectangle { lo, hi } => DomainSpec::Rectangle {
                lo: [lo.x, lo.y],
                hi: [hi.x, hi.y],
            },
            Shape::Polygon { vertices } => DomainSpec::Polygon {
                vertices: vertices.iter().map(|v| [v.x, v.y]).collect(),
            },
        }
    }

    /// Override the absolute boundary tolerance.
    pub fn with_boundary_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn boundary_tolerance(&self) -> f64 {
        self.tol
    }

    /// `Some((center, radius))` when the domain is a disk.
    pub fn as_disk(&self) -> Option<(Point, f64)> {
        match self.shape {
            Shape::Disk { center, radius } => Some((center, radius)),
            _ => None,
        }
    }

    pub fn signed_distance(&self, x: Point) -> f64 {
        match &self.shape {
            Shape::Disk { center, radius } => (x - center).norm() - radius,
            Shape::Rectangle { lo, hi } => {
                let c = (lo + hi) * 0.5;
                let half = (hi - lo) * 0.5;
                let q = Vec2::new((x.x - c.x).abs() - half.x, (x.y - c.y).abs() - half.y);
                let outside = Vec2::new(q.x.max(0.0), q.y.max(0.0)).norm();
                outside + q.x.max(q.y).min(0.0)
            }
            Shape::Polygon { .. } => {
                let n = self.ring.len();
                let mut d = f64::INFINITY;
                let mut inside = true;
                for i in 0..n {
                    let a = self.ring[i];
                    let b = self.ring[(i + 1) % n];
                    d = d.min(point_segment_distance(x, a, b).0);
                    if cross(b - a, x - a) < 0.0 {
                        inside = false;
                    }
                }
                if inside {
                    -d
                } else {
                    d
                }
            }
        }
    }

    pub fn contains(&self, x: Point) -> Containment {
        let d = self.signed_distance(x);
        if d < -self.tol {
            Containment::Interior
        } else if d <= self.tol {
            Containment::Boundary
        } else {
            Containment::Exterior
        }
    }

    /// True when `x` lies in the closed domain (up to the boundary tolerance).
    pub fn contains_closed(&self, x: Point) -> bool {
        self.signed_distance(x) <= self.tol
    }

    pub fn outward_normal(&self, x: Point) -> Result<Vec2, GeometryError> {
        if self.contains(x) != Containment::Boundary {
            return Err(GeometryError::NotOnBoundary(x.x, x.y));
        }
        match &self.shape {
            Shape::Disk { center, .. } => Ok((x - center).normalize()),
            _ => {
                if let Some(v) = self.ring.iter().find(|v| (x - **v).norm() <= self.tol) {
                    return Err(GeometryError::VertexAmbiguity(v.x, v.y));
                }
                let n = self.ring.len();
                let (mut best, mut best_d) = (0, f64::INFINITY);
                for i in 0..n {
                    let d = point_segment_distance(x, self.ring[i], self.ring[(i + 1) % n]).0;
                    if d < best_d {
                        best = i;
                        best_d = d;
                    }
                }
                let e = (self.ring[(best + 1) % n] - self.ring[best]).normalize();
                Ok(Vec2::new(e.y, -e.x))
            }
        }
    }

    /// Every supported shape is convex; polygons are checked at construction.
    pub fn is_convex(&self) -> bool {
        true
    }

    pub fn bbox(&self) -> (Point, Point) {
        match &self.shape {
            Shape::Disk { center, radius } => (
                center - Vec2::new(*radius, *radius),
                center + Vec2::new(*radius, *radius),
            ),
            _ => {
                let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
                let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for v in &self.ring {
                    lo = lo.inf(v);
                    hi = hi.sup(v);
                }
                (lo, hi)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.shape {
            Shape::Disk { radius, .. } => 2.0 * radius,
            _ => self
                .ring
                .iter()
                .flat_map(|a| self.ring.iter().map(move |b| (a - b).norm()))
                .fold(0.0, f64::max),
        }
    }

    pub fn area(&self) -> f64 {
        match &self.shape {
            Shape::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
            _ => {
                let n = self.ring.len();
                0.5 * (0..n)
                    .map(|i| cross(self.ring[i], self.ring[(i + 1) % n]))
                    .sum::<f64>()
            }
        }
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary_pieces().iter().map(|p| p.length()).sum()
    }

    /// Smooth boundary pieces in counter-clockwise order.
    pub fn boundary_pieces(&self) -> Vec<BoundaryPiece> {
        match &self.shape {
            Shape::Disk { center, radius } => vec![BoundaryPiece::Arc {
                center: *center,
                radius: *radius,
                theta0: 0.0,
                theta1: 2.0 * std::f64::consts::PI,
            }],
            _ => {
                let n = self.ring.len();
                (0..n)
                    .map(|i| BoundaryPiece::Segment {
                        a: self.ring[i],
                        b: self.ring[(i + 1) % n],
                    })
                    .collect()
            }
        }
    }

    /// Polygon corners (empty for disks).
    pub fn vertices(&self) -> &[Point] {
        &self.ring
    }

    /// `count` boundary points equally spaced in arc length, counter-clockwise.
    pub fn boundary_samples(&self, count: usize) -> Vec<Point> {
        let pieces = self.boundary_pieces();
        let total: f64 = pieces.iter().map(|p| p.length()).sum();
        let mut out = Vec::with_capacity(count);
        for k in 0..count {
            let mut s = total * k as f64 / count as f64;
            for p in &pieces {
                let len = p.length();
                if s <= len || std::ptr::eq(p, pieces.last().unwrap()) {
                    out.push(p.point((s / len).min(1.0)));
                    break;
                }
                s -= len;
            }
        }
        out
    }

    /// Fraction `θ ∈ (0, 1]` along `a → b` where the boundary is crossed,
    /// assuming `a` is inside and `b` outside.
    pub fn crossing_fraction(&self, a: Point, b: Point) -> f64 {
        if let Shape::Disk { center, radius } = self.shape {
            // |a + θ(b−a) − c|² = r²
            let d = b - a;
            let w = a - center;
            let qa = d.norm_squared();
            let qb = 2.0 * w.dot(&d);
            let qc = w.norm_squared() - radius * radius;
            let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
            let t = (-qb + disc.sqrt()) / (2.0 * qa);
            return t.clamp(0.0, 1.0);
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.signed_distance(a + mid * (b - a)) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// The portion `[s0, s1]` of the segment `a → b` lying inside the domain,
    /// as fractions of its length. Convexity makes it a single interval.
    pub fn segment_overlap(&self, a: Point, b: Point) -> Option<(f64, f64)> {
        const PROBES: usize = 33;
        let inside_at = |t: f64| self.signed_distance(a + t * (b - a)) <= 0.0;
        let seed = (0..PROBES)
            .map(|k| k as f64 / (PROBES - 1) as f64)
            .find(|&t| inside_at(t))?;
        let bisect = |mut inside: f64, mut outside: f64| {
            for _ in 0..60 {
                let mid = 0.5 * (inside + outside);
                if inside_at(mid) {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            inside
        };
        let s0 = if inside_at(0.0) { 0.0 } else { bisect(seed, 0.0) };
        let s1 = if inside_at(1.0) { 1.0 } else { bisect(seed, 1.0) };
        Some((s0, s1))
    }

    pub fn translated(&self, c: Vec2) -> Domain {
        let shape = match &self.shape {
            Shape::Disk { center, radius } => Shape::Disk {
                center: center + c,
                radius: *radius,
            },
            Shape::Rectangle { lo, hi } => Shape::Rectangle {
                lo: lo + c,
                hi: hi + c,
            },
            Shape::Polygon { vertices } => Shape::Polygon {
                vertices: vertices.iter().map(|v| v + c).collect(),
            },
        };
        Domain {
            shape,
            ring: self.ring.iter().map(|v| v + c).collect(),
            tol: self.tol,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn containment_examples() {
        let d = Domain::disk(p(0.0, 0.0), 2.0).unwrap();
        assert_eq!(d.contains(p(1.0, 0.0)), Containment::Interior);
        assert_eq!(d.contains(p(2.0, 0.0)), Containment::Boundary);
        let r = Domain::rectangle(p(0.0, 0.0), p(2.0 * PI, 2.0 * PI)).unwrap();
        assert_eq!(r.contains(p(7.0, 7.0)), Containment::Exterior);
    }

    #[test]
    fn signed_distance_examples() {
        let d = Domain::disk(p(0.0, 0.0), 2.0).unwrap();
        assert_eq!(d.signed_distance(p(3.0, 0.0)), 1.0);
        assert_eq!(d.signed_distance(p(0.0, 0.0)), -2.0);
        let r = Domain::rectangle(p(0.0, 0.0), p(1.0, 1.0)).unwrap();
        assert_eq!(r.signed_distance(p(0.5, 0.5)), -0.5);
        assert!((r.signed_distance(p(2.0, 2.0)) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn normal_examples() {
        let d = Domain::disk(p(0.0, 0.0), 2.0).unwrap();
        assert_eq!(d.outward_normal(p(2.0, 0.0)).unwrap(), Vec2::new(1.0, 0.0));
        assert_eq!(d.outward_normal(p(0.0, -2.0)).unwrap(), Vec2::new(0.0, -1.0));
        let r = Domain::rectangle(p(0.0, 0.0), p(1.0, 1.0)).unwrap();
        assert_eq!(r.outward_normal(p(0.5, 1.0)).unwrap(), Vec2::new(0.0, 1.0));
        assert!(matches!(
            r.outward_normal(p(1.0, 1.0)),
            Err(GeometryError::VertexAmbiguity(..))
        ));
        assert!(matches!(
            d.outward_normal(p(0.5, 0.0)),
            Err(GeometryError::NotOnBoundary(..))
        ));
    }

    #[test]
    fn polygon_validation() {
        let sq = vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)];
        assert!(Domain::convex_polygon(sq.clone()).unwrap().is_convex());
        let mut cw = sq.clone();
        cw.reverse();
        assert!(Domain::convex_polygon(cw).is_err());
        let concave = vec![p(0.0, 0.0), p(2.0, 0.0), p(1.0, 0.5), p(2.0, 2.0), p(0.0, 2.0)];
        assert!(Domain::convex_polygon(concave).is_err());
        // pentagram order winds twice
        let star: Vec<Point> = (0..5)
            .map(|k| {
                let t = 2.0 * PI * (2 * k) as f64 / 5.0;
                p(t.cos(), t.sin())
            })
            .collect();
        assert!(Domain::convex_polygon(star).is_err());
        assert!(Domain::disk(p(0.0, 0.0), 0.0).is_err());
        assert!(Domain::rectangle(p(1.0, 0.0), p(0.0, 1.0)).is_err());
    }

    #[test]
    fn polygon_distances_match_rectangle() {
        let r = Domain::rectangle(p(-1.0, -0.5), p(2.0, 1.5)).unwrap();
        let poly = Domain::convex_polygon(r.vertices().to_vec()).unwrap();
        for &(x, y) in &[(0.0, 0.0), (3.0, 2.0), (-1.0, 0.3), (1.9, 1.4), (0.5, -3.0)] {
            let a = r.signed_distance(p(x, y));
            let b = poly.signed_distance(p(x, y));
            assert!((a - b).abs() < 1e-14, "{a} vs {b} at ({x},{y})");
        }
        assert!((poly.area() - 6.0).abs() < 1e-14);
    }

    #[test]
    fn crossing_and_overlap() {
        let d = Domain::disk(p(0.0, 0.0), 1.0).unwrap();
        let t = d.crossing_fraction(p(0.5, 0.0), p(1.5, 0.0));
        assert!((t - 0.5).abs() < 1e-15);
        let r = Domain::rectangle(p(0.0, 0.0), p(1.0, 1.0)).unwrap();
        let t = r.crossing_fraction(p(0.75, 0.5), p(1.25, 0.5));
        assert!((t - 0.5).abs() < 1e-12);
        let (s0, s1) = d.segment_overlap(p(-2.0, 0.0), p(2.0, 0.0)).unwrap();
        assert!((s0 - 0.25).abs() < 1e-12 && (s1 - 0.75).abs() < 1e-12);
        assert!(d.segment_overlap(p(2.0, 2.0), p(3.0, 2.0)).is_none());
    }

    #[test]
    fn boundary_samples_lie_on_boundary() {
        let shapes = [
            Domain::disk(p(1.0, -1.0), 0.7).unwrap(),
            Domain::rectangle(p(0.0, 0.0), p(2.0, 1.0)).unwrap(),
            Domain::convex_polygon(vec![p(0.0, 0.0), p(2.0, 0.0), p(1.0, 1.5)]).unwrap(),
        ];
        for d in &shapes {
            let pts = d.boundary_samples(1024);
            assert_eq!(pts.len(), 1024);
            for x in pts {
                assert!(d.signed_distance(x).abs() < 1e-12);
            }
            assert!(d.perimeter() > 0.0);
        }
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"type":"disk","center":[0,0],"radius":2}"#;
        let spec: DomainSpec = serde_json::from_str(json).unwrap();
        let d = Domain::from_spec(&spec).unwrap();
        assert_eq!(d.as_disk(), Some((p(0.0, 0.0), 2.0)));
        assert!(serde_json::from_str::<DomainSpec>(
            r#"{"type":"disk","center":[0,0],"radius":2,"color":"red"}"#
        )
        .is_err());
    }
}
