//! Quadrature: adaptive Gauss–Kronrod in 1-D, embedded-boundary cell
//! quadrature over regions cut out by level functions, and line integrals
//! along polylines.
//!
//! All reductions go through [`pairwise_sum`] over contributions collected in
//! a fixed order, so results do not depend on the number of worker threads.

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{Domain, Point, Vec2};
use crate::lattice::Lattice;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("adaptive quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    NoConvergence { tol: f64, estimate: f64 },
    #[error("integrand is not finite at {0}")]
    NonFinite(f64),
    #[error("polyline needs at least 2 vertices, got {0}")]
    ShortPolyline(usize),
}

/// Sum in a fixed binary tree; deterministic for a given slice order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n if n <= 8 => xs.iter().fold(0.0, |a, b| a + b),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64), QuadratureError> {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(QuadratureError::NonFinite(c));
    }
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let x1 = c - hw * XGK[k];
        let x2 = c + hw * XGK[k];
        let (f1, f2) = (f(x1), f(x2));
        if !f1.is_finite() {
            return Err(QuadratureError::NonFinite(x1));
        }
        if !f2.is_finite() {
            return Err(QuadratureError::NonFinite(x2));
        }
        kron += WGK[k] * (f1 + f2);
        if k % 2 == 1 {
            gauss += WG[k / 2] * (f1 + f2);
        }
    }
    Ok((kron * hw, ((kron - gauss) * hw).abs()))
}

/// Adaptive G7–K15 quadrature of `f` over `[a, b]` to the absolute tolerance
/// `tol` (also accepting a relative error of `tol` on the result).
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    const MAX_PANELS: usize = 4000;
    let mut panels = vec![(a, b, gk15(&f, a, b)?)];
    loop {
        let total: Vec<f64> = panels.iter().map(|p| p.2 .0).collect();
        let err: Vec<f64> = panels.iter().map(|p| p.2 .1).collect();
        let value = pairwise_sum(&total);
        let estimate = pairwise_sum(&err);
        if estimate <= tol.max(tol * value.abs()) {
            return Ok(value);
        }
        if panels.len() >= MAX_PANELS {
            return Err(QuadratureError::NoConvergence { tol, estimate });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.2 .1 > acc.1 { (i, p.2 .1) } else { acc });
        let (pa, pb, _) = panels[worst];
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            return Err(QuadratureError::NoConvergence { tol, estimate });
        }
        panels[worst] = (pa, mid, gk15(&f, pa, mid)?);
        panels.insert(worst + 1, (mid, pb, gk15(&f, mid, pb)?));
    }
}

/// `2π ∫_a^b φ(r) r dr`: the integral of a radial function over an annulus.
pub fn integrate_annulus<F: Fn(f64) -> f64>(phi: F, a: f64, b: f64, tol: f64) -> Result<f64, QuadratureError> {
    let v = integrate_1d(|r| phi(r) * r, a, b, tol / (2.0 * std::f64::consts::PI))?;
    Ok(2.0 * std::f64::consts::PI * v)
}

/// One side of a region: the set where `phi < 0`.
pub trait Constraint: Sync {
    fn phi(&self, x: Point) -> f64;

    fn grad(&self, x: Point) -> Vec2 {
        let e = self.fd_step();
        Vec2::new(
            (self.phi(x + Vec2::new(e, 0.0)) - self.phi(x - Vec2::new(e, 0.0))) / (2.0 * e),
            (self.phi(x + Vec2::new(0.0, e)) - self.phi(x - Vec2::new(0.0, e))) / (2.0 * e),
        )
    }

    fn fd_step(&self) -> f64 {
        1e-7
    }
}

pub struct DomainConstraint<'a>(pub &'a Domain);

impl Constraint for DomainConstraint<'_> {
    fn phi(&self, x: Point) -> f64 {
        self.0.signed_distance(x)
    }
    fn fd_step(&self) -> f64 {
        1e-7 * self.0.diameter()
    }
}

/// Open ball `|x − p| < δ`.
pub struct BallConstraint {
    pub center: Point,
    pub radius: f64,
}

impl Constraint for BallConstraint {
    fn phi(&self, x: Point) -> f64 {
        (x - self.center).norm() - self.radius
    }
    fn grad(&self, x: Point) -> Vec2 {
        let d = x - self.center;
        let n = d.norm();
        if n == 0.0 {
            Vec2::zeros()
        } else {
            d / n
        }
    }
}

/// Constraint from a closure, with a finite-difference gradient.
pub struct FnConstraint<F> {
    pub phi: F,
    pub step: f64,
}

impl<F: Fn(Point) -> f64 + Sync> Constraint for FnConstraint<F> {
    fn phi(&self, x: Point) -> f64 {
        (self.phi)(x)
    }
    fn fd_step(&self) -> f64 {
        self.step
    }
}

/// Intersection of constraint sets, integrated on a lattice of cells.
pub struct Region<'a> {
    pub constraints: Vec<Box<dyn Constraint + 'a>>,
}

impl<'a> Region<'a> {
    pub fn new() -> Self {
        Region {
            constraints: Vec::new(),
        }
    }

    pub fn domain(domain: &'a Domain) -> Self {
        Region::new().with(DomainConstraint(domain))
    }

    pub fn with<C: Constraint + 'a>(mut self, c: C) -> Self {
        self.constraints.push(Box::new(c));
        self
    }

    pub fn contains(&self, x: Point) -> bool {
        self.constraints.iter().all(|c| c.phi(x) < 0.0)
    }
}

impl Default for Region<'_> {
    fn default() -> Self {
        Region::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralResult {
    pub value: f64,
    /// Measure of the region as seen by the quadrature.
    pub area: f64,
    pub cut_cells: usize,
    /// Set when the region has zero measure on this lattice.
    pub empty: bool,
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum CellClass {
    Full,
    Empty,
    Cut,
}

// Five samples (centre and corners) plus a Lipschitz bound from the centre
// gradient decide whether a square of half-diagonal `rho` is inside, outside
// or cut by one constraint.
fn classify_square(c: &dyn Constraint, center: Point, half: f64) -> CellClass {
    let phi_c = c.phi(center);
    let corners = [
        Vec2::new(-half, -half),
        Vec2::new(half, -half),
        Vec2::new(half, half),
        Vec2::new(-half, half),
    ];
    let mut neg = (phi_c < 0.0) as usize;
    for d in &corners {
        if c.phi(center + d) < 0.0 {
            neg += 1;
        }
    }
    if neg != 0 && neg != 5 {
        return CellClass::Cut;
    }
    let reach = c.grad(center).norm() * half * std::f64::consts::SQRT_2;
    if neg == 5 && phi_c + reach < 0.0 {
        CellClass::Full
    } else if neg == 0 && phi_c - reach > 0.0 {
        CellClass::Empty
    } else {
        CellClass::Cut
    }
}

fn clip_half_plane(poly: &[Point], c: Point, value: f64, grad: Vec2) -> Vec<Point> {
    let phi = |x: &Point| value + grad.dot(&(x - c));
    let mut out = Vec::with_capacity(poly.len() + 2);
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        let (pa, pb) = (phi(&a), phi(&b));
        if pa < 0.0 {
            out.push(a);
        }
        if (pa < 0.0) != (pb < 0.0) {
            let t = pa / (pa - pb);
            out.push(a + t * (b - a));
        }
    }
    out
}

fn polygon_area_centroid(poly: &[Point]) -> (f64, Point) {
    if poly.len() < 3 {
        return (0.0, Point::zeros());
    }
    let o = poly[0];
    let mut area = 0.0;
    let mut cx = Vec2::zeros();
    for k in 1..poly.len() - 1 {
        let a = poly[k] - o;
        let b = poly[k + 1] - o;
        let w = 0.5 * (a.x * b.y - a.y * b.x);
        area += w;
        cx += w * (a + b) / 3.0;
    }
    if area.abs() < 1e-300 {
        return (0.0, o);
    }
    (area, o + cx / area)
}

const SUB: usize = 4;

fn integrate_square<F: Fn(Point) -> f64>(region: &Region<'_>, f: &F, center: Point, h: f64, depth: usize) -> (f64, f64, bool) {
    let half = 0.5 * h;
    let mut cut = false;
    for c in &region.constraints {
        match classify_square(c.as_ref(), center, half) {
            CellClass::Empty => return (0.0, 0.0, false),
            CellClass::Cut => cut = true,
            CellClass::Full => {}
        }
    }
    if !cut {
        return (h * h * f(center), h * h, false);
    }
    if depth == 0 {
        let hs = h / SUB as f64;
        let mut vals = [0.0; SUB * SUB];
        let mut areas = [0.0; SUB * SUB];
        for b in 0..SUB {
            for a in 0..SUB {
                let sc = center
                    + Vec2::new(
                        (a as f64 + 0.5) * hs - half,
                        (b as f64 + 0.5) * hs - half,
                    );
                let (v, ar, _) = integrate_square(region, f, sc, hs, depth + 1);
                vals[b * SUB + a] = v;
                areas[b * SUB + a] = ar;
            }
        }
        return (pairwise_sum(&vals), pairwise_sum(&areas), true);
    }
    // sub-cell: clip against the linearized constraints
    let mut poly = vec![
        center + Vec2::new(-half, -half),
        center + Vec2::new(half, -half),
        center + Vec2::new(half, half),
        center + Vec2::new(-half, half),
    ];
    for c in &region.constraints {
        let v = c.phi(center);
        let g = c.grad(center);
        if g.norm() == 0.0 || !g.norm().is_finite() {
            if v >= 0.0 {
                return (0.0, 0.0, true);
            }
            continue;
        }
        poly = clip_half_plane(&poly, center, v, g);
        if poly.len() < 3 {
            return (0.0, 0.0, true);
        }
    }
    let (area, centroid) = polygon_area_centroid(&poly);
    if area <= 0.0 {
        return (0.0, 0.0, true);
    }
    (area * f(centroid), area, true)
}

/// Integrate `f` over `region` using the cells of `lattice`: midpoint rule on
/// full cells, 4×4 sub-cells clipped against linearized constraints on cut
/// cells.
pub fn integrate_region<F>(region: &Region<'_>, lattice: &Lattice, f: F) -> IntegralResult
where
    F: Fn(Point) -> f64 + Sync,
{
    let cells_x = lattice.nx - 1;
    let cells_y = lattice.ny - 1;
    let h = lattice.h;
    let contrib: Vec<(f64, f64, bool)> = (0..cells_x * cells_y)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % cells_x, k / cells_x);
            let center = lattice.node(i, j) + Vec2::new(0.5 * h, 0.5 * h);
            integrate_square(region, &f, center, h, 0)
        })
        .collect();
    let values: Vec<f64> = contrib.iter().map(|c| c.0).collect();
    let areas: Vec<f64> = contrib.iter().map(|c| c.1).collect();
    let area = pairwise_sum(&areas);
    let result = IntegralResult {
        value: pairwise_sum(&values),
        area,
        cut_cells: contrib.iter().filter(|c| c.2).count(),
        empty: area == 0.0,
    };
    if result.empty {
        log::warn!("integration region is empty on a {}x{} lattice", lattice.nx, lattice.ny);
    }
    result
}

/// Integrate over a domain with `n` nodes along the longer side of its bbox.
pub fn integrate_domain<F>(domain: &Domain, n: usize, f: F) -> IntegralResult
where
    F: Fn(Point) -> f64 + Sync,
{
    let lattice = Lattice::for_domain(domain, n, 0);
    integrate_region(&Region::domain(domain), &lattice, f)
}

/// Which side of the direction of travel the normal points to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Normal `(t_y, −t_x)`: outward for counter-clockwise loops.
    Ccw,
    /// Normal `(−t_y, t_x)`.
    Cw,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polyline {
    pub points: Vec<Point>,
    pub closed: bool,
}

impl Polyline {
    pub fn open(points: Vec<Point>) -> Self {
        Polyline {
            points,
            closed: false,
        }
    }

    pub fn closed(points: Vec<Point>) -> Self {
        Polyline {
            points,
            closed: true,
        }
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| (b - a).norm()).sum()
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.points.len();
        let count = if self.closed && n > 2 { n } else { n.saturating_sub(1) };
        (0..count).map(move |k| (self.points[k], self.points[(k + 1) % n]))
    }

    /// Unit normals at the vertices from central tangents.
    pub fn vertex_normals(&self, orientation: Orientation) -> Vec<Vec2> {
        let n = self.points.len();
        (0..n)
            .map(|k| {
                let (prev, next) = if self.closed && n > 2 {
                    (self.points[(k + n - 1) % n], self.points[(k + 1) % n])
                } else {
                    (self.points[k.saturating_sub(1)], self.points[(k + 1).min(n - 1)])
                };
                let t = next - prev;
                let t = if t.norm() > 0.0 { t.normalize() } else { t };
                match orientation {
                    Orientation::Ccw => Vec2::new(t.y, -t.x),
                    Orientation::Cw => Vec2::new(-t.y, t.x),
                }
            })
            .collect()
    }
}

/// Trapezoid rule of `integrand(x, n)` along a polyline, with vertex normals
/// taken from the polyline itself.
pub fn line_integral<F>(poly: &Polyline, orientation: Orientation, integrand: F) -> Result<f64, QuadratureError>
where
    F: Fn(Point, Vec2) -> f64,
{
    if poly.points.len() < 2 {
        return Err(QuadratureError::ShortPolyline(poly.points.len()));
    }
    let normals = poly.vertex_normals(orientation);
    line_integral_with_normals(poly, &normals, integrand)
}

/// Trapezoid rule with caller-supplied vertex normals.
pub fn line_integral_with_normals<F>(poly: &Polyline, normals: &[Vec2], integrand: F) -> Result<f64, QuadratureError>
where
    F: Fn(Point, Vec2) -> f64,
{
    let n = poly.points.len();
    if n < 2 {
        return Err(QuadratureError::ShortPolyline(n));
    }
    let vals: Vec<f64> = (0..n).map(|k| integrand(poly.points[k], normals[k])).collect();
    let count = if poly.closed && n > 2 { n } else { n - 1 };
    let terms: Vec<f64> = (0..count)
        .map(|k| {
            let k1 = (k + 1) % n;
            0.5 * (vals[k] + vals[k1]) * (poly.points[k1] - poly.points[k]).norm()
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Radical inverse of `index` in `base` (Halton coordinate).
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_kronrod_polynomials_and_smooth() {
        let v = integrate_1d(|x| x.powi(7) - 6.0 * x.powi(6), 0.0, 1.0, 1e-13).unwrap();
        assert!((v - (1.0 / 8.0 - 6.0 / 7.0)).abs() < 1e-14);
        let v = integrate_1d(|x| x.sin(), 0.0, PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let v = integrate_1d(|x| x.sqrt(), 0.0, 1.0, 1e-11).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-10);
        assert!(integrate_1d(|x| 1.0 / x, 0.0, 1.0, 1e-10).is_err());
    }

    #[test]
    fn annulus_area() {
        let v = integrate_annulus(|_| 1.0, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - PI).abs() < 1e-13);
    }

    #[test]
    fn pairwise_is_order_fixed() {
        let xs: Vec<f64> = (0..1000).map(|k| (k as f64 * 0.37).sin()).collect();
        assert_eq!(pairwise_sum(&xs), pairwise_sum(&xs.clone()));
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-12);
    }

    #[test]
    fn unit_disk_area() {
        let d = Domain::disk(Point::zeros(), 1.0).unwrap();
        let r = integrate_domain(&d, 256, |_| 1.0);
        assert!((r.value - PI).abs() < 1e-3, "{}", r.value);
        assert!(!r.empty);
    }

    #[test]
    fn empty_region_is_flagged() {
        let d = Domain::disk(Point::zeros(), 1.0).unwrap();
        let lattice = Lattice::for_domain(&d, 32, 0);
        let region = Region::domain(&d).with(BallConstraint {
            center: Point::new(5.0, 5.0),
            radius: 0.5,
        });
        let r = integrate_region(&region, &lattice, |_| 1.0);
        assert_eq!(r.value, 0.0);
        assert!(r.empty);
    }

    #[test]
    fn clip_square() {
        let sq = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let clipped = clip_half_plane(&sq, Point::new(0.5, 0.5), 0.0, Vec2::new(1.0, 1.0));
        let (a, c) = polygon_area_centroid(&clipped);
        assert!((a - 0.5).abs() < 1e-15);
        assert!((c - Point::new(1.0 / 3.0, 1.0 / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn circle_line_integrals() {
        let pts: Vec<Point> = (0..256)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 256.0;
                Point::new(t.cos(), t.sin())
            })
            .collect();
        let poly = Polyline::closed(pts);
        let len = line_integral(&poly, Orientation::Ccw, |_, _| 1.0).unwrap();
        assert!((len - 2.0 * PI).abs() < 1e-3);
        // ∮ x·n = 2·area for the outward normal
        let flux = line_integral(&poly, Orientation::Ccw, |x, n| x.dot(&n)).unwrap();
        assert!((flux - 2.0 * PI).abs() < 1e-3);
        assert!(line_integral(&Polyline::open(vec![Point::zeros()]), Orientation::Ccw, |_, _| 1.0).is_err());
    }

    #[test]
    fn halton_first_values() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(1, 3) - 1.0 / 3.0).abs() < 1e-16);
    }
}
