//! Node values on a masked Cartesian lattice.
//!
//! Nodes outside the domain are `Exterior` and never enter reductions. A
//! ring of exterior nodes next to the domain may carry ghost values (sampled
//! from a closed form or extrapolated by a solver); stencils use them when
//! present and fall back to one-sided differences otherwise.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{FieldError, ScalarField};
use crate::geometry::{Containment, Domain, Point, Vec2};
use crate::lattice::Lattice;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Interior,
    /// Inside or on `∂D` with at least one exterior 4-neighbour.
    Cut,
    Exterior,
}

impl NodeKind {
    pub fn label(self) -> &'static str {
        match self {
            NodeKind::Interior => "interior",
            NodeKind::Cut => "cut",
            NodeKind::Exterior => "exterior",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "interior" => Some(NodeKind::Interior),
            "cut" => Some(NodeKind::Cut),
            "exterior" => Some(NodeKind::Exterior),
            _ => None,
        }
    }

    pub fn is_inside(self) -> bool {
        self != NodeKind::Exterior
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Solved { solver: String },
    SampledFromAnalytic { field: String },
    Loaded,
}

/// Masks for a domain on a lattice.
pub fn node_kinds(domain: &Domain, lattice: &Lattice) -> Vec<NodeKind> {
    let inside: Vec<Containment> = (0..lattice.len())
        .map(|k| {
            let (i, j) = lattice.coords(k);
            domain.contains(lattice.node(i, j))
        })
        .collect();
    (0..lattice.len())
        .map(|k| {
            let (i, j) = lattice.coords(k);
            match inside[k] {
                Containment::Exterior => NodeKind::Exterior,
                Containment::Boundary => NodeKind::Cut,
                Containment::Interior => {
                    let edge = lattice
                        .neighbours4(i, j)
                        .any(|(_, a, b)| inside[lattice.index(a, b)] == Containment::Exterior);
                    if edge || lattice.neighbours4(i, j).count() < 4 {
                        NodeKind::Cut
                    } else {
                        NodeKind::Interior
                    }
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct GridField {
    name: String,
    lattice: Lattice,
    domain: Domain,
    values: Vec<f64>,
    mask: Vec<NodeKind>,
    grad: Vec<Vec2>,
    lap: Vec<f64>,
    provenance: Provenance,
}

impl GridField {
    /// Lattice used for `n` nodes across the domain: one padding node per
    /// side so that the whole of `D̄` lies strictly within the lattice.
    pub fn lattice_for(domain: &Domain, n: usize) -> Result<Lattice, FieldError> {
        if n < 16 {
            return Err(FieldError::TooFewNodes(n));
        }
        let (lo, hi) = domain.bbox();
        let ext = hi - lo;
        if !(ext.x > 0.0 && ext.y > 0.0) || !ext.x.is_finite() || !ext.y.is_finite() {
            return Err(FieldError::DegenerateBox);
        }
        Ok(Lattice::covering(lo, hi, n, 1))
    }

    /// Wrap node values; exterior entries are kept as ghost values if finite.
    pub fn from_values(
        name: impl Into<String>,
        domain: Domain,
        lattice: Lattice,
        values: Vec<f64>,
        provenance: Provenance,
    ) -> Self {
        assert_eq!(values.len(), lattice.len(), "value count must match the lattice");
        let mask = node_kinds(&domain, &lattice);
        let (grad, lap) = nodal_derivatives(&lattice, &values);
        GridField {
            name: name.into(),
            lattice,
            domain,
            values,
            mask,
            grad,
            lap,
            provenance,
        }
    }

    /// Evaluate `field` at the domain nodes and at exterior nodes adjacent to
    /// them (ghost ring).
    pub fn sample(field: &dyn ScalarField, domain: &Domain, n: usize) -> Result<Self, FieldError> {
        let lattice = Self::lattice_for(domain, n)?;
        let mask = node_kinds(domain, &lattice);
        let values = (0..lattice.len())
            .map(|k| {
                let (i, j) = lattice.coords(k);
                let near = mask[k].is_inside()
                    || lattice
                        .neighbours8(i, j)
                        .any(|(a, b)| mask[lattice.index(a, b)].is_inside());
                if near {
                    field.value(lattice.node(i, j))
                } else {
                    f64::NAN
                }
            })
            .collect();
        Ok(Self::from_values(
            field.name(),
            domain.clone(),
            lattice,
            values,
            Provenance::SampledFromAnalytic { field: field.name() },
        ))
    }

    /// Same lattice and domain, new node values.
    pub fn with_values(&self, values: Vec<f64>, provenance: Provenance) -> Self {
        Self::from_values(self.name.clone(), self.domain.clone(), self.lattice, values, provenance)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[NodeKind] {
        &self.mask
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn node_value(&self, i: usize, j: usize) -> f64 {
        self.values[self.lattice.index(i, j)]
    }

    pub fn node_gradient(&self, i: usize, j: usize) -> Vec2 {
        self.grad[self.lattice.index(i, j)]
    }

    /// Indices of the nodes inside `D̄`.
    pub fn inside_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.lattice.len()).filter(|&k| self.mask[k].is_inside())
    }

    /// Minimum and maximum over the nodes inside `D̄`.
    pub fn range(&self) -> (f64, f64) {
        self.inside_nodes()
            .map(|k| self.values[k])
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    fn interpolate<T, F>(&self, x: Point, data: F) -> Option<T>
    where
        T: std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Copy,
        F: Fn(usize) -> Option<T>,
    {
        let (i, j, fx, fy) = self.lattice.locate(x)?;
        let corners = [
            (i, j, (1.0 - fx) * (1.0 - fy)),
            (i + 1, j, fx * (1.0 - fy)),
            (i, j + 1, (1.0 - fx) * fy),
            (i + 1, j + 1, fx * fy),
        ];
        let mut acc: Option<T> = None;
        let mut wsum = 0.0;
        for (a, b, w) in corners {
            if w == 0.0 {
                continue;
            }
            if let Some(v) = data(self.lattice.index(a, b)) {
                acc = Some(match acc {
                    None => v * w,
                    Some(s) => s + v * w,
                });
                wsum += w;
            }
        }
        if wsum < 1e-12 {
            // x sits on a node or edge whose weighted corners have no data;
            // fall back to the nearest node with data.
            let (a, b) = self.lattice.nearest(x);
            return data(self.lattice.index(a, b));
        }
        acc.map(|s| s * (1.0 / wsum))
    }

    /// Write the grid as CSV with columns `x, y, mask, value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), FieldError> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| FieldError::Csv(e.to_string());
        w.write_record(["x", "y", "mask", "value"]).map_err(err)?;
        for k in 0..self.lattice.len() {
            let (i, j) = self.lattice.coords(k);
            let p = self.lattice.node(i, j);
            w.write_record([
                format!("{:.16e}", p.x),
                format!("{:.16e}", p.y),
                self.mask[k].label().to_string(),
                format_value(self.values[k]),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| FieldError::Csv(e.to_string()))
    }

    /// Read a grid written by [`GridField::write_csv`] for `domain`.
    pub fn read_csv<R: Read>(input: R, domain: Domain) -> Result<Self, FieldError> {
        let mut rd = csv::Reader::from_reader(input);
        let bad = |m: String| FieldError::Csv(m);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut kinds = Vec::new();
        let mut values = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            if rec.len() != 4 {
                return Err(bad(format!("expected 4 columns, got {}", rec.len())));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("'{s}': {e}")));
            xs.push(num(&rec[0])?);
            ys.push(num(&rec[1])?);
            kinds.push(NodeKind::parse(rec[2].trim()).ok_or_else(|| bad(format!("unknown mask '{}'", &rec[2])))?);
            values.push(num(&rec[3])?);
        }
        if xs.is_empty() {
            return Err(bad("no rows".into()));
        }
        let nx = ys.iter().take_while(|y| **y == ys[0]).count();
        if nx < 2 || xs.len() % nx != 0 {
            return Err(bad("rows do not form a lattice".into()));
        }
        let ny = xs.len() / nx;
        let h = (xs[nx - 1] - xs[0]) / (nx - 1) as f64;
        let lattice = Lattice {
            lo: [xs[0], ys[0]],
            h,
            nx,
            ny,
        };
        let field = Self::from_values("loaded", domain, lattice, values, Provenance::Loaded);
        if field.mask != kinds {
            return Err(bad("mask column disagrees with the domain".into()));
        }
        Ok(field)
    }
}

fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.16e}")
    }
}

fn finite(values: &[f64], lattice: &Lattice, i: isize, j: isize) -> Option<f64> {
    if i < 0 || j < 0 || i as usize >= lattice.nx || j as usize >= lattice.ny {
        return None;
    }
    let v = values[lattice.index(i as usize, j as usize)];
    v.is_finite().then_some(v)
}

/// First and second derivative along one axis at a node: central where both
/// neighbours carry data, otherwise one-sided.
fn axis_derivatives(values: &[f64], lattice: &Lattice, i: usize, j: usize, axis: usize) -> (f64, f64) {
    let h = lattice.h;
    let at = |s: isize| {
        let (di, dj) = if axis == 0 { (s, 0) } else { (0, s) };
        finite(values, lattice, i as isize + di, j as isize + dj)
    };
    let u0 = values[lattice.index(i, j)];
    match (at(-2), at(-1), at(1), at(2)) {
        (_, Some(m), Some(p), _) => ((p - m) / (2.0 * h), (p - 2.0 * u0 + m) / (h * h)),
        (_, _, Some(p1), Some(p2)) => ((-3.0 * u0 + 4.0 * p1 - p2) / (2.0 * h), (u0 - 2.0 * p1 + p2) / (h * h)),
        (Some(m2), Some(m1), _, _) => ((3.0 * u0 - 4.0 * m1 + m2) / (2.0 * h), (u0 - 2.0 * m1 + m2) / (h * h)),
        (_, _, Some(p), None) => ((p - u0) / h, f64::NAN),
        (_, Some(m), None, _) => ((u0 - m) / h, f64::NAN),
        _ => (f64::NAN, f64::NAN),
    }
}

fn nodal_derivatives(lattice: &Lattice, values: &[f64]) -> (Vec<Vec2>, Vec<f64>) {
    let mut grad = vec![Vec2::new(f64::NAN, f64::NAN); lattice.len()];
    let mut lap = vec![f64::NAN; lattice.len()];
    for k in 0..lattice.len() {
        if !values[k].is_finite() {
            continue;
        }
        let (i, j) = lattice.coords(k);
        let (gx, lxx) = axis_derivatives(values, lattice, i, j, 0);
        let (gy, lyy) = axis_derivatives(values, lattice, i, j, 1);
        grad[k] = Vec2::new(gx, gy);
        lap[k] = lxx + lyy;
    }
    (grad, lap)
}

impl ScalarField for GridField {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn value(&self, x: Point) -> f64 {
        self.interpolate(x, |k| {
            let v = self.values[k];
            v.is_finite().then_some(v)
        })
        .unwrap_or(f64::NAN)
    }

    fn gradient(&self, x: Point) -> Vec2 {
        self.interpolate(x, |k| {
            let g = self.grad[k];
            (g.x.is_finite() && g.y.is_finite()).then_some(g)
        })
        .unwrap_or(Vec2::new(f64::NAN, f64::NAN))
    }

    fn laplacian(&self, x: Point) -> f64 {
        self.interpolate(x, |k| {
            let v = self.lap[k];
            v.is_finite().then_some(v)
        })
        .unwrap_or(f64::NAN)
    }

    fn fd_step(&self) -> f64 {
        0.5 * self.lattice.h
    }

    fn is_analytic(&self) -> bool {
        false
    }

    fn spacing(&self) -> Option<f64> {
        Some(self.lattice.h)
    }

    fn as_grid(&self) -> Option<&GridField> {
        Some(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::field_catalog;
    use serde_json::json;
    use std::f64::consts::PI;

    #[test]
    fn sample_examples() {
        let disk = Domain::disk(Point::zeros(), 1.0).unwrap();
        let u = field_catalog().build("example1", &json!({})).unwrap();
        let g = GridField::sample(u.as_ref(), &disk, 64).unwrap();
        let (i, j) = g.lattice().nearest(Point::new(1.0, 0.0));
        assert!((g.node_value(i, j) - 0.25).abs() < g.lattice().h);

        let one = field_catalog().build("constant", &json!({"c": 1.0})).unwrap();
        let g1 = GridField::sample(one.as_ref(), &disk, 64).unwrap();
        assert!(g1.inside_nodes().all(|k| g1.values()[k] == 1.0));

        let sq = Domain::rectangle(Point::zeros(), Point::new(2.0 * PI, 2.0 * PI)).unwrap();
        let cc = field_catalog().build("coscos", &json!({})).unwrap();
        let gc = GridField::sample(cc.as_ref(), &sq, 64).unwrap();
        let (i, j) = gc.lattice().nearest(Point::new(PI, PI));
        let h = gc.lattice().h;
        assert!((gc.node_value(i, j) - 1.0).abs() < h * h);
        assert!(matches!(GridField::sample(cc.as_ref(), &sq, 8), Err(FieldError::TooFewNodes(8))));
    }

    #[test]
    fn mask_agrees_with_domain() {
        let disk = Domain::disk(Point::new(0.3, -0.2), 1.3).unwrap();
        let lat = GridField::lattice_for(&disk, 40).unwrap();
        let mask = node_kinds(&disk, &lat);
        for k in 0..lat.len() {
            let (i, j) = lat.coords(k);
            let c = disk.contains(lat.node(i, j));
            assert_eq!(mask[k] == NodeKind::Exterior, c == Containment::Exterior);
        }
    }

    #[test]
    fn grid_derivatives_second_order_inside() {
        let sq = Domain::rectangle(Point::zeros(), Point::new(2.0 * PI, 2.0 * PI)).unwrap();
        let cc = field_catalog().build("coscos", &json!({})).unwrap();
        let err = |n| {
            let g = GridField::sample(cc.as_ref(), &sq, n).unwrap();
            let (i, j) = g.lattice().nearest(Point::new(2.0, 2.5));
            let x = g.lattice().node(i, j);
            (g.gradient(x) - cc.gradient(x)).norm()
        };
        let order = (err(64) / err(128)).log2();
        assert!(order > 1.8, "order {order}");
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let disk = Domain::disk(Point::zeros(), 1.0).unwrap();
        let u = field_catalog().build("example1", &json!({})).unwrap();
        let g = GridField::sample(u.as_ref(), &disk, 20).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let back = GridField::read_csv(buf.as_slice(), disk).unwrap();
        assert_eq!(back.lattice().nx, g.lattice().nx);
        for (a, b) in g.values().iter().zip(back.values()) {
            assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
        assert_eq!(back.mask(), g.mask());
    }
}
