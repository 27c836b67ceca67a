//! Uniform Cartesian node lattice shared by grid fields, quadrature and
//! contouring.

use serde::{Deserialize, Serialize};

use crate::geometry::{Domain, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub lo: [f64; 2],
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Lattice {
    /// Lattice covering `[lo, hi]` with `n` nodes along the longer side,
    /// extended by `pad` extra nodes on every side.
    pub fn covering(lo: Point, hi: Point, n: usize, pad: usize) -> Lattice {
        let ext = hi - lo;
        let h = ext.x.max(ext.y) / (n - 1) as f64;
        let count = |e: f64| ((e / h) - 1e-9).ceil().max(0.0) as usize + 1;
        let nx = count(ext.x) + 2 * pad;
        let ny = count(ext.y) + 2 * pad;
        Lattice {
            lo: [lo.x - pad as f64 * h, lo.y - pad as f64 * h],
            h,
            nx,
            ny,
        }
    }

    pub fn for_domain(domain: &Domain, n: usize, pad: usize) -> Lattice {
        let (lo, hi) = domain.bbox();
        Lattice::covering(lo, hi, n, pad)
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.lo[0] + i as f64 * self.h,
            self.lo[1] + j as f64 * self.h,
        )
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hi(&self) -> Point {
        self.node(self.nx - 1, self.ny - 1)
    }

    /// Cell `(i, j)` containing `x` and local coordinates in `[0, 1]²`,
    /// or `None` outside the lattice.
    pub fn locate(&self, x: Point) -> Option<(usize, usize, f64, f64)> {
        let fx = (x.x - self.lo[0]) / self.h;
        let fy = (x.y - self.lo[1]) / self.h;
        let eps = 1e-9;
        if fx < -eps || fy < -eps || fx > (self.nx - 1) as f64 + eps || fy > (self.ny - 1) as f64 + eps
        {
            return None;
        }
        let i = (fx.floor().max(0.0) as usize).min(self.nx - 2);
        let j = (fy.floor().max(0.0) as usize).min(self.ny - 2);
        Some((
            i,
            j,
            (fx - i as f64).clamp(0.0, 1.0),
            (fy - j as f64).clamp(0.0, 1.0),
        ))
    }

    /// Nearest node indices (clamped to the lattice).
    pub fn nearest(&self, x: Point) -> (usize, usize) {
        let fx = ((x.x - self.lo[0]) / self.h).round();
        let fy = ((x.y - self.lo[1]) / self.h).round();
        (
            fx.clamp(0.0, (self.nx - 1) as f64) as usize,
            fy.clamp(0.0, (self.ny - 1) as f64) as usize,
        )
    }

    /// The 4-neighbours of a node that exist on the lattice, as
    /// `(direction, i, j)` with directions east, west, north, south.
    pub fn neighbours4(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        const D: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        D.iter().enumerate().filter_map(move |(k, &(di, dj))| {
            let ii = i as isize + di;
            let jj = j as isize + dj;
            (ii >= 0 && jj >= 0 && (ii as usize) < self.nx && (jj as usize) < self.ny)
                .then_some((k, ii as usize, jj as usize))
        })
    }

    pub fn neighbours8(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        (-1isize..=1).flat_map(move |dj| {
            (-1isize..=1).filter_map(move |di| {
                if di == 0 && dj == 0 {
                    return None;
                }
                let ii = i as isize + di;
                let jj = j as isize + dj;
                (ii >= 0 && jj >= 0 && (ii as usize) < self.nx && (jj as usize) < self.ny)
                    .then_some((ii as usize, jj as usize))
            })
        })
    }
}
