//! Sparse symmetric systems: CSR storage and conjugate gradients.

use rayon::prelude::*;

use crate::quadrature::pairwise_sum;

#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    /// Assemble from per-row `(col, value)` lists; duplicates are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_start = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if cols.len() > *row_start.last().unwrap() && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_start.push(cols.len());
        }
        Csr {
            n,
            row_start,
            cols,
            vals,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_start[i]..self.row_start[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).find(|e| e.0 == i).map_or(0.0, |e| e.1))
            .collect()
    }

    /// `self − diag(d)`.
    pub fn minus_diagonal(&self, d: &[f64]) -> Csr {
        let mut out = self.clone();
        for (i, di) in d.iter().enumerate() {
            let mut found = false;
            for k in out.row_start[i]..out.row_start[i + 1] {
                if out.cols[k] == i {
                    out.vals[k] -= di;
                    found = true;
                }
            }
            assert!(found, "missing diagonal entry in row {i}");
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| self.row(i).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| {
            self.row(i).all(|(c, v)| {
                let t = self.row(c).find(|e| e.0 == i).map_or(0.0, |e| e.1);
                (v - t).abs() <= tol * (1.0 + v.abs())
            })
        })
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    pairwise_sum(&prods)
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearMode {
    Cg,
    NormalEquations,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CgOutcome {
    Converged { iterations: usize, mode: LinearMode },
    /// Non-positive curvature met; the system is not positive definite.
    Indefinite { iteration: usize },
    Stalled { iterations: usize, residual: f64 },
}

/// Projection onto the complement of a null vector `z` (unit length).
pub struct NullSpace<'a>(pub &'a [f64]);

impl NullSpace<'_> {
    fn project(&self, v: &mut [f64]) {
        let c = dot(v, self.0);
        for (vi, zi) in v.iter_mut().zip(self.0) {
            *vi -= c * zi;
        }
    }
}

/// Jacobi-preconditioned conjugate gradients for `A x = b` from `x = 0`.
pub fn pcg(a: &Csr, b: &[f64], tol: f64, max_iter: usize, null: Option<&NullSpace>) -> (Vec<f64>, CgOutcome) {
    let n = a.n;
    let diag = a.diagonal();
    let minv: Vec<f64> = diag
        .iter()
        .map(|d| if d.abs() > 0.0 { 1.0 / d.abs() } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    if let Some(z) = null {
        z.project(&mut r);
    }
    let bnorm = norm2(&r).max(1e-300);
    let precond = |r: &[f64]| -> Vec<f64> {
        let mut z: Vec<f64> = r.iter().zip(&minv).map(|(a, b)| a * b).collect();
        if let Some(ns) = null {
            ns.project(&mut z);
        }
        z
    };
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 0..max_iter {
        if norm2(&r) <= tol * bnorm {
            return (
                x,
                CgOutcome::Converged {
                    iterations: it,
                    mode: LinearMode::Cg,
                },
            );
        }
        let ap = a.matvec(&p);
        let curv = dot(&p, &ap);
        if curv <= 0.0 {
            return (x, CgOutcome::Indefinite { iteration: it });
        }
        let alpha = rz / curv;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if let Some(ns) = null {
            ns.project(&mut r);
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = norm2(&r) / bnorm;
    if res <= tol {
        (
            x,
            CgOutcome::Converged {
                iterations: max_iter,
                mode: LinearMode::Cg,
            },
        )
    } else {
        (
            x,
            CgOutcome::Stalled {
                iterations: max_iter,
                residual: res,
            },
        )
    }
}

/// CG on `AᵀA x = Aᵀb` for symmetric indefinite `A`.
pub fn cg_normal(a: &Csr, b: &[f64], tol: f64, max_iter: usize, null: Option<&NullSpace>) -> (Vec<f64>, CgOutcome) {
    let n = a.n;
    let mut rhs = b.to_vec();
    if let Some(ns) = null {
        ns.project(&mut rhs);
    }
    let bnorm = norm2(&rhs).max(1e-300);
    let mut x = vec![0.0; n];
    // residual of the original system
    let mut r = rhs.clone();
    let mut s = a.matvec(&r);
    if let Some(ns) = null {
        ns.project(&mut s);
    }
    let mut p = s.clone();
    let mut gamma = dot(&s, &s);
    for it in 0..max_iter {
        if norm2(&r) <= tol * bnorm {
            return (
                x,
                CgOutcome::Converged {
                    iterations: it,
                    mode: LinearMode::NormalEquations,
                },
            );
        }
        let q = a.matvec(&p);
        let qq = dot(&q, &q);
        if qq <= 0.0 {
            break;
        }
        let alpha = gamma / qq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        s = a.matvec(&r);
        if let Some(ns) = null {
            ns.project(&mut s);
        }
        let g_new = dot(&s, &s);
        let beta = g_new / gamma;
        gamma = g_new;
        for i in 0..n {
            p[i] = s[i] + beta * p[i];
        }
    }
    let res = norm2(&r) / bnorm;
    (
        x,
        CgOutcome::Stalled {
            iterations: max_iter,
            residual: res,
        },
    )
}
