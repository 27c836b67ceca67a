//! Reading off `f` from a radial profile: on each monotone branch of `φ`,
//! `f(φ(r)) = −(φ″ + φ′/r)`. Branches that reach the same `u` with different
//! `−Δu` mean no autonomous `f` exists on the range.

use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use super::{centered_fprime, NonlinearLaw, NonlinearityError, Tabulated};
use crate::field::RadialProfileFn;
use crate::quadrature::integrate_1d;

/// Absolute tolerance on `f` values when comparing branches.
pub const CONFLICT_TOL: f64 = 1e-8;

const SCAN: usize = 4096;
const TABLE: usize = 2049;

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Branch {
    pub r_lo: f64,
    pub r_hi: f64,
    pub u_lo: f64,
    pub u_hi: f64,
    pub increasing: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BranchConflict {
    pub u: f64,
    /// `(r, −Δu(r))` for every branch attaining `u`.
    pub values: Vec<(f64, f64)>,
    pub spread: f64,
}

/// `f` on one monotone branch, evaluated through the exact profile.
#[derive(Clone)]
pub struct RecoveredLaw {
    profile: Arc<dyn RadialProfileFn>,
    branch: Branch,
    r_base: f64,
}

impl std::fmt::Debug for RecoveredLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RecoveredLaw")
            .field("profile", &self.profile.describe())
            .field("branch", &self.branch)
            .finish()
    }
}

impl RecoveredLaw {
    pub fn new(profile: Arc<dyn RadialProfileFn>, branch: Branch) -> Self {
        let base = if branch.u_lo <= 0.0 && 0.0 <= branch.u_hi { 0.0 } else { branch.u_lo };
        let mut law = RecoveredLaw {
            profile,
            branch,
            r_base: 0.0,
        };
        law.r_base = law.radius_of(base);
        law
    }

    pub fn branch(&self) -> &Branch {
        &self.branch
    }

    /// The radius on this branch where the profile takes the value `u`.
    pub fn radius_of(&self, u: f64) -> f64 {
        let b = &self.branch;
        let (mut lo, mut hi) = (b.r_lo, b.r_hi);
        // g > 0 means the radius is past the target.
        let g = |r: f64| {
            let d = self.profile.u(r) - u;
            if b.increasing {
                d
            } else {
                -d
            }
        };
        if g(lo) >= 0.0 {
            return lo;
        }
        if g(hi) <= 0.0 {
            return hi;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let (gl, gh) = (g(lo).abs(), g(hi).abs());
        if gl <= gh {
            lo
        } else {
            hi
        }
    }
}

impl NonlinearLaw for RecoveredLaw {
    fn family(&self) -> &'static str {
        "recovered"
    }
    fn params(&self) -> Value {
        json!({
            "family": "recovered",
            "profile": self.profile.describe(),
            "r_range": [self.branch.r_lo, self.branch.r_hi],
        })
    }
    fn domain(&self) -> (f64, f64) {
        (self.branch.u_lo, self.branch.u_hi)
    }
    fn f(&self, u: f64) -> f64 {
        self.profile.neg_laplacian(self.radius_of(u))
    }
    fn fprime(&self, u: f64) -> f64 {
        centered_fprime(self, u)
    }
    fn antiderivative(&self, u: f64) -> f64 {
        // ∫ f du = ∫ −Δu(r) φ′(r) dr along the branch.
        let r = self.radius_of(u);
        let p = &self.profile;
        integrate_1d(|s| p.neg_laplacian(s) * p.du(s), self.r_base, r, 1e-14).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone)]
pub struct Recovery {
    pub r_range: (f64, f64),
    pub branches: Vec<Branch>,
    /// Every sampled `(u, −Δu, r)`, sorted by `u`.
    pub pairs: Vec<(f64, f64, f64)>,
    pub conflicts: Vec<BranchConflict>,
    pub max_conflict: f64,
    pub autonomous: bool,
    /// Table on the branch containing the start of the range.
    pub table: Tabulated,
    /// The same branch evaluated through the exact profile.
    pub law: RecoveredLaw,
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchReport {
    pub r_range: [f64; 2],
    pub branches: Vec<Branch>,
    pub autonomous: bool,
    pub max_conflict: f64,
    pub conflict_count: usize,
    /// Conflicts at the lowest and highest sampled `u`.
    pub conflict_examples: Vec<BranchConflict>,
}

impl Recovery {
    pub fn report(&self) -> BranchReport {
        let mut examples = Vec::new();
        if let Some(c) = self.conflicts.first() {
            examples.push(c.clone());
        }
        if self.conflicts.len() > 1 {
            examples.push(self.conflicts[self.conflicts.len() - 1].clone());
        }
        BranchReport {
            r_range: [self.r_range.0, self.r_range.1],
            branches: self.branches.clone(),
            autonomous: self.autonomous,
            max_conflict: self.max_conflict,
            conflict_count: self.conflicts.len(),
            conflict_examples: examples,
        }
    }

    /// The conflict at the sampled value nearest to `u`, if any.
    pub fn conflict_near(&self, u: f64) -> Option<&BranchConflict> {
        self.conflicts
            .iter()
            .min_by(|a, b| (a.u - u).abs().total_cmp(&(b.u - u).abs()))
    }
}

fn derivative_roots(profile: &dyn RadialProfileFn, a: f64, b: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let r_at = |k: usize| a + (b - a) * k as f64 / SCAN as f64;
    let mut prev_r = a;
    let mut prev = profile.du(a);
    for k in 1..=SCAN {
        let r = r_at(k);
        let d = profile.du(r);
        if k < SCAN && d == 0.0 {
            roots.push(r);
            prev_r = r;
            prev = d;
            continue;
        }
        if prev != 0.0 && d != 0.0 && (prev > 0.0) != (d > 0.0) {
            let (mut lo, mut hi) = (prev_r, r);
            let lo_pos = prev > 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let dm = profile.du(mid);
                if dm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (dm > 0.0) == lo_pos {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let root = if profile.du(lo).abs() <= profile.du(hi).abs() { lo } else { hi };
            roots.push(root);
        }
        prev_r = r;
        prev = d;
    }
    roots
}

fn make_branch(profile: &dyn RadialProfileFn, r_lo: f64, r_hi: f64) -> Branch {
    let (a, b) = (profile.u(r_lo), profile.u(r_hi));
    Branch {
        r_lo,
        r_hi,
        u_lo: a.min(b),
        u_hi: a.max(b),
        increasing: b >= a,
    }
}

/// Tabulate `f(u) := −Δu` along a radial profile on `r_range` and check that
/// it is single-valued across monotone branches.
pub fn recover_f_from_radial(
    profile: Arc<dyn RadialProfileFn>,
    r_range: (f64, f64),
) -> Result<Recovery, NonlinearityError> {
    let (a, b) = r_range;
    if !(a >= 0.0 && a < b && b.is_finite()) {
        return Err(NonlinearityError::BadInterval(a, b));
    }
    if a == 0.0 {
        let d0 = profile.du(0.0);
        if d0.abs() > 1e-10 {
            return Err(NonlinearityError::NotEven(d0));
        }
    }
    let mut cuts = vec![a];
    cuts.extend(derivative_roots(profile.as_ref(), a, b));
    cuts.push(b);
    cuts.dedup();
    let branches: Vec<Branch> = cuts
        .windows(2)
        .map(|w| make_branch(profile.as_ref(), w[0], w[1]))
        .filter(|br| br.r_hi > br.r_lo)
        .collect();

    let laws: Vec<RecoveredLaw> = branches.iter().map(|br| RecoveredLaw::new(profile.clone(), *br)).collect();

    let mut pairs = Vec::new();
    for br in &branches {
        for k in 0..=256 {
            let r = br.r_lo + (br.r_hi - br.r_lo) * k as f64 / 256.0;
            pairs.push((profile.u(r), profile.neg_laplacian(r), r));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.2.total_cmp(&y.2)));

    let mut conflicts = Vec::new();
    for i in 0..laws.len() {
        for j in i + 1..laws.len() {
            let (bi, bj) = (&branches[i], &branches[j]);
            let lo = bi.u_lo.max(bj.u_lo);
            let hi = bi.u_hi.min(bj.u_hi);
            if lo > hi {
                continue;
            }
            let steps = if hi > lo { 64 } else { 0 };
            for k in 0..=steps {
                let u = if steps == 0 { lo } else { lo + (hi - lo) * k as f64 / steps as f64 };
                let (ri, rj) = (laws[i].radius_of(u), laws[j].radius_of(u));
                let (fi, fj) = (profile.neg_laplacian(ri), profile.neg_laplacian(rj));
                if (fi - fj).abs() > CONFLICT_TOL {
                    conflicts.push(BranchConflict {
                        u,
                        values: vec![(ri, fi), (rj, fj)],
                        spread: (fi - fj).abs(),
                    });
                }
            }
        }
    }
    conflicts.sort_by(|x, y| x.u.total_cmp(&y.u));
    let max_conflict = conflicts.iter().map(|c| c.spread).fold(0.0, f64::max);

    let first = laws
        .first()
        .cloned()
        .ok_or_else(|| NonlinearityError::InvalidTable("empty radius range".into()))?;
    let br = first.branch;
    let mut samples: Vec<(f64, f64)> = (0..TABLE)
        .map(|k| {
            let r = br.r_lo + (br.r_hi - br.r_lo) * k as f64 / (TABLE - 1) as f64;
            (profile.u(r), profile.neg_laplacian(r))
        })
        .collect();
    samples.sort_by(|x, y| x.0.total_cmp(&y.0));
    samples.dedup_by(|x, y| x.0 <= y.0);
    let (us, fs): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
    let table = Tabulated::new(us, fs)?;

    Ok(Recovery {
        r_range,
        branches,
        pairs,
        autonomous: conflicts.is_empty(),
        conflicts,
        max_conflict,
        table,
        law: first,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::RadialPolynomial;
    use crate::nonlinearity::eval_f;

    fn example1() -> Arc<dyn RadialProfileFn> {
        Arc::new(RadialPolynomial::new(vec![0.0, 0.0, 1.0, -1.0, 0.25]))
    }

    #[test]
    fn unit_disk_is_single_valued() {
        let rec = recover_f_from_radial(example1(), (0.0, 1.0)).unwrap();
        assert!(rec.autonomous);
        assert_eq!(rec.branches.len(), 1);
        assert!((eval_f(&rec.law, 0.0).unwrap() + 4.0).abs() < 1e-12);
        assert!((eval_f(&rec.law, 0.25).unwrap() - 1.0).abs() < 1e-8);
        assert!((eval_f(&rec.table, 0.0).unwrap() + 4.0).abs() < 1e-12);
        assert!((eval_f(&rec.table, 0.25).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radius_two_has_branch_conflict_at_zero() {
        let rec = recover_f_from_radial(example1(), (0.0, 2.0)).unwrap();
        assert!(!rec.autonomous);
        assert_eq!(rec.branches.len(), 2);
        let c = rec.conflict_near(0.0).unwrap();
        assert_eq!(c.u, 0.0);
        let fs: Vec<f64> = c.values.iter().map(|v| v.1).collect();
        assert!((fs[0] + 4.0).abs() < 1e-12 && (fs[1] + 2.0).abs() < 1e-12, "{fs:?}");
        assert!((c.values[1].0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bump_gives_constant_four() {
        let rec = recover_f_from_radial(Arc::new(RadialPolynomial::new(vec![1.0, 0.0, -1.0])), (0.0, 1.0)).unwrap();
        assert!(rec.autonomous);
        for (_, f) in rec.table.samples() {
            assert!((f - 4.0).abs() < 1e-12);
        }
        assert!((rec.law.antiderivative(0.5) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn odd_profile_rejected() {
        let odd = Arc::new(RadialPolynomial::new(vec![0.0, 1.0, 1.0]));
        assert!(matches!(recover_f_from_radial(odd, (0.0, 1.0)), Err(NonlinearityError::NotEven(_))));
    }

    #[test]
    fn recovered_antiderivative_matches_quadrature() {
        let rec = recover_f_from_radial(example1(), (0.0, 1.0)).unwrap();
        for &u in &[0.01, 0.1, 0.2, 0.25] {
            let q = integrate_1d(|s| rec.law.f(s), 0.0, u, 1e-12).unwrap();
            assert!((rec.law.antiderivative(u) - q).abs() < 1e-8, "u={u}");
        }
    }
}
