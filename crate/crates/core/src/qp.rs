//! Small dense convex quadratic programs solved by exhaustive active-set
//! enumeration.
//!
//! ```text
//!     minimize    1/2 x'Qx + c'x
//!     subject to  A_eq x  = b_eq
//!                 A_in x <= b_in
//! ```
//!
//! Every subset `W` of the inequalities is tried as a working set (by size,
//! then lexicographically). The equality-constrained problem on `E ∪ W` is
//! solved with a null-space method and accepted when it is primal feasible
//! and the multipliers of `W` are nonnegative. Among accepted candidates the
//! one with the smallest objective wins; earlier candidates win ties.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

pub const PRIMAL_TOL: f64 = 1e-9;
pub const DUAL_TOL: f64 = 1e-9;
/// Subset enumeration is exponential; refuse beyond this many inequalities.
pub const MAX_INEQUALITIES: usize = 20;

#[derive(Debug, Clone)]
pub struct DenseQp {
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub a_in: DMatrix<f64>,
    pub b_in: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// Inequalities held as equalities in the accepted working set.
    pub working_set: Vec<usize>,
    pub eq_multipliers: DVector<f64>,
    /// One entry per inequality; zero outside the working set.
    pub in_multipliers: DVector<f64>,
}

impl DenseQp {
    pub fn new(q: DMatrix<f64>, c: DVector<f64>) -> Self {
        let p = c.len();
        Self {
            q,
            c,
            a_eq: DMatrix::zeros(0, p),
            b_eq: DVector::zeros(0),
            a_in: DMatrix::zeros(0, p),
            b_in: DVector::zeros(0),
        }
    }

    pub fn with_equalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.a_eq = a;
        self.b_eq = b;
        self
    }

    pub fn with_inequalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.a_in = a;
        self.b_in = b;
        self
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q * x)) + self.c.dot(x)
    }

    pub fn solve(&self) -> Result<QpSolution> {
        let mi = self.a_in.nrows();
        if mi > MAX_INEQUALITIES {
            return Err(Error::Capability(format!(
                "active-set enumeration supports at most {MAX_INEQUALITIES} inequalities, got {mi}"
            )));
        }
        let mut best: Option<QpSolution> = None;
        for size in 0..=mi {
            for subset in Combinations::new(mi, size) {
                let Some(cand) = self.solve_working_set(&subset) else {
                    continue;
                };
                let better = match &best {
                    None => true,
                    Some(b) => cand.objective < b.objective - 1e-12 * (1.0 + b.objective.abs()),
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        best.ok_or_else(|| Error::Infeasible("no working set is primal and dual feasible".into()))
    }

    fn solve_working_set(&self, subset: &[usize]) -> Option<QpSolution> {
        let p = self.c.len();
        let me = self.a_eq.nrows();

        // Independent constraint rows: equalities first (dependent ones are
        // dropped and checked for consistency), then the working set, whose
        // rows must extend the span.
        let mut kept_rows: Vec<DVector<f64>> = Vec::new();
        let mut kept_rhs: Vec<f64> = Vec::new();
        let mut kept_src: Vec<Source> = Vec::new();
        let mut ortho: Vec<DVector<f64>> = Vec::new();
        let push_if_independent =
            |row: DVector<f64>, ortho: &mut Vec<DVector<f64>>| -> bool {
                let scale = row.norm();
                if scale == 0.0 {
                    return false;
                }
                let mut v = row.clone() / scale;
                for _ in 0..2 {
                    for q in ortho.iter() {
                        let c = q.dot(&v);
                        v.axpy(-c, q, 1.0);
                    }
                }
                let nv = v.norm();
                if nv > 1e-10 {
                    ortho.push(v / nv);
                    true
                } else {
                    false
                }
            };
        for i in 0..me {
            let row = self.a_eq.row(i).transpose();
            if push_if_independent(row.clone(), &mut ortho) {
                kept_rows.push(row);
                kept_rhs.push(self.b_eq[i]);
                kept_src.push(Source::Eq(i));
            }
        }
        for &w in subset {
            let row = self.a_in.row(w).transpose();
            if !push_if_independent(row.clone(), &mut ortho) {
                return None;
            }
            kept_rows.push(row);
            kept_rhs.push(self.b_in[w]);
            kept_src.push(Source::In(w));
        }

        let m = if kept_rows.is_empty() {
            DMatrix::zeros(0, p)
        } else {
            DMatrix::from_rows(&kept_rows.iter().map(|r| r.transpose()).collect::<Vec<_>>())
        };
        let r = DVector::from_vec(kept_rhs);

        let x0 = if m.nrows() == 0 {
            DVector::zeros(p)
        } else {
            linalg::lstsq(&m, &r)
        };
        // Consistency of every equality and working-set row, including dropped ones.
        for i in 0..me {
            let v = self.a_eq.row(i).transpose().dot(&x0) - self.b_eq[i];
            if v.abs() > PRIMAL_TOL * (1.0 + self.b_eq[i].abs()) {
                return None;
            }
        }

        let basis = linalg::null_space(&m, 1e-10);
        let x = if basis.ncols() == 0 {
            x0
        } else {
            let reduced = basis.transpose() * &self.q * &basis;
            let (reduced, _) = linalg::symmetrize(&reduced);
            let scale = 1.0 + self.q.amax();
            let chol = reduced.clone().cholesky()?;
            let min_eig = linalg::min_eigenvalue(&reduced)?;
            if min_eig <= 1e-10 * scale {
                return None;
            }
            let g = basis.transpose() * (&self.q * &x0 + &self.c);
            let u = -chol.solve(&g);
            x0 + &basis * u
        };

        for i in 0..self.a_in.nrows() {
            if subset.contains(&i) {
                continue;
            }
            let v = self.a_in.row(i).transpose().dot(&x) - self.b_in[i];
            if v > PRIMAL_TOL * (1.0 + self.b_in[i].abs()) {
                return None;
            }
        }

        let grad = &self.q * &x + &self.c;
        let mut eq_mult = DVector::zeros(me);
        let mut in_mult = DVector::zeros(self.a_in.nrows());
        if m.nrows() > 0 {
            let mu = linalg::lstsq(&m.transpose(), &(-&grad));
            let resid = (m.transpose() * &mu + &grad).amax();
            if resid > 1e-8 * (1.0 + grad.amax()) {
                return None;
            }
            for (k, src) in kept_src.iter().enumerate() {
                match *src {
                    Source::Eq(i) => eq_mult[i] = mu[k],
                    Source::In(w) => {
                        if mu[k] < -DUAL_TOL {
                            return None;
                        }
                        in_mult[w] = mu[k].max(0.0);
                    }
                }
            }
        } else if grad.amax() > 1e-8 * (1.0 + self.c.amax()) {
            return None;
        }

        Some(QpSolution {
            objective: self.objective(&x),
            x,
            working_set: subset.to_vec(),
            eq_multipliers: eq_mult,
            in_multipliers: in_mult,
        })
    }
}

#[derive(Debug, Clone, Copy)]
enum Source {
    Eq(usize),
    In(usize),
}

/// Lexicographic `size`-subsets of `0..n`.
pub(crate) struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub(crate) fn new(n: usize, size: usize) -> Self {
        Self {
            n,
            idx: (0..size).collect(),
            done: size > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_enumerate_in_order() {
        let all: Vec<Vec<usize>> = Combinations::new(4, 2).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 1]);
        assert_eq!(all[5], vec![2, 3]);
        assert_eq!(Combinations::new(3, 0).count(), 1);
        assert_eq!(Combinations::new(2, 3).count(), 0);
    }

    #[test]
    fn one_dimensional_clamp() {
        // min 1/2 x^2 + z x  s.t.  x <= 0
        for &(z, want) in &[(1.0, -1.0), (-0.5, 0.0), (0.0, 0.0)] {
            let qp = DenseQp::new(DMatrix::identity(1, 1), DVector::from_vec(vec![z]))
                .with_inequalities(DMatrix::from_element(1, 1, 1.0), DVector::zeros(1));
            let s = qp.solve().unwrap();
            assert!((s.x[0] - want).abs() < 1e-14, "z={z} x={}", s.x[0]);
        }
    }

    #[test]
    fn dependent_equalities_are_tolerated() {
        // x1 = 0 stated twice with opposite signs.
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 1.0, 0.0]);
        let qp = DenseQp::new(DMatrix::identity(2, 2), DVector::from_vec(vec![0.1, 0.3]))
            .with_equalities(a, DVector::zeros(2));
        let s = qp.solve().unwrap();
        assert!(s.x[0].abs() < 1e-15);
        assert!((s.x[1] + 0.3).abs() < 1e-15);
    }

    #[test]
    fn nonconvex_on_feasible_subspace_is_infeasible() {
        let qp = DenseQp::new(-DMatrix::identity(1, 1), DVector::zeros(1));
        assert!(qp.solve().is_err());
    }
}
