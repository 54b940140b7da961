//! Local solver for `min_γ max_i φ_i(γ)` in epigraph form.
//!
//! Each iteration solves the QP
//!
//! ```text
//!     minimize    ζ + ½ dᵀ W d
//!     subject to  φ_i(γ) − φ(γ) + ∇φ_iᵀ d ≤ ζ   for every branch i
//!                 l − γ ≤ d ≤ u − γ             (only when the free step leaves Γ)
//! ```
//!
//! with `W = Σ μ_i ∇²φ_i` built from the previous multipliers, then
//! backtracks on `φ`. At a kink this is Newton's method on the equalized
//! active branches; activity is re-derived from the fresh branch values at
//! every iterate.

use nalgebra::{DMatrix, DVector};

use crate::linalg;
use crate::problem::{BoxSet, XiPoint};
use crate::qp::DenseQp;

/// One smooth piece `φ_i` at the current `γ`.
#[derive(Debug, Clone)]
pub(crate) struct Branch {
    pub key: XiPoint,
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

pub(crate) enum Domain<'a> {
    Box(&'a BoxSet),
    Ball(f64),
}

impl Domain<'_> {
    fn project(&self, x: &mut [f64]) {
        match self {
            Domain::Box(b) => b.project(x),
            Domain::Ball(r) => {
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > *r {
                    x.iter_mut().for_each(|v| *v *= r / norm);
                }
            }
        }
    }

    fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Box(b) => b.contains(x, 0.0),
            Domain::Ball(r) => x.iter().map(|v| v * v).sum::<f64>().sqrt() <= *r,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LocalConfig {
    pub max_iter: usize,
    pub kkt_tol: f64,
    pub act_rel: f64,
    pub max_branches: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct LocalResult {
    pub gamma: Vec<f64>,
    pub multipliers: Vec<(XiPoint, f64)>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn phi(branches: &[Branch]) -> f64 {
    branches.iter().map(|b| b.value).fold(f64::NEG_INFINITY, f64::max)
}

fn same_key(a: &XiPoint, b: &XiPoint) -> bool {
    match (a.index, b.index) {
        (Some(i), Some(j)) => i == j,
        (None, None) => {
            a.coords.iter().zip(&b.coords).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt() <= 1e-3
        }
        _ => false,
    }
}

/// Positive-definite surrogate: eigenvalues clipped from below.
fn regularize(w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    if n == 0 {
        return w.clone();
    }
    let (sym, _) = linalg::symmetrize(w);
    let eig = sym.symmetric_eigen();
    let scale = 1.0 + eig.eigenvalues.amax();
    let floor = 1e-8 * scale;
    let d = eig.eigenvalues.map(|v| v.max(floor));
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

struct Step {
    d: DVector<f64>,
    zeta: f64,
    mu: Vec<f64>,
    residual: f64,
}

fn qp_step(
    bs: &[Branch],
    phi0: f64,
    w: &DMatrix<f64>,
    gamma: &[f64],
    bounds: Option<&BoxSet>,
) -> Option<Step> {
    let n = gamma.len();
    let k = bs.len();
    let p = n + 1;
    let mut q = DMatrix::zeros(p, p);
    q.view_mut((0, 0), (n, n)).copy_from(w);
    let mut c = DVector::zeros(p);
    c[n] = 1.0;

    let n_bounds = if bounds.is_some() { 2 * n } else { 0 };
    let mut a = DMatrix::zeros(k + n_bounds, p);
    let mut b = DVector::zeros(k + n_bounds);
    for (i, br) in bs.iter().enumerate() {
        for j in 0..n {
            a[(i, j)] = br.grad[j];
        }
        a[(i, n)] = -1.0;
        b[i] = phi0 - br.value;
    }
    if let Some(bx) = bounds {
        for j in 0..n {
            a[(k + 2 * j, j)] = 1.0;
            b[k + 2 * j] = bx.upper[j] - gamma[j];
            a[(k + 2 * j + 1, j)] = -1.0;
            b[k + 2 * j + 1] = gamma[j] - bx.lower[j];
        }
    }
    let sol = DenseQp::new(q, c).with_inequalities(a, b).solve().ok()?;
    let d = sol.x.rows(0, n).into_owned();
    let zeta = sol.x[n];
    let mu: Vec<f64> = (0..k).map(|i| sol.in_multipliers[i]).collect();

    // KKT residual of the epigraph program at the current γ.
    let mut station = DVector::zeros(n);
    let mut compl = 0.0;
    for (i, br) in bs.iter().enumerate() {
        station.axpy(mu[i], &br.grad, 1.0);
        compl += mu[i] * (phi0 - br.value);
    }
    if let Some(bx) = bounds {
        for j in 0..n {
            let nu_up = sol.in_multipliers[k + 2 * j];
            let nu_lo = sol.in_multipliers[k + 2 * j + 1];
            station[j] += nu_up - nu_lo;
            compl += nu_up * (bx.upper[j] - gamma[j]) + nu_lo * (gamma[j] - bx.lower[j]);
        }
    }
    let mu_sum: f64 = mu.iter().sum();
    let residual = station.amax().max(compl.abs()).max((mu_sum - 1.0).abs());
    Some(Step {
        d,
        zeta,
        mu,
        residual,
    })
}

/// Runs the local iteration from `gamma0`. `branches` evaluates all pieces
/// at a point; it must return at least one branch.
pub(crate) fn local_solve(
    branches: &dyn Fn(&[f64]) -> Vec<Branch>,
    domain: Domain<'_>,
    gamma0: &[f64],
    cfg: &LocalConfig,
) -> LocalResult {
    let n = gamma0.len();
    let mut gamma = gamma0.to_vec();
    domain.project(&mut gamma);
    let mut bs = select(branches(&gamma), cfg.max_branches);
    let mut phi0 = phi(&bs);
    let mut prev: Vec<(XiPoint, f64)> = Vec::new();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    for it in 0..cfg.max_iter {
        iterations = it + 1;
        let w = lagrangian_hessian(&bs, &prev, phi0, cfg.act_rel, n);
        let w = regularize(&w);

        let mut step = match qp_step(&bs, phi0, &w, &gamma, None) {
            Some(s) => s,
            None => break,
        };
        if let Domain::Box(bx) = &domain {
            let target: Vec<f64> = gamma.iter().zip(step.d.iter()).map(|(g, d)| g + d).collect();
            if !bx.contains(&target, 0.0) {
                match qp_step(&bs, phi0, &w, &gamma, Some(bx)) {
                    Some(s) => step = s,
                    None => break,
                }
            }
        }
        residual = step.residual;
        prev = bs.iter().zip(&step.mu).map(|(b, &m)| (b.key.clone(), m)).collect();

        let gscale = 1.0 + gamma.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if step.d.amax() <= 1e-15 * gscale {
            break;
        }

        let predicted = step.zeta.min(0.0);
        let slack = 4.0 * f64::EPSILON * (1.0 + phi0.abs());
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial: Vec<f64> = gamma.iter().zip(step.d.iter()).map(|(g, d)| g + alpha * d).collect();
            domain.project(&mut trial);
            let tb = select(branches(&trial), cfg.max_branches);
            let tphi = phi(&tb);
            if tphi <= phi0 + 1e-4 * alpha * predicted + slack && trial != gamma {
                gamma = trial;
                bs = tb;
                phi0 = tphi;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    // Residual and multipliers at the final iterate.
    let w = regularize(&lagrangian_hessian(&bs, &prev, phi0, cfg.act_rel, n));
    let bounds = match &domain {
        Domain::Box(bx) => Some(*bx),
        Domain::Ball(_) => None,
    };
    if let Some(s) = qp_step(&bs, phi0, &w, &gamma, bounds) {
        residual = s.residual;
        prev = bs.iter().zip(&s.mu).map(|(b, &m)| (b.key.clone(), m)).collect();
    }
    debug_assert!(domain.contains(&gamma));
    LocalResult {
        gamma,
        multipliers: prev,
        kkt_residual: residual,
        iterations,
        converged: residual <= cfg.kkt_tol,
    }
}

fn select(mut bs: Vec<Branch>, max: usize) -> Vec<Branch> {
    bs.sort_by(|a, b| b.value.partial_cmp(&a.value).unwrap_or(std::cmp::Ordering::Equal));
    bs.truncate(max.max(1));
    bs
}

fn lagrangian_hessian(
    bs: &[Branch],
    prev: &[(XiPoint, f64)],
    phi0: f64,
    act_rel: f64,
    n: usize,
) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(n, n);
    let weights: Vec<f64> = if prev.is_empty() {
        let tau = act_rel * (1.0 + phi0.abs());
        let active: Vec<bool> = bs.iter().map(|b| b.value >= phi0 - tau).collect();
        let count = active.iter().filter(|a| **a).count().max(1) as f64;
        active.iter().map(|&a| if a { 1.0 / count } else { 0.0 }).collect()
    } else {
        bs.iter()
            .map(|b| {
                prev.iter()
                    .find(|(k, _)| same_key(k, &b.key))
                    .map_or(0.0, |(_, m)| *m)
            })
            .collect()
    };
    for (b, wt) in bs.iter().zip(weights) {
        if wt != 0.0 {
            w += &b.hess * wt;
        }
    }
    w
}
