//! Inner maximization, outer minimization and the finite-difference value
//! derivative.
//!
//! The outer solve has two phases. A global phase evaluates
//! `φ(γ) = max_ξ f(γ, ξ)` on a grid over `Γ` and refines the best point by
//! normalized subgradient steps. A local phase then runs the epigraph
//! active-set Newton iteration (see [`epigraph`]) until the KKT residual is
//! below tolerance.

pub(crate) mod epigraph;
mod inner;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{
    Dataset, EmpiricalObjective, Objective, ProblemSpec, XiPoint, XiSet,
};
use epigraph::{Branch, Domain, LocalConfig};

pub use inner::{inner_maximize, InnerConfig, InnerResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub inner: InnerConfig,
    /// Grid points per γ coordinate in the global phase.
    pub grid_per_dim: usize,
    pub max_grid: usize,
    pub subgradient_steps: usize,
    /// Relative activity tolerance `τ_act`.
    pub act_rel: f64,
    pub kkt_tol: f64,
    pub max_newton: usize,
    pub boundary_tol: f64,
    /// Branches passed to the local QP, best first.
    pub max_branches: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            inner: InnerConfig::default(),
            grid_per_dim: 9,
            max_grid: 729,
            subgradient_steps: 500,
            act_rel: 1e-5,
            kkt_tol: 1e-9,
            max_newton: 100,
            boundary_tol: 1e-7,
            max_branches: 12,
        }
    }
}

impl SolverConfig {
    pub(crate) fn local(&self) -> LocalConfig {
        LocalConfig {
            max_iter: self.max_newton,
            kkt_tol: self.kkt_tol,
            act_rel: self.act_rel,
            max_branches: self.max_branches,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIter,
    BoundaryHit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::BoundaryHit => "boundary_hit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolutionSource {
    Population { approximate: bool },
    Sample { n: usize, seed: Option<u64> },
    Objective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerMaximizer {
    pub xi: XiPoint,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxSolution {
    pub gamma_hat: Vec<f64>,
    pub theta_hat: f64,
    pub inner_maximizers: Vec<InnerMaximizer>,
    pub iterations: usize,
    pub status: SolveStatus,
    pub source: SolutionSource,
    pub kkt_residual: f64,
    /// Epigraph multipliers at `gamma_hat`, matched to `inner_maximizers`.
    pub multipliers: Vec<f64>,
}

/// `∇φ_i` and `∇²φ_i` for a maximizer of `f(γ, ·)`.
///
/// Listed points use `∇²_γγ f`. Box points use the Schur complement over
/// the coordinates not pinned at a bound, falling back to `∇²_γγ f` when
/// that block is singular or no coordinate is free.
pub(crate) fn branch_at(obj: &dyn Objective, n: usize, gamma: &[f64], xi: &XiPoint, value: f64, region: &XiSet) -> Branch {
    let g = obj.gradient(gamma, xi);
    let grad = g.rows(0, n).into_owned();
    let hess = match obj.hessian(gamma, xi) {
        Ok(h) => {
            let hgg = h.view((0, 0), (n, n)).into_owned();
            match region {
                XiSet::Box(b) if xi.index.is_none() => {
                    let free: Vec<usize> = (0..xi.coords.len())
                        .filter(|&k| xi.coords[k] > b.lower[k] && xi.coords[k] < b.upper[k])
                        .collect();
                    schur(&h, n, &free).unwrap_or(hgg)
                }
                _ => hgg,
            }
        }
        Err(_) => DMatrix::zeros(n, n),
    };
    Branch {
        key: xi.clone(),
        value,
        grad,
        hess,
    }
}

/// `H_γγ − H_γξ H_ξξ⁻¹ H_ξγ` restricted to the ξ coordinates in `free`.
pub(crate) fn schur(h: &DMatrix<f64>, n: usize, free: &[usize]) -> Option<DMatrix<f64>> {
    if free.is_empty() {
        return None;
    }
    let f = free.len();
    let hxx = DMatrix::from_fn(f, f, |r, c| h[(n + free[r], n + free[c])]);
    let hgx = DMatrix::from_fn(n, f, |r, c| h[(r, n + free[c])]);
    let lu = hxx.clone().lu();
    let smin = crate::linalg::min_singular_value(&hxx)?;
    if smin < 1e-8 {
        return None;
    }
    let sol = lu.solve(&hgx.transpose())?;
    Some(h.view((0, 0), (n, n)).into_owned() - &hgx * sol)
}

fn branches_at(obj: &dyn Objective, n: usize, gamma: &[f64], region: &XiSet, cfg: &SolverConfig) -> Vec<Branch> {
    let res = inner_maximize(obj, gamma, region, &cfg.inner);
    res.maximizers
        .iter()
        .map(|(xi, v)| branch_at(obj, n, gamma, xi, *v, region))
        .collect()
}

fn grid_gamma(gamma_set: &crate::problem::BoxSet, cfg: &SolverConfig) -> Vec<Vec<f64>> {
    inner::grid_points(gamma_set, cfg.grid_per_dim, cfg.max_grid, false)
}

/// Minimizes `max_ξ obj(γ, ξ)` over `gamma_set`.
pub fn outer_minimize(
    obj: &dyn Objective,
    gamma_set: &crate::problem::BoxSet,
    xi_set: &XiSet,
    cfg: &SolverConfig,
) -> Result<MinimaxSolution> {
    let n = gamma_set.dim();
    let phi_at = |g: &[f64]| inner_maximize(obj, g, xi_set, &cfg.inner);

    // Global phase: grid, ties to the earliest point.
    let mut best_gamma = gamma_set.center();
    let mut best_val = f64::INFINITY;
    for g in grid_gamma(gamma_set, cfg) {
        let v = phi_at(&g).max_value();
        if v < best_val {
            best_val = v;
            best_gamma = g;
        }
    }
    let c = gamma_set.diameter() / 10.0;
    let mut gamma = best_gamma.clone();
    for t in 1..=cfg.subgradient_steps {
        let res = phi_at(&gamma);
        let (xi, _) = &res.maximizers[0];
        let g = obj.gradient(&gamma, xi);
        let sg = g.rows(0, n);
        let norm = sg.norm();
        if norm == 0.0 {
            break;
        }
        let step = c / (t as f64).sqrt();
        for j in 0..n {
            gamma[j] -= step * sg[j] / norm;
        }
        gamma_set.project(&mut gamma);
        let v = phi_at(&gamma).max_value();
        if v < best_val {
            best_val = v;
            best_gamma = gamma.clone();
        }
    }

    // Local phase.
    let family = |g: &[f64]| branches_at(obj, n, g, xi_set, cfg);
    let local = epigraph::local_solve(&family, Domain::Box(gamma_set), &best_gamma, &cfg.local());

    let fin = phi_at(&local.gamma);
    let theta_hat = fin.max_value();
    let multipliers = fin
        .maximizers
        .iter()
        .map(|(xi, _)| {
            local
                .multipliers
                .iter()
                .find(|(k, _)| k == xi)
                .map_or(0.0, |(_, m)| *m)
        })
        .collect();
    let status = if gamma_set.boundary_distance(&local.gamma) <= cfg.boundary_tol {
        SolveStatus::BoundaryHit
    } else if local.converged && fin.converged {
        SolveStatus::Converged
    } else {
        SolveStatus::MaxIter
    };
    Ok(MinimaxSolution {
        gamma_hat: local.gamma,
        theta_hat,
        inner_maximizers: fin
            .maximizers
            .into_iter()
            .map(|(xi, value)| InnerMaximizer { xi, value })
            .collect(),
        iterations: cfg.subgradient_steps + local.iterations,
        status,
        source: SolutionSource::Objective,
        kkt_residual: local.kkt_residual,
        multipliers,
    })
}

pub fn solve_population(problem: &ProblemSpec, cfg: &SolverConfig) -> Result<MinimaxSolution> {
    let obj = problem.population_objective()?;
    let mut sol = outer_minimize(&obj, &problem.gamma_set, &problem.xi_set, cfg)?;
    sol.source = SolutionSource::Population {
        approximate: obj.is_approximate(),
    };
    Ok(sol)
}

pub fn solve_sample(problem: &ProblemSpec, dataset: &Dataset, cfg: &SolverConfig) -> Result<MinimaxSolution> {
    if dataset.dim() != problem.x_dim() {
        return Err(Error::InvalidArgument(format!(
            "dataset has {} columns, problem {} expects {}",
            dataset.dim(),
            problem.name,
            problem.x_dim()
        )));
    }
    let obj = EmpiricalObjective::new(problem, dataset);
    let mut sol = outer_minimize(&obj, &problem.gamma_set, &problem.xi_set, cfg)?;
    sol.source = SolutionSource::Sample {
        n: dataset.len(),
        seed: dataset.seed,
    };
    Ok(sol)
}

/// `base + t·eta`.
pub struct Perturbed<'a> {
    pub base: &'a dyn Objective,
    pub eta: &'a dyn Objective,
    pub t: f64,
}

impl Objective for Perturbed<'_> {
    fn value(&self, gamma: &[f64], xi: &XiPoint) -> f64 {
        self.base.value(gamma, xi) + self.t * self.eta.value(gamma, xi)
    }
    fn gradient(&self, gamma: &[f64], xi: &XiPoint) -> DVector<f64> {
        self.base.gradient(gamma, xi) + self.eta.gradient(gamma, xi) * self.t
    }
    fn hessian(&self, gamma: &[f64], xi: &XiPoint) -> Result<DMatrix<f64>> {
        Ok(self.base.hessian(gamma, xi)? + self.eta.hessian(gamma, xi)? * self.t)
    }
}

pub const DEFAULT_T_GRID: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirDerivFd {
    pub base_value: f64,
    /// `(t, [V(f+tη) − V(f)]/t)` in grid order.
    pub quotients: Vec<(f64, f64)>,
    /// Richardson extrapolation of the last two quotients.
    pub estimate: f64,
    /// Quotients are monotone along the grid.
    pub monotone: bool,
}

/// Finite-difference directional derivative of the optimal value.
pub fn value_dirderiv_fd(
    problem: &ProblemSpec,
    eta: &dyn Objective,
    t_grid: &[f64],
    cfg: &SolverConfig,
) -> Result<DirDerivFd> {
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidArgument("t_grid must be nonempty and positive".into()));
    }
    if t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("t_grid must be strictly decreasing".into()));
    }
    let base = problem.population_objective()?;
    let v0 = require_converged(outer_minimize(&base, &problem.gamma_set, &problem.xi_set, cfg)?, 0.0)?;
    let mut quotients = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let pert = Perturbed { base: &base, eta, t };
        let vt = require_converged(outer_minimize(&pert, &problem.gamma_set, &problem.xi_set, cfg)?, t)?;
        quotients.push((t, (vt - v0) / t));
    }
    let estimate = match quotients.len() {
        1 => quotients[0].1,
        len => {
            let (t1, q1) = quotients[len - 2];
            let (t2, q2) = quotients[len - 1];
            (t1 * q2 - t2 * q1) / (t1 - t2)
        }
    };
    let inc = quotients.windows(2).all(|w| w[1].1 >= w[0].1);
    let dec = quotients.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok(DirDerivFd {
        base_value: v0,
        quotients,
        estimate,
        monotone: inc || dec,
    })
}

fn require_converged(sol: MinimaxSolution, t: f64) -> Result<f64> {
    match sol.status {
        SolveStatus::Converged => Ok(sol.theta_hat),
        s => Err(Error::Solver(format!(
            "perturbed solve at t={t} ended with status {} (residual {:.3e})",
            s.as_str(),
            sol.kkt_residual
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{builtin, PolyFunction, PolyTerm};

    #[test]
    fn paper_example_inner_order() {
        let p = builtin("paper_example").unwrap();
        let obj = p.population_objective().unwrap();
        let r = inner_maximize(&obj, &[0.3], &p.xi_set, &InnerConfig::default());
        assert_eq!(r.maximizers[0].0.index, Some(1));
        assert!((r.maximizers[0].1 - 0.3).abs() < 1e-15);
        assert_eq!(r.maximizers[1].0.index, Some(0));
        assert!((r.maximizers[1].1 + 0.3).abs() < 1e-15);
    }

    #[test]
    fn saddle_inner_box() {
        let p = builtin("smooth_saddle(1)").unwrap();
        let obj = p.population_objective().unwrap();
        let r = inner_maximize(&obj, &[0.5], &p.xi_set, &InnerConfig::default());
        assert_eq!(r.maximizers.len(), 1);
        assert!((r.maximizers[0].0.coords[0] - 0.5).abs() < 1e-10);
        assert!((r.maximizers[0].1 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn population_solutions() {
        for name in ["paper_example", "smooth_saddle(1)", "vee_value", "cone_qp", "ridge2d"] {
            let p = builtin(name).unwrap();
            let s = solve_population(&p, &SolverConfig::default()).unwrap();
            assert_eq!(s.status, SolveStatus::Converged, "{name}: {s:?}");
            for g in &s.gamma_hat {
                assert!(g.abs() < 1e-9, "{name}: {:?}", s.gamma_hat);
            }
            assert!(s.theta_hat.abs() < 1e-12, "{name}: {}", s.theta_hat);
        }
    }

    #[test]
    fn vee_kink_equalization() {
        let p = builtin("vee_value").unwrap();
        let ds = Dataset::from_rows("vee_value", &[vec![0.4, -0.2], vec![0.0, 0.0]]).unwrap();
        let s = solve_sample(&p, &ds, &SolverConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Converged);
        assert!((s.gamma_hat[0] - 0.15).abs() < 1e-12);
        assert!((s.theta_hat - 0.06125).abs() < 1e-12);
    }

    #[test]
    fn paper_example_quotients() {
        let p = builtin("paper_example").unwrap();
        let eta = PolyFunction::new(
            1,
            0,
            vec![PolyTerm {
                coef: 1.0,
                gamma_pow: vec![],
                xi_pow: vec![],
                x: None,
                branch: Some(0),
            }],
            0,
            Some(2),
        )
        .unwrap();
        let fd = value_dirderiv_fd(&p, &eta, &DEFAULT_T_GRID, &SolverConfig::default()).unwrap();
        for (t, q) in &fd.quotients {
            assert!((q - 0.5).abs() < 1e-9, "t={t} q={q}");
        }
        assert!((fd.estimate - 0.5).abs() < 1e-9);
    }
}
