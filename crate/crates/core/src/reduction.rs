//! Finite-minimax reduction at a population minimizer.
//!
//! Near `γ*` the sup over `Ξ` is the max of finitely many smooth pieces
//! `φ_i(γ) = sup_{ξ near ξ_i*} f(γ, ξ)`. This module computes their
//! derivatives, the Lagrange multipliers of the epigraph program, the
//! index sets `I₊`/`I₀`, the subspace `𝓛` and the critical cone, and
//! numeric certificates for the regularity conditions the limit theory
//! relies on.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, serde_matrices, serde_matrix, serde_vectors};
use crate::problem::{Objective, ProblemSpec, XiPoint, XiSet};
use crate::qp::{Combinations, DenseQp};
use crate::rng::CounterRng;
use crate::solver::{inner_maximize, schur, InnerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReductionConfig {
    /// Relative activity tolerance `τ_act`.
    pub act_rel: f64,
    /// Multiplier threshold `τ_λ` separating `I₊` from `I₀`.
    pub tau_lambda: f64,
    /// Singular-value threshold for rank decisions.
    pub rank_tol: f64,
    pub stationarity_tol: f64,
    pub boundary_tol: f64,
    /// Random rays used by the sampled second-order certificate.
    pub cone_rays: usize,
    pub ray_seed: u64,
    pub inner: InnerConfig,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            act_rel: 1e-5,
            tau_lambda: 1e-8,
            rank_tol: 1e-8,
            stationarity_tol: 1e-7,
            boundary_tol: 1e-7,
            cone_rays: 1000,
            ray_seed: 0x5EC0_4D01,
            inner: InnerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointFlag {
    Interior,
    Isolated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivePoint {
    pub xi: XiPoint,
    pub label: String,
    pub flag: PointFlag,
    pub value: f64,
}

/// Maximizers of `f(γ*, ·)` within `τ_act` of the max.
pub fn detect_active_set(
    problem: &ProblemSpec,
    obj: &dyn Objective,
    gamma_star: &[f64],
    cfg: &ReductionConfig,
) -> Result<Vec<ActivePoint>> {
    let res = inner_maximize(obj, gamma_star, &problem.xi_set, &cfg.inner);
    let top = res.max_value();
    let tau = cfg.act_rel * (1.0 + top.abs());
    let mut out = Vec::new();
    for (xi, v) in res.maximizers {
        if v < top - tau {
            continue;
        }
        let (label, flag) = match &problem.xi_set {
            XiSet::FiniteList(pts) => {
                let i = xi.index.expect("listed point");
                (pts[i].label.clone(), PointFlag::Isolated)
            }
            XiSet::Box(b) => {
                let d = b.boundary_distance(&xi.coords);
                if d <= cfg.boundary_tol {
                    return Err(Error::assumption(
                        "active points interior to Xi",
                        format!("maximizer {xi} lies {d:.2e} from the boundary"),
                    ));
                }
                (xi.to_string(), PointFlag::Interior)
            }
        };
        out.push(ActivePoint {
            xi,
            label,
            flag,
            value: v,
        });
    }
    if out.is_empty() {
        return Err(Error::Solver("empty active set".into()));
    }
    Ok(out)
}

/// `∇φ_i(γ*)` and `∇²φ_i(γ*)`.
pub fn phi_derivatives(
    obj: &dyn Objective,
    n: usize,
    gamma_star: &[f64],
    point: &ActivePoint,
    cfg: &ReductionConfig,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let g = obj.gradient(gamma_star, &point.xi);
    let grad = g.rows(0, n).into_owned();
    let h = obj.hessian(gamma_star, &point.xi)?;
    let hess = match point.flag {
        PointFlag::Isolated => h.view((0, 0), (n, n)).into_owned(),
        PointFlag::Interior => {
            let m = g.len() - n;
            let gx = g.rows(n, m);
            let norm = gx.norm();
            if norm > cfg.stationarity_tol {
                return Err(Error::Stationarity { norm });
            }
            let hxx = h.view((n, n), (m, m)).into_owned();
            let smin = linalg::min_singular_value(&hxx).unwrap_or(0.0);
            if smin < cfg.rank_tol {
                return Err(Error::assumption(
                    "nonsingular xi-Hessian at active points",
                    format!("smallest singular value {smin:.3e} at {}", point.xi),
                ));
            }
            let free: Vec<usize> = (0..m).collect();
            schur(&h, n, &free).expect("nonsingular block checked above")
        }
    };
    Ok((grad, hess))
}

/// `{λ ≥ 0, Σλ = 1, Σ λ_i ∇φ_i = 0}` as an equality system over the simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaPolytope {
    /// Columns are `∇φ_i`.
    #[serde(with = "serde_matrix")]
    pub grads: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Multipliers {
    Unique { lambda: Vec<f64> },
    Polytope(LambdaPolytope),
}

fn stack(grads: &[DVector<f64>], n: usize) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(n, grads.len());
    for (i, v) in grads.iter().enumerate() {
        g.set_column(i, v);
    }
    g
}

/// Smallest singular value of `[∇φ_2 − ∇φ_1, …, ∇φ_k − ∇φ_1]`; `None` when `k = 1`.
pub fn affine_independence_witness(grads: &[DVector<f64>]) -> Option<f64> {
    let k = grads.len();
    if k <= 1 {
        return None;
    }
    let n = grads[0].len();
    if k - 1 > n {
        return Some(0.0);
    }
    let d = DMatrix::from_fn(n, k - 1, |r, c| grads[c + 1][r] - grads[0][r]);
    linalg::min_singular_value(&d)
}

pub fn lagrange_multipliers(grads: &[DVector<f64>], rank_tol: f64) -> Result<Multipliers> {
    let k = grads.len();
    if k == 0 {
        return Err(Error::InvalidArgument("no active points".into()));
    }
    let n = grads[0].len();
    let independent = affine_independence_witness(grads).is_none_or(|s| s >= rank_tol);
    let poly = LambdaPolytope {
        grads: stack(grads, n),
    };
    if !independent {
        let v = lambda_polytope_vertices(&Multipliers::Polytope(poly.clone()))?;
        if v.is_empty() {
            return Err(Error::FirstOrderFailure {
                residual: f64::INFINITY,
            });
        }
        return Ok(Multipliers::Polytope(poly));
    }
    let mut m = DMatrix::zeros(n + 1, k);
    m.view_mut((0, 0), (n, k)).copy_from(&poly.grads);
    m.row_mut(n).fill(1.0);
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;
    let lam = linalg::lstsq(&m, &rhs);
    let residual = (&m * &lam - &rhs).amax();
    if residual > 1e-8 || lam.iter().any(|&v| v < -1e-10) {
        return Err(Error::FirstOrderFailure {
            residual: residual.max(-lam.min()),
        });
    }
    Ok(Multipliers::Unique {
        lambda: normalize_simplex(lam.iter().map(|v| v.max(0.0)).collect()),
    })
}

fn normalize_simplex(mut lam: Vec<f64>) -> Vec<f64> {
    let s: f64 = lam.iter().sum();
    if s > 0.0 {
        lam.iter_mut().for_each(|v| *v /= s);
    }
    lam
}

const MAX_VERTEX_K: usize = 6;

/// Basic feasible solutions of `Λ*`, deduplicated, in support order.
pub fn lambda_polytope_vertices(mult: &Multipliers) -> Result<Vec<Vec<f64>>> {
    let poly = match mult {
        Multipliers::Unique { lambda } => return Ok(vec![lambda.clone()]),
        Multipliers::Polytope(p) => p,
    };
    let (n, k) = poly.grads.shape();
    if k > MAX_VERTEX_K {
        return Err(Error::Capability(format!(
            "vertex enumeration supports k <= {MAX_VERTEX_K}, got {k}"
        )));
    }
    let mut m = DMatrix::zeros(n + 1, k);
    m.view_mut((0, 0), (n, k)).copy_from(&poly.grads);
    m.row_mut(n).fill(1.0);
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;
    let r = linalg::rank(&m, 1e-10);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for size in 1..=r.min(k) {
        for support in Combinations::new(k, size) {
            let ms = DMatrix::from_fn(n + 1, size, |i, j| m[(i, support[j])]);
            if linalg::rank(&ms, 1e-10) < size {
                continue;
            }
            let ls = linalg::lstsq(&ms, &rhs);
            if (&ms * &ls - &rhs).amax() > 1e-8 || ls.iter().any(|&v| v < -1e-10) {
                continue;
            }
            let mut lam = vec![0.0; k];
            for (j, &s) in support.iter().enumerate() {
                lam[s] = ls[j].max(0.0);
            }
            let lam = normalize_simplex(lam);
            let dup = out
                .iter()
                .any(|v| v.iter().zip(&lam).all(|(a, b)| (a - b).abs() <= 1e-9));
            if !dup {
                out.push(lam);
            }
        }
    }
    Ok(out)
}

/// `I₊`, `I₀`, an orthonormal basis of `𝓛`, and the critical cone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSets {
    pub index_plus: Vec<usize>,
    pub index_zero: Vec<usize>,
    #[serde(with = "serde_matrix")]
    pub l_basis: DMatrix<f64>,
    pub cone: CriticalCone,
}

/// `{h : hᵀa = 0 for a in equalities, hᵀa ≤ 0 for a in inequalities}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalCone {
    #[serde(with = "serde_vectors")]
    pub equalities: Vec<DVector<f64>>,
    #[serde(with = "serde_vectors")]
    pub inequalities: Vec<DVector<f64>>,
}

impl CriticalCone {
    pub fn contains(&self, h: &DVector<f64>, tol: f64) -> bool {
        self.equalities.iter().all(|a| a.dot(h).abs() <= tol)
            && self.inequalities.iter().all(|a| a.dot(h) <= tol)
    }

    /// Euclidean projection onto the cone.
    pub fn project(&self, h: &DVector<f64>) -> Result<DVector<f64>> {
        let n = h.len();
        let rows = |v: &[DVector<f64>]| {
            DMatrix::from_fn(v.len(), n, |i, j| v[i][j])
        };
        let qp = DenseQp::new(DMatrix::identity(n, n), -h.clone())
            .with_equalities(rows(&self.equalities), DVector::zeros(self.equalities.len()))
            .with_inequalities(rows(&self.inequalities), DVector::zeros(self.inequalities.len()));
        Ok(qp.solve()?.x)
    }
}

pub fn index_sets_and_cones(grads: &[DVector<f64>], lambda: &[f64], tau_lambda: f64) -> IndexSets {
    let n = grads.first().map_or(0, |g| g.len());
    let index_plus: Vec<usize> = (0..lambda.len()).filter(|&i| lambda[i] > tau_lambda).collect();
    let index_zero: Vec<usize> = (0..lambda.len()).filter(|&i| lambda[i] <= tau_lambda).collect();
    let rows = DMatrix::from_fn(index_plus.len(), n, |r, c| grads[index_plus[r]][c]);
    let smax = linalg::singular_values(&rows).iter().cloned().fold(0.0, f64::max);
    let l_basis = linalg::null_space(&rows, 1e-8 * smax.max(1.0));
    IndexSets {
        cone: CriticalCone {
            equalities: index_plus.iter().map(|&i| grads[i].clone()).collect(),
            inequalities: index_zero.iter().map(|&i| grads[i].clone()).collect(),
        },
        index_plus,
        index_zero,
        l_basis,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub pass: bool,
    /// Numeric witness; absent when the check is vacuous.
    pub witness: Option<f64>,
    pub note: String,
    /// Diagnostic flags report a structural fact, not a requirement.
    #[serde(default)]
    pub diagnostic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    pub items: Vec<Certificate>,
}

impl Certificates {
    pub fn get(&self, name: &str) -> Option<&Certificate> {
        self.items.iter().find(|c| c.name == name)
    }

    pub fn passes(&self, name: &str) -> bool {
        self.get(name).is_some_and(|c| c.pass)
    }
}

impl fmt::Display for Certificates {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<28} {:<6} {:>14}  note", "certificate", "pass", "witness")?;
        for c in &self.items {
            let w = c.witness.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"));
            let p = if c.diagnostic {
                if c.pass { "yes" } else { "no" }
            } else if c.pass {
                "PASS"
            } else {
                "FAIL"
            };
            writeln!(f, "{:<28} {:<6} {:>14}  {}", c.name, p, w, c.note)?;
        }
        Ok(())
    }
}

/// Everything the limit laws need at `γ*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionData {
    pub gamma_star: Vec<f64>,
    pub theta_star: f64,
    pub active_points: Vec<ActivePoint>,
    #[serde(with = "serde_vectors")]
    pub grad_phi: Vec<DVector<f64>>,
    #[serde(with = "serde_matrices")]
    pub hess_phi: Vec<DMatrix<f64>>,
    pub multipliers: Multipliers,
    /// `λ*` when unique.
    pub lambda_star: Option<Vec<f64>>,
    /// Multiplier vector used for `H` and the index sets: `λ*`, or the
    /// mean of the `Λ*` vertices.
    pub lambda_used: Vec<f64>,
    pub index_plus: Vec<usize>,
    pub index_zero: Vec<usize>,
    #[serde(with = "serde_matrix")]
    pub l_basis: DMatrix<f64>,
    pub cone: CriticalCone,
    #[serde(with = "serde_matrix")]
    pub h: DMatrix<f64>,
    /// `I₊` gradients except the last, as columns.
    #[serde(with = "serde_matrix")]
    pub a: DMatrix<f64>,
    pub h_asymmetry: f64,
    /// Half the smallest distance between active points.
    pub neighborhood_radius: Option<f64>,
    pub min_xi_singular_value: Option<f64>,
    pub certificates: Certificates,
}

impl ReductionData {
    pub fn n(&self) -> usize {
        self.gamma_star.len()
    }

    pub fn k(&self) -> usize {
        self.grad_phi.len()
    }

    pub fn strict_complementarity(&self) -> bool {
        self.lambda_star.is_some() && self.index_zero.is_empty()
    }

    /// Assembles the reduction from branch derivatives.
    pub fn from_parts(
        gamma_star: Vec<f64>,
        theta_star: f64,
        active_points: Vec<ActivePoint>,
        grad_phi: Vec<DVector<f64>>,
        hess_phi: Vec<DMatrix<f64>>,
        cfg: &ReductionConfig,
    ) -> Result<Self> {
        let n = gamma_star.len();
        let k = grad_phi.len();
        if k == 0 || hess_phi.len() != k || active_points.len() != k {
            return Err(Error::InvalidArgument("inconsistent branch data".into()));
        }
        let multipliers = lagrange_multipliers(&grad_phi, cfg.rank_tol)?;
        let (lambda_star, lambda_used) = match &multipliers {
            Multipliers::Unique { lambda } => (Some(lambda.clone()), lambda.clone()),
            Multipliers::Polytope(_) => {
                let v = lambda_polytope_vertices(&multipliers)?;
                let mut mean = vec![0.0; k];
                for vert in &v {
                    for (m, x) in mean.iter_mut().zip(vert) {
                        *m += x / v.len() as f64;
                    }
                }
                (None, mean)
            }
        };
        let sets = index_sets_and_cones(&grad_phi, &lambda_used, cfg.tau_lambda);
        let mut h_raw = DMatrix::zeros(n, n);
        for (l, hp) in lambda_used.iter().zip(&hess_phi) {
            h_raw += hp * *l;
        }
        let (h, h_asymmetry) = linalg::symmetrize(&h_raw);
        let a_cols = sets.index_plus.len().saturating_sub(1);
        let a = DMatrix::from_fn(n, a_cols, |r, c| grad_phi[sets.index_plus[c]][r]);

        let coords: Vec<&Vec<f64>> = active_points.iter().map(|p| &p.xi.coords).collect();
        let mut min_dist = f64::INFINITY;
        for i in 0..coords.len() {
            for j in i + 1..coords.len() {
                let d = coords[i]
                    .iter()
                    .zip(coords[j])
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                min_dist = min_dist.min(d);
            }
        }
        let neighborhood_radius = (min_dist.is_finite() && min_dist > 0.0).then_some(0.5 * min_dist);

        let mut red = ReductionData {
            gamma_star,
            theta_star,
            active_points,
            grad_phi,
            hess_phi,
            multipliers,
            lambda_star,
            lambda_used,
            index_plus: sets.index_plus,
            index_zero: sets.index_zero,
            l_basis: sets.l_basis,
            cone: sets.cone,
            h,
            a,
            h_asymmetry,
            neighborhood_radius,
            min_xi_singular_value: None,
            certificates: Certificates { items: Vec::new() },
        };
        red.certificates = check_assumptions(&red, cfg);
        Ok(red)
    }
}

/// Full reduction of `problem` at `gamma_star` using the population objective.
pub fn reduce(problem: &ProblemSpec, gamma_star: &[f64], cfg: &ReductionConfig) -> Result<ReductionData> {
    let obj = problem.population_objective()?;
    reduce_objective(problem, &obj, gamma_star, cfg)
}

/// Reduction of an arbitrary objective on the problem's sets.
pub fn reduce_objective(
    problem: &ProblemSpec,
    obj: &dyn Objective,
    gamma_star: &[f64],
    cfg: &ReductionConfig,
) -> Result<ReductionData> {
    problem.gamma_set.contains(gamma_star, 0.0).then_some(()).ok_or_else(|| {
        Error::PointOutsideSet(format!("gamma {gamma_star:?} outside Gamma"))
    })?;
    let active = detect_active_set(problem, obj, gamma_star, cfg)?;
    let theta = active.iter().map(|p| p.value).fold(f64::NEG_INFINITY, f64::max);
    let mut grads = Vec::new();
    let mut hess = Vec::new();
    let mut min_sv: Option<f64> = None;
    for p in &active {
        let (g, h) = phi_derivatives(obj, problem.n, gamma_star, p, cfg)?;
        grads.push(g);
        hess.push(h);
        if p.flag == PointFlag::Interior {
            let full = obj.hessian(gamma_star, &p.xi)?;
            let m = problem.m;
            let hxx = full.view((problem.n, problem.n), (m, m)).into_owned();
            let s = linalg::min_singular_value(&hxx).unwrap_or(0.0);
            min_sv = Some(min_sv.map_or(s, |v: f64| v.min(s)));
        }
    }
    let mut red = ReductionData::from_parts(gamma_star.to_vec(), theta, active, grads, hess, cfg)?;
    red.min_xi_singular_value = min_sv;
    red.certificates = check_assumptions(&red, cfg);
    Ok(red)
}

fn cert(name: &str, pass: bool, witness: Option<f64>, note: impl Into<String>) -> Certificate {
    Certificate {
        name: name.to_string(),
        pass,
        witness,
        note: note.into(),
        diagnostic: false,
    }
}

fn flag(name: &str, value: bool, witness: Option<f64>, note: impl Into<String>) -> Certificate {
    Certificate {
        diagnostic: true,
        ..cert(name, value, witness, note)
    }
}

/// Numeric certificates for the regularity conditions at `γ*`.
pub fn check_assumptions(red: &ReductionData, cfg: &ReductionConfig) -> Certificates {
    let n = red.n();
    let k = red.k();
    let mut items = Vec::new();

    items.push(cert(
        "finite_active_set",
        true,
        Some(k as f64),
        format!("{k} active point(s)"),
    ));
    let interior = red.active_points.iter().any(|p| p.flag == PointFlag::Interior);
    items.push(match red.min_xi_singular_value {
        Some(s) => cert("nonsingular_xi_hessian", s >= cfg.rank_tol, Some(s), "min singular value of the xi-Hessian"),
        None => cert(
            "nonsingular_xi_hessian",
            true,
            None,
            if interior { "not recorded" } else { "vacuous: isolated points only" },
        ),
    });

    let aff = affine_independence_witness(&red.grad_phi);
    items.push(match aff {
        Some(s) => cert("affine_independence", s >= cfg.rank_tol, Some(s), "min singular value of differenced gradients"),
        None => cert("affine_independence", true, None, "vacuous: k = 1"),
    });
    items.push(cert(
        "unique_multipliers",
        red.lambda_star.is_some(),
        None,
        if red.lambda_star.is_some() { "lambda* unique" } else { "Lambda* is a polytope" },
    ));
    let min_lambda = red.lambda_used.iter().cloned().fold(f64::INFINITY, f64::min);
    items.push(cert(
        "strict_complementarity",
        red.strict_complementarity(),
        Some(min_lambda),
        format!("I+ = {:?}, I0 = {:?}", red.index_plus, red.index_zero),
    ));

    let b = &red.l_basis;
    let strsec = if b.ncols() == 0 {
        cert("second_order_on_L", true, None, "vacuous: L = {0}")
    } else {
        let q = b.transpose() * &red.h * b;
        let e = linalg::min_eigenvalue(&q).unwrap_or(f64::NAN);
        cert("second_order_on_L", e > 1e-8, Some(e), format!("min eigenvalue of B'HB, dim L = {}", b.ncols()))
    };
    items.push(strsec);

    items.push(sampled_cone_certificate(red, cfg));
    items.push(cert(
        "hessian_symmetry",
        red.h_asymmetry <= 1e-8,
        Some(red.h_asymmetry),
        "max |H - H'| / 2 before symmetrization",
    ));
    items.push(flag(
        "degenerate_k_eq_n_plus_1",
        k == n + 1,
        None,
        format!("k = {k}, n = {n}"),
    ));
    items.push(flag(
        "caratheodory_bound",
        k <= n + 1,
        None,
        "k <= n + 1",
    ));
    Certificates { items }
}

fn sampled_cone_certificate(red: &ReductionData, cfg: &ReductionConfig) -> Certificate {
    let name = "second_order_on_cone";
    if red.lambda_star.is_none() {
        return cert(name, false, None, "not certified: multipliers not unique");
    }
    let n = red.n();
    let mut min_ratio = f64::INFINITY;
    let mut used = 0usize;
    for r in 0..cfg.cone_rays {
        let mut rng = CounterRng::stream(cfg.ray_seed, r as u64);
        let mut h = DVector::zeros(n);
        rng.fill_normal(h.as_mut_slice());
        let Ok(v) = red.cone.project(&h) else {
            continue;
        };
        let norm2 = v.norm_squared();
        if norm2 <= 1e-24 {
            continue;
        }
        used += 1;
        min_ratio = min_ratio.min(v.dot(&(&red.h * &v)) / norm2);
    }
    if used == 0 {
        cert(name, true, None, format!("vacuous: all {} rays project to 0", cfg.cone_rays))
    } else {
        cert(
            name,
            min_ratio > 1e-8,
            Some(min_ratio),
            format!("min h'Hh/|h|^2 over {used} projected rays (sampled, not a proof)"),
        )
    }
}

/// Closed-form directional derivatives of the optimal value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaDeriv {
    /// `min over γ* of max over Ξ*(γ*) of η`.
    pub minsup: f64,
    /// `min over γ* of Σ λ_i η(γ*, ξ_i)`, when every `λ(γ*)` is unique.
    pub weighted: Option<f64>,
}

pub fn value_dirderiv_formula(
    problem: &ProblemSpec,
    minimizers: &[Vec<f64>],
    eta: &dyn Objective,
    cfg: &ReductionConfig,
) -> Result<FormulaDeriv> {
    if minimizers.is_empty() {
        return Err(Error::InvalidArgument("empty minimizer list".into()));
    }
    let obj = problem.population_objective()?;
    let mut minsup = f64::INFINITY;
    let mut weighted: Option<f64> = Some(f64::INFINITY);
    for g in minimizers {
        let active = detect_active_set(problem, &obj, g, cfg)?;
        let etas: Vec<f64> = active.iter().map(|p| eta.value(g, &p.xi)).collect();
        minsup = minsup.min(etas.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        let grads: Vec<DVector<f64>> = active
            .iter()
            .map(|p| obj.gradient(g, &p.xi).rows(0, problem.n).into_owned())
            .collect();
        weighted = match (weighted, lagrange_multipliers(&grads, cfg.rank_tol)?) {
            (Some(w), Multipliers::Unique { lambda }) => {
                Some(w.min(lambda.iter().zip(&etas).map(|(l, e)| l * e).sum()))
            }
            _ => None,
        };
    }
    Ok(FormulaDeriv { minsup, weighted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::builtin;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn unique(m: Multipliers) -> Vec<f64> {
        match m {
            Multipliers::Unique { lambda } => lambda,
            other => panic!("expected unique multipliers, got {other:?}"),
        }
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-14)
    }

    #[test]
    fn multipliers_of_small_systems() {
        assert!(close(&unique(lagrange_multipliers(&[v(&[0.0])], 1e-8).unwrap()), &[1.0]));
        let l = unique(lagrange_multipliers(&[v(&[-1.0]), v(&[1.0])], 1e-8).unwrap());
        assert!(close(&l, &[0.5, 0.5]));
        let l = unique(lagrange_multipliers(&[v(&[0.0]), v(&[1.0])], 1e-8).unwrap());
        assert!(close(&l, &[1.0, 0.0]));
        assert!(lagrange_multipliers(&[v(&[1.0])], 1e-8).is_err());
    }

    #[test]
    fn zero_gradients_give_simplex_vertices() {
        let m = lagrange_multipliers(&[v(&[0.0]), v(&[0.0])], 1e-8).unwrap();
        let verts = lambda_polytope_vertices(&m).unwrap();
        assert_eq!(verts.len(), 2);
        assert!(close(&verts[0], &[1.0, 0.0]) && close(&verts[1], &[0.0, 1.0]));
    }

    #[test]
    fn ridge_sets() {
        let p = builtin("ridge2d").unwrap();
        let r = reduce(&p, &[0.0, 0.0], &ReductionConfig::default()).unwrap();
        assert_eq!(r.index_plus, vec![0, 1]);
        assert_eq!(r.l_basis.ncols(), 1);
        assert!(r.l_basis[(0, 0)].abs() < 1e-12 && (r.l_basis[(1, 0)] - 1.0).abs() < 1e-12);
        for c in &r.certificates.items {
            assert!(c.diagnostic || c.pass, "{c:?}");
        }
    }

    #[test]
    fn saddle_schur_hessian() {
        let p = builtin("smooth_saddle(1)").unwrap();
        let r = reduce(&p, &[0.0], &ReductionConfig::default()).unwrap();
        assert_eq!(r.active_points[0].flag, PointFlag::Interior);
        assert!((r.hess_phi[0][(0, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cone_qp_fails_strict_complementarity() {
        let p = builtin("cone_qp").unwrap();
        let r = reduce(&p, &[0.0], &ReductionConfig::default()).unwrap();
        assert!(!r.certificates.passes("strict_complementarity"));
        assert_eq!(r.index_zero, vec![1]);
        assert_eq!(r.l_basis.ncols(), 1);
    }
}
