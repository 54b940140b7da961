//! Limiting laws of the sample optimal value and optimal solutions.
//!
//! The solution limit is `η̃(ℨ)` where `ℨ ~ N(0, Σ)` stacks the k
//! per-branch γ-gradient noises and `η̃` is the quadratic program
//!
//! ```text
//!     minimize    ηᵀ(Σ λ_i z_i) + ½ ηᵀ H η
//!     subject to  ηᵀ∇φ_i = 0 (i ∈ I₊),   ηᵀ∇φ_i ≤ 0 (i ∈ I₀).
//! ```
//!
//! Under strict complementarity the map is linear and the law Gaussian.
//! The value limit is a min over minimizers of a max over multiplier
//! vertices of linear forms in the Gaussian vector of `F` values.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, pairwise_sum, serde_matrix};
use crate::problem::{Dataset, Objective, ProblemSpec, XiPoint};
use crate::qp::DenseQp;
use crate::reduction::{
    detect_active_set, lagrange_multipliers, lambda_polytope_vertices, ActivePoint, Multipliers,
    PointFlag, ReductionConfig, ReductionData,
};
use crate::rng::CounterRng;
use crate::solver::epigraph::{self, Branch, Domain, LocalConfig};

/// Where a covariance comes from.
#[derive(Debug, Clone, Copy)]
pub enum CovarianceInput<'a> {
    /// Exact, from an integrand affine in `X` and the sampler's moments.
    Analytic,
    /// Sample covariance (divisor `N − 1`) over a dataset. `at_estimate`
    /// records that the evaluation point is an estimate, not `γ*`.
    Plugin { dataset: &'a Dataset, at_estimate: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceSource {
    Analytic,
    Plugin { n: usize, seed: Option<u64>, at_estimate: bool },
}

impl CovarianceInput<'_> {
    fn source(&self) -> CovarianceSource {
        match self {
            CovarianceInput::Analytic => CovarianceSource::Analytic,
            CovarianceInput::Plugin { dataset, at_estimate } => CovarianceSource::Plugin {
                n: dataset.len(),
                seed: dataset.seed,
                at_estimate: *at_estimate,
            },
        }
    }
}

/// Covariance of `v(X)` for a vector-valued function of one draw.
fn covariance_of(
    problem: &ProblemSpec,
    input: CovarianceInput<'_>,
    v: &dyn Fn(&[f64]) -> DVector<f64>,
) -> Result<DMatrix<f64>> {
    match input {
        CovarianceInput::Analytic => {
            if !problem.integrand.affine_in_x() {
                return Err(Error::Capability(
                    "analytic covariance needs an integrand affine in X".into(),
                ));
            }
            let (_, cov) = problem.sampler.moments().ok_or_else(|| {
                Error::Capability("analytic covariance needs sampler moments".into())
            })?;
            let d = problem.x_dim();
            let base = v(&vec![0.0; d]);
            let mut jac = DMatrix::zeros(base.len(), d);
            for j in 0..d {
                let mut e = vec![0.0; d];
                e[j] = 1.0;
                jac.set_column(j, &(v(&e) - &base));
            }
            let (sym, _) = linalg::symmetrize(&(&jac * cov * jac.transpose()));
            Ok(sym)
        }
        CovarianceInput::Plugin { dataset, .. } => {
            let nrows = dataset.len();
            if nrows < 2 {
                return Err(Error::InvalidArgument("plug-in covariance needs N >= 2".into()));
            }
            let vals: Vec<DVector<f64>> = dataset.rows().map(v).collect();
            let p = vals[0].len();
            let mut col = vec![0.0; nrows];
            let mean = DVector::from_fn(p, |i, _| {
                for (c, r) in col.iter_mut().zip(&vals) {
                    *c = r[i];
                }
                pairwise_sum(&col) / nrows as f64
            });
            let mut cov = DMatrix::zeros(p, p);
            for a in 0..p {
                for b in a..p {
                    for (c, r) in col.iter_mut().zip(&vals) {
                        *c = (r[a] - mean[a]) * (r[b] - mean[b]);
                    }
                    let s = pairwise_sum(&col) / (nrows - 1) as f64;
                    cov[(a, b)] = s;
                    cov[(b, a)] = s;
                }
            }
            Ok(cov)
        }
    }
}

/// `Σ`: covariance of the stacked `∇_γ F(X, γ, ξ_i)`, `nk × nk`.
pub fn sigma_solution(
    problem: &ProblemSpec,
    gamma: &[f64],
    points: &[XiPoint],
    input: CovarianceInput<'_>,
) -> Result<(DMatrix<f64>, CovarianceSource)> {
    let n = problem.n;
    let f = &problem.integrand;
    let stacked = |x: &[f64]| {
        let mut out = DVector::zeros(n * points.len());
        for (i, xi) in points.iter().enumerate() {
            let g = f.gradient(x, gamma, xi);
            out.rows_mut(i * n, n).copy_from(&g.rows(0, n));
        }
        out
    };
    Ok((covariance_of(problem, input, &stacked)?, input.source()))
}

/// Covariance of `∇_γ F − ∇²_γξ f (∇²_ξξ f)⁻¹ ∇_ξ F` stacked over the
/// active points: the γ-gradient noise including the first-order
/// response of interior sample maximizers. Isolated points contribute
/// `∇_γ F` unchanged. Diagnostic only.
pub fn sigma_solution_xi_adjusted(
    problem: &ProblemSpec,
    reduction: &ReductionData,
    input: CovarianceInput<'_>,
) -> Result<DMatrix<f64>> {
    let n = problem.n;
    let gamma = &reduction.gamma_star;
    let pop = problem.population_objective()?;
    let mut coupling = Vec::new();
    for p in &reduction.active_points {
        coupling.push(match p.flag {
            PointFlag::Isolated => None,
            PointFlag::Interior => {
                let h = pop.hessian(gamma, &p.xi)?;
                let m = h.nrows() - n;
                let hxx = h.view((n, n), (m, m)).into_owned();
                let hgx = h.view((0, n), (n, m)).into_owned();
                let c = hxx
                    .lu()
                    .solve(&hgx.transpose())
                    .ok_or_else(|| Error::assumption("nonsingular xi-Hessian at active points", "singular"))?
                    .transpose();
                Some(c)
            }
        });
    }
    let f = &problem.integrand;
    let stacked = |x: &[f64]| {
        let k = reduction.active_points.len();
        let mut out = DVector::zeros(n * k);
        for (i, p) in reduction.active_points.iter().enumerate() {
            let g = f.gradient(x, gamma, &p.xi);
            let mut v = g.rows(0, n).into_owned();
            if let Some(c) = &coupling[i] {
                v -= c * g.rows(n, g.len() - n);
            }
            out.rows_mut(i * n, n).copy_from(&v);
        }
        out
    };
    covariance_of(problem, input, &stacked)
}

/// Covariance of `(F(X, γ_a, ξ_ai))` over the listed pairs.
pub fn sigma_value(
    problem: &ProblemSpec,
    pairs: &[(Vec<f64>, XiPoint)],
    input: CovarianceInput<'_>,
) -> Result<(DMatrix<f64>, CovarianceSource)> {
    let f = &problem.integrand;
    let vals = |x: &[f64]| DVector::from_iterator(pairs.len(), pairs.iter().map(|(g, xi)| f.value(x, g, xi)));
    Ok((covariance_of(problem, input, &vals)?, input.source()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionMode {
    QpSampler,
    GaussianStrictComplementarity,
    SandwichK1,
    DegenerateZero,
}

/// The law of `lim √N (γ̂_N − γ*)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionLimitModel {
    pub mode: SolutionMode,
    /// `Σ` after clipping to the PSD cone.
    #[serde(with = "serde_matrix")]
    pub sigma: DMatrix<f64>,
    pub sigma_source: CovarianceSource,
    /// Limit covariance for the Gaussian modes.
    #[serde(with = "opt_matrix")]
    pub limit_cov: Option<DMatrix<f64>>,
    pub reduction: ReductionData,
}

mod opt_matrix {
    use crate::linalg::MatrixJson;
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<DMatrix<f64>>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(MatrixJson::from).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DMatrix<f64>>, D::Error> {
        Ok(Option::<MatrixJson>::deserialize(d)?.map(|m| DMatrix::from(&m)))
    }
}

fn unique_lambda(red: &ReductionData) -> Result<&[f64]> {
    red.lambda_star
        .as_deref()
        .ok_or_else(|| Error::assumption("unique multipliers", "Lambda* is not a singleton"))
}

impl SolutionLimitModel {
    pub fn new(reduction: ReductionData, sigma: DMatrix<f64>, sigma_source: CovarianceSource) -> Result<Self> {
        let nk = reduction.n() * reduction.k();
        if sigma.shape() != (nk, nk) {
            return Err(Error::InvalidArgument(format!(
                "Sigma must be {nk}x{nk}, got {:?}",
                sigma.shape()
            )));
        }
        unique_lambda(&reduction)?;
        let sigma = linalg::clip_psd(&sigma)?;
        let (mode, limit_cov) = if reduction.k() == 1 {
            (SolutionMode::SandwichK1, Some(gaussian_solution_limit(&reduction, &sigma)?))
        } else if reduction.strict_complementarity() {
            let cov = gaussian_solution_limit(&reduction, &sigma)?;
            if reduction.l_basis.ncols() == 0 {
                (SolutionMode::DegenerateZero, Some(cov))
            } else {
                (SolutionMode::GaussianStrictComplementarity, Some(cov))
            }
        } else {
            (SolutionMode::QpSampler, None)
        };
        Ok(Self {
            mode,
            sigma,
            sigma_source,
            limit_cov,
            reduction,
        })
    }
}

/// `η̃(z)` by exhaustive active-set enumeration over `I₀`.
pub fn qp_eta(red: &ReductionData, z: &[f64]) -> Result<DVector<f64>> {
    let n = red.n();
    let k = red.k();
    if z.len() != n * k {
        return Err(Error::InvalidArgument(format!("z must have length {}", n * k)));
    }
    let lambda = unique_lambda(red)?;
    let mut c = DVector::zeros(n);
    for (i, l) in lambda.iter().enumerate() {
        for j in 0..n {
            c[j] += l * z[i * n + j];
        }
    }
    let rows = |idx: &[usize]| DMatrix::from_fn(idx.len(), n, |r, col| red.grad_phi[idx[r]][col]);
    let qp = DenseQp::new(red.h.clone(), c)
        .with_equalities(rows(&red.index_plus), DVector::zeros(red.index_plus.len()))
        .with_inequalities(rows(&red.index_zero), DVector::zeros(red.index_zero.len()));
    Ok(qp.solve()?.x)
}

/// `K⁻¹ diag(Cov Y, 0) K⁻¹` upper-left block, `K = [[H, A], [Aᵀ, 0]]`.
pub fn block_limit_cov(red: &ReductionData, sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = red.n();
    let lambda = unique_lambda(red)?;
    let a = &red.a;
    let q = n + a.ncols();
    let mut kmat = DMatrix::zeros(q, q);
    kmat.view_mut((0, 0), (n, n)).copy_from(&red.h);
    kmat.view_mut((0, n), (n, a.ncols())).copy_from(a);
    kmat.view_mut((n, 0), (a.ncols(), n)).copy_from(&a.transpose());
    let sv = linalg::singular_values(&kmat);
    let (smin, smax) = (sv.min(), sv.max());
    if smin <= 0.0 || smax / smin > 1e12 {
        return Err(Error::assumption(
            "affine independence and second-order condition",
            format!("block KKT matrix is singular (condition {:.3e})", smax / smin.max(f64::MIN_POSITIVE)),
        ));
    }
    let kinv = kmat
        .try_inverse()
        .ok_or_else(|| Error::assumption("affine independence and second-order condition", "singular block matrix"))?;
    let mut cov_y = DMatrix::zeros(n, n);
    for (i, li) in lambda.iter().enumerate() {
        for (j, lj) in lambda.iter().enumerate() {
            cov_y += sigma.view((i * n, j * n), (n, n)) * (li * lj);
        }
    }
    let mut d = DMatrix::zeros(q, q);
    d.view_mut((0, 0), (n, n)).copy_from(&cov_y);
    let m = &kinv * d * &kinv;
    let (sym, _) = linalg::symmetrize(&m.view((0, 0), (n, n)).into_owned());
    Ok(sym)
}

/// Gaussian limit covariance: `H⁻¹ Σ H⁻¹` for one active point, the block
/// formula under strict complementarity, zero when `𝓛 = {0}`.
pub fn gaussian_solution_limit(red: &ReductionData, sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = red.n();
    unique_lambda(red)?;
    if red.k() == 1 {
        let hinv = red
            .h
            .clone()
            .try_inverse()
            .filter(|_| linalg::min_singular_value(&red.h).is_some_and(|s| s > 1e-12))
            .ok_or_else(|| Error::assumption("second-order condition", "H is singular"))?;
        let (sym, _) = linalg::symmetrize(&(&hinv * sigma * &hinv));
        return Ok(sym);
    }
    if !red.strict_complementarity() {
        return Err(Error::assumption(
            "strict complementarity",
            format!("I0 = {:?} is nonempty; use the QP sampler", red.index_zero),
        ));
    }
    if red.l_basis.ncols() == 0 {
        return Ok(DMatrix::zeros(n, n));
    }
    block_limit_cov(red, sigma)
}

/// `S` draws of `N(0, cov)`, one row per draw; draw `s` uses stream `mix(seed, s)`.
pub fn sample_gaussian(cov: &DMatrix<f64>, s: usize, seed: u64) -> Result<DMatrix<f64>> {
    let factor = linalg::psd_factor(cov)?;
    let p = cov.nrows();
    let rows: Vec<Vec<f64>> = (0..s)
        .into_par_iter()
        .map(|i| {
            let mut w = DVector::zeros(p);
            CounterRng::stream(seed, i as u64).fill_normal(w.as_mut_slice());
            (&factor * w).iter().copied().collect()
        })
        .collect();
    Ok(rows_to_matrix(&rows, p))
}

fn rows_to_matrix(rows: &[Vec<f64>], cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c])
}

/// `S` draws of `η̃(ℨ)`, `ℨ ~ N(0, Σ)`, as an `S × n` matrix.
///
/// The QP map is used in every mode, so Gaussian modes can be cross-checked
/// against their closed forms.
pub fn sample_solution_limit(model: &SolutionLimitModel, s: usize, seed: u64) -> Result<DMatrix<f64>> {
    let red = &model.reduction;
    let n = red.n();
    let factor = linalg::psd_factor(&model.sigma)?;
    let p = factor.nrows();
    let rows: Vec<Result<Vec<f64>>> = (0..s)
        .into_par_iter()
        .map(|i| {
            let mut w = DVector::zeros(p);
            CounterRng::stream(seed, i as u64).fill_normal(w.as_mut_slice());
            let z = &factor * w;
            qp_eta(red, z.as_slice())
                .map(|e| e.iter().copied().collect())
                .map_err(|e| Error::Draw {
                    index: i,
                    source: Box::new(e),
                })
        })
        .collect();
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    Ok(rows_to_matrix(&rows, n))
}

/// Minimizes the local quadratic model
/// `max_i δᵀ(∇φ_i + z_i) + ½ δᵀ∇²φ_i δ` over `‖δ‖ ≤ radius`.
pub fn solve_quadratic_model(red: &ReductionData, z: &[f64], radius: f64) -> Result<DVector<f64>> {
    let n = red.n();
    let k = red.k();
    if z.len() != n * k {
        return Err(Error::InvalidArgument(format!("z must have length {}", n * k)));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    let lin: Vec<DVector<f64>> = (0..k)
        .map(|i| &red.grad_phi[i] + DVector::from_column_slice(&z[i * n..(i + 1) * n]))
        .collect();
    let family = |d: &[f64]| -> Vec<Branch> {
        let dv = DVector::from_column_slice(d);
        (0..k)
            .map(|i| {
                let hd = &red.hess_phi[i] * &dv;
                Branch {
                    key: XiPoint::listed(i, Vec::new()),
                    value: dv.dot(&lin[i]) + 0.5 * dv.dot(&hd),
                    grad: &lin[i] + hd,
                    hess: red.hess_phi[i].clone(),
                }
            })
            .collect()
    };
    let cfg = LocalConfig {
        max_iter: 200,
        kkt_tol: 1e-12,
        act_rel: 1e-5,
        max_branches: k,
    };
    let res = epigraph::local_solve(&family, Domain::Ball(radius), &vec![0.0; n], &cfg);
    let delta = DVector::from_vec(res.gamma);
    if delta.norm() >= radius * (1.0 - 1e-9) {
        return Err(Error::RadiusTooSmall { radius });
    }
    if !res.converged {
        return Err(Error::Solver(format!(
            "quadratic model did not converge (residual {:.3e})",
            res.kkt_residual
        )));
    }
    Ok(delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueMode {
    GaussianScalar,
    MinSupMixture,
}

/// One population minimizer with its active points and multiplier vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueMinimizer {
    pub gamma: Vec<f64>,
    pub active_points: Vec<ActivePoint>,
    /// `Λ*(γ)` vertices; a single entry when the multipliers are unique.
    pub vertices: Vec<Vec<f64>>,
    pub unique: bool,
}

/// The law of `lim √N (θ̂_N − θ*)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueLimitModel {
    pub mode: ValueMode,
    pub minimizers: Vec<ValueMinimizer>,
    /// Covariance of the `F` values over all listed (γ, ξ) pairs, in order.
    #[serde(with = "serde_matrix")]
    pub cov_f: DMatrix<f64>,
    pub cov_source: CovarianceSource,
    /// `λᵀ covF λ` in the scalar Gaussian mode.
    pub sigma2: Option<f64>,
}

impl ValueLimitModel {
    pub fn from_parts(minimizers: Vec<ValueMinimizer>, cov_f: DMatrix<f64>, cov_source: CovarianceSource) -> Result<Self> {
        if minimizers.is_empty() {
            return Err(Error::InvalidArgument("empty minimizer list".into()));
        }
        let total: usize = minimizers.iter().map(|m| m.active_points.len()).sum();
        if cov_f.shape() != (total, total) {
            return Err(Error::InvalidArgument(format!(
                "covF must be {total}x{total}, got {:?}",
                cov_f.shape()
            )));
        }
        let cov_f = linalg::clip_psd(&cov_f)?;
        let scalar = minimizers.len() == 1 && minimizers[0].unique;
        let sigma2 = scalar.then(|| {
            let l = DVector::from_column_slice(&minimizers[0].vertices[0]);
            l.dot(&(&cov_f * &l)).max(0.0)
        });
        Ok(Self {
            mode: if scalar { ValueMode::GaussianScalar } else { ValueMode::MinSupMixture },
            minimizers,
            cov_f,
            cov_source,
            sigma2,
        })
    }

    /// `min_a max_{λ ∈ vert Λ*(γ_a)} Σ_i λ_i 𝓕(γ_a, ξ_ai)` for one draw of 𝓕.
    pub fn functional(&self, f: &[f64]) -> f64 {
        let mut offset = 0;
        let mut best = f64::INFINITY;
        for m in &self.minimizers {
            let k = m.active_points.len();
            let block = &f[offset..offset + k];
            let sup = m
                .vertices
                .iter()
                .map(|l| l.iter().zip(block).map(|(a, b)| a * b).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            best = best.min(sup);
            offset += k;
        }
        best
    }
}

/// Builds the value-limit model at the listed population minimizers.
pub fn value_limit_model(
    problem: &ProblemSpec,
    minimizers: &[Vec<f64>],
    input: CovarianceInput<'_>,
    cfg: &ReductionConfig,
) -> Result<ValueLimitModel> {
    let obj = problem.population_objective()?;
    let mut out = Vec::new();
    let mut pairs = Vec::new();
    for g in minimizers {
        let active = detect_active_set(problem, &obj, g, cfg)?;
        let grads: Vec<DVector<f64>> = active
            .iter()
            .map(|p| obj.gradient(g, &p.xi).rows(0, problem.n).into_owned())
            .collect();
        let mult = lagrange_multipliers(&grads, cfg.rank_tol)?;
        let unique = matches!(mult, Multipliers::Unique { .. });
        let vertices = lambda_polytope_vertices(&mult)?;
        for p in &active {
            pairs.push((g.clone(), p.xi.clone()));
        }
        out.push(ValueMinimizer {
            gamma: g.clone(),
            active_points: active,
            vertices,
            unique,
        });
    }
    let (cov, source) = sigma_value(problem, &pairs, input)?;
    ValueLimitModel::from_parts(out, cov, source)
}

/// `S` draws of the value limit; draw `s` uses stream `mix(seed, s)`.
pub fn sample_value_limit(model: &ValueLimitModel, s: usize, seed: u64) -> Result<Vec<f64>> {
    if let Some(s2) = model.sigma2 {
        let sd = s2.sqrt();
        return Ok((0..s)
            .into_par_iter()
            .map(|i| sd * CounterRng::stream(seed, i as u64).standard_normal())
            .collect());
    }
    let factor = linalg::psd_factor(&model.cov_f)?;
    let p = factor.nrows();
    Ok((0..s)
        .into_par_iter()
        .map(|i| {
            let mut w = DVector::zeros(p);
            CounterRng::stream(seed, i as u64).fill_normal(w.as_mut_slice());
            let f = &factor * w;
            model.functional(f.as_slice())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::builtin;
    use crate::reduction::reduce;

    #[test]
    fn cone_qp_clamp() {
        let p = builtin("cone_qp").unwrap();
        let r = reduce(&p, &[0.0], &ReductionConfig::default()).unwrap();
        assert!((qp_eta(&r, &[1.0, 0.3]).unwrap()[0] + 1.0).abs() < 1e-12);
        assert!(qp_eta(&r, &[-0.5, 0.3]).unwrap()[0].abs() < 1e-12);
    }

    #[test]
    fn ridge_limit_is_on_l() {
        let p = builtin("ridge2d").unwrap();
        let r = reduce(&p, &[0.0, 0.0], &ReductionConfig::default()).unwrap();
        let eta = qp_eta(&r, &[0.1, 0.2, 0.1, 0.4]).unwrap();
        assert!(eta[0].abs() < 1e-12 && (eta[1] + 0.3).abs() < 1e-12);
        let (sigma, _) = sigma_solution(&p, &[0.0, 0.0], &[XiPoint::listed(0, vec![]), XiPoint::listed(1, vec![])], CovarianceInput::Analytic).unwrap();
        assert!((sigma - DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);
    }

    #[test]
    fn saddle_sandwich() {
        let p = builtin("smooth_saddle(1)").unwrap();
        let r = reduce(&p, &[0.0], &ReductionConfig::default()).unwrap();
        let pts: Vec<XiPoint> = r.active_points.iter().map(|a| a.xi.clone()).collect();
        let (sigma, src) = sigma_solution(&p, &[0.0], &pts, CovarianceInput::Analytic).unwrap();
        let m = SolutionLimitModel::new(r, sigma, src).unwrap();
        assert_eq!(m.mode, SolutionMode::SandwichK1);
        assert!((m.limit_cov.unwrap()[(0, 0)] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn quadratic_model_tracks_cone_qp() {
        let p = builtin("cone_qp").unwrap();
        let r = reduce(&p, &[0.0], &ReductionConfig::default()).unwrap();
        let d = solve_quadratic_model(&r, &[1e-3, 0.0], 1.0).unwrap();
        assert!((d[0] + 1e-3).abs() < 1e-12, "{}", d[0]);
    }
}
