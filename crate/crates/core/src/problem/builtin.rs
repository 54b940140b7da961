//! Built-in analytic test problems with known ground truth.
//!
//! Every `X` component is an independent standard normal. Ground-truth
//! records are literal numbers worked out by hand; tests compare the
//! pipeline against them.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    BoxSet, Integrand, LabeledPoint, PopulationOracle, ProblemSpec, StandardNormalSampler,
    XiPoint, XiSet,
};
use crate::error::{Error, Result};

/// Known solution data for a built-in problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub gamma_star: Vec<f64>,
    pub theta_star: f64,
    pub active_points: Vec<XiPoint>,
    pub lambda_star: Vec<f64>,
    /// `∇φ_i(γ*)`, one row per active point.
    pub grad_phi: Vec<Vec<f64>>,
    /// `H = Σ λ_i ∇²φ_i(γ*)`.
    pub hessian_h: Vec<Vec<f64>>,
    /// Covariance of the stacked `∇_γ F(X, γ*, ξ_i*)` (nk × nk).
    pub sigma_solution: Vec<Vec<f64>>,
    /// Covariance of `(F(X, γ*, ξ_i*))_i` (k × k).
    pub cov_values: Vec<Vec<f64>>,
    /// `Var[Σ λ_i F(X, γ*, ξ_i*)]`.
    pub sigma2_value: f64,
    /// Covariance of the Gaussian solution limit, when the limit is Gaussian.
    pub solution_limit_cov: Option<Vec<Vec<f64>>>,
    /// Whether γ* locally minimizes `f(·, ξ*)` for every active ξ*.
    pub local_minimizer_condition: bool,
}

pub fn registry() -> Vec<String> {
    ["paper_example", "smooth_saddle(b)", "vee_value", "cone_qp", "ridge2d"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// Look up a built-in by name. `smooth_saddle` accepts an optional
/// coupling argument, e.g. `smooth_saddle(2.5)`; the default is `b = 1`.
pub fn builtin(name: &str) -> Result<ProblemSpec> {
    let name = name.trim();
    let unknown = || Error::UnknownProblem {
        name: name.to_string(),
        registry: registry(),
    };
    if let Some(rest) = name.strip_prefix("smooth_saddle") {
        let b = if rest.is_empty() {
            1.0
        } else {
            rest.strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|r| r.trim().parse::<f64>().ok())
                .filter(|b| b.is_finite())
                .ok_or_else(unknown)?
        };
        return Ok(smooth_saddle(b));
    }
    match name {
        "paper_example" => Ok(paper_example()),
        "vee_value" => Ok(vee_value()),
        "cone_qp" => Ok(cone_qp()),
        "ridge2d" => Ok(ridge2d()),
        _ => Err(unknown()),
    }
}

fn two_labels() -> XiSet {
    XiSet::FiniteList(vec![
        LabeledPoint {
            label: "xi1".into(),
            coords: vec![],
        },
        LabeledPoint {
            label: "xi2".into(),
            coords: vec![],
        },
    ])
}

fn listed(i: usize) -> XiPoint {
    XiPoint::listed(i, vec![])
}

fn branch(xi: &XiPoint) -> usize {
    xi.index.expect("listed point")
}

fn scalar(v: f64) -> DVector<f64> {
    DVector::from_element(1, v)
}

fn scalar_m(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

// ---------------------------------------------------------------- paper_example

/// f(γ,ξ₁) = −γ, f(γ,ξ₂) = γ on Γ = [−1, 1]; no randomness.
struct PaperExample;

impl PaperExample {
    fn slope(xi: &XiPoint) -> f64 {
        if branch(xi) == 0 {
            -1.0
        } else {
            1.0
        }
    }
}

impl Integrand for PaperExample {
    fn value(&self, _x: &[f64], gamma: &[f64], xi: &XiPoint) -> f64 {
        Self::slope(xi) * gamma[0]
    }
    fn gradient(&self, _x: &[f64], _gamma: &[f64], xi: &XiPoint) -> DVector<f64> {
        scalar(Self::slope(xi))
    }
    fn hessian(&self, _x: &[f64], _gamma: &[f64], _xi: &XiPoint) -> Option<DMatrix<f64>> {
        Some(scalar_m(0.0))
    }
    fn affine_in_x(&self) -> bool {
        true
    }
}

impl PopulationOracle for PaperExample {
    fn value(&self, gamma: &[f64], xi: &XiPoint) -> f64 {
        Self::slope(xi) * gamma[0]
    }
    fn gradient(&self, _gamma: &[f64], xi: &XiPoint) -> DVector<f64> {
        scalar(Self::slope(xi))
    }
    fn hessian(&self, _gamma: &[f64], _xi: &XiPoint) -> Option<DMatrix<f64>> {
        Some(scalar_m(0.0))
    }
}

fn paper_example() -> ProblemSpec {
    ProblemSpec {
        name: "paper_example".into(),
        n: 1,
        m: 0,
        gamma_set: BoxSet::cube(1, -1.0, 1.0),
        xi_set: two_labels(),
        integrand: Arc::new(PaperExample),
        sampler: Arc::new(StandardNormalSampler { dim: 0 }),
        population: Some(Arc::new(PaperExample)),
        population_fallback: None,
        ground_truth: Some(GroundTruth {
            // max{−γ, γ} = |γ| is minimized at 0 with both branches active.
            gamma_star: vec![0.0],
            theta_star: 0.0,
            active_points: vec![listed(0), listed(1)],
            // −λ₁ + λ₂ = 0, λ₁ + λ₂ = 1.
            lambda_star: vec![0.5, 0.5],
            grad_phi: vec![vec![-1.0], vec![1.0]],
            hessian_h: vec![vec![0.0]],
            sigma_solution: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            cov_values: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            sigma2_value: 0.0,
            solution_limit_cov: None,
            // γ* = 0 does not minimize −γ locally.
            local_minimizer_condition: false,
        }),
    }
}

// ---------------------------------------------------------------- smooth_saddle

/// F = ½γ² + bγξ − ½ξ² + X₁γ + X₂ξ on Γ = Ξ = [−2, 2].
struct SmoothSaddle {
    b: f64,
}

impl Integrand for SmoothSaddle {
    fn value(&self, x: &[f64], gamma: &[f64], xi: &XiPoint) -> f64 {
        let (g, s) = (gamma[0], xi.coords[0]);
        0.5 * g * g + self.b * g * s - 0.5 * s * s + x[0] * g + x[1] * s
    }
    fn gradient(&self, x: &[f64], gamma: &[f64], xi: &XiPoint) -> DVector<f64> {
        let (g, s) = (gamma[0], xi.coords[0]);
        DVector::from_vec(vec![g + self.b * s + x[0], self.b * g - s + x[1]])
    }
    fn hessian(&self, _x: &[f64], _gamma: &[f64], _xi: &XiPoint) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_row_slice(2, 2, &[1.0, self.b, self.b, -1.0]))
    }
    fn affine_in_x(&self) -> bool {
        true
    }
}

impl PopulationOracle for SmoothSaddle {
    fn value(&self, gamma: &[f64], xi: &XiPoint) -> f64 {
        let (g, s) = (gamma[0], xi.coords[0]);
        0.5 * g * g + self.b * g * s - 0.5 * s * s
    }
    fn gradient(&self, gamma: &[f64], xi: &XiPoint) -> DVector<f64> {
        let (g, s) = (gamma[0], xi.coords[0]);
        DVector::from_vec(vec![g + self.b * s, self.b * g - s])
    }
    fn hessian(&self, _gamma: &[f64], _xi: &XiPoint) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_row_slice(2, 2, &[1.0, self.b, self.b, -1.0]))
    }
}

fn smooth_saddle(b: f64) -> ProblemSpec {
    // ξ*(γ) = bγ, φ(γ) = ½(1 + b²)γ², so γ* = ξ* = 0 and H = 1 + b².
    // ∇_γ F(X, 0, 0) = X₁ gives Σ = [1]; F(X, 0, 0) = 0 gives σ² = 0.
    let h = 1.0 + b * b;
    let truth = if b == 1.0 {
        GroundTruth {
            gamma_star: vec![0.0],
            theta_star: 0.0,
            active_points: vec![XiPoint::at(vec![0.0])],
            lambda_star: vec![1.0],
            grad_phi: vec![vec![0.0]],
            hessian_h: vec![vec![2.0]],
            sigma_solution: vec![vec![1.0]],
            cov_values: vec![vec![0.0]],
            sigma2_value: 0.0,
            // H⁻¹ Σ H⁻¹ = 1/4.
            solution_limit_cov: Some(vec![vec![0.25]]),
            local_minimizer_condition: true,
        }
    } else {
        GroundTruth {
            gamma_star: vec![0.0],
            theta_star: 0.0,
            active_points: vec![XiPoint::at(vec![0.0])],
            lambda_star: vec![1.0],
            grad_phi: vec![vec![0.0]],
            hessian_h: vec![vec![h]],
            sigma_solution: vec![vec![1.0]],
            cov_values: vec![vec![0.0]],
            sigma2_value: 0.0,
            solution_limit_cov: Some(vec![vec![1.0 / (h * h)]]),
            local_minimizer_condition: true,
        }
    };
    let name = if b == 1.0 {
        "smooth_saddle".to_string()
    } else {
        format!("smooth_saddle({b})")
    };
    ProblemSpec {
        name,
        n: 1,
        m: 1,
        gamma_set: BoxSet::cube(1, -2.0, 2.0),
        xi_set: XiSet::Box(BoxSet::cube(1, -2.0, 2.0)),
        integrand: Arc::new(SmoothSaddle { b }),
        sampler: Arc::new(StandardNormalSampler { dim: 2 }),
        population: Some(Arc::new(SmoothSaddle { b })),
        population_fallback: None,
        ground_truth: Some(truth),
    }
}

// ---------------------------------------------------------------- vee_value

/// F(X,γ,ξ₁) = −γ + ½γ² + X₁, F(X,γ,ξ₂) = γ + ½γ² + X₂ on Γ = [−2, 2].
struct VeeValue;

impl VeeValue {
    fn slope(xi: &XiPoint) -> f64 {
        if branch(xi) == 0 {
            -1.0
        } else {
            1.0
        }
    }
}

impl Integrand for VeeValue {
    fn value(&self, x: &[f64], gamma: &[f64], xi: &XiPoint) -> f64 {
        let g = gamma[0];
        Self::slope(xi) * g + 0.5 * g * g + x[branch(xi)]
    }
    fn gradient(&self, _x: &[f64], gamma: &[f64], xi: &XiPoint) -> DVector<f64> {
        scalar(Self::slope(xi) + gamma[0])
    }
    fn hessian(&self, _x: &[f64], _gamma: &[f64], _xi: &XiPoint) -> Option<DMatrix<f64>> {
        Some(scalar_m(1.0))
    }
    fn affine_in_x(&self) -> bool {
        true
    }
}

impl PopulationOracle for VeeValue {
    fn value(&self, gamma: &[f64], xi: &XiPoint) -> f64 {
        let g = gamma[0];
        Self::slope(xi) * g + 0.5 * g * g
    }
    fn gradient(&self, gamma: &[f64], xi: &XiPoint) -> DVector<f64> {
        scalar(Self::slope(xi) + gamma[0])
    }
    fn hessian(&self, _gamma: &[f64], _xi: &XiPoint) -> Option<DMatrix<f64>> {
        Some(scalar_m(1.0))
    }
}

fn vee_value() -> ProblemSpec {
    ProblemSpec {
        name: "vee_value".into(),
        n: 1,
        m: 0,
        gamma_set: BoxSet::cube(1, -2.0, 2.0),
        xi_set: two_labels(),
        integrand: Arc::new(VeeValue),
        sampler: Arc::new(StandardNormalSampler { dim: 2 }),
        population: Some(Arc::new(VeeValue)),
        population_fallback: None,
        ground_truth: Some(GroundTruth {
            // φ(γ) = |γ| + ½γ², minimized at 0 with value 0.
            gamma_star: vec![0.0],
            theta_star: 0.0,
            active_points: vec![listed(0), listed(1)],
            // −λ₁ + λ₂ = 0, λ₁ + λ₂ = 1.
            lambda_star: vec![0.5, 0.5],
            grad_phi: vec![vec![-1.0], vec![1.0]],
            hessian_h: vec![vec![1.0]],
            // ∇_γ F is deterministic.
            sigma_solution: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            // F(X, 0, ξ_i) = X_i.
            cov_values: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            // ¼ + ¼.
            sigma2_value: 0.5,
            // k = n + 1: the solution limit is identically zero.
            solution_limit_cov: Some(vec![vec![0.0]]),
            local_minimizer_condition: false,
        }),
    }
}

// ---------------------------------------------------------------- cone_qp

/// F(X,γ,ξ₁) = ½γ² + γX₁, F(X,γ,ξ₂) = γ + γ² + γX₂ on Γ = [−2, 2].
struct ConeQp;

impl Integrand for ConeQp {
    fn value(&self, x: &[f64], gamma: &[f64], xi: &XiPoint) -> f64 {
        let g = gamma[0];
        match branch(xi) {
            0 => 0.5 * g * g + g * x[0],
            _ => g + g * g + g * x[1],
        }
    }
    fn gradient(&self, x: &[f64], gamma: &[f64], xi: &XiPoint) -> DVector<f64> {
        let g = gamma[0];
        scalar(match branch(xi) {
            0 => g + x[0],
            _ => 1.0 + 2.0 * g + x[1],
        })
    }
    fn hessian(&self, _x: &[f64], _gamma: &[f64], xi: &XiPoint) -> Option<DMatrix<f64>> {
        Some(scalar_m(if branch(xi) == 0 { 1.0 } else { 2.0 }))
    }
    fn affine_in_x(&self) -> bool {
        true
    }
}

impl PopulationOracle for ConeQp {
    fn value(&self, gamma: &[f64], xi: &XiPoint) -> f64 {
        let g = gamma[0];
        match branch(xi) {
            0 => 0.5 * g * g,
            _ => g + g * g,
        }
    }
    fn gradient(&self, gamma: &[f64], xi: &XiPoint) -> DVector<f64> {
        let g = gamma[0];
        scalar(match branch(xi) {
            0 => g,
            _ => 1.0 + 2.0 * g,
        })
    }
    fn hessian(&self, _gamma: &[f64], xi: &XiPoint) -> Option<DMatrix<f64>> {
        Some(scalar_m(if branch(xi) == 0 { 1.0 } else { 2.0 }))
    }
}

fn cone_qp() -> ProblemSpec {
    ProblemSpec {
        name: "cone_qp".into(),
        n: 1,
        m: 0,
        gamma_set: BoxSet::cube(1, -2.0, 2.0),
        xi_set: two_labels(),
        integrand: Arc::new(ConeQp),
        sampler: Arc::new(StandardNormalSampler { dim: 2 }),
        population: Some(Arc::new(ConeQp)),
        population_fallback: None,
        ground_truth: Some(GroundTruth {
            // φ = ½γ² for γ ≤ 0 and γ + γ² for γ ≥ 0; both branches are 0 at γ = 0.
            gamma_star: vec![0.0],
            theta_star: 0.0,
            active_points: vec![listed(0), listed(1)],
            // 0·λ₁ + 1·λ₂ = 0 forces λ = (1, 0).
            lambda_star: vec![1.0, 0.0],
            grad_phi: vec![vec![0.0], vec![1.0]],
            hessian_h: vec![vec![1.0]],
            // ∇_γ F(X, 0, ξ_i) = (X₁, 1 + X₂).
            sigma_solution: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            // F(X, 0, ξ_i) = 0.
            cov_values: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            sigma2_value: 0.0,
            // Limit law is −max(Z₁, 0), not Gaussian.
            solution_limit_cov: None,
            local_minimizer_condition: false,
        }),
    }
}

// ---------------------------------------------------------------- ridge2d

/// F(X,γ,ξ₁) = −γ₁ + ½‖γ‖² + γᵀX⁽¹⁾, F(X,γ,ξ₂) = γ₁ + ½‖γ‖² + γᵀX⁽²⁾
/// with X = (X⁽¹⁾, X⁽²⁾) ∈ ℝ⁴ and Γ = [−2, 2]².
struct Ridge2d;

impl Ridge2d {
    fn slope(xi: &XiPoint) -> f64 {
        if branch(xi) == 0 {
            -1.0
        } else {
            1.0
        }
    }
    fn noise<'a>(x: &'a [f64], xi: &XiPoint) -> &'a [f64] {
        let o = 2 * branch(xi);
        &x[o..o + 2]
    }
}

impl Integrand for Ridge2d {
    fn value(&self, x: &[f64], gamma: &[f64], xi: &XiPoint) -> f64 {
        let z = Self::noise(x, xi);
        Self::slope(xi) * gamma[0]
            + 0.5 * (gamma[0] * gamma[0] + gamma[1] * gamma[1])
            + gamma[0] * z[0]
            + gamma[1] * z[1]
    }
    fn gradient(&self, x: &[f64], gamma: &[f64], xi: &XiPoint) -> DVector<f64> {
        let z = Self::noise(x, xi);
        DVector::from_vec(vec![Self::slope(xi) + gamma[0] + z[0], gamma[1] + z[1]])
    }
    fn hessian(&self, _x: &[f64], _gamma: &[f64], _xi: &XiPoint) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(2, 2))
    }
    fn affine_in_x(&self) -> bool {
        true
    }
}

impl PopulationOracle for Ridge2d {
    fn value(&self, gamma: &[f64], xi: &XiPoint) -> f64 {
        Self::slope(xi) * gamma[0] + 0.5 * (gamma[0] * gamma[0] + gamma[1] * gamma[1])
    }
    fn gradient(&self, gamma: &[f64], xi: &XiPoint) -> DVector<f64> {
        DVector::from_vec(vec![Self::slope(xi) + gamma[0], gamma[1]])
    }
    fn hessian(&self, _gamma: &[f64], _xi: &XiPoint) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(2, 2))
    }
}

fn ridge2d() -> ProblemSpec {
    let eye4 = (0..4)
        .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    ProblemSpec {
        name: "ridge2d".into(),
        n: 2,
        m: 0,
        gamma_set: BoxSet::cube(2, -2.0, 2.0),
        xi_set: two_labels(),
        integrand: Arc::new(Ridge2d),
        sampler: Arc::new(StandardNormalSampler { dim: 4 }),
        population: Some(Arc::new(Ridge2d)),
        population_fallback: None,
        ground_truth: Some(GroundTruth {
            // φ(γ) = |γ₁| + ½‖γ‖², minimized at the origin.
            gamma_star: vec![0.0, 0.0],
            theta_star: 0.0,
            active_points: vec![listed(0), listed(1)],
            lambda_star: vec![0.5, 0.5],
            grad_phi: vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
            hessian_h: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            // Stacked gradients (X⁽¹⁾, X⁽²⁾) at the origin.
            sigma_solution: eye4,
            // F(X, 0, ξ_i) = 0.
            cov_values: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            sigma2_value: 0.0,
            // Projection of Cov[Y] = ½I onto 𝓛 = span{e₂}.
            solution_limit_cov: Some(vec![vec![0.0, 0.0], vec![0.0, 0.5]]),
            local_minimizer_condition: false,
        }),
    }
}
