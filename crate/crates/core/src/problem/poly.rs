//! Inline problems: polynomial `F` in `(γ, ξ)` with linear `X` coupling.
//!
//! Each term is `coef · Π γ_k^{gamma_pow[k]} · Π ξ_l^{xi_pow[l]} · [X_x]`,
//! optionally restricted to one point (`branch`) of a finite `Ξ`. The `x`
//! index is zero-based into the draw vector. Terms with an `x` factor have
//! mean zero under the standard normal sampler, so the population objective
//! is the sum of the remaining terms.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    BoxSet, Integrand, LabeledPoint, Objective, PopulationOracle, ProblemSpec,
    StandardNormalSampler, XiPoint, XiSet,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyTerm {
    pub coef: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gamma_pow: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub xi_pow: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDef {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum XiSetDef {
    Finite(Vec<LabeledPoint>),
    Box(BoxDef),
}

/// JSON definition of an inline problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyProblemDef {
    #[serde(default = "default_name")]
    pub name: String,
    pub n: usize,
    pub m: usize,
    /// Dimension of `X` (independent standard normals).
    pub d: usize,
    pub gamma_box: BoxDef,
    pub xi_set: XiSetDef,
    pub terms: Vec<PolyTerm>,
}

fn default_name() -> String {
    "inline".to_string()
}

/// A polynomial on `Γ × Ξ`, optionally coupled linearly to `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFunction {
    pub n: usize,
    pub m: usize,
    pub terms: Vec<PolyTerm>,
}

fn powi(v: f64, p: u32) -> f64 {
    v.powi(p as i32)
}

impl PolyFunction {
    /// Validates exponents, `X` indices and branch indices.
    pub fn new(n: usize, m: usize, terms: Vec<PolyTerm>, d: usize, branches: Option<usize>) -> Result<Self> {
        for (t, term) in terms.iter().enumerate() {
            if !term.gamma_pow.is_empty() && term.gamma_pow.len() != n {
                return Err(Error::InvalidArgument(format!("term {t}: gamma_pow needs {n} entries")));
            }
            if !term.xi_pow.is_empty() && term.xi_pow.len() != m {
                return Err(Error::InvalidArgument(format!("term {t}: xi_pow needs {m} entries")));
            }
            if let Some(j) = term.x {
                if j >= d {
                    return Err(Error::InvalidArgument(format!("term {t}: x index {j} >= d={d}")));
                }
            }
            match (term.branch, branches) {
                (Some(b), Some(k)) if b >= k => {
                    return Err(Error::InvalidArgument(format!("term {t}: branch {b} >= {k}")));
                }
                (Some(_), None) => {
                    return Err(Error::InvalidArgument(format!(
                        "term {t}: branch given but Xi is a box"
                    )));
                }
                _ => {}
            }
            if !term.coef.is_finite() {
                return Err(Error::InvalidArgument(format!("term {t}: non-finite coef")));
            }
        }
        Ok(Self { n, m, terms })
    }

    fn applies(term: &PolyTerm, xi: &XiPoint) -> bool {
        term.branch.is_none_or(|b| xi.index == Some(b))
    }

    /// Exponent of joint coordinate `k` (γ block first).
    fn exponent(term: &PolyTerm, k: usize, n: usize) -> u32 {
        if k < n {
            term.gamma_pow.get(k).copied().unwrap_or(0)
        } else {
            term.xi_pow.get(k - n).copied().unwrap_or(0)
        }
    }

    fn joint(&self, gamma: &[f64], xi: &XiPoint) -> Vec<f64> {
        let mut z = gamma.to_vec();
        z.extend_from_slice(&xi.coords);
        z
    }

    fn factor(term: &PolyTerm, x: Option<&[f64]>) -> f64 {
        match (term.x, x) {
            (None, _) => term.coef,
            (Some(j), Some(x)) => term.coef * x[j],
            (Some(_), None) => 0.0,
        }
    }

    /// Monomial with joint exponents adjusted by `drop` (one or two
    /// derivative indices), including the falling-factorial constants.
    fn monomial(&self, term: &PolyTerm, z: &[f64], drop: &[usize]) -> f64 {
        let n = self.n;
        let mut out = 1.0;
        for (k, &v) in z.iter().enumerate() {
            let mut p = Self::exponent(term, k, n);
            for &d in drop {
                if d == k {
                    if p == 0 {
                        return 0.0;
                    }
                    out *= p as f64;
                    p -= 1;
                }
            }
            out *= powi(v, p);
        }
        out
    }

    /// `x = None` drops the `X`-coupled terms (their mean under centered `X`).
    pub fn value_at(&self, x: Option<&[f64]>, gamma: &[f64], xi: &XiPoint) -> f64 {
        let z = self.joint(gamma, xi);
        self.terms
            .iter()
            .filter(|t| Self::applies(t, xi))
            .map(|t| Self::factor(t, x) * self.monomial(t, &z, &[]))
            .sum()
    }

    pub fn gradient_at(&self, x: Option<&[f64]>, gamma: &[f64], xi: &XiPoint) -> DVector<f64> {
        let z = self.joint(gamma, xi);
        DVector::from_fn(z.len(), |k, _| {
            self.terms
                .iter()
                .filter(|t| Self::applies(t, xi))
                .map(|t| Self::factor(t, x) * self.monomial(t, &z, &[k]))
                .sum()
        })
    }

    pub fn hessian_at(&self, x: Option<&[f64]>, gamma: &[f64], xi: &XiPoint) -> DMatrix<f64> {
        let z = self.joint(gamma, xi);
        DMatrix::from_fn(z.len(), z.len(), |r, c| {
            self.terms
                .iter()
                .filter(|t| Self::applies(t, xi))
                .map(|t| Self::factor(t, x) * self.monomial(t, &z, &[r, c]))
                .sum()
        })
    }
}

impl Integrand for PolyFunction {
    fn value(&self, x: &[f64], gamma: &[f64], xi: &XiPoint) -> f64 {
        self.value_at(Some(x), gamma, xi)
    }
    fn gradient(&self, x: &[f64], gamma: &[f64], xi: &XiPoint) -> DVector<f64> {
        self.gradient_at(Some(x), gamma, xi)
    }
    fn hessian(&self, x: &[f64], gamma: &[f64], xi: &XiPoint) -> Option<DMatrix<f64>> {
        Some(self.hessian_at(Some(x), gamma, xi))
    }
    fn affine_in_x(&self) -> bool {
        true
    }
}

impl PopulationOracle for PolyFunction {
    fn value(&self, gamma: &[f64], xi: &XiPoint) -> f64 {
        self.value_at(None, gamma, xi)
    }
    fn gradient(&self, gamma: &[f64], xi: &XiPoint) -> DVector<f64> {
        self.gradient_at(None, gamma, xi)
    }
    fn hessian(&self, gamma: &[f64], xi: &XiPoint) -> Option<DMatrix<f64>> {
        Some(self.hessian_at(None, gamma, xi))
    }
}

/// Deterministic functions on `Γ × Ξ`, e.g. perturbation directions.
impl Objective for PolyFunction {
    fn value(&self, gamma: &[f64], xi: &XiPoint) -> f64 {
        self.value_at(None, gamma, xi)
    }
    fn gradient(&self, gamma: &[f64], xi: &XiPoint) -> DVector<f64> {
        self.gradient_at(None, gamma, xi)
    }
    fn hessian(&self, gamma: &[f64], xi: &XiPoint) -> Result<DMatrix<f64>> {
        Ok(self.hessian_at(None, gamma, xi))
    }
}

impl PolyProblemDef {
    pub fn into_problem(&self) -> Result<ProblemSpec> {
        let gamma_set = BoxSet::new(self.gamma_box.lower.clone(), self.gamma_box.upper.clone())?;
        let (xi_set, branches) = match &self.xi_set {
            XiSetDef::Finite(pts) => (XiSet::FiniteList(pts.clone()), Some(pts.len())),
            XiSetDef::Box(b) => (XiSet::Box(BoxSet::new(b.lower.clone(), b.upper.clone())?), None),
        };
        let f = Arc::new(PolyFunction::new(self.n, self.m, self.terms.clone(), self.d, branches)?);
        let p = ProblemSpec {
            name: self.name.clone(),
            n: self.n,
            m: self.m,
            gamma_set,
            xi_set,
            integrand: f.clone(),
            sampler: Arc::new(StandardNormalSampler { dim: self.d }),
            population: Some(f),
            population_fallback: None,
            ground_truth: None,
        };
        p.validate()?;
        Ok(p)
    }
}
