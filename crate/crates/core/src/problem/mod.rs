//! Stochastic minimax problem model.
//!
//! A problem is `min_{γ∈Γ} sup_{ξ∈Ξ} E[F(X, γ, ξ)]` with `Γ` a box and `Ξ`
//! either a finite list of labeled points or a box. The sample counterpart
//! replaces the expectation by the mean over an IID dataset.

mod builtin;
mod poly;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::pairwise_sum;
use crate::rng::{mix, CounterRng};

pub use builtin::{builtin, registry, GroundTruth};
pub use poly::{BoxDef, PolyFunction, PolyProblemDef, PolyTerm, XiSetDef};

/// Axis-aligned box with finite bounds, `lower < upper` componentwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidArgument("box bound lengths differ".into()));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() || l >= u {
                return Err(Error::InvalidArgument(format!(
                    "box coordinate {i}: need finite lower < upper, got [{l}, {u}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self {
            lower: vec![lo; dim],
            upper: vec![hi; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
    }

    pub fn project(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }

    /// Smallest distance from `x` to any face.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| (v - l).min(u - v))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub label: String,
    #[serde(default)]
    pub coords: Vec<f64>,
}

/// The uncertainty set `Ξ`.
#[derive(Debug, Clone, PartialEq)]
pub enum XiSet {
    FiniteList(Vec<LabeledPoint>),
    Box(BoxSet),
}

impl XiSet {
    pub fn point(&self, index: usize) -> XiPoint {
        match self {
            XiSet::FiniteList(pts) => XiPoint::listed(index, pts[index].coords.clone()),
            XiSet::Box(_) => panic!("box uncertainty sets have no indexed points"),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, XiSet::FiniteList(_))
    }
}

/// A point of `Ξ`. Listed points carry their list index; box points only
/// their coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiPoint {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub coords: Vec<f64>,
}

impl XiPoint {
    pub fn listed(index: usize, coords: Vec<f64>) -> Self {
        Self {
            index: Some(index),
            coords,
        }
    }

    pub fn at(coords: Vec<f64>) -> Self {
        Self {
            index: None,
            coords,
        }
    }

    /// Deterministic ordering: list index first, then lexicographic coordinates.
    pub fn tie_order(&self, other: &Self) -> std::cmp::Ordering {
        match (self.index, other.index) {
            (Some(a), Some(b)) if a != b => return a.cmp(&b),
            _ => {}
        }
        for (a, b) in self.coords.iter().zip(&other.coords) {
            match a.partial_cmp(b) {
                Some(std::cmp::Ordering::Equal) | None => continue,
                Some(o) => return o,
            }
        }
        std::cmp::Ordering::Equal
    }
}

impl fmt::Display for XiPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "xi{}", i + 1),
            None => write!(f, "{:?}", self.coords),
        }
    }
}

/// The integrand `F(X, γ, ξ)` with derivatives in the joint variable `(γ, ξ)`.
///
/// Gradients have length `n + m` (γ block first); Hessians are `(n+m)×(n+m)`.
pub trait Integrand: Send + Sync {
    fn value(&self, x: &[f64], gamma: &[f64], xi: &XiPoint) -> f64;
    fn gradient(&self, x: &[f64], gamma: &[f64], xi: &XiPoint) -> DVector<f64>;
    fn hessian(&self, _x: &[f64], _gamma: &[f64], _xi: &XiPoint) -> Option<DMatrix<f64>> {
        None
    }
    /// `F` is affine in `X`, so the sample mean of `F` equals `F` at the mean draw.
    fn affine_in_x(&self) -> bool {
        false
    }
}

/// Closed-form `f(γ, ξ) = E[F(X, γ, ξ)]`.
pub trait PopulationOracle: Send + Sync {
    fn value(&self, gamma: &[f64], xi: &XiPoint) -> f64;
    fn gradient(&self, gamma: &[f64], xi: &XiPoint) -> DVector<f64>;
    fn hessian(&self, gamma: &[f64], xi: &XiPoint) -> Option<DMatrix<f64>>;
}

/// Deterministic draws of `X`.
pub trait XSampler: Send + Sync {
    fn dim(&self) -> usize;
    fn draw(&self, seed: u64, index: u64) -> Vec<f64>;
    /// Mean and covariance of `X` when known in closed form.
    fn moments(&self) -> Option<(DVector<f64>, DMatrix<f64>)> {
        None
    }
}

/// Independent standard normal components; draw `j` uses stream `mix(seed, j)`.
#[derive(Debug, Clone)]
pub struct StandardNormalSampler {
    pub dim: usize,
}

impl XSampler for StandardNormalSampler {
    fn dim(&self) -> usize {
        self.dim
    }

    fn draw(&self, seed: u64, index: u64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        CounterRng::new(mix(seed, index)).fill_normal(&mut out);
        out
    }

    fn moments(&self) -> Option<(DVector<f64>, DMatrix<f64>)> {
        Some((DVector::zeros(self.dim), DMatrix::identity(self.dim, self.dim)))
    }
}

/// Monte Carlo stand-in for a missing population oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationFallback {
    pub n_pop: usize,
    pub seed: u64,
}

/// A stochastic minimax problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub gamma_set: BoxSet,
    pub xi_set: XiSet,
    pub integrand: Arc<dyn Integrand>,
    pub sampler: Arc<dyn XSampler>,
    pub population: Option<Arc<dyn PopulationOracle>>,
    pub population_fallback: Option<PopulationFallback>,
    pub ground_truth: Option<GroundTruth>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("gamma_set", &self.gamma_set)
            .field("xi_set", &self.xi_set)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        if self.gamma_set.dim() != self.n {
            return Err(Error::InvalidArgument("gamma_set dimension differs from n".into()));
        }
        BoxSet::new(self.gamma_set.lower.clone(), self.gamma_set.upper.clone())?;
        match &self.xi_set {
            XiSet::FiniteList(pts) => {
                if pts.is_empty() {
                    return Err(Error::InvalidArgument("finite xi list is empty".into()));
                }
                for (i, p) in pts.iter().enumerate() {
                    if p.coords.len() != self.m {
                        return Err(Error::InvalidArgument(format!(
                            "xi point {i} has {} coordinates, expected m={}",
                            p.coords.len(),
                            self.m
                        )));
                    }
                    for q in &pts[..i] {
                        if q.label == p.label && q.coords == p.coords {
                            return Err(Error::InvalidArgument(format!(
                                "duplicate xi point `{}`",
                                p.label
                            )));
                        }
                    }
                }
            }
            XiSet::Box(b) => {
                if b.dim() != self.m || self.m == 0 {
                    return Err(Error::InvalidArgument("xi box dimension differs from m".into()));
                }
                BoxSet::new(b.lower.clone(), b.upper.clone())?;
            }
        }
        Ok(())
    }

    pub fn x_dim(&self) -> usize {
        self.sampler.dim()
    }

    /// Error unless `γ ∈ Γ` and `ξ ∈ Ξ`.
    pub fn check_point(&self, gamma: &[f64], xi: &XiPoint) -> Result<()> {
        if !self.gamma_set.contains(gamma, 0.0) {
            return Err(Error::PointOutsideSet(format!("gamma {gamma:?} not in Gamma")));
        }
        match &self.xi_set {
            XiSet::FiniteList(pts) => {
                let ok = xi
                    .index
                    .map(|i| i < pts.len() && pts[i].coords == xi.coords)
                    .unwrap_or(false);
                if !ok {
                    return Err(Error::PointOutsideSet(format!("{xi} is not a listed point")));
                }
            }
            XiSet::Box(b) => {
                if !b.contains(&xi.coords, 0.0) {
                    return Err(Error::PointOutsideSet(format!("xi {:?} not in Xi", xi.coords)));
                }
            }
        }
        Ok(())
    }

    /// The population objective `f`, analytic when an oracle is present.
    pub fn population_objective(&self) -> Result<PopulationObjective<'_>> {
        if let Some(oracle) = &self.population {
            return Ok(PopulationObjective::Analytic(oracle.as_ref()));
        }
        if let Some(fb) = self.population_fallback {
            let data = sample_dataset(self, fb.n_pop, fb.seed)?;
            return Ok(PopulationObjective::MonteCarlo {
                problem: self,
                data: Box::new(data),
                fallback: fb,
            });
        }
        Err(Error::Capability(format!(
            "problem `{}` has neither a population oracle nor a Monte Carlo fallback",
            self.name
        )))
    }
}

/// Requested derivative order of an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    Value,
    Gradient,
    Hessian,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evaluation {
    Value(f64),
    Gradient(DVector<f64>),
    Hessian(DMatrix<f64>),
}

impl Evaluation {
    pub fn as_value(&self) -> Option<f64> {
        match self {
            Evaluation::Value(v) => Some(*v),
            _ => None,
        }
    }
    pub fn as_gradient(&self) -> Option<&DVector<f64>> {
        match self {
            Evaluation::Gradient(g) => Some(g),
            _ => None,
        }
    }
    pub fn as_hessian(&self) -> Option<&DMatrix<f64>> {
        match self {
            Evaluation::Hessian(h) => Some(h),
            _ => None,
        }
    }
}

/// A function on `Γ × Ξ` with joint derivatives; implemented by the
/// population and empirical objectives and by perturbation directions.
pub trait Objective: Sync {
    fn value(&self, gamma: &[f64], xi: &XiPoint) -> f64;
    fn gradient(&self, gamma: &[f64], xi: &XiPoint) -> DVector<f64>;
    fn hessian(&self, gamma: &[f64], xi: &XiPoint) -> Result<DMatrix<f64>>;

    fn eval(&self, gamma: &[f64], xi: &XiPoint, order: Order) -> Result<Evaluation> {
        Ok(match order {
            Order::Value => Evaluation::Value(self.value(gamma, xi)),
            Order::Gradient => Evaluation::Gradient(self.gradient(gamma, xi)),
            Order::Hessian => Evaluation::Hessian(self.hessian(gamma, xi)?),
        })
    }
}

/// `f` itself, or its Monte Carlo approximation with a documented size and seed.
pub enum PopulationObjective<'a> {
    Analytic(&'a dyn PopulationOracle),
    MonteCarlo {
        problem: &'a ProblemSpec,
        data: Box<Dataset>,
        fallback: PopulationFallback,
    },
}

impl PopulationObjective<'_> {
    pub fn is_approximate(&self) -> bool {
        matches!(self, PopulationObjective::MonteCarlo { .. })
    }
}

impl Objective for PopulationObjective<'_> {
    fn value(&self, gamma: &[f64], xi: &XiPoint) -> f64 {
        match self {
            PopulationObjective::Analytic(o) => o.value(gamma, xi),
            PopulationObjective::MonteCarlo { problem, data, .. } => {
                EmpiricalObjective::new(problem, data).value(gamma, xi)
            }
        }
    }

    fn gradient(&self, gamma: &[f64], xi: &XiPoint) -> DVector<f64> {
        match self {
            PopulationObjective::Analytic(o) => o.gradient(gamma, xi),
            PopulationObjective::MonteCarlo { problem, data, .. } => {
                EmpiricalObjective::new(problem, data).gradient(gamma, xi)
            }
        }
    }

    fn hessian(&self, gamma: &[f64], xi: &XiPoint) -> Result<DMatrix<f64>> {
        match self {
            PopulationObjective::Analytic(o) => o.hessian(gamma, xi).ok_or_else(|| {
                Error::Capability("population oracle has no second derivatives".into())
            }),
            PopulationObjective::MonteCarlo { problem, data, .. } => {
                EmpiricalObjective::new(problem, data).hessian(gamma, xi)
            }
        }
    }
}

/// IID draws `X_1, ..., X_N`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub problem_id: String,
    pub seed: Option<u64>,
    n_rows: usize,
    dim: usize,
    draws: Vec<f64>,
}

impl Dataset {
    /// Dataset from explicit rows (not reproducible from a seed).
    pub fn from_rows(problem_id: &str, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("dataset needs at least one row".into()));
        }
        let dim = rows[0].len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidArgument("ragged dataset rows".into()));
        }
        Ok(Self {
            problem_id: problem_id.to_string(),
            seed: None,
            n_rows: rows.len(),
            dim,
            draws: rows.concat(),
        })
    }

    pub fn len(&self) -> usize {
        self.n_rows
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.draws[j * self.dim..(j + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows).map(move |j| self.row(j))
    }

    /// Column means by pairwise summation.
    pub fn column_means(&self) -> Vec<f64> {
        let mut col = vec![0.0; self.n_rows];
        (0..self.dim)
            .map(|c| {
                for (j, v) in col.iter_mut().enumerate() {
                    *v = self.draws[j * self.dim + c];
                }
                pairwise_sum(&col) / self.n_rows as f64
            })
            .collect()
    }

    /// CSV with header `j,x1,...,xd`; `j` is zero-based.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j");
        for c in 0..self.dim {
            out.push_str(&format!(",x{}", c + 1));
        }
        out.push('\n');
        for j in 0..self.n_rows {
            out.push_str(&j.to_string());
            for v in self.row(j) {
                out.push(',');
                out.push_str(&format!("{v:?}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Draw `N` rows; row `j` is `x_sampler(seed, j)`.
pub fn sample_dataset(problem: &ProblemSpec, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let dim = problem.sampler.dim();
    let mut draws = Vec::with_capacity(n * dim);
    for j in 0..n {
        draws.extend(problem.sampler.draw(seed, j as u64));
    }
    Ok(Dataset {
        problem_id: problem.name.clone(),
        seed: Some(seed),
        n_rows: n,
        dim,
        draws,
    })
}

/// How empirical means are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Mean-row shortcut for integrands affine in `X`, else per-row means.
    Auto,
    /// Pairwise mean of per-row evaluations.
    Direct,
}

/// `f̂_N(γ, ξ) = N⁻¹ Σ_j F(X_j, γ, ξ)` and its derivatives.
pub struct EmpiricalObjective<'a> {
    problem: &'a ProblemSpec,
    dataset: &'a Dataset,
    mean_row: Option<Vec<f64>>,
}

impl<'a> EmpiricalObjective<'a> {
    pub fn new(problem: &'a ProblemSpec, dataset: &'a Dataset) -> Self {
        Self::with_mode(problem, dataset, EvalMode::Auto)
    }

    pub fn with_mode(problem: &'a ProblemSpec, dataset: &'a Dataset, mode: EvalMode) -> Self {
        let mean_row = (mode == EvalMode::Auto && problem.integrand.affine_in_x())
            .then(|| dataset.column_means());
        Self {
            problem,
            dataset,
            mean_row,
        }
    }

    pub fn dataset(&self) -> &Dataset {
        self.dataset
    }

    fn mean_vector(&self, per_row: impl Fn(&[f64]) -> DVector<f64>) -> DVector<f64> {
        let rows: Vec<DVector<f64>> = self.dataset.rows().map(per_row).collect();
        let len = rows[0].len();
        let mut col = vec![0.0; rows.len()];
        DVector::from_fn(len, |i, _| {
            for (v, r) in col.iter_mut().zip(&rows) {
                *v = r[i];
            }
            pairwise_sum(&col) / rows.len() as f64
        })
    }
}

impl Objective for EmpiricalObjective<'_> {
    fn value(&self, gamma: &[f64], xi: &XiPoint) -> f64 {
        let f = &self.problem.integrand;
        if let Some(x) = &self.mean_row {
            return f.value(x, gamma, xi);
        }
        let vals: Vec<f64> = self.dataset.rows().map(|x| f.value(x, gamma, xi)).collect();
        pairwise_sum(&vals) / vals.len() as f64
    }

    fn gradient(&self, gamma: &[f64], xi: &XiPoint) -> DVector<f64> {
        let f = &self.problem.integrand;
        if let Some(x) = &self.mean_row {
            return f.gradient(x, gamma, xi);
        }
        self.mean_vector(|x| f.gradient(x, gamma, xi))
    }

    fn hessian(&self, gamma: &[f64], xi: &XiPoint) -> Result<DMatrix<f64>> {
        let f = &self.problem.integrand;
        let missing = || Error::Capability("integrand has no second derivatives".into());
        if let Some(x) = &self.mean_row {
            return f.hessian(x, gamma, xi).ok_or_else(missing);
        }
        let mut mats = Vec::with_capacity(self.dataset.len());
        for x in self.dataset.rows() {
            mats.push(f.hessian(x, gamma, xi).ok_or_else(missing)?);
        }
        let (r, c) = mats[0].shape();
        let mut col = vec![0.0; mats.len()];
        Ok(DMatrix::from_fn(r, c, |i, j| {
            for (v, m) in col.iter_mut().zip(&mats) {
                *v = m[(i, j)];
            }
            pairwise_sum(&col) / mats.len() as f64
        }))
    }
}

/// Evaluate `f̂_N` (or a derivative) at a checked point.
pub fn empirical_eval(
    obj: &EmpiricalObjective<'_>,
    gamma: &[f64],
    xi: &XiPoint,
    order: Order,
) -> Result<Evaluation> {
    obj.problem.check_point(gamma, xi)?;
    obj.eval(gamma, xi, order)
}

/// Evaluate `f` (or a derivative) at a checked point.
pub fn population_eval(
    problem: &ProblemSpec,
    gamma: &[f64],
    xi: &XiPoint,
    order: Order,
) -> Result<Evaluation> {
    problem.check_point(gamma, xi)?;
    problem.population_objective()?.eval(gamma, xi, order)
}

/// Finite-difference audit of the derivative oracles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradientCheckReport {
    pub points: usize,
    pub max_rel_error_gradient: f64,
    pub max_rel_error_hessian: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

pub const GRADIENT_CHECK_TOL: f64 = 1e-5;

fn fd_step(v: f64) -> f64 {
    1e-4 * (1.0 + v.abs())
}

/// Compare the integrand's (and population oracle's) derivatives with central
/// differences at `num_points` random interior points.
pub fn check_gradients(problem: &ProblemSpec, num_points: usize, seed: u64) -> GradientCheckReport {
    let n = problem.n;
    let mut max_g: f64 = 0.0;
    let mut max_h: Option<f64> = None;
    for p in 0..num_points {
        let mut rng = CounterRng::stream(seed, p as u64);
        let gamma: Vec<f64> = problem
            .gamma_set
            .lower
            .iter()
            .zip(&problem.gamma_set.upper)
            .map(|(l, u)| l + (u - l) * (0.05 + 0.9 * rng.uniform()))
            .collect();
        let xi = match &problem.xi_set {
            XiSet::FiniteList(pts) => {
                let i = ((rng.uniform() * pts.len() as f64) as usize).min(pts.len() - 1);
                problem.xi_set.point(i)
            }
            XiSet::Box(b) => XiPoint::at(
                b.lower
                    .iter()
                    .zip(&b.upper)
                    .map(|(l, u)| l + (u - l) * (0.05 + 0.9 * rng.uniform()))
                    .collect(),
            ),
        };
        let x = problem.sampler.draw(seed ^ 0xA5A5_5A5A, p as u64);
        let f = &problem.integrand;
        let (eg, eh) = fd_errors(
            n,
            &gamma,
            &xi,
            |g, s| f.value(&x, g, s),
            |g, s| f.gradient(&x, g, s),
            |g, s| f.hessian(&x, g, s),
        );
        max_g = max_g.max(eg);
        if let Some(e) = eh {
            max_h = Some(max_h.unwrap_or(0.0).max(e));
        }
        if let Some(pop) = &problem.population {
            let (eg, eh) = fd_errors(
                n,
                &gamma,
                &xi,
                |g, s| pop.value(g, s),
                |g, s| pop.gradient(g, s),
                |g, s| pop.hessian(g, s),
            );
            max_g = max_g.max(eg);
            if let Some(e) = eh {
                max_h = Some(max_h.unwrap_or(0.0).max(e));
            }
        }
    }
    let pass = max_g <= GRADIENT_CHECK_TOL && max_h.is_none_or(|e| e <= GRADIENT_CHECK_TOL);
    GradientCheckReport {
        points: num_points,
        max_rel_error_gradient: max_g,
        max_rel_error_hessian: max_h,
        tolerance: GRADIENT_CHECK_TOL,
        pass,
    }
}

/// Joint variable `(γ, ξ)` with ξ coordinates perturbed only for box points.
fn fd_errors(
    n: usize,
    gamma: &[f64],
    xi: &XiPoint,
    value: impl Fn(&[f64], &XiPoint) -> f64,
    gradient: impl Fn(&[f64], &XiPoint) -> DVector<f64>,
    hessian: impl Fn(&[f64], &XiPoint) -> Option<DMatrix<f64>>,
) -> (f64, Option<f64>) {
    let free = if xi.index.is_some() { n } else { n + xi.coords.len() };
    let shift = |k: usize, h: f64| -> (Vec<f64>, XiPoint) {
        let mut g = gamma.to_vec();
        let mut s = xi.clone();
        if k < n {
            g[k] += h;
        } else {
            s.coords[k - n] += h;
        }
        (g, s)
    };
    let coord = |k: usize| if k < n { gamma[k] } else { xi.coords[k - n] };

    let grad = gradient(gamma, xi);
    let mut err_g: f64 = 0.0;
    for k in 0..free {
        let h = fd_step(coord(k));
        let (gp, sp) = shift(k, h);
        let (gm, sm) = shift(k, -h);
        let fd = (value(&gp, &sp) - value(&gm, &sm)) / (2.0 * h);
        err_g = err_g.max((fd - grad[k]).abs() / (1.0 + grad[k].abs()));
    }

    let hess = hessian(gamma, xi).map(|hm| {
        let mut err: f64 = 0.0;
        for k in 0..free {
            let h = fd_step(coord(k));
            let (gp, sp) = shift(k, h);
            let (gm, sm) = shift(k, -h);
            let dg = (gradient(&gp, &sp) - gradient(&gm, &sm)) / (2.0 * h);
            for r in 0..free {
                err = err.max((dg[r] - hm[(r, k)]).abs() / (1.0 + hm[(r, k)].abs()));
            }
        }
        err
    });
    (err_g, hess)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_rejects_inverted_bounds() {
        assert!(BoxSet::new(vec![1.0], vec![0.0]).is_err());
        assert!(BoxSet::new(vec![0.0], vec![f64::INFINITY]).is_err());
        assert!(BoxSet::new(vec![-1.0, -1.0], vec![1.0, 1.0]).is_ok());
    }

    #[test]
    fn dataset_rows_and_means() {
        let d = Dataset::from_rows("t", &[vec![1.0, 2.0], vec![3.0, 6.0]]).unwrap();
        assert_eq!(d.row(1), &[3.0, 6.0]);
        assert_eq!(d.column_means(), vec![2.0, 4.0]);
        assert_eq!(d.to_csv(), "j,x1,x2\n0,1.0,2.0\n1,3.0,6.0\n");
    }

    #[test]
    fn zero_rows_rejected() {
        let p = builtin("smooth_saddle").unwrap();
        assert!(matches!(sample_dataset(&p, 0, 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn tie_order_prefers_list_index() {
        let a = XiPoint::listed(0, vec![]);
        let b = XiPoint::listed(1, vec![]);
        assert_eq!(a.tie_order(&b), std::cmp::Ordering::Less);
        let c = XiPoint::at(vec![0.0, 1.0]);
        let d = XiPoint::at(vec![0.0, 2.0]);
        assert_eq!(c.tie_order(&d), std::cmp::Ordering::Less);
    }
}
