//! Replicated sample solves and distributional comparison.

use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, pairwise_mean, serde_matrix};
use crate::problem::{sample_dataset, ProblemSpec};
use crate::rng::mix;
use crate::solver::{solve_sample, SolveStatus, SolverConfig};

/// Values this close to zero count as exact zeros.
pub const ZERO_TOL: f64 = 1e-9;
/// Largest tolerated fraction of non-converged replications.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSet {
    pub problem_id: String,
    pub n: usize,
    pub r: usize,
    pub master_seed: u64,
    pub gamma_star: Vec<f64>,
    pub theta_star: f64,
    /// `√N (γ̂ − γ*)`, one row per replication (all replications).
    #[serde(with = "serde_matrix")]
    pub scaled_gamma_errors: DMatrix<f64>,
    /// `√N (θ̂ − θ*)` per replication.
    pub scaled_value_errors: Vec<f64>,
    pub statuses: Vec<SolveStatus>,
    pub exact_recovery_count: usize,
    pub excluded: usize,
}

impl ReplicationSet {
    fn kept(&self) -> Vec<usize> {
        (0..self.r)
            .filter(|&i| self.statuses[i] == SolveStatus::Converged)
            .collect()
    }

    /// Scaled γ errors of converged replications.
    pub fn gamma_errors(&self) -> DMatrix<f64> {
        let kept = self.kept();
        DMatrix::from_fn(kept.len(), self.scaled_gamma_errors.ncols(), |i, j| {
            self.scaled_gamma_errors[(kept[i], j)]
        })
    }

    pub fn value_errors(&self) -> Vec<f64> {
        self.kept().into_iter().map(|i| self.scaled_value_errors[i]).collect()
    }

    /// `r,status,sqrtN_value_err,sqrtN_gamma_err_1,...`
    pub fn to_csv(&self) -> String {
        let n = self.scaled_gamma_errors.ncols();
        let mut s = String::from("r,status,sqrtN_value_err");
        for j in 1..=n {
            s.push_str(&format!(",sqrtN_gamma_err_{j}"));
        }
        s.push('\n');
        for i in 0..self.r {
            s.push_str(&format!("{},{},{:?}", i, self.statuses[i].as_str(), self.scaled_value_errors[i]));
            for j in 0..n {
                s.push_str(&format!(",{:?}", self.scaled_gamma_errors[(i, j)]));
            }
            s.push('\n');
        }
        s
    }
}

/// Replications with the built-in ground truth as the centering point.
pub fn run_replications(
    problem: &ProblemSpec,
    n: usize,
    r: usize,
    master_seed: u64,
    cfg: &SolverConfig,
) -> Result<ReplicationSet> {
    let gt = problem.ground_truth.as_ref().ok_or_else(|| {
        Error::Capability(format!("{} has no ground truth; supply gamma* and theta*", problem.name))
    })?;
    run_replications_at(problem, n, r, master_seed, &gt.gamma_star, gt.theta_star, cfg)
}

/// Replication `i` solves the sample problem on dataset seed `mix(master_seed, i)`.
pub fn run_replications_at(
    problem: &ProblemSpec,
    n: usize,
    r: usize,
    master_seed: u64,
    gamma_star: &[f64],
    theta_star: f64,
    cfg: &SolverConfig,
) -> Result<ReplicationSet> {
    if r == 0 {
        return Err(Error::InvalidArgument("R must be at least 1".into()));
    }
    if gamma_star.len() != problem.n {
        return Err(Error::InvalidArgument("gamma* has the wrong dimension".into()));
    }
    let results: Vec<Result<(Vec<f64>, f64, SolveStatus)>> = (0..r)
        .into_par_iter()
        .map(|i| {
            let ds = sample_dataset(problem, n, mix(master_seed, i as u64))?;
            let sol = solve_sample(problem, &ds, cfg)?;
            Ok((sol.gamma_hat, sol.theta_hat, sol.status))
        })
        .collect();
    let sqrt_n = (n as f64).sqrt();
    let mut gamma_err = DMatrix::zeros(r, problem.n);
    let mut value_err = Vec::with_capacity(r);
    let mut statuses = Vec::with_capacity(r);
    let mut exact = 0;
    for (i, res) in results.into_iter().enumerate() {
        let (g, theta, status) = res.map_err(|e| Error::Draw {
            index: i,
            source: Box::new(e),
        })?;
        let mut dist2 = 0.0;
        for j in 0..problem.n {
            let d = g[j] - gamma_star[j];
            dist2 += d * d;
            gamma_err[(i, j)] = sqrt_n * d;
        }
        if status == SolveStatus::Converged && dist2.sqrt() <= ZERO_TOL * (problem.n as f64).sqrt() {
            exact += 1;
        }
        value_err.push(sqrt_n * (theta - theta_star));
        statuses.push(status);
    }
    let excluded = statuses.iter().filter(|s| **s != SolveStatus::Converged).count();
    if excluded as f64 > MAX_FAILURE_FRACTION * r as f64 {
        return Err(Error::Solver(format!(
            "{excluded} of {r} replications did not converge (limit {:.0}%)",
            MAX_FAILURE_FRACTION * 100.0
        )));
    }
    Ok(ReplicationSet {
        problem_id: problem.name.clone(),
        n,
        r,
        master_seed,
        gamma_star: gamma_star.to_vec(),
        theta_star,
        scaled_gamma_errors: gamma_err,
        scaled_value_errors: value_err,
        statuses,
        exact_recovery_count: exact,
        excluded,
    })
}

fn snap(v: f64) -> f64 {
    if v.abs() <= ZERO_TOL {
        0.0
    } else {
        v
    }
}

/// Exact two-sample Kolmogorov–Smirnov statistic. Values within
/// `ZERO_TOL` of zero are treated as zero; ties are handled by advancing
/// both samples past each distinct value before comparing.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let sorted = |x: &[f64]| {
        let mut v: Vec<f64> = x.iter().map(|&v| snap(v)).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

fn variance(x: &[f64], mean: f64) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let dev: Vec<f64> = x.iter().map(|v| (v - mean).powi(2)).collect();
    pairwise_mean(&dev) * x.len() as f64 / (x.len() - 1) as f64
}

fn zero_mass(x: &[f64]) -> f64 {
    x.iter().filter(|v| v.abs() <= ZERO_TOL).count() as f64 / x.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub ks_max: f64,
    /// Largest allowed |empirical zero mass − theoretical zero mass|.
    pub zero_mass_tol: Option<f64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            ks_max: 0.06,
            zero_mass_tol: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarComparison {
    pub name: String,
    pub n_empirical: usize,
    pub n_theoretical: usize,
    pub ks: f64,
    pub mean_empirical: f64,
    pub mean_theoretical: f64,
    pub var_empirical: f64,
    pub var_theoretical: f64,
    pub zero_mass_empirical: f64,
    pub zero_mass_theoretical: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub thresholds: Thresholds,
    pub items: Vec<ScalarComparison>,
    pub pass: bool,
}

pub fn compare_scalar(name: &str, empirical: &[f64], theoretical: &[f64], th: &Thresholds) -> ScalarComparison {
    let me = pairwise_mean(empirical);
    let mt = pairwise_mean(theoretical);
    let ks = ks_statistic(empirical, theoretical);
    let ze = zero_mass(empirical);
    let zt = zero_mass(theoretical);
    let pass = ks <= th.ks_max && th.zero_mass_tol.is_none_or(|tol| (ze - zt).abs() <= tol);
    ScalarComparison {
        name: name.to_string(),
        n_empirical: empirical.len(),
        n_theoretical: theoretical.len(),
        ks,
        mean_empirical: me,
        mean_theoretical: mt,
        var_empirical: variance(empirical, me),
        var_theoretical: variance(theoretical, mt),
        zero_mass_empirical: ze,
        zero_mass_theoretical: zt,
        pass,
    }
}

/// Column-by-column comparison of two samples with matching column counts.
pub fn compare_distributions(
    names: &[String],
    empirical: &DMatrix<f64>,
    theoretical: &DMatrix<f64>,
    th: &Thresholds,
) -> Result<ComparisonReport> {
    if empirical.ncols() != theoretical.ncols() || names.len() != empirical.ncols() {
        return Err(Error::InvalidArgument("column mismatch between samples".into()));
    }
    if empirical.nrows() == 0 || theoretical.nrows() == 0 {
        return Err(Error::InvalidArgument("samples must be nonempty".into()));
    }
    let items: Vec<ScalarComparison> = (0..empirical.ncols())
        .map(|j| {
            let e: Vec<f64> = empirical.column(j).iter().copied().collect();
            let t: Vec<f64> = theoretical.column(j).iter().copied().collect();
            compare_scalar(&names[j], &e, &t, th)
        })
        .collect();
    let pass = items.iter().all(|c| c.pass);
    Ok(ComparisonReport {
        thresholds: *th,
        items,
        pass,
    })
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<16} {:>7} {:>7} {:>8} {:>10} {:>10} {:>10} {:>10} {:>7} {:>7}  pass",
            "quantity", "n_emp", "n_theo", "KS", "mean_emp", "mean_theo", "var_emp", "var_theo", "zero_e", "zero_t"
        )?;
        for c in &self.items {
            writeln!(
                f,
                "{:<16} {:>7} {:>7} {:>8.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>7.4} {:>7.4}  {}",
                c.name,
                c.n_empirical,
                c.n_theoretical,
                c.ks,
                c.mean_empirical,
                c.mean_theoretical,
                c.var_empirical,
                c.var_theoretical,
                c.zero_mass_empirical,
                c.zero_mass_theoretical,
                if c.pass { "PASS" } else { "FAIL" }
            )?;
        }
        writeln!(f, "overall: {} (KS <= {})", if self.pass { "PASS" } else { "FAIL" }, self.thresholds.ks_max)
    }
}

/// Coordinates of the converged scaled γ errors in the `𝓛` basis and in an
/// orthonormal completion.
pub fn project_errors(set: &ReplicationSet, l_basis: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let e = set.gamma_errors();
    let comp = linalg::orthogonal_complement(l_basis);
    (&e * l_basis, &e * comp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_identical_and_disjoint() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_statistic(&a, &a), 0.0);
        assert_eq!(ks_statistic(&[0.0, 0.1], &[5.0, 6.0]), 1.0);
    }

    #[test]
    fn ks_handles_ties() {
        // Half the mass at zero in both samples.
        let a = [0.0, 0.0, 1.0, 2.0];
        let b = [0.0, 1e-12, 1.5, 2.5];
        assert!((ks_statistic(&a, &b) - 0.25).abs() < 1e-15);
    }
}
