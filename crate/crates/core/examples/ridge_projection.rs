//! Strict complementarity with k = 2 in two dimensions: the Gaussian limit
//! lives on the subspace 𝓛 and the error projections split accordingly.

use minimax_infer::limitdist::{gaussian_solution_limit, sigma_solution, CovarianceInput};
use minimax_infer::montecarlo::{project_errors, run_replications};
use minimax_infer::problem::builtin;
use minimax_infer::reduction::{reduce, ReductionConfig};
use minimax_infer::solver::SolverConfig;

fn variance(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

fn main() -> minimax_infer::Result<()> {
    let problem = builtin("ridge2d")?;
    let red = reduce(&problem, &[0.0, 0.0], &ReductionConfig::default())?;
    println!("basis of 𝓛:\n{}", red.l_basis);
    let points: Vec<_> = red.active_points.iter().map(|p| p.xi.clone()).collect();
    let (sigma, _) = sigma_solution(&problem, &red.gamma_star, &points, CovarianceInput::Analytic)?;
    println!("limit covariance:\n{}", gaussian_solution_limit(&red, &sigma)?);

    let set = run_replications(&problem, 4000, 300, 9, &SolverConfig::default())?;
    let (on_l, off_l) = project_errors(&set, &red.l_basis);
    let a: Vec<f64> = on_l.column(0).iter().copied().collect();
    let b: Vec<f64> = off_l.column(0).iter().copied().collect();
    println!("variance on 𝓛 {:.4}, orthogonal {:.4}", variance(&a), variance(&b));
    Ok(())
}
