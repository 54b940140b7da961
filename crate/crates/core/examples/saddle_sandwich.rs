//! A single smooth saddle: the solution limit is Gaussian with the sandwich
//! covariance H⁻¹ΣH⁻¹. Compares it with replicated sample solves.

use minimax_infer::limitdist::{sigma_solution, sigma_solution_xi_adjusted, CovarianceInput, SolutionLimitModel};
use minimax_infer::montecarlo::run_replications;
use minimax_infer::problem::builtin;
use minimax_infer::reduction::{reduce, ReductionConfig};
use minimax_infer::solver::SolverConfig;

fn main() -> minimax_infer::Result<()> {
    let problem = builtin("smooth_saddle(1)")?;
    let red = reduce(&problem, &[0.0], &ReductionConfig::default())?;
    let points: Vec<_> = red.active_points.iter().map(|p| p.xi.clone()).collect();
    let (sigma, src) = sigma_solution(&problem, &red.gamma_star, &points, CovarianceInput::Analytic)?;
    let adjusted = sigma_solution_xi_adjusted(&problem, &red, CovarianceInput::Analytic)?;
    println!("H = {}", red.h[(0, 0)]);
    println!("Σ = {}  (ξ-adjusted {})", sigma[(0, 0)], adjusted[(0, 0)]);
    let model = SolutionLimitModel::new(red, sigma, src)?;
    let cov = model.limit_cov.as_ref().expect("k = 1 gives a Gaussian limit");
    println!("sandwich H⁻¹ΣH⁻¹ = {}", cov[(0, 0)]);

    let set = run_replications(&problem, 4000, 200, 7, &SolverConfig::default())?;
    let e: Vec<f64> = set.gamma_errors().column(0).iter().copied().collect();
    let mean = e.iter().sum::<f64>() / e.len() as f64;
    let var = e.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (e.len() - 1) as f64;
    println!("Monte Carlo (N=4000, R=200): mean {mean:.4}, variance {var:.4}");
    Ok(())
}
