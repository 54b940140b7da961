//! Without strict complementarity the solution limit is the solution map of
//! a quadratic program at a Gaussian input: here −max(z, 0), with an atom
//! of mass ½ at zero.

use minimax_infer::limitdist::{qp_eta, sample_solution_limit, sigma_solution, CovarianceInput, SolutionLimitModel};
use minimax_infer::problem::builtin;
use minimax_infer::reduction::{reduce, ReductionConfig};

fn main() -> minimax_infer::Result<()> {
    let problem = builtin("cone_qp")?;
    let red = reduce(&problem, &[0.0], &ReductionConfig::default())?;
    println!("λ* = {:?}, strict complementarity: {}", red.lambda_used, red.strict_complementarity());
    for z in [[-1.0, 0.3], [0.0, 0.0], [0.7, -2.0], [2.5, 1.0]] {
        println!("η̃({z:?}) = {}", qp_eta(&red, &z)?[0]);
    }

    let points: Vec<_> = red.active_points.iter().map(|p| p.xi.clone()).collect();
    let (sigma, src) = sigma_solution(&problem, &red.gamma_star, &points, CovarianceInput::Analytic)?;
    let model = SolutionLimitModel::new(red, sigma, src)?;
    let draws = sample_solution_limit(&model, 50_000, 5)?;
    let col: Vec<f64> = draws.column(0).iter().copied().collect();
    let zeros = col.iter().filter(|v| **v == 0.0).count() as f64 / col.len() as f64;
    let mean = col.iter().sum::<f64>() / col.len() as f64;
    println!("mode {:?}: mass at 0 = {zeros:.4}, mean = {mean:.4} (−1/√(2π) ≈ −0.3989)", model.mode);
    Ok(())
}
