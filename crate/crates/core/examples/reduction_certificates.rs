//! Reduction of each built-in at its population minimizer, with the table
//! of regularity certificates.

use minimax_infer::problem::builtin;
use minimax_infer::reduction::{reduce, ReductionConfig};

fn main() -> minimax_infer::Result<()> {
    for name in ["paper_example", "smooth_saddle(1)", "vee_value", "cone_qp", "ridge2d"] {
        let problem = builtin(name)?;
        let gamma = problem.ground_truth.as_ref().expect("built-ins carry ground truth").gamma_star.clone();
        let red = reduce(&problem, &gamma, &ReductionConfig::default())?;
        println!("== {name}: k = {}, λ = {:?}, dim 𝓛 = {}", red.k(), red.lambda_used, red.l_basis.ncols());
        println!("{}", red.certificates);
    }
    Ok(())
}
