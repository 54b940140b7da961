//! Limit law of √N(θ̂_N − θ*) for a problem with two active points and
//! unique multipliers (½, ½): a centered Gaussian with variance λ*ᵀ Cov λ*.

use minimax_infer::limitdist::{sample_value_limit, value_limit_model, CovarianceInput};
use minimax_infer::montecarlo::{compare_scalar, run_replications, Thresholds};
use minimax_infer::problem::builtin;
use minimax_infer::reduction::ReductionConfig;
use minimax_infer::solver::SolverConfig;

fn main() -> minimax_infer::Result<()> {
    let problem = builtin("vee_value")?;
    let model = value_limit_model(&problem, &[vec![0.0]], CovarianceInput::Analytic, &ReductionConfig::default())?;
    println!("mode {:?}, σ² = {:?}", model.mode, model.sigma2);

    let theory = sample_value_limit(&model, 20_000, 11)?;
    let set = run_replications(&problem, 4000, 1000, 3, &SolverConfig::default())?;
    let cmp = compare_scalar("value", &set.value_errors(), &theory, &Thresholds::default());
    println!(
        "KS {:.4}  mean {:.4} vs {:.4}  var {:.4} vs {:.4}  pass {}",
        cmp.ks, cmp.mean_empirical, cmp.mean_theoretical, cmp.var_empirical, cmp.var_theoretical, cmp.pass
    );
    Ok(())
}
