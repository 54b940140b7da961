//! An inline polynomial problem defined in JSON, solved on a sample and at
//! the population level.

use minimax_infer::problem::{sample_dataset, PolyProblemDef};
use minimax_infer::solver::{solve_population, solve_sample, SolverConfig};

const DEF: &str = r#"{
  "name": "tilted_saddle",
  "n": 1, "m": 1, "d": 1,
  "gamma_box": { "lower": [-2.0], "upper": [2.0] },
  "xi_set": { "box": { "lower": [-1.0], "upper": [1.0] } },
  "terms": [
    { "coef": 1.0,  "gamma_pow": [2] },
    { "coef": 1.0,  "gamma_pow": [1], "xi_pow": [1] },
    { "coef": -1.0, "xi_pow": [2] },
    { "coef": 1.0,  "gamma_pow": [1], "x": 0 },
    { "coef": 0.3,  "gamma_pow": [1] }
  ]
}"#;

fn main() -> minimax_infer::Result<()> {
    let def: PolyProblemDef = serde_json::from_str(DEF)?;
    let problem = def.into_problem()?;
    let cfg = SolverConfig::default();
    let pop = solve_population(&problem, &cfg)?;
    println!("population γ* = {:?}, θ* = {:.6}, {}", pop.gamma_hat, pop.theta_hat, pop.status.as_str());
    let data = sample_dataset(&problem, 2000, 42)?;
    let s = solve_sample(&problem, &data, &cfg)?;
    println!("sample     γ̂ = {:?}, θ̂ = {:.6}, {}", s.gamma_hat, s.theta_hat, s.status.as_str());
    Ok(())
}
