//! Directional derivative of the optimal value on a finite Ξ where the two
//! closed forms disagree: the max-over-active-set formula gives 1, while the
//! multiplier-weighted formula and the finite-difference quotients give 1/2.

use minimax_infer::problem::{builtin, PolyFunction, PolyTerm};
use minimax_infer::reduction::{value_dirderiv_formula, ReductionConfig};
use minimax_infer::solver::{value_dirderiv_fd, SolverConfig, DEFAULT_T_GRID};

fn main() -> minimax_infer::Result<()> {
    let problem = builtin("paper_example")?;
    // η = 1 on ξ₁, 0 on ξ₂.
    let eta = PolyFunction::new(
        problem.n,
        problem.m,
        vec![PolyTerm { coef: 1.0, gamma_pow: vec![], xi_pow: vec![], x: None, branch: Some(0) }],
        0,
        Some(2),
    )?;

    let fd = value_dirderiv_fd(&problem, &eta, &DEFAULT_T_GRID, &SolverConfig::default())?;
    let gamma_star = problem.ground_truth.as_ref().map(|g| g.gamma_star.clone()).unwrap_or(vec![0.0]);
    let formula = value_dirderiv_formula(&problem, &[gamma_star], &eta, &ReductionConfig::default())?;

    println!("V(f) = {}", fd.base_value);
    for (t, q) in &fd.quotients {
        println!("t = {t:<8} [V(f+tη) − V(f)]/t = {q:.12}");
    }
    println!("minsup formula   = {}", formula.minsup);
    println!("weighted formula = {:?}", formula.weighted);
    Ok(())
}
