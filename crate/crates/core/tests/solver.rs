use minimax_infer::problem::{builtin, registry, sample_dataset, Dataset, PolyFunction, PolyTerm, XiPoint};
use minimax_infer::solver::{
    inner_maximize, solve_population, solve_sample, value_dirderiv_fd, InnerConfig, SolveStatus, SolverConfig,
    DEFAULT_T_GRID,
};
use proptest::prelude::*;

fn term(coef: f64, gamma_pow: Vec<u32>) -> PolyTerm {
    PolyTerm { coef, gamma_pow, xi_pow: vec![], x: None, branch: None }
}

#[test]
fn inner_maximizers_on_a_finite_set_are_ordered() {
    let p = builtin("paper_example").unwrap();
    let obj = p.population_objective().unwrap();
    let r = inner_maximize(&obj, &[0.3], &p.xi_set, &InnerConfig::default());
    assert_eq!(r.maximizers[0].0, XiPoint::listed(1, vec![]));
    assert!((r.max_value() - 0.3).abs() <= 1e-15);
    let tie = inner_maximize(&obj, &[0.0], &p.xi_set, &InnerConfig::default());
    assert_eq!(tie.maximizers.len(), 2);
}

#[test]
fn inner_maximizer_on_a_box_follows_coupling() {
    // ξ* = bγ and value ½γ² + ½b²γ².
    let p = builtin("smooth_saddle(1)").unwrap();
    let obj = p.population_objective().unwrap();
    let r = inner_maximize(&obj, &[0.5], &p.xi_set, &InnerConfig::default());
    assert!(r.converged);
    assert!((r.maximizers[0].0.coords[0] - 0.5).abs() <= 1e-9);
    assert!((r.max_value() - 0.25).abs() <= 1e-12);
}

#[test]
fn population_solutions_of_builtins() {
    for name in registry() {
        let p = builtin(&name.replace("(b)", "")).unwrap();
        let s = solve_population(&p, &SolverConfig::default()).unwrap();
        let gt = p.ground_truth.as_ref().unwrap();
        for (a, b) in s.gamma_hat.iter().zip(&gt.gamma_star) {
            assert!((a - b).abs() <= 1e-9, "{name}: {:?}", s.gamma_hat);
        }
        assert!((s.theta_hat - gt.theta_star).abs() <= 1e-9, "{name}");
        assert_eq!(s.status, SolveStatus::Converged, "{name}");
    }
}

#[test]
fn sample_solve_on_a_kink() {
    // Two-point data for vee_value: X̄ = (0.2, −0.1); φ̂ = max(−γ + X̄₁, γ + X̄₂) + ½γ².
    let p = builtin("vee_value").unwrap();
    let d = Dataset::from_rows("vee_value", &[vec![0.4, -0.2], vec![0.0, 0.0]]).unwrap();
    let s = solve_sample(&p, &d, &SolverConfig::default()).unwrap();
    assert!((s.gamma_hat[0] - 0.15).abs() <= 1e-12);
    assert!((s.theta_hat - 0.06125).abs() <= 1e-12);
    assert_eq!(s.inner_maximizers.len(), 2);
}

#[test]
fn sample_solve_checks_dataset_shape() {
    let p = builtin("ridge2d").unwrap();
    let d = Dataset::from_rows("x", &[vec![0.0, 1.0]]).unwrap();
    assert!(solve_sample(&p, &d, &SolverConfig::default()).is_err());
}

#[test]
fn boundary_solutions_are_flagged() {
    // max(−γ, γ) + 3γ is increasing on [−1, 1], so the minimum sits at −1.
    let p = builtin("paper_example").unwrap();
    let eta = PolyFunction::new(1, 0, vec![term(3.0, vec![1])], 0, Some(2)).unwrap();
    let pert = minimax_infer::solver::Perturbed { base: &p.population_objective().unwrap(), eta: &eta, t: 1.0 };
    let s = minimax_infer::solver::outer_minimize(&pert, &p.gamma_set, &p.xi_set, &SolverConfig::default()).unwrap();
    assert!((s.gamma_hat[0] + 1.0).abs() <= 1e-9);
    assert_eq!(s.status, SolveStatus::BoundaryHit);
}

#[test]
fn value_derivative_of_a_shift() {
    // η = γ² + 1: V(f + tη) = t + O(t²) at γ* = 0.
    let p = builtin("smooth_saddle(1)").unwrap();
    let eta = PolyFunction::new(1, 1, vec![term(1.0, vec![2]), term(1.0, vec![])], 0, None).unwrap();
    let fd = value_dirderiv_fd(&p, &eta, &DEFAULT_T_GRID, &SolverConfig::default()).unwrap();
    assert!((fd.estimate - 1.0).abs() <= 1e-6, "{fd:?}");
}

#[test]
fn value_derivative_rejects_bad_grid() {
    let p = builtin("paper_example").unwrap();
    let eta = PolyFunction::new(1, 0, vec![], 0, Some(2)).unwrap();
    assert!(value_dirderiv_fd(&p, &eta, &[0.1, 0.2], &SolverConfig::default()).is_err());
    assert!(value_dirderiv_fd(&p, &eta, &[], &SolverConfig::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sample_solve_is_deterministic(seed in any::<u64>()) {
        let p = builtin("cone_qp").unwrap();
        let d = sample_dataset(&p, 50, seed).unwrap();
        let a = solve_sample(&p, &d, &SolverConfig::default()).unwrap();
        let b = solve_sample(&p, &d, &SolverConfig::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn sample_value_bounds_the_inner_max(seed in any::<u64>()) {
        // θ̂ is the max over Ξ at γ̂, and no better than at γ*.
        let p = builtin("vee_value").unwrap();
        let d = sample_dataset(&p, 30, seed).unwrap();
        let s = solve_sample(&p, &d, &SolverConfig::default()).unwrap();
        let m = d.column_means();
        let phi = |g: f64| (-g + m[0]).max(g + m[1]) + 0.5 * g * g;
        prop_assert!((s.theta_hat - phi(s.gamma_hat[0])).abs() <= 1e-10);
        prop_assert!(s.theta_hat <= phi(0.0) + 1e-12);
    }
}
