mod common;

use common::{column, mean, normal_draws, variance};
use minimax_infer::montecarlo::{
    compare_distributions, compare_scalar, ks_statistic, project_errors, run_replications, Thresholds,
};
use minimax_infer::problem::builtin;
use minimax_infer::reduction::{reduce, ReductionConfig};
use minimax_infer::solver::SolverConfig;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

#[test]
fn deterministic_problem_has_zero_error() {
    let p = builtin("paper_example").unwrap();
    let set = run_replications(&p, 37, 1, 5, &cfg()).unwrap();
    assert_eq!(set.scaled_gamma_errors[(0, 0)], 0.0);
    assert_eq!(set.scaled_value_errors[0], 0.0);
    assert_eq!(set.exact_recovery_count, 1);
}

#[test]
fn replications_do_not_depend_on_thread_count() {
    let p = builtin("cone_qp").unwrap();
    let run = |t: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .unwrap()
            .install(|| run_replications(&p, 500, 64, 77, &cfg()).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one.to_csv(), run(3).to_csv());
}

#[test]
fn csv_layout() {
    let p = builtin("ridge2d").unwrap();
    let set = run_replications(&p, 100, 3, 1, &cfg()).unwrap();
    let csv = set.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,status,sqrtN_value_err,sqrtN_gamma_err_1,sqrtN_gamma_err_2"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn too_many_failures_abort() {
    // Without local refinement the sample solve cannot certify convergence.
    let p = builtin("smooth_saddle").unwrap();
    let weak = SolverConfig { max_newton: 0, ..cfg() };
    assert!(run_replications(&p, 100, 20, 1, &weak).is_err());
}

#[test]
fn vee_value_error_is_centered() {
    let p = builtin("vee_value").unwrap();
    let set = run_replications(&p, 10_000, 2000, 31, &cfg()).unwrap();
    assert!(mean(&set.value_errors()).abs() <= 0.05);
}

#[test]
fn cone_qp_errors_are_nonpositive() {
    let p = builtin("cone_qp").unwrap();
    let set = run_replications(&p, 10_000, 2000, 32, &cfg()).unwrap();
    let e = column(&set.gamma_errors(), 0);
    let pos = e.iter().filter(|v| **v > 1e-9).count() as f64 / e.len() as f64;
    assert!(pos <= 0.02, "positive fraction {pos}");
}

#[test]
fn root_n_scaling_is_stable() {
    let p = builtin("smooth_saddle").unwrap();
    let v1 = variance(&column(&run_replications(&p, 1000, 400, 41, &cfg()).unwrap().gamma_errors(), 0));
    let v4 = variance(&column(&run_replications(&p, 4000, 400, 42, &cfg()).unwrap().gamma_errors(), 0));
    assert!((v1 / v4 - 1.0).abs() <= 0.25, "{v1} vs {v4}");
}

#[test]
fn projections_onto_l() {
    let ridge = builtin("ridge2d").unwrap();
    let red = reduce(&ridge, &[0.0, 0.0], &ReductionConfig::default()).unwrap();
    let set = run_replications(&ridge, 400, 50, 3, &cfg()).unwrap();
    let (on, off) = project_errors(&set, &red.l_basis);
    let e = set.gamma_errors();
    let sign = red.l_basis[(1, 0)].signum();
    for i in 0..e.nrows() {
        assert!((on[(i, 0)] - sign * e[(i, 1)]).abs() <= 1e-12);
    }
    assert_eq!(off.ncols(), 1);

    let saddle = builtin("smooth_saddle").unwrap();
    let red = reduce(&saddle, &[0.0], &ReductionConfig::default()).unwrap();
    let set = run_replications(&saddle, 400, 20, 3, &cfg()).unwrap();
    let (on, off) = project_errors(&set, &red.l_basis);
    assert!((on.abs() - set.gamma_errors().abs()).amax() <= 1e-12);
    assert_eq!(off.ncols(), 0);

    let (on, off) = project_errors(&set, &DMatrix::zeros(1, 0));
    assert_eq!(on.ncols(), 0);
    assert_eq!(off, set.gamma_errors());
}

#[test]
fn ks_reference_values() {
    let a = normal_draws(10_000, 1.0, 1);
    let b = normal_draws(10_000, 1.0, 2);
    let wide = normal_draws(10_000, 2.0, 3);
    assert_eq!(ks_statistic(&a, &a), 0.0);
    assert!(ks_statistic(&a, &b) <= 0.03);
    let c = compare_scalar("x", &a, &wide, &Thresholds::default());
    assert!(c.ks >= 0.15);
    assert!(!c.pass);
}

#[test]
fn halves_of_one_sample_agree() {
    let draws = normal_draws(40_000, 0.7, 9);
    let (a, b) = draws.split_at(20_000);
    let th = Thresholds { ks_max: 0.06, zero_mass_tol: Some(0.01) };
    let rep = compare_distributions(
        &["z".to_string()],
        &DMatrix::from_column_slice(20_000, 1, a),
        &DMatrix::from_column_slice(20_000, 1, b),
        &th,
    )
    .unwrap();
    assert!(rep.pass, "{rep}");
}

#[test]
fn zero_mass_threshold_is_enforced() {
    let a: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 0.0 } else { -(i as f64) / 1000.0 }).collect();
    let b: Vec<f64> = (0..1000).map(|i| -(i as f64 + 1.0) / 1000.0).collect();
    let strict = Thresholds { ks_max: 1.0, zero_mass_tol: Some(0.1) };
    assert!(!compare_scalar("z", &a, &b, &strict).pass);
    assert!(compare_scalar("z", &a, &b, &Thresholds { ks_max: 1.0, zero_mass_tol: None }).pass);
}

proptest! {
    #[test]
    fn ks_is_a_symmetric_distance(a in prop::collection::vec(-5.0f64..5.0, 1..60),
                                   b in prop::collection::vec(-5.0f64..5.0, 1..60)) {
        let d = ks_statistic(&a, &b);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, ks_statistic(&b, &a));
        prop_assert_eq!(ks_statistic(&a, &a), 0.0);
    }

    #[test]
    fn ks_is_invariant_under_monotone_maps(a in prop::collection::vec(-3.0f64..3.0, 1..60),
                                           b in prop::collection::vec(-3.0f64..3.0, 1..60)) {
        let f = |x: &f64| 2.0 + 3.0 * x + x.powi(3);
        let fa: Vec<f64> = a.iter().map(f).collect();
        let fb: Vec<f64> = b.iter().map(f).collect();
        prop_assert!((ks_statistic(&a, &b) - ks_statistic(&fa, &fb)).abs() <= 1e-12);
    }
}
