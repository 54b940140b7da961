mod common;

use minimax_infer::problem::{
    builtin, check_gradients, empirical_eval, registry, sample_dataset, Dataset, EmpiricalObjective, Evaluation,
    Order, PolyProblemDef, XiPoint,
};
use minimax_infer::rng::CounterRng;
use minimax_infer::Error;
use proptest::prelude::*;

const VEE_INLINE: &str = r#"{
  "name": "vee_inline",
  "n": 1, "m": 0, "d": 2,
  "gamma_box": { "lower": [-2.0], "upper": [2.0] },
  "xi_set": { "finite": [ { "label": "xi1" }, { "label": "xi2" } ] },
  "terms": [
    { "coef": -1.0, "gamma_pow": [1], "branch": 0 },
    { "coef": 0.5,  "gamma_pow": [2], "branch": 0 },
    { "coef": 1.0,  "x": 0, "branch": 0 },
    { "coef": 1.0,  "gamma_pow": [1], "branch": 1 },
    { "coef": 0.5,  "gamma_pow": [2], "branch": 1 },
    { "coef": 1.0,  "x": 1, "branch": 1 }
  ]
}"#;

#[test]
fn dataset_is_deterministic_in_seed() {
    let p = builtin("smooth_saddle").unwrap();
    let a = sample_dataset(&p, 100, 1).unwrap();
    let b = sample_dataset(&p, 100, 1).unwrap();
    let c = sample_dataset(&p, 100, 2).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_ne!(a.to_csv(), c.to_csv());
}

#[test]
fn dataset_column_means_are_near_zero() {
    let p = builtin("smooth_saddle").unwrap();
    let d = sample_dataset(&p, 100_000, 3).unwrap();
    for m in d.column_means() {
        assert!(m.abs() <= 0.02, "column mean {m}");
    }
}

#[test]
fn empirical_gradient_matches_finite_differences() {
    let p = builtin("smooth_saddle").unwrap();
    let d = sample_dataset(&p, 500, 4).unwrap();
    let obj = EmpiricalObjective::new(&p, &d);
    let at = |g: f64, s: f64| match empirical_eval(&obj, &[g], &XiPoint::at(vec![s]), Order::Value).unwrap() {
        Evaluation::Value(v) => v,
        _ => unreachable!(),
    };
    let grad = empirical_eval(&obj, &[0.0], &XiPoint::at(vec![0.0]), Order::Gradient).unwrap();
    let grad = grad.as_gradient().unwrap();
    let h = 1e-5;
    let fd_g = (at(h, 0.0) - at(-h, 0.0)) / (2.0 * h);
    let fd_x = (at(0.0, h) - at(0.0, -h)) / (2.0 * h);
    assert!((grad[0] - fd_g).abs() <= 1e-6);
    assert!((grad[1] - fd_x).abs() <= 1e-6);
    let mean_x1 = d.column_means()[0];
    assert!((grad[0] - mean_x1).abs() <= 1e-12);
}

#[test]
fn empirical_objective_approaches_population() {
    let p = builtin("smooth_saddle").unwrap();
    let d = sample_dataset(&p, 100_000, 5).unwrap();
    let obj = EmpiricalObjective::new(&p, &d);
    let pop = p.population_objective().unwrap();
    use minimax_infer::problem::Objective;
    let mut rng = CounterRng::new(6);
    for _ in 0..10 {
        let g = [4.0 * rng.uniform() - 2.0];
        let s = XiPoint::at(vec![4.0 * rng.uniform() - 2.0]);
        assert!((obj.value(&g, &s) - pop.value(&g, &s)).abs() <= 0.05);
    }
}

#[test]
fn evaluation_outside_sets_is_rejected() {
    let p = builtin("smooth_saddle").unwrap();
    let d = sample_dataset(&p, 10, 1).unwrap();
    let obj = EmpiricalObjective::new(&p, &d);
    assert!(empirical_eval(&obj, &[3.0], &XiPoint::at(vec![0.0]), Order::Value).is_err());
    assert!(empirical_eval(&obj, &[0.0], &XiPoint::at(vec![-2.5]), Order::Value).is_err());
}

#[test]
fn dataset_rejects_ragged_rows() {
    assert!(Dataset::from_rows("x", &[vec![1.0, 2.0], vec![3.0]]).is_err());
}

#[test]
fn builtins_carry_ground_truth() {
    let p = builtin("paper_example").unwrap();
    let gt = p.ground_truth.unwrap();
    assert_eq!(gt.gamma_star, vec![0.0]);
    assert_eq!(gt.theta_star, 0.0);
    assert_eq!(gt.active_points.len(), 2);
    let v = builtin("vee_value").unwrap().ground_truth.unwrap();
    assert_eq!(v.lambda_star, vec![0.5, 0.5]);
    let s = builtin("smooth_saddle(1)").unwrap().ground_truth.unwrap();
    assert_eq!(s.gamma_star, vec![0.0]);
}

#[test]
fn unknown_builtin_lists_registry() {
    match builtin("saddle_of_doom") {
        Err(Error::UnknownProblem { registry: r, .. }) => assert_eq!(r, registry()),
        other => panic!("expected unknown-problem error, got {other:?}"),
    }
}

#[test]
fn all_builtin_oracles_pass_gradient_check() {
    for name in ["paper_example", "smooth_saddle", "smooth_saddle(2.5)", "vee_value", "cone_qp", "ridge2d"] {
        let rep = check_gradients(&builtin(name).unwrap(), 50, 11);
        assert!(rep.pass, "{name}: {rep:?}");
    }
}

#[test]
fn inline_vee_value_reproduces_builtin() {
    let def: PolyProblemDef = serde_json::from_str(VEE_INLINE).unwrap();
    let inline = def.into_problem().unwrap();
    let reference = builtin("vee_value").unwrap();
    let mut rng = CounterRng::new(12);
    for i in 0..20 {
        let g = [4.0 * rng.uniform() - 2.0];
        let x = [rng.standard_normal(), rng.standard_normal()];
        let xi = XiPoint::listed(i % 2, vec![]);
        let a = inline.integrand.value(&x, &g, &xi);
        let b = reference.integrand.value(&x, &g, &xi);
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        let ga = inline.integrand.gradient(&x, &g, &xi);
        let gb = reference.integrand.gradient(&x, &g, &xi);
        assert!((ga - gb).amax() <= 1e-12);
    }
}

proptest! {
    #[test]
    fn sample_is_prefix_stable(seed in any::<u64>(), n in 1usize..40) {
        // Row j depends only on (seed, j).
        let p = builtin("ridge2d").unwrap();
        let a = sample_dataset(&p, n, seed).unwrap();
        let b = sample_dataset(&p, n + 5, seed).unwrap();
        for j in 0..n {
            prop_assert_eq!(a.row(j), b.row(j));
        }
    }

    #[test]
    fn empirical_value_is_mean_of_integrand(seed in any::<u64>(), g in -2.0f64..2.0, s in -2.0f64..2.0) {
        use minimax_infer::problem::Objective;
        let p = builtin("smooth_saddle").unwrap();
        let d = sample_dataset(&p, 25, seed).unwrap();
        let obj = EmpiricalObjective::new(&p, &d);
        let xi = XiPoint::at(vec![s]);
        let direct = d.rows().map(|x| p.integrand.value(x, &[g], &xi)).sum::<f64>() / 25.0;
        prop_assert!((obj.value(&[g], &xi) - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
    }
}
