mod common;

use common::random_reduction;
use minimax_infer::problem::{builtin, PolyFunction, PolyTerm, XiPoint};
use minimax_infer::reduction::{
    detect_active_set, lagrange_multipliers, lambda_polytope_vertices, reduce, value_dirderiv_formula,
    Multipliers, PointFlag, ReductionConfig,
};
use minimax_infer::solver::{inner_maximize, InnerConfig};
use minimax_infer::Error;
use nalgebra::DVector;
use proptest::prelude::*;

fn cfg() -> ReductionConfig {
    ReductionConfig::default()
}

#[test]
fn saddle_reduction_uses_schur_complement() {
    for b in [1.0, 2.5, 0.3] {
        let p = builtin(&format!("smooth_saddle({b})")).unwrap();
        let red = reduce(&p, &[0.0], &cfg()).unwrap();
        assert_eq!(red.k(), 1);
        assert_eq!(red.active_points[0].flag, PointFlag::Interior);
        assert!(red.grad_phi[0].amax() <= 1e-12);
        // 1 − b·(−1)⁻¹·b
        assert!((red.h[(0, 0)] - (1.0 + b * b)).abs() <= 1e-10, "b = {b}");
    }
}

#[test]
fn schur_hessian_matches_differences_of_max_value() {
    let p = builtin("smooth_saddle(2.5)").unwrap();
    let obj = p.population_objective().unwrap();
    let phi = |g: f64| inner_maximize(&obj, &[g], &p.xi_set, &InnerConfig::default()).max_value();
    let red = reduce(&p, &[0.0], &cfg()).unwrap();
    let h = 1e-3;
    let fd = (phi(h) - 2.0 * phi(0.0) + phi(-h)) / (h * h);
    assert!((red.h[(0, 0)] - fd).abs() <= 1e-4);
}

#[test]
fn active_point_on_xi_boundary_is_rejected() {
    // ξ* = bγ = 2.5 lies outside [−2, 2], so the maximizer is clipped to the boundary.
    let p = builtin("smooth_saddle(2.5)").unwrap();
    let obj = p.population_objective().unwrap();
    match detect_active_set(&p, &obj, &[1.0], &cfg()) {
        Err(Error::AssumptionViolation { .. }) => {}
        other => panic!("expected assumption violation, got {other:?}"),
    }
}

#[test]
fn vee_value_has_symmetric_multipliers() {
    let red = reduce(&builtin("vee_value").unwrap(), &[0.0], &cfg()).unwrap();
    let l = red.lambda_star.clone().unwrap();
    assert!((l[0] - 0.5).abs() <= 1e-12 && (l[1] - 0.5).abs() <= 1e-12);
    assert!(red.strict_complementarity());
    assert_eq!(red.l_basis.ncols(), 0);
    assert!(red.certificates.passes("degenerate_k_eq_n_plus_1"));
}

#[test]
fn cone_qp_lacks_strict_complementarity() {
    let red = reduce(&builtin("cone_qp").unwrap(), &[0.0], &cfg()).unwrap();
    assert_eq!(red.index_plus, vec![0]);
    assert_eq!(red.index_zero, vec![1]);
    assert!(!red.strict_complementarity());
    assert!(!red.certificates.passes("strict_complementarity"));
    assert!(red.certificates.passes("second_order_on_cone"));
    assert!(red.certificates.to_string().contains("strict_complementarity"));
}

#[test]
fn ridge_subspace_is_second_axis() {
    let red = reduce(&builtin("ridge2d").unwrap(), &[0.0, 0.0], &cfg()).unwrap();
    assert_eq!(red.l_basis.ncols(), 1);
    assert!(red.l_basis[(0, 0)].abs() <= 1e-12);
    assert!((red.l_basis[(1, 0)].abs() - 1.0).abs() <= 1e-12);
    assert!((red.h.clone() - nalgebra::DMatrix::identity(2, 2)).amax() <= 1e-12);
}

#[test]
fn zero_gradients_give_the_simplex() {
    let grads = vec![DVector::zeros(2); 3];
    let m = lagrange_multipliers(&grads, 1e-8).unwrap();
    assert!(matches!(m, Multipliers::Polytope(_)));
    let mut v = lambda_polytope_vertices(&m).unwrap();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    assert_eq!(v, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
}

#[test]
fn vertex_enumeration_is_capped() {
    let grads = vec![DVector::zeros(1); 7];
    let m = lagrange_multipliers(&grads, 1e-8);
    assert!(matches!(m, Err(Error::Capability(_))), "{m:?}");
}

#[test]
fn missing_multiplier_is_a_first_order_failure() {
    let grads = vec![DVector::from_vec(vec![1.0]), DVector::from_vec(vec![2.0])];
    assert!(matches!(lagrange_multipliers(&grads, 1e-8), Err(Error::FirstOrderFailure { .. })));
}

#[test]
fn value_derivative_formulas_on_vee() {
    let p = builtin("vee_value").unwrap();
    let eta = PolyFunction::new(
        1,
        0,
        vec![PolyTerm { coef: 1.0, gamma_pow: vec![], xi_pow: vec![], x: None, branch: Some(0) }],
        0,
        Some(2),
    )
    .unwrap();
    let f = value_dirderiv_formula(&p, &[vec![0.0]], &eta, &cfg()).unwrap();
    assert_eq!(f.minsup, 1.0);
    assert!((f.weighted.unwrap() - 0.5).abs() <= 1e-12);
}

#[test]
fn labels_of_listed_points() {
    let red = reduce(&builtin("paper_example").unwrap(), &[0.0], &cfg()).unwrap();
    let labels: Vec<_> = red.active_points.iter().map(|p| p.label.as_str()).collect();
    assert_eq!(labels, ["xi1", "xi2"]);
    assert_eq!(red.active_points[1].xi, XiPoint::listed(1, vec![]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multipliers_are_feasible(seed in any::<u64>(), zeros in any::<bool>()) {
        let red = random_reduction(seed, zeros);
        let l = red.lambda_star.clone().unwrap();
        prop_assert!(l.iter().all(|v| *v >= 0.0));
        prop_assert!((l.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let mut s = DVector::zeros(red.n());
        for (g, w) in red.grad_phi.iter().zip(&l) {
            s += g * *w;
        }
        prop_assert!(s.amax() <= 1e-8 * (1.0 + red.grad_phi.iter().map(|g| g.amax()).fold(0.0, f64::max)));
    }

    #[test]
    fn subspace_basis_is_orthonormal_and_critical(seed in any::<u64>(), zeros in any::<bool>()) {
        let red = random_reduction(seed, zeros);
        let b = &red.l_basis;
        let gram = b.transpose() * b;
        prop_assert!((gram - nalgebra::DMatrix::identity(b.ncols(), b.ncols())).amax() <= 1e-10);
        for &i in &red.index_plus {
            prop_assert!((red.grad_phi[i].transpose() * b).amax() <= 1e-8 * (1.0 + red.grad_phi[i].amax()));
        }
        // The critical cone lies in 𝓛, with equality under strict complementarity.
        if red.index_zero.is_empty() {
            for j in 0..b.ncols() {
                prop_assert!(red.cone.contains(&b.column(j).into_owned(), 1e-8));
            }
        }
        let h = red.cone.project(&DVector::from_vec(common::normal_vector(red.n(), seed ^ 2))).unwrap();
        prop_assert!((b * (b.transpose() * &h) - &h).amax() <= 1e-9 * (1.0 + h.amax()));
        // dim 𝓛 + rank of the I₊ gradients = n.
        let rows = nalgebra::DMatrix::from_fn(red.index_plus.len(), red.n(), |r, c| red.grad_phi[red.index_plus[r]][c]);
        prop_assert_eq!(b.ncols() + minimax_infer::linalg::rank(&rows, 1e-8), red.n());
    }

    #[test]
    fn projection_onto_cone_is_idempotent(seed in any::<u64>(), zeros in any::<bool>()) {
        let red = random_reduction(seed, zeros);
        let h = DVector::from_vec(common::normal_vector(red.n(), seed ^ 1));
        let p = red.cone.project(&h).unwrap();
        prop_assert!(red.cone.contains(&p, 1e-9));
        let pp = red.cone.project(&p).unwrap();
        prop_assert!((pp - &p).amax() <= 1e-9);
    }
}
