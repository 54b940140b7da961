#![allow(dead_code)]

use minimax_infer::problem::XiPoint;
use minimax_infer::reduction::{ActivePoint, PointFlag, ReductionConfig, ReductionData};
use minimax_infer::rng::CounterRng;
use nalgebra::{DMatrix, DVector};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

/// `count` draws of `sd · Z`, drawn directly from the counter generator.
pub fn normal_draws(count: usize, sd: f64, seed: u64) -> Vec<f64> {
    (0..count)
        .map(|i| sd * CounterRng::stream(seed, i as u64).standard_normal())
        .collect()
}

pub fn column(m: &DMatrix<f64>, j: usize) -> Vec<f64> {
    m.column(j).iter().copied().collect()
}

/// A random reduction satisfying first-order optimality with positive
/// definite branch Hessians. With `zero_multipliers`, up to `k − 2` of the
/// multipliers are exactly zero.
pub fn random_reduction(seed: u64, zero_multipliers: bool) -> ReductionData {
    let mut rng = CounterRng::new(seed);
    let n = 1 + (rng.next_u64() % 3) as usize;
    let k = 1 + (rng.next_u64() % (n as u64 + 1)) as usize;
    let mut lambda: Vec<f64> = (0..k).map(|_| 0.2 + rng.uniform()).collect();
    if zero_multipliers && k > 2 {
        let zeros = 1 + (rng.next_u64() % (k as u64 - 2)) as usize;
        for l in lambda.iter_mut().take(zeros) {
            *l = 0.0;
        }
    } else if zero_multipliers && k == 2 {
        lambda[0] = 0.0;
    }
    let s: f64 = lambda.iter().sum();
    lambda.iter_mut().for_each(|l| *l /= s);

    // Free gradients for the first k − 1 branches; the last one closes
    // Σ λ_i ∇φ_i = 0 and always carries positive weight.
    let mut grads: Vec<DVector<f64>> = (0..k - 1)
        .map(|_| DVector::from_fn(n, |_, _| 2.0 * rng.standard_normal()))
        .collect();
    let mut last = DVector::zeros(n);
    for (g, l) in grads.iter().zip(&lambda) {
        last -= g * (l / lambda[k - 1]);
    }
    grads.push(last);
    let hess: Vec<DMatrix<f64>> = (0..k)
        .map(|_| {
            let b = DMatrix::from_fn(n, n, |_, _| rng.standard_normal());
            &b * b.transpose() + DMatrix::identity(n, n) * 0.5
        })
        .collect();
    let points = (0..k)
        .map(|i| ActivePoint {
            xi: XiPoint::listed(i, vec![i as f64]),
            label: format!("xi{}", i + 1),
            flag: PointFlag::Isolated,
            value: 0.0,
        })
        .collect();
    ReductionData::from_parts(vec![0.0; n], 0.0, points, grads, hess, &ReductionConfig::default())
        .expect("random reduction is first-order feasible")
}

/// A standard normal vector of length `len`.
pub fn normal_vector(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = CounterRng::new(seed);
    (0..len).map(|_| rng.standard_normal()).collect()
}
