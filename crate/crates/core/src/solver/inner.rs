//! Inner maximization `sup_ξ f(γ, ξ)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::problem::{BoxSet, Objective, XiPoint, XiSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InnerConfig {
    /// Grid points per ξ coordinate for multi-start.
    pub grid_per_dim: usize,
    /// Cap on the total number of grid starts.
    pub max_grid: usize,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub merge_radius: f64,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            grid_per_dim: 5,
            max_grid: 243,
            grad_tol: 1e-10,
            max_iter: 200,
            merge_radius: 1e-6,
        }
    }
}

/// Local maximizers of `f(γ, ·)`, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub maximizers: Vec<(XiPoint, f64)>,
    /// At least one start met the gradient tolerance (always true for lists).
    pub converged: bool,
}

impl InnerResult {
    pub fn max_value(&self) -> f64 {
        self.maximizers[0].1
    }
}

/// Enumerate a finite `Ξ`, or run multi-start projected Newton ascent on a box.
pub fn inner_maximize(
    obj: &dyn Objective,
    gamma: &[f64],
    region: &XiSet,
    cfg: &InnerConfig,
) -> InnerResult {
    match region {
        XiSet::FiniteList(pts) => {
            let mut out: Vec<(XiPoint, f64)> = (0..pts.len())
                .map(|i| {
                    let xi = region.point(i);
                    let v = obj.value(gamma, &xi);
                    (xi, v)
                })
                .collect();
            // Stable sort keeps list order among ties.
            out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
            InnerResult {
                maximizers: out,
                converged: true,
            }
        }
        XiSet::Box(b) => box_maximize(obj, gamma, b, cfg),
    }
}

pub(crate) fn grid_points(b: &BoxSet, per_dim: usize, cap: usize, cell_centers: bool) -> Vec<Vec<f64>> {
    let m = b.dim();
    let mut g = per_dim.max(1);
    while g > 1 && (g as f64).powi(m as i32) > cap as f64 {
        g -= 1;
    }
    let coord = |k: usize, i: usize| -> f64 {
        let (l, u) = (b.lower[k], b.upper[k]);
        if cell_centers {
            l + (u - l) * (i as f64 + 0.5) / g as f64
        } else if g == 1 {
            0.5 * (l + u)
        } else {
            l + (u - l) * i as f64 / (g - 1) as f64
        }
    };
    let total = g.pow(m as u32);
    (0..total)
        .map(|mut idx| {
            (0..m)
                .map(|k| {
                    let i = idx % g;
                    idx /= g;
                    coord(k, i)
                })
                .collect()
        })
        .collect()
}

fn corners(b: &BoxSet) -> Vec<Vec<f64>> {
    let m = b.dim();
    (0..1usize << m)
        .map(|mask| {
            (0..m)
                .map(|k| if mask >> k & 1 == 1 { b.upper[k] } else { b.lower[k] })
                .collect()
        })
        .collect()
}

fn box_maximize(obj: &dyn Objective, gamma: &[f64], b: &BoxSet, cfg: &InnerConfig) -> InnerResult {
    let mut starts = grid_points(b, cfg.grid_per_dim, cfg.max_grid, true);
    starts.extend(corners(b));

    let mut runs: Vec<(XiPoint, f64, bool)> = starts
        .into_iter()
        .map(|s| ascend(obj, gamma, b, s, cfg))
        .collect();

    let converged = runs.iter().any(|r| r.2);
    runs.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.tie_order(&b.0))
    });
    let mut reps: Vec<(XiPoint, f64)> = Vec::new();
    for (xi, v, ok) in runs {
        if !ok && converged {
            continue;
        }
        let close = reps.iter().any(|(r, _)| dist(&r.coords, &xi.coords) <= cfg.merge_radius);
        if !close {
            reps.push((xi, v));
        }
    }
    InnerResult {
        maximizers: reps,
        converged,
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Coordinates that can move: not pinned at a bound by an outward gradient.
fn free_mask(xi: &[f64], g: &[f64], b: &BoxSet) -> Vec<bool> {
    xi.iter()
        .enumerate()
        .map(|(k, &v)| {
            let at_lo = v <= b.lower[k] && g[k] < 0.0;
            let at_hi = v >= b.upper[k] && g[k] > 0.0;
            !(at_lo || at_hi)
        })
        .collect()
}

pub(crate) fn xi_block(obj: &dyn Objective, n: usize, gamma: &[f64], xi: &XiPoint) -> (DVector<f64>, Option<DMatrix<f64>>) {
    let g = obj.gradient(gamma, xi);
    let m = g.len() - n;
    let grad = g.rows(n, m).into_owned();
    let hess = obj
        .hessian(gamma, xi)
        .ok()
        .map(|h| h.view((n, n), (m, m)).into_owned());
    (grad, hess)
}

fn ascend(
    obj: &dyn Objective,
    gamma: &[f64],
    b: &BoxSet,
    start: Vec<f64>,
    cfg: &InnerConfig,
) -> (XiPoint, f64, bool) {
    let n = gamma.len();
    let mut xi = XiPoint::at(start);
    let mut val = obj.value(gamma, &xi);
    for _ in 0..cfg.max_iter {
        let (g, h) = xi_block(obj, n, gamma, &xi);
        let free = free_mask(&xi.coords, g.as_slice(), b);
        let pg: Vec<f64> = g.iter().zip(&free).map(|(v, f)| if *f { *v } else { 0.0 }).collect();
        let pg_norm = pg.iter().map(|v| v * v).sum::<f64>().sqrt();
        if pg_norm <= cfg.grad_tol {
            return (xi, val, true);
        }
        let idx: Vec<usize> = (0..free.len()).filter(|&k| free[k]).collect();
        let gf = DVector::from_iterator(idx.len(), idx.iter().map(|&k| g[k]));
        let mut dir = None;
        if let Some(h) = &h {
            let hf = DMatrix::from_fn(idx.len(), idx.len(), |r, c| -h[(idx[r], idx[c])]);
            if let Some(ch) = hf.cholesky() {
                let d = ch.solve(&gf);
                if d.dot(&gf) > 0.0 {
                    dir = Some(d);
                }
            }
        }
        let d = dir.unwrap_or_else(|| gf.clone() / gf.norm().max(1.0));

        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let mut trial = xi.coords.clone();
            for (j, &k) in idx.iter().enumerate() {
                trial[k] += alpha * d[j];
            }
            b.project(&mut trial);
            let cand = XiPoint::at(trial);
            let v = obj.value(gamma, &cand);
            if v > val || (v >= val && cand.coords != xi.coords) {
                moved = cand.coords != xi.coords;
                xi = cand;
                val = v;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            // No ascent possible in floating point: stationary up to rounding.
            let scale = 1.0 + g.amax();
            return (xi, val, pg_norm <= 1e-7 * scale);
        }
    }
    let (g, _) = xi_block(obj, n, gamma, &xi);
    let free = free_mask(&xi.coords, g.as_slice(), b);
    let pg = g
        .iter()
        .zip(&free)
        .map(|(v, f)| if *f { v * v } else { 0.0 })
        .sum::<f64>()
        .sqrt();
    (xi.clone(), val, pg <= cfg.grad_tol)
}
