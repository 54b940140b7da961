//! Estimation and asymptotic inference for stochastic minimax problems.
//!
//! The crate solves `min_γ sup_ξ E[F(X, γ, ξ)]` and its sample-average
//! counterpart, reduces the population problem at its solution to a finite
//! minimax with Lagrange multipliers and second-order data, builds the
//! limiting laws of `√N(θ̂_N − θ*)` and `√N(γ̂_N − γ*)`, and checks them
//! by Monte Carlo.
//!
//! Modules, bottom-up:
//!
//! * [`problem`]: problem model, datasets, empirical objective, built-ins.
//! * [`solver`]: inner maximization, outer minimization, value derivatives.
//! * [`reduction`]: active set, `φ_i` derivatives, multipliers, certificates.
//! * [`limitdist`]: covariance objects and samplers for the limit laws.
//! * [`montecarlo`]: replicated sample solves and distribution comparison.
//! * [`cli`]: JSON run configurations and the `minimax-infer` front end.

pub mod cli;
pub mod error;
pub mod limitdist;
pub mod linalg;
pub mod montecarlo;
pub mod problem;
pub mod qp;
pub mod reduction;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
