//! Left random walks on linear groups.
//!
//! The crate simulates products `A_n = Y_n ⋯ Y_1` of iid invertible matrices,
//! evaluates the norm, Iwasawa and Cartan cocycles along them, estimates
//! Lyapunov vectors and asymptotic covariances, builds the dyadic
//! martingale-to-Gaussian block coupling, and measures Wasserstein distances
//! to the Gaussian limit.

pub mod cocycles;
pub mod contraction;
pub mod error;
pub mod estimators;
pub mod martcouple;
pub mod matgroup;
pub mod measures;
pub mod normal;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod tailbounds;
pub mod wasserstein;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision aliases used by the simulation layers.
pub type Mat = matgroup::Matrix<f64>;
pub type Elem = matgroup::GroupElement<f64>;
pub type Product = matgroup::ScaledProduct<f64>;
pub type Point = matgroup::ProjPoint<f64>;
pub type FlagF64 = matgroup::Flag<f64>;
/// Single-precision aliases.
pub type Mat32 = matgroup::Matrix<f32>;
pub type Elem32 = matgroup::GroupElement<f32>;
