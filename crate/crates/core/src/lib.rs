//! Conditional sum of squares (CSS), known-level CSS and modified CSS (MCSS)
//! estimation of type-II ARFIMA(p1, d, p2) models with an unknown constant,
//! the theoretical score and intrinsic biases of those estimators, and the
//! bias-corrected MCSS estimator.
//!
//! The numerical kernels are generic over [`Real`] (`f32`, `f64`); the
//! estimation, bias and simulation drivers work in `f64`.

pub mod arma_poly;
pub mod bias;
pub mod breaks;
pub mod error;
pub mod estimator;
pub mod frac_ops;
pub mod model;
pub mod objectives;
pub mod optim;
pub mod scalar;
pub mod simulate;
pub mod special_fn;

pub use error::{Error, Result};
pub use scalar::Real;

pub type PiSeries64 = frac_ops::PiSeries<f64>;
pub type PiSeries32 = frac_ops::PiSeries<f32>;
pub type KappaSeries64 = frac_ops::KappaSeries<f64>;
pub type ThetaParams64 = model::ThetaParams<f64>;
pub type ThetaParams32 = model::ThetaParams<f32>;
pub type ArmaParams64 = arma_poly::ArmaParams<f64>;
pub type ArmaParams32 = arma_poly::ArmaParams<f32>;
pub type WeightTable64 = arma_poly::WeightTable<f64>;
pub type ConvolutedCoeffs64 = objectives::ConvolutedCoeffs<f64>;
pub type Objective64 = objectives::Objective<f64>;
pub type Objective32 = objectives::Objective<f32>;
