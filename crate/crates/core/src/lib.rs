//! Multivariate conditional risk measures (MCoVaR, MCoES, MMME), their contribution
//! measures, stochastic-order checks and the copula/marginal fitting pipeline behind them.

pub mod cli;
pub mod copulas;
pub mod error;
pub mod estimation;
pub mod matrix;
pub mod measures;
pub mod models;
pub mod numeric;
pub mod orders;
pub mod marginals;
pub mod mc;
pub mod rng;
pub mod tables;

pub use copulas::{Copula, CopulaModel, DistortionContext};
pub use error::{CoriskError, Result};
pub use matrix::Matrix;
