//! Numerical building blocks: quadrature, root finding, normal distribution
//! functions, optimizers and sample statistics.

pub mod normal;
pub mod optimize;
pub mod quad;
pub mod roots;
pub mod stats;
