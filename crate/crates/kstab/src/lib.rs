//! Energy functionals of toric polarized manifolds, their non-Archimedean
//! limits along test configurations, and the weight-polytope boundedness criterion.

pub mod archimedean;
pub mod cli;
pub mod error;
pub mod gitweights;
pub mod nonarchimedean;
pub mod polytope;
pub mod quadrature;
pub mod rational;
pub mod rays;
pub mod snclocal;

pub use error::{Error, Result};
pub use rational::Q;
