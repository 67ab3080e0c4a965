//! Toric test configurations from convex rational PL functions and their
//! exact non-Archimedean functionals.

pub mod config;
pub mod functionals;
pub mod pl;
pub mod threshold;

pub use config::{make_config, make_config_with_height, Component, ToricTestConfig};
pub use functionals::*;
pub use pl::PlConvexFunction;
pub use threshold::{stability_threshold, Family, Threshold};
