//! Archimedean metrics on toric manifolds and their energy functionals.

pub mod functionals;
pub mod jet;
pub mod lse;
pub mod potential;

pub use functionals::*;
pub use jet::{CubicSpline, Jet, Profile, Ridge};
pub use lse::Lse;
pub use potential::{lse_ricci, Dual, Pair, PlTerm, PolyData, Repr, ToricPotential};
