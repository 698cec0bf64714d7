//! Exact rational machinery for correlation polytopes.

pub mod dd;
pub mod formats;
pub mod linalg;
pub mod lp;
pub mod marginal;
pub mod polytope;
mod qnum;
pub mod random;
pub mod rational;
pub mod scenario;
pub mod sequential;

pub use rational::Rational;
