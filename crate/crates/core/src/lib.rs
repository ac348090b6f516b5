//! Singularity structure of self-similar maps and the finite-level matrix picture of the
//! core of their Cuntz-Pimsner algebras.

pub mod attractor;
pub mod bimodule;
pub mod core_rep;
pub mod error;
pub mod field;
pub mod ideals;
pub mod ifs;
pub mod linsolve;
pub mod random;
pub mod report;
pub mod scalar;
pub mod singularity;
pub mod traces;
pub mod verify;

pub use error::{Error, Result};
pub use ifs::{AffineMap, MultiIndex, SelfSimilarSystem};
pub use scalar::{Point, Scalar};
