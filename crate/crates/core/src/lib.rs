//! Rigid-body dynamics with an attached rotor, in arbitrary dimension.
//!
//! The crate models three related phase spaces: body momentum paired with an
//! orientation-like skew matrix, body momentum paired with a direction
//! vector, and body momentum alone. Each carries a bracket that picks up a
//! constant gyroscopic shift from the rotor, and each supports families of
//! conserved quantities, polynomial spectral deformations, fixed-step
//! integrators, and numerical certification of the expected structure.

pub mod diagnostics;
pub mod error;
pub mod integrate;
pub mod lax;
pub mod models;
pub mod phase;
pub mod poisson;
pub mod samples;
pub mod skew;
pub mod zhukovskiy;

pub use error::{Error, Result};
