//! Exact finite-field Weil representation.
//!
//! Everything is computed in the value ring Q(ζ_p)[s]/(s² − p) (see [`values`]).
//! Heisenberg functions, canonical intertwining kernels between lagrangian
//! models, isotropic reduction and the truncated Laurent-series tower are
//! built on top of plain linear algebra over F_p ([`field`]).

pub mod error;
pub mod field;
pub mod values;

pub use error::{Error, Result};
pub mod symplectic;
pub mod heisenberg;
pub mod intertwiner;
pub mod reduction;
pub mod tate;
