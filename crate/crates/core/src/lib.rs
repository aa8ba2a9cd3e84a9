//! Polymer expansions of the random cluster model on finite graphs, with a
//! brute-force oracle for every finite-volume quantity.

pub mod corpus;
pub mod error;
pub mod expansion;
pub mod gas;
pub mod graphcore;
pub mod oracle;
pub mod scalar;
pub mod subexp;
pub mod supexp;

pub use error::{RcmError, Result};
pub use graphcore::{BoundaryCondition, HostGraph, TemplateSpec};
pub use scalar::{Field, Repr, Scalar};
