//! Dynamic identification of serial manipulators from motor currents, and a
//! payload-reconfigurable inverse-dynamics solver built on the result.

pub mod cli;
pub mod dataio;
pub mod dynamics;
pub mod estimation;
pub mod error;
pub mod kinematics;
pub mod linalg;
pub mod metrics;
pub mod payload;
pub mod pipeline;
pub mod reduction;
pub mod solver;
pub mod trajectory;

pub use error::{Error, Result, SchemaError};
