pub mod error;
pub mod linalg;
pub mod solvers;

pub use error::{RecovError, Result};
pub mod spaces;
pub mod measure;
pub mod approx;
pub mod lift;
pub mod angles;
pub mod recover;
pub mod chebgeo;
pub mod samplab;
pub mod moduli;
