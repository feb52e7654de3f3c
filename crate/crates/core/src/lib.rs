//! Exponential Besov-Orlicz rough path analysis on sampled data.
//!
//! Luxemburg norms and Besov-Orlicz seminorms of grid-sampled paths, level-2
//! rough path lifts with Chen's relations, controlled rough paths, dyadic
//! sewing and rough integration, and a Picard solver for rough differential
//! equations.

pub mod besov;
pub mod controlled;
pub mod error;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod lift;
pub mod orlicz;
pub mod path_gen;
pub mod rde;
pub mod sewing;
pub mod sum;
pub mod tensor;

pub use besov::{NormReport, RegularityParams};
pub use controlled::ControlledPath;
pub use error::{Error, Result};
pub use field::{FieldSpec, VectorField};
pub use grid::{Level2Field, SampledPath};
pub use lift::RoughPath;
pub use orlicz::{SampledFunction, YoungFunction};
pub use path_gen::DriverSpec;
pub use rde::{RdeProblem, RdeSolution};
pub use sewing::{Partition, SewingResult};
pub use tensor::TensorLevel2;

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
