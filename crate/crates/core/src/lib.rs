//! Boundary-adapted Gaussian random waves in wedge and corridor geometries,
//! their closed-form two-point correlation functions, and a boundary
//! integral eigensolver for checking them against chaotic billiards.

pub mod bim;
pub mod cli;
pub mod correlation;
pub mod error;
pub mod geom;
pub mod io;
pub mod randwave;
pub mod specfun;
pub mod symmetry;

pub use error::{Error, Result};
pub use geom::Point;
