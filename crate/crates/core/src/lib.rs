//! Forward solver and direct reconstruction algorithms for small conductivity
//! inclusions in time-fractional (subdiffusion) problems.

pub mod error;
pub mod fracmath;
pub mod forward;
pub mod greenfn;
pub mod locate_multi;
pub mod locate_one;
pub mod measure;

pub use error::{Error, Result};
pub use fracmath::{FracOrder, TimeGrid};
