pub mod dataset;
pub mod error;
pub mod geometry;
pub mod hydro;
pub mod manifest;
pub mod optimize;
pub mod parents;
pub mod pca;
pub mod pipeline;
pub mod quadrature;
pub mod surrogate;
pub mod table;

pub use error::{Error, Result};
