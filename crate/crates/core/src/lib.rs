pub mod data;
pub mod detect;
pub mod error;
pub mod experiment;
pub mod model;
pub mod nn;
pub mod report;
pub mod train;
pub mod uncertainty;

pub use error::{Error, Result};
