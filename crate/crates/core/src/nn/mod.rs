//! Minimal deterministic neural-network engine: dense and dropout layers,
//! losses with exact gradients, and Adam.

pub mod gradcheck;
pub mod layers;
pub mod loss;
mod matrix;
pub mod optim;
pub mod pathway;
mod rng;

pub use gradcheck::{check_pathway, gradient_check, GradCheck, Target};
pub use layers::{Activation, DenseLayer, DropoutLayer, Layer, Sampling};
pub use loss::{binary_cross_entropy, cross_entropy, mse, mse_rows};
pub use matrix::{dot, Matrix};
pub use optim::{Adam, AdamConfig};
pub use pathway::{GradAt, Pathway, Trace};
pub use rng::Rng;
