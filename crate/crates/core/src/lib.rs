//! Dependency-light machine learning toolkit.
//!
//! Everything works on one numeric currency, the dense row-major
//! [`Matrix`] of `f64`, and one random generator, [`SeededRng`]
//! (SplitMix64), so a seed reproduces a result bit for bit on any surface.
//!
//! - [`linear`]: ridge linear regression, binary logistic regression
//! - [`clustering`]: k-means++ seeding, Lloyd and Hamerly k-means
//! - [`trees`]: kd-tree with exact k-nearest / k-furthest neighbor search
//!   and error-bounded kernel density estimation
//! - [`neural`]: a small feedforward classifier
//! - [`optimize`]: gradient descent and SGD behind an objective trait
//! - [`model_io`]: the portable `.mlk` model envelope

pub mod clustering;
pub mod csv;
pub mod dataset;
mod error;
mod linalg;
pub mod linear;
pub mod matrix;
pub mod model_io;
pub mod neural;
pub mod optimize;
pub mod rng;
pub mod trees;

pub use dataset::{train_test_split, LabeledDataset};
pub use error::{Error, Result};
pub use linalg::cholesky_solve;
pub use matrix::Matrix;
pub use rng::SeededRng;
