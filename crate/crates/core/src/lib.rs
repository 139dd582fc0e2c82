//! Exact local models of parabolic vector bundles on curves and of vector bundles on
//! root stacks, with direct image and pullback implemented on both sides.

pub mod error;
pub mod field;
pub mod functors;
pub mod harness;
pub mod lattice;
pub mod local;
pub mod matrix;
pub mod pairing;
pub mod parabolic;
pub mod rootstack;
pub mod scenario;

pub use error::{Error, Result};
pub use field::{Field, Scalar};
pub use lattice::Lattice;
pub use local::LocalElement;
pub use matrix::LocalMatrix;
