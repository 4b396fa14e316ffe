pub mod diagnostics;
pub mod error;
pub mod fock;
pub mod gates;
pub mod network;
pub mod objective;
pub mod optimizer;
pub mod random;
pub mod targets;

pub use error::{Error, Result};

/// Complex amplitude type used throughout.
pub type C64 = nalgebra::Complex<f64>;
