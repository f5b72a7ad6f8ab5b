//! Finite-dimensional quantum compact metric spaces: Lip-norms, the
//! Monge–Kantorovich metric, bridges, treks and upper bounds for the quantum
//! Gromov–Hausdorff propinquity.

pub mod algebra;
pub mod bridges;
pub mod constructions;
pub mod error;
pub mod linalg;
pub mod quantum_metric;
pub mod scalar;
pub mod solvers;
pub mod treks;

pub use error::{Error, Result};

/// Real scalar used by the algebraic layer.
pub type Real = f64;
/// Complex scalar used by the algebraic layer.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix over [`Real`].
pub type CMatrix = linalg::CMat<f64>;
