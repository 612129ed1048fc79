//! Dense linear-algebra kernels used by the spectral and dynamical modules.

pub mod eig;
pub mod expm;
pub mod svd;

pub use eig::{eig, eigenvalues, schur, Eigen, Schur};
pub use expm::expm;
pub use svd::{singular_values, Svd};
