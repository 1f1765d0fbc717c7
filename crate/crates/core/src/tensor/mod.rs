//! Dense containers and the Kronecker / Tucker algebra.

mod dense_tensor;
mod eigen;
mod matrix;
mod norms;
mod products;

pub use dense_tensor::DenseTensor;
pub use eigen::{symmetric_eigenvalues, symmetric_spectral_norm};
pub use matrix::DenseMatrix;
pub use norms::{frobenius_distance, norm2, project_unit_ball, spectral_norm, POWER_ITERATION_CAP};
pub use products::{khatri_rao, kron, kron_all, mode_k_product, tucker_reconstruct, unvec, vec};
