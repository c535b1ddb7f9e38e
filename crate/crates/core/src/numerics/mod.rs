//! Dense complex linear algebra, branch-cut conventions and contour quadrature.

mod branch;
mod eigen;
mod expm;
mod gauss;
mod gemm;
mod lu;
mod matrix;
mod norm;
mod par;
mod quadrature;

pub use branch::{arcsin_principal, cut_distance, log1p, principal_sqrt, sqrt_re};
pub use eigen::{eig_dense, eigh, eigvals_dense, eigvalsh, EigenPair, HermitianEigen};
pub use expm::{mat_exp, EXP_NORM_LIMIT};
pub use gauss::{gauss_legendre, segment_integral};
pub use lu::{solve, Lu};
pub use matrix::ComplexMatrix;
pub use norm::{norm2, operator_norm, singular_values};
pub use quadrature::{contour_quadrature, Contour, DEFAULT_NODES};

pub(crate) use gemm::matmul;
pub(crate) use par::par_map;
