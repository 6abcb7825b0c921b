//! Linear algebra for the Newton iterations: batched dense LU with partial
//! pivoting over block-diagonal systems, scaled matrix-free GMRES with
//! rotation-based residual tracking, finite-difference Jacobians, and
//! Jacobian-vector products.

mod blockdiag;
mod error;
mod fd;
mod gmres;
mod scaling;

pub use blockdiag::{lu_factor_batched, lu_solve_batched, lu_solve_flat, BlockDiagMatrix};
pub use error::LinalgError;
pub use fd::{fd_jacobian_batched, fd_jacobian_dense, fd_jacobian_dense_scaled, jv_product};
pub use gmres::{gmres_scaled, GmresConfig, GmresResult};
pub use scaling::ScalingOperators;
