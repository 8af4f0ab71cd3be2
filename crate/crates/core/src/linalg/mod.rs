//! Sparse storage, direct factorizations, and Krylov solvers.

pub mod cg;
pub mod csr;
pub mod factor;
pub mod gmres;
pub mod ops;

pub use cg::{cg, cg_with, CgOutcome};
pub use csr::{axpy, dot, norm2, norm_inf, SparseMatrix};
pub use factor::{factorize, FactorKind, Factorization};
pub use gmres::{gmres, gmres_with_guess, GmresOutcome};
pub use ops::{FactorPrecond, IdentityOp, IluPrecond, JacobiPrecond, LinearOp};
