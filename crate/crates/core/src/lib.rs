//! Explicit stationary discs attached to Levi nondegenerate quadrics
//! `Re w_j = z^H A_j z` in `C^{n+d}`.
//!
//! The crate builds the pinned family of lifts parametrized by `a in C^d`
//! and `V in C^n`, and checks the machinery around it numerically:
//!
//! - [`quadric`]: the model and its nondegeneracy certificates,
//! - [`pencil`]: the quadratic matrix equation, the Hermitian pencil
//!   factorization and the Stein operator,
//! - [`disc`]: closed-form discs, lifts and boundary checks,
//! - [`jets`]: the 1-jet map at `z = 1`, the center map at `z = 0` and their
//!   Jacobians,
//! - [`minimality`]: orbit spaces, stationary minimality and defect,
//! - [`cli`]: JSON configs, reports and grid scans behind the `statdisc` binary.

pub mod cli;
pub mod disc;
pub mod error;
pub mod jets;
pub mod json;
pub mod linalg;
pub mod minimality;
pub mod pencil;
pub mod quadric;
pub mod report;

pub use disc::{DiscParameters, StationaryDisc};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use pencil::PencilFactorization;
pub use quadric::{LeviDirection, Quadric};
pub use report::JacobianReport;
