//! Eigenvalues of the two-dimensional hydrogen atom in a perpendicular
//! magnetic field by the asymptotic iteration method (AIM), with an
//! independent finite-difference oracle.
//!
//! The pieces, bottom up:
//! - [`jet`]: truncated Taylor series about a point, the derivative supply
//!   for the recursion;
//! - [`aim`]: the AIM recursion and the quantization sequence `delta_k`;
//! - [`problems`]: physical inputs `(Z, m, omega_L)` mapped to AIM problems,
//!   plus the closed-form zero-field spectrum;
//! - [`roots`]: eps-scans, bisection and cross-k stabilization;
//! - [`oracle`]: a Sturm-bisection finite-difference eigensolver;
//! - [`tables`]: the published reference tables shipped with the crate.

pub mod aim;
pub mod error;
pub mod exec;
pub mod jet;
pub mod oracle;
pub mod problems;
pub mod real;
pub mod roots;
pub mod tables;

pub use error::{Error, Result};
pub use exec::Execution;
pub use jet::Jet;
pub use problems::{EnergyLevel, ProblemSpec, Source};
pub use real::{DoubleF64, Real};
