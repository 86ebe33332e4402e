//! Existence, uniqueness and identification analysis for linear rational
//! expectations models `B(L) E_t Y = A(L) ε_t` via Wiener–Hopf factorization.
//!
//! The crate is organised bottom-up:
//!
//! * [`polylab`] — Laurent polynomial matrices and the validated [`Model`].
//! * [`wienerhopf`] — the factorization `B = B_minus B_plus` and the
//!   existence/uniqueness check.
//! * [`resolve`] — solution objects, transfer series, canonical form,
//!   spectral density and simulation.
//! * [`identcore`] — the `T`, `H`, `P` matrices and the rank tests.
//! * [`paramdsl`] — deep-parameter maps and generic/local identification.

pub mod error;
pub mod identcore;
pub mod linalg;
pub mod paramdsl;
pub mod polylab;
pub mod random_models;
pub mod resolve;
pub mod tol;
pub mod wienerhopf;

pub use error::{RatexError, Result};
pub use polylab::{lp_add, lp_det_and_zeros, lp_mul, lp_sub, lp_truncated_inverse_series, LaurentMatrix, Model};
pub use resolve::{solve, SolutionBundle, TransferSeries};
pub use tol::ToleranceConfig;
pub use wienerhopf::{check_eu, wh_factorize, EuDiagnostic, WHFactors};

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;
