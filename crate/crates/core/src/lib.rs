//! Numerical certification of the constructive steps in lower bounds for the
//! ground-state energy of dilute Bose gases, plus a small exact-diagonalization
//! engine for few-boson systems on a torus.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bogoliubov;
pub mod check;
pub mod config;
pub mod error;
pub mod fock;
pub mod fourier;
pub mod kinetic;
pub mod localization;
pub mod par;
pub mod potential;
pub mod quadrature;
pub mod report;
pub mod scattering;
pub mod suite;
pub mod table;

pub use check::{CheckRecord, IdentityReport};
pub use error::{Error, Result};
