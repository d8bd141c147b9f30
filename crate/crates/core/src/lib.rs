//! Gaussian Hölder and reverse Hölder criteria, sharp Brascamp–Lieb type
//! constants, and numerical verifiers for the inequality family built on them.
//!
//! The crate is `no_std` and needs only `alloc`. Floating-point math goes
//! through `libm`, so results are identical with and without `std`.
//!
//! Layout, bottom-up:
//!
//! - [`symlin`]: symmetric eigen-decompositions, PSD decisions, square roots,
//!   Gram factors, orthonormal completion, Schur complements.
//! - [`numint`]: Gauss–Hermite and Gauss–Legendre rules, tensor quadrature,
//!   batched Monte Carlo, extended-real `L^p` norms.
//! - [`gauss`]: block Gaussian instances, sampling, closed-form moments of the
//!   quadratic-exponential family.
//! - [`holder`]: the `T ⪯ P` / `T ⪰ P` criteria, equality witnesses, improved
//!   exponents, and the eligible-exponent region.
//! - [`hyper`]: Ornstein–Uhlenbeck semigroup and (reverse) hypercontractivity.
//! - [`lebesgue`]: Brascamp–Lieb data over Lebesgue measure and the sharp
//!   Young construction.
//! - [`barthe`]: the two-sided moment chain, its constants, Prékopa–Leindler,
//!   and the entropy chain.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod barthe;
pub mod error;
pub mod gauss;
pub mod holder;
pub mod hyper;
pub mod lebesgue;
pub mod numint;
pub mod symlin;

pub use error::{Error, Result};
