//! Truncated q-expansion calculus for nearly-overconvergent modular forms
//! at finite slope.
//!
//! The crate is organized bottom-up:
//!
//! * [`padic`] — Z_p arithmetic at a fixed absolute precision, Teichmüller
//!   lifts, Iwasawa log/exp, weight characters `(a, u)`, Q_p scalars;
//! * [`qseries`] — truncated q-expansions with the operators θ^σ, U, V,
//!   p-depletion, p-stabilization, and Hecke-root solving;
//! * [`wmodel`] — the two-variable model `Σ γ_i(q)·V_{k,i}` of forms of
//!   analytic weight, its connection ∇, p-adic iterates ∇^s, and the
//!   overconvergent projection;
//! * [`sympow`] — symmetric-power calculus: ∇-primitives, the partial
//!   contraction `pr`, and the two pipelines whose q-expansions agree;
//! * [`slope`] — finite-dimensional slope theory: Fredholm determinants,
//!   Newton polygons, slope-≤a and Riesz projectors, the pairing check;
//! * [`gz`] — Euler factors, the interpolation scalar, isotypic extraction,
//!   and the assembly of the special value from an Abel–Jacobi number;
//! * [`selftest`] — seeded randomized suites shared by the test harness
//!   and the command-line `selftest`.

pub mod error;
pub mod gz;
pub mod padic;
pub mod qseries;
pub mod selftest;
pub mod slope;
pub mod sympow;
pub mod wmodel;

pub use error::{Error, ErrorKind, Result};
pub use padic::{Context, ExponentChar, PadicNum, Qp};
