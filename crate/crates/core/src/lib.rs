//! Structural analysis and desk-scale numerics for the 2D semilinear wave
//! equation `u_tt - Laplace u = F(du)` with quadratic and cubic parts
//! `F_q`, `F_c`.
//!
//! * [`trig_algebra`]: symbols `F_q(omega_hat)`, `P(omega) = F_c(omega_hat)`
//!   and trig polynomials in the monomial basis.
//! * [`structure_analysis`]: null conditions, the Agemi condition, zero
//!   orders of `P(cos theta, sin theta)` and the predicted decay exponent.
//! * [`ode_profile`]: the characteristic profile ODE
//!   `V' = -P V^3 / (2t) + G` and Matsumura's decay lemma.
//! * [`wave_lab`]: finite-difference solver, energy and ray diagnostics.
//! * [`cli`]: config parsing, command pipelines, manifests.

pub mod cli;
pub mod error;
pub mod ode_profile;
pub mod planted;
pub mod precise;
pub mod quadrature;
pub mod rk;
pub mod structure_analysis;
pub mod trig_algebra;
pub mod wave_lab;

pub use error::{Error, ErrorClass, Result};
