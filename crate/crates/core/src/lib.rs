//! Implicit-explicit additive Runge-Kutta (ARK IMEX) time integration.
//!
//! An ARK IMEX method advances an additively split system
//! `dq/dt = f_E(q) + f_I(q)` by pairing an explicit Runge-Kutta tableau
//! (applied to `f_E`) with a diagonally implicit one (applied to `f_I`)
//! that share the update structure. The crate provides:
//!
//! * a catalog of ARK method coefficient pairs ([`catalog`]), stored as
//!   decimal strings and parsed once to binary64;
//! * algebraic and numerical certification of method properties: order
//!   conditions, linear stability, stiff accuracy ([`analysis`]);
//! * a fixed-step ARK IMEX stepper with modified-Newton stage solves,
//!   WRMS-norm stopping, and block-tridiagonal linear algebra
//!   ([`integrator`]);
//! * desk-scale split ODE systems with purely imaginary explicit spectra
//!   and stiff implicit acoustic coupling ([`models`]);
//! * an evaluation harness for convergence studies, largest-stable-step
//!   scans, and energy diagnostics, plus CSV/JSON reporting ([`harness`]).
//!
//! Independent work units (methods, step sizes, Jacobian blocks) fan out
//! through [`exec`], which runs on rayon when the `parallel` feature is
//! enabled and falls back to sequential iteration otherwise. Results are
//! bitwise identical in both modes.

pub mod analysis;
pub mod catalog;
pub mod exec;
pub mod harness;
pub mod integrator;
pub mod models;
pub mod problem;
pub mod tableau;

pub use catalog::{dbm453, get_method, load_catalog, CatalogSource};
pub use problem::{NewtonConfig, SplitOdeProblem};
pub use tableau::{ArkMethod, ButcherTableau, TableauKind};
