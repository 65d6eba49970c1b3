//! Desk-scale split ODE systems with the structural features that matter for
//! ARK IMEX evaluation: purely imaginary explicit spectra, fast implicit
//! acoustic coupling with tridiagonal Jacobians, and a fourth-order
//! hyperviscosity operator for split post-step studies.

mod column;
mod ensemble;
mod hyperviscosity;
mod oscillator;

pub use column::{AcousticColumn, ColumnError};
pub use ensemble::OscillatorEnsemble;
pub use hyperviscosity::{HyperviscosityOperator, OscillatorWithField};
pub use oscillator::{oscillator_exact, SplitOscillator};
