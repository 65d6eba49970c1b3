//! The additively-split ODE problem contract.
//!
//! A problem supplies the two right-hand sides `f_E` and `f_I`, and a
//! description of the shifted implicit system `(I - alpha J_I)` as
//! independent tridiagonal blocks over a problem-chosen reduced unknown
//! vector. Problems whose Jacobian is not tridiagonal in the state ordering
//! (the acoustic column couples `w` and `phi` across interfaces) eliminate
//! part of the state first: `reduce_rhs` maps a full-state right-hand side
//! into the reduced space and `expand_solution` maps the reduced solution
//! back, performing the back-substitution.

use std::ops::Range;

use crate::integrator::tridiag::TridiagonalMatrix;

/// Per-component classification used to build WRMS weights. The classes
/// mirror the field types of a nonhydrostatic core; desk-scale models map
/// their components onto whichever classes fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightClass {
    HorizontalVelocity,
    VerticalVelocity,
    Geopotential,
    Temperature,
    PressureGradient,
    Other,
}

/// Multipliers of `epsilon_r` defining the absolute weight for each class.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMultipliers {
    pub horizontal_velocity: f64,
    pub vertical_velocity: f64,
    pub geopotential: f64,
    pub temperature: f64,
    pub pressure_gradient: f64,
    pub other: f64,
}

impl Default for WeightMultipliers {
    fn default() -> Self {
        WeightMultipliers {
            horizontal_velocity: 10.0,
            vertical_velocity: 10.0,
            geopotential: 1e5,
            temperature: 1e6,
            pressure_gradient: 1.0,
            other: 10.0,
        }
    }
}

impl WeightMultipliers {
    pub fn multiplier(&self, class: WeightClass) -> f64 {
        match class {
            WeightClass::HorizontalVelocity => self.horizontal_velocity,
            WeightClass::VerticalVelocity => self.vertical_velocity,
            WeightClass::Geopotential => self.geopotential,
            WeightClass::Temperature => self.temperature,
            WeightClass::PressureGradient => self.pressure_gradient,
            WeightClass::Other => self.other,
        }
    }
}

/// Newton iteration controls for the implicit stage solves.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    /// Stopping tolerance on the rate-weighted WRMS increment norm.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Floor factor in the convergence-rate recurrence.
    pub rate_floor_factor: f64,
    /// Relative weight in the WRMS norm.
    pub epsilon_r: f64,
    /// Class multipliers defining the absolute weights.
    pub multipliers: WeightMultipliers,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            epsilon: 1e-1,
            max_iterations: 10,
            rate_floor_factor: 0.3,
            epsilon_r: 1e-6,
            multipliers: WeightMultipliers::default(),
        }
    }
}

impl NewtonConfig {
    /// WRMS weights `w_k = epsilon_r * |v_k| + epsilon_a_k` built from the
    /// previous-time-step solution `v` and the problem's component classes.
    pub fn weights(&self, v: &[f64], classes: &[WeightClass]) -> Vec<f64> {
        v.iter()
            .zip(classes)
            .map(|(&vk, &ck)| self.epsilon_r * vk.abs() + self.multipliers.multiplier(ck) * self.epsilon_r)
            .collect()
    }
}

/// One independent tridiagonal block of the shifted implicit system.
#[derive(Debug, Clone)]
pub struct ShiftedBlock {
    /// Contiguous range of reduced-space indices this block owns.
    pub range: Range<usize>,
    pub matrix: TridiagonalMatrix,
}

/// The shifted system `(I - alpha J_I)` in reduced form. Block ranges must
/// partition `[0, reduced_dim)` without overlap.
#[derive(Debug, Clone)]
pub struct ShiftedImplicitSystem {
    pub reduced_dim: usize,
    pub blocks: Vec<ShiftedBlock>,
}

impl ShiftedImplicitSystem {
    /// Check the partition invariant.
    pub fn partitions_reduced_space(&self) -> bool {
        let mut next = 0;
        for b in &self.blocks {
            if b.range.start != next || b.range.end < b.range.start {
                return false;
            }
            if b.matrix.dim() != b.range.len() {
                return false;
            }
            next = b.range.end;
        }
        next == self.reduced_dim
    }
}

/// Contract every additively split problem implements.
pub trait SplitOdeProblem: Sync {
    /// Stable identifier used in reports.
    fn id(&self) -> &str;

    fn dim(&self) -> usize;

    /// Dimension of the reduced space the shifted system acts on.
    fn reduced_dim(&self) -> usize {
        self.dim()
    }

    /// Explicit (non-stiff) part of the right-hand side.
    fn eval_explicit(&self, t: f64, q: &[f64], out: &mut [f64]);

    /// Implicit (stiff) part of the right-hand side.
    fn eval_implicit(&self, t: f64, q: &[f64], out: &mut [f64]);

    /// Assemble `(I - alpha J_I(t, q))` as independent tridiagonal blocks
    /// over the reduced space.
    fn shifted_implicit_system(&self, t: f64, q: &[f64], alpha: f64) -> ShiftedImplicitSystem;

    /// Map a full-state right-hand side into the reduced space.
    fn reduce_rhs(&self, _t: f64, _q: &[f64], _alpha: f64, rhs: &[f64]) -> Vec<f64> {
        rhs.to_vec()
    }

    /// Map a reduced solution back to the full state, using the original
    /// right-hand side for back-substitution.
    fn expand_solution(
        &self,
        _t: f64,
        _q: &[f64],
        _alpha: f64,
        _rhs: &[f64],
        reduced: &[f64],
    ) -> Vec<f64> {
        reduced.to_vec()
    }

    /// Component classes for WRMS weights.
    fn weight_classes(&self) -> Vec<WeightClass> {
        vec![WeightClass::Other; self.dim()]
    }

    /// Analytic solution at time `t`, when one exists.
    fn exact_solution(&self, _t: f64) -> Option<Vec<f64>> {
        None
    }

    /// Conserved (or diagnosed) energy functional, when one exists.
    fn energy(&self, _q: &[f64]) -> Option<f64> {
        None
    }

    /// Initial state.
    fn initial_state(&self) -> Vec<f64>;
}

/// Additive consistency: `f_E + f_I` evaluated separately at `(t, q)`.
pub fn full_rhs(problem: &dyn SplitOdeProblem, t: f64, q: &[f64]) -> Vec<f64> {
    let mut fe = vec![0.0; problem.dim()];
    let mut fi = vec![0.0; problem.dim()];
    problem.eval_explicit(t, q, &mut fe);
    problem.eval_implicit(t, q, &mut fi);
    fe.iter().zip(&fi).map(|(a, b)| a + b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_newton_config_matches_operational_values() {
        let c = NewtonConfig::default();
        assert_eq!(c.epsilon, 0.1);
        assert_eq!(c.max_iterations, 10);
        assert_eq!(c.rate_floor_factor, 0.3);
        assert_eq!(c.epsilon_r, 1e-6);
        assert_eq!(c.multipliers.geopotential, 1e5);
        assert_eq!(c.multipliers.vertical_velocity, 10.0);
    }

    #[test]
    fn weights_combine_relative_and_class_terms() {
        let c = NewtonConfig::default();
        let w = c.weights(&[2.0, -3.0], &[WeightClass::VerticalVelocity, WeightClass::Geopotential]);
        assert_eq!(w[0], 1e-6 * 2.0 + 10.0 * 1e-6);
        assert_eq!(w[1], 1e-6 * 3.0 + 1e5 * 1e-6);
    }
}
