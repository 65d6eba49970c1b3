//! Harmonic rotation split between a slow explicit and fast implicit part.
//!
//! `dq/dt = omega_e * S q + omega_i * S q` with `S = [[0, -1], [1, 0]]`.
//! Both parts have purely imaginary spectra and the exact flow is a rotation
//! by `(omega_e + omega_i) t`, conserving `x^2 + y^2` exactly.

use crate::integrator::tridiag::TridiagonalMatrix;
use crate::problem::{ShiftedBlock, ShiftedImplicitSystem, SplitOdeProblem, WeightClass};

#[derive(Debug, Clone)]
pub struct SplitOscillator {
    pub omega_e: f64,
    pub omega_i: f64,
    pub q0: [f64; 2],
    id: String,
}

impl SplitOscillator {
    pub fn new(omega_e: f64, omega_i: f64) -> Self {
        SplitOscillator { omega_e, omega_i, q0: [1.0, 0.0], id: "split-oscillator".into() }
    }

    pub fn with_initial(mut self, q0: [f64; 2]) -> Self {
        self.q0 = q0;
        self
    }
}

/// Rotation of `q0` by angle `(omega_e + omega_i) t`.
pub fn oscillator_exact(omega_e: f64, omega_i: f64, q0: [f64; 2], t: f64) -> [f64; 2] {
    let theta = (omega_e + omega_i) * t;
    let (s, c) = theta.sin_cos();
    [c * q0[0] - s * q0[1], s * q0[0] + c * q0[1]]
}

impl SplitOdeProblem for SplitOscillator {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        2
    }

    fn eval_explicit(&self, _t: f64, q: &[f64], out: &mut [f64]) {
        out[0] = -self.omega_e * q[1];
        out[1] = self.omega_e * q[0];
    }

    fn eval_implicit(&self, _t: f64, q: &[f64], out: &mut [f64]) {
        out[0] = -self.omega_i * q[1];
        out[1] = self.omega_i * q[0];
    }

    fn shifted_implicit_system(&self, _t: f64, _q: &[f64], alpha: f64) -> ShiftedImplicitSystem {
        // I - alpha * omega_i * S is a 2x2 tridiagonal block
        let w = alpha * self.omega_i;
        ShiftedImplicitSystem {
            reduced_dim: 2,
            blocks: vec![ShiftedBlock {
                range: 0..2,
                matrix: TridiagonalMatrix::new(vec![-w], vec![1.0, 1.0], vec![w]),
            }],
        }
    }

    fn weight_classes(&self) -> Vec<WeightClass> {
        vec![WeightClass::HorizontalVelocity; 2]
    }

    fn exact_solution(&self, t: f64) -> Option<Vec<f64>> {
        Some(oscillator_exact(self.omega_e, self.omega_i, self.q0, t).to_vec())
    }

    fn energy(&self, q: &[f64]) -> Option<f64> {
        Some(q[0] * q[0] + q[1] * q[1])
    }

    fn initial_state(&self) -> Vec<f64> {
        self.q0.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::full_rhs;

    #[test]
    fn exact_at_zero_is_initial() {
        assert_eq!(oscillator_exact(1.0, 10.0, [0.3, -0.4], 0.0), [0.3, -0.4]);
    }

    #[test]
    fn full_revolution_returns_home() {
        let q = oscillator_exact(std::f64::consts::PI, std::f64::consts::PI, [1.0, 0.0], 1.0);
        assert!((q[0] - 1.0).abs() < 1e-12);
        assert!(q[1].abs() < 1e-12);
    }

    #[test]
    fn rotation_by_half_radian() {
        // omega_e + omega_i = 11, t = 0.5/11 rotates (1,0) by 0.5
        let q = oscillator_exact(1.0, 10.0, [1.0, 0.0], 0.5 / 11.0);
        assert!((q[0] - 0.5f64.cos()).abs() < 1e-13);
        assert!((q[1] - 0.5f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn split_additivity() {
        let p = SplitOscillator::new(1.0, 10.0);
        let q = [0.7, -0.2];
        let f = full_rhs(&p, 0.0, &q);
        // monolithic rhs of rotation at omega_e + omega_i
        let w = 11.0;
        assert!((f[0] - (-w * q[1])).abs() < 1e-14);
        assert!((f[1] - w * q[0]).abs() < 1e-14);
    }
}
