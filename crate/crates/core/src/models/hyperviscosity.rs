//! Fourth-order hyperviscosity on a 1-D periodic field, and a combined
//! oscillator-plus-field problem for split post-step error studies.
//!
//! The operator acts as `u -> nu * Lap(Lap(u))` with the standard periodic
//! second difference; its eigenvalue on Fourier mode `k` is
//! `nu * lambda_k^2` with `lambda_k = (4 / dx^2) sin^2(pi k / n)`.

use crate::integrator::tridiag::TridiagonalMatrix;
use crate::integrator::DissipativeOperator;
use crate::problem::{ShiftedBlock, ShiftedImplicitSystem, SplitOdeProblem, WeightClass};

#[derive(Debug, Clone)]
pub struct HyperviscosityOperator {
    pub n: usize,
    pub dx: f64,
    pub nu: f64,
}

impl HyperviscosityOperator {
    pub fn new(n: usize, dx: f64, nu: f64) -> Self {
        assert!(n >= 3);
        HyperviscosityOperator { n, dx, nu }
    }

    /// Discrete Laplacian eigenvalue magnitude on Fourier mode `k`.
    pub fn laplacian_eigenvalue(&self, k: usize) -> f64 {
        let s = (std::f64::consts::PI * k as f64 / self.n as f64).sin();
        4.0 / (self.dx * self.dx) * s * s
    }

    fn laplacian(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n;
        let inv = 1.0 / (self.dx * self.dx);
        for i in 0..n {
            let left = u[(i + n - 1) % n];
            let right = u[(i + 1) % n];
            out[i] = (right - 2.0 * u[i] + left) * inv;
        }
    }

    /// `out = nu * Lap(Lap(u))`, two successive periodic second differences.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        assert_eq!(u.len(), self.n);
        let mut lap = vec![0.0; self.n];
        self.laplacian(u, &mut lap);
        self.laplacian(&lap, out);
        for x in out.iter_mut() {
            *x *= self.nu;
        }
    }
}

/// A slow/fast split oscillator carrying a passive periodic field that only
/// the dissipative post-step touches. With the field's hyperviscous decay
/// counted as part of the true dynamics, the sub-stepped forward-Euler
/// post-step contributes a first-order splitting error on top of the
/// integrator's own order; with the decay excluded (`field_decays = false`)
/// the field is constant and the problem reduces to the plain oscillator
/// plus inert components.
#[derive(Debug, Clone)]
pub struct OscillatorWithField {
    pub omega_e: f64,
    pub omega_i: f64,
    pub operator: HyperviscosityOperator,
    /// Whether the exact dynamics include the field's hyperviscous decay.
    pub field_decays: bool,
    q0: Vec<f64>,
    id: String,
}

impl OscillatorWithField {
    pub fn new(
        omega_e: f64,
        omega_i: f64,
        operator: HyperviscosityOperator,
        field_decays: bool,
    ) -> Self {
        let n = operator.n;
        let mut q0 = vec![0.0; 2 + n];
        q0[0] = 1.0;
        // field starts on a constant plus one Fourier cosine mode; the
        // offset keeps every component away from zero so relative errors
        // stay meaningful
        for (i, x) in q0[2..].iter_mut().enumerate() {
            *x = 2.0 + (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos();
        }
        OscillatorWithField {
            omega_e,
            omega_i,
            operator,
            field_decays,
            q0,
            id: "oscillator-with-field".into(),
        }
    }

    /// Replace the field initial profile.
    pub fn with_field_profile(mut self, profile: &[f64]) -> Self {
        assert_eq!(profile.len(), self.operator.n);
        self.q0[2..].copy_from_slice(profile);
        self
    }

    pub fn field_len(&self) -> usize {
        self.operator.n
    }
}

impl DissipativeOperator for OscillatorWithField {
    fn component_range(&self) -> std::ops::Range<usize> {
        2..2 + self.operator.n
    }

    fn tendency(&self, u: &[f64], out: &mut [f64]) {
        self.operator.apply(u, out);
    }
}

impl SplitOdeProblem for OscillatorWithField {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        2 + self.operator.n
    }

    fn reduced_dim(&self) -> usize {
        self.dim()
    }

    fn eval_explicit(&self, _t: f64, q: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        out[0] = -self.omega_e * q[1];
        out[1] = self.omega_e * q[0];
    }

    fn eval_implicit(&self, _t: f64, q: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        out[0] = -self.omega_i * q[1];
        out[1] = self.omega_i * q[0];
    }

    fn shifted_implicit_system(&self, _t: f64, _q: &[f64], alpha: f64) -> ShiftedImplicitSystem {
        let w = alpha * self.omega_i;
        let n = self.operator.n;
        ShiftedImplicitSystem {
            reduced_dim: 2 + n,
            blocks: vec![
                ShiftedBlock {
                    range: 0..2,
                    matrix: TridiagonalMatrix::new(vec![-w], vec![1.0, 1.0], vec![w]),
                },
                ShiftedBlock { range: 2..2 + n, matrix: TridiagonalMatrix::identity(n) },
            ],
        }
    }

    fn weight_classes(&self) -> Vec<WeightClass> {
        let mut classes = vec![WeightClass::HorizontalVelocity; 2];
        classes.extend(vec![WeightClass::Other; self.operator.n]);
        classes
    }

    fn exact_solution(&self, t: f64) -> Option<Vec<f64>> {
        let theta = (self.omega_e + self.omega_i) * t;
        let (s, c) = theta.sin_cos();
        let mut q = vec![0.0; self.dim()];
        q[0] = c * self.q0[0] - s * self.q0[1];
        q[1] = s * self.q0[0] + c * self.q0[1];
        if self.field_decays && self.operator.nu != 0.0 {
            // synthesize the field in Fourier space: mode k decays at
            // exp(-nu lambda_k^2 t)
            let n = self.operator.n;
            let nf = n as f64;
            let two_pi = 2.0 * std::f64::consts::PI;
            // real DFT coefficients of the initial field
            for i in 0..n {
                let mut v = 0.0;
                for k in 0..=n / 2 {
                    let lam = self.operator.laplacian_eigenvalue(k);
                    let decay = (-self.operator.nu * lam * lam * t).exp();
                    let (mut ak, mut bk) = (0.0, 0.0);
                    for (j, &u) in self.q0[2..].iter().enumerate() {
                        let ang = two_pi * k as f64 * j as f64 / nf;
                        ak += u * ang.cos();
                        bk += u * ang.sin();
                    }
                    let norm = if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 };
                    let ang = two_pi * k as f64 * i as f64 / nf;
                    v += norm / nf * decay * (ak * ang.cos() + bk * ang.sin());
                }
                q[2 + i] = v;
            }
        } else {
            q[2..].copy_from_slice(&self.q0[2..]);
        }
        Some(q)
    }

    fn energy(&self, q: &[f64]) -> Option<f64> {
        let osc = q[0] * q[0] + q[1] * q[1];
        let field: f64 = q[2..].iter().map(|x| x * x).sum();
        Some(osc + field)
    }

    fn initial_state(&self) -> Vec<f64> {
        self.q0.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::apply_split_poststep;

    #[test]
    fn constant_field_maps_to_zero() {
        let op = HyperviscosityOperator::new(16, 0.5, 2.0);
        let u = vec![3.25; 16];
        let mut out = vec![1.0; 16];
        op.apply(&u, &mut out);
        assert!(out.iter().all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn zero_nu_maps_to_zero() {
        let op = HyperviscosityOperator::new(8, 1.0, 0.0);
        let u: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let mut out = vec![1.0; 8];
        op.apply(&u, &mut out);
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn fourier_mode_is_an_eigenvector() {
        let n = 32;
        let op = HyperviscosityOperator::new(n, 0.7, 1.3);
        for k in [1usize, 3, 7] {
            let u: Vec<f64> = (0..n)
                .map(|i| (2.0 * std::f64::consts::PI * k as f64 * i as f64 / n as f64).cos())
                .collect();
            let mut out = vec![0.0; n];
            op.apply(&u, &mut out);
            let lam = op.laplacian_eigenvalue(k);
            let expected = op.nu * lam * lam;
            for (o, ui) in out.iter().zip(&u) {
                assert!(
                    (o - expected * ui).abs() <= 1e-10 * expected.max(1.0),
                    "mode {k}: {o} vs {}",
                    expected * ui
                );
            }
        }
    }

    #[test]
    fn poststep_decays_mode_by_euler_factor() {
        let n = 16;
        let k = 2;
        let op = HyperviscosityOperator::new(n, 1.0, 0.01);
        let profile: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * k as f64 * i as f64 / n as f64).cos())
            .collect();
        let p = OscillatorWithField::new(1.0, 10.0, op.clone(), true).with_field_profile(&profile);
        let mut state = p.initial_state();
        let dt = 0.5;
        let substeps = 4;
        apply_split_poststep(&mut state, &p, dt, substeps);
        let lam = op.laplacian_eigenvalue(k);
        let factor = (1.0 - dt / substeps as f64 * op.nu * lam * lam).powi(substeps as i32);
        for (i, &u0) in profile.iter().enumerate() {
            assert!(
                (state[2 + i] - factor * u0).abs() <= 1e-12 * factor.abs().max(1.0),
                "component {i}"
            );
        }
    }

    #[test]
    fn exact_field_decay_matches_heat_kernel() {
        // default profile is 2 + cos(theta_i): the constant survives, the
        // cosine mode decays at exp(-nu lambda_1^2 t)
        let n = 16;
        let op = HyperviscosityOperator::new(n, 1.0, 0.02);
        let p = OscillatorWithField::new(1.0, 10.0, op.clone(), true);
        let t = 0.8;
        let q = p.exact_solution(t).unwrap();
        let lam = op.laplacian_eigenvalue(1);
        let decay = (-op.nu * lam * lam * t).exp();
        for i in 0..n {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let expected = 2.0 + decay * theta.cos();
            assert!(
                (q[2 + i] - expected).abs() <= 1e-10,
                "component {i}: {} vs {expected}",
                q[2 + i],
            );
        }
    }
}
