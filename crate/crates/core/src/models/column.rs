//! A vertical acoustic column: fast implicit coupling between vertical
//! velocity `w` and geopotential `phi` at interfaces, slow explicit vertical
//! advection, rigid boundaries (`w = 0` at top and bottom).
//!
//! State layout is interleaved: `q[2j] = phi_j`, `q[2j + 1] = w_j` for
//! interfaces `j = 0..m-1`. The implicit part is
//!
//! ```text
//! d phi_j / dt = g w_j
//! d w_j   / dt = S (phi_{j+1} - 2 phi_j + phi_{j-1}) (1 + kappa phi_j)
//! ```
//!
//! with `S = c^2 / (g dz^2)` on interior interfaces and `d w / dt = 0` on the
//! boundary rows. For `kappa = 0` the spectrum is purely imaginary with
//! frequencies `omega_k = (2 c / dz) sin(k pi / (2 (m - 1)))` over the
//! interior Dirichlet modes. The explicit part advects both fields with a
//! centered difference on interior rows and zero tendency on boundary rows,
//! keeping the explicit operator antisymmetric (purely imaginary spectrum).
//!
//! The shifted implicit system reduces over `w` to a single symmetric-
//! structured tridiagonal solve in `phi`: eliminating
//! `delta_w = r_w + alpha D delta_phi` from
//! `delta_phi - alpha g delta_w = r_phi` gives
//! `(I - alpha^2 g D) delta_phi = r_phi + alpha g r_w`, where `D` is the
//! tridiagonal `phi`-row of the Jacobian of `d w / dt`.

use thiserror::Error;

use crate::integrator::tridiag::TridiagonalMatrix;
use crate::problem::{ShiftedBlock, ShiftedImplicitSystem, SplitOdeProblem, WeightClass};

#[derive(Debug, Error)]
pub enum ColumnError {
    #[error("analytic column solution requires kappa = 0 and a = 0 (kappa = {kappa}, a = {a})")]
    NotLinear { kappa: f64, a: f64 },
}

#[derive(Debug, Clone)]
pub struct AcousticColumn {
    /// Interface count.
    pub m: usize,
    /// Level spacing (m).
    pub dz: f64,
    /// Sound speed (m/s).
    pub c: f64,
    /// Gravitational acceleration (m/s^2).
    pub g: f64,
    /// Vertical advection speed (m/s).
    pub a: f64,
    /// Nonlinearity coefficient; 0 is the linear column.
    pub kappa: f64,
    q0: Vec<f64>,
    id: String,
}

impl AcousticColumn {
    /// Operational defaults: stiff (c/a = 100), linear, 32 interfaces.
    pub fn new(m: usize) -> Self {
        assert!(m >= 4, "need at least 4 interfaces");
        let mut col = AcousticColumn {
            m,
            dz: 500.0,
            c: 340.0,
            g: 9.81,
            a: 3.4,
            kappa: 0.0,
            q0: vec![0.0; 2 * m],
            id: "acoustic-column".into(),
        };
        col.q0 = col.mode_state(1, 1000.0, 0.0);
        col
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_advection(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    /// Initialize on interior Dirichlet mode `k` with the given `phi` and `w`
    /// amplitudes (boundary values stay zero).
    pub fn with_initial_mode(mut self, k: usize, phi_amp: f64, w_amp: f64) -> Self {
        self.q0 = self.mode_state(k, phi_amp, w_amp);
        self
    }

    /// Stiffness scaling `S = c^2 / (g dz^2)`.
    pub fn stiffness(&self) -> f64 {
        self.c * self.c / (self.g * self.dz * self.dz)
    }

    /// Interior Dirichlet eigenfrequency of mode `k in 1..=m-2`.
    pub fn mode_frequency(&self, k: usize) -> f64 {
        2.0 * self.c / self.dz * (k as f64 * std::f64::consts::PI / (2.0 * (self.m - 1) as f64)).sin()
    }

    fn mode_state(&self, k: usize, phi_amp: f64, w_amp: f64) -> Vec<f64> {
        assert!(k >= 1 && k <= self.m - 2, "mode index out of range");
        let mut q = vec![0.0; 2 * self.m];
        let n = (self.m - 1) as f64;
        for j in 1..self.m - 1 {
            let v = (k as f64 * j as f64 * std::f64::consts::PI / n).sin();
            q[2 * j] = phi_amp * v;
            q[2 * j + 1] = w_amp * v;
        }
        q
    }

    /// `phi` row of the Jacobian of `d w / dt`: tridiagonal `D` with zero
    /// boundary rows. Returns (sub, diag, sup).
    fn dw_dphi_bands(&self, q: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let m = self.m;
        let s = self.stiffness();
        let mut sub = vec![0.0; m - 1];
        let mut diag = vec![0.0; m];
        let mut sup = vec![0.0; m - 1];
        for j in 1..m - 1 {
            let phi_j = q[2 * j];
            let lap = q[2 * (j + 1)] - 2.0 * phi_j + q[2 * (j - 1)];
            let factor = 1.0 + self.kappa * phi_j;
            sub[j - 1] = s * factor;
            sup[j] = s * factor;
            diag[j] = s * (-2.0 * factor + self.kappa * lap);
        }
        (sub, diag, sup)
    }

    /// Apply `D` (see [`Self::dw_dphi_bands`]) to a `phi`-sized vector.
    fn apply_dw_dphi(&self, q: &[f64], x: &[f64], out: &mut [f64]) {
        let (sub, diag, sup) = self.dw_dphi_bands(q);
        let m = self.m;
        for j in 0..m {
            let mut y = diag[j] * x[j];
            if j > 0 {
                y += sub[j - 1] * x[j - 1];
            }
            if j + 1 < m {
                y += sup[j] * x[j + 1];
            }
            out[j] = y;
        }
    }

    /// Dense implicit Jacobian in the interleaved ordering; validation hook
    /// for finite-difference comparisons.
    pub fn implicit_jacobian_dense(&self, q: &[f64]) -> Vec<Vec<f64>> {
        let n = 2 * self.m;
        let mut jac = vec![vec![0.0; n]; n];
        let (sub, diag, sup) = self.dw_dphi_bands(q);
        for j in 0..self.m {
            jac[2 * j][2 * j + 1] = self.g;
            jac[2 * j + 1][2 * j] = diag[j];
            if j > 0 {
                jac[2 * j + 1][2 * (j - 1)] = sub[j - 1];
            }
            if j + 1 < self.m {
                jac[2 * j + 1][2 * (j + 1)] = sup[j];
            }
        }
        jac
    }

    /// Analytic solution of the linear, advection-free column by interior
    /// sine-mode synthesis.
    pub fn exact_at(&self, t: f64) -> Result<Vec<f64>, ColumnError> {
        if self.kappa != 0.0 || self.a != 0.0 {
            return Err(ColumnError::NotLinear { kappa: self.kappa, a: self.a });
        }
        let m = self.m;
        let n = (m - 1) as f64;
        let pi = std::f64::consts::PI;
        let mut q = vec![0.0; 2 * m];
        // project interior phi, w onto sine modes; boundary entries stay at
        // their (zero) initial values
        for k in 1..=m - 2 {
            let mut a_k = 0.0;
            let mut b_k = 0.0;
            for j in 1..m - 1 {
                let v = (k as f64 * j as f64 * pi / n).sin();
                a_k += self.q0[2 * j] * v;
                b_k += self.q0[2 * j + 1] * v;
            }
            a_k *= 2.0 / n;
            b_k *= 2.0 / n;
            let w_k = self.mode_frequency(k);
            let (s, c) = (w_k * t).sin_cos();
            let phi_t = a_k * c + self.g * b_k / w_k * s;
            let w_t = b_k * c - w_k * a_k / self.g * s;
            for j in 1..m - 1 {
                let v = (k as f64 * j as f64 * pi / n).sin();
                q[2 * j] += phi_t * v;
                q[2 * j + 1] += w_t * v;
            }
        }
        q[0] = self.q0[0];
        q[1] = self.q0[1];
        q[2 * (m - 1)] = self.q0[2 * (m - 1)];
        q[2 * (m - 1) + 1] = self.q0[2 * (m - 1) + 1];
        Ok(q)
    }

    /// Quadratic invariant of the linear dynamics: `sum w^2` plus scaled
    /// squared `phi` differences.
    pub fn energy_of(&self, q: &[f64]) -> f64 {
        let m = self.m;
        let mut e = 0.0;
        for j in 0..m {
            e += q[2 * j + 1] * q[2 * j + 1];
        }
        let scale = self.stiffness() / self.g;
        for j in 0..m - 1 {
            let d = q[2 * (j + 1)] - q[2 * j];
            e += scale * d * d;
        }
        e
    }
}

impl SplitOdeProblem for AcousticColumn {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        2 * self.m
    }

    fn reduced_dim(&self) -> usize {
        self.m
    }

    fn eval_explicit(&self, _t: f64, q: &[f64], out: &mut [f64]) {
        let m = self.m;
        out.fill(0.0);
        if self.a == 0.0 {
            return;
        }
        let coeff = -self.a / (2.0 * self.dz);
        for j in 1..m - 1 {
            out[2 * j] = coeff * (q[2 * (j + 1)] - q[2 * (j - 1)]);
            out[2 * j + 1] = coeff * (q[2 * (j + 1) + 1] - q[2 * (j - 1) + 1]);
        }
    }

    fn eval_implicit(&self, _t: f64, q: &[f64], out: &mut [f64]) {
        let m = self.m;
        let s = self.stiffness();
        for j in 0..m {
            out[2 * j] = self.g * q[2 * j + 1];
            out[2 * j + 1] = if j == 0 || j == m - 1 {
                0.0
            } else {
                let phi_j = q[2 * j];
                let lap = q[2 * (j + 1)] - 2.0 * phi_j + q[2 * (j - 1)];
                s * lap * (1.0 + self.kappa * phi_j)
            };
        }
    }

    fn shifted_implicit_system(&self, _t: f64, q: &[f64], alpha: f64) -> ShiftedImplicitSystem {
        let (sub, diag, sup) = self.dw_dphi_bands(q);
        let m = self.m;
        let factor = alpha * alpha * self.g;
        let matrix = TridiagonalMatrix::new(
            sub.iter().map(|x| -factor * x).collect(),
            diag.iter().map(|x| 1.0 - factor * x).collect(),
            sup.iter().map(|x| -factor * x).collect(),
        );
        ShiftedImplicitSystem {
            reduced_dim: m,
            blocks: vec![ShiftedBlock { range: 0..m, matrix }],
        }
    }

    fn reduce_rhs(&self, _t: f64, _q: &[f64], alpha: f64, rhs: &[f64]) -> Vec<f64> {
        (0..self.m).map(|j| rhs[2 * j] + alpha * self.g * rhs[2 * j + 1]).collect()
    }

    fn expand_solution(
        &self,
        _t: f64,
        q: &[f64],
        alpha: f64,
        rhs: &[f64],
        reduced: &[f64],
    ) -> Vec<f64> {
        let m = self.m;
        let mut d_phi = vec![0.0; m];
        self.apply_dw_dphi(q, reduced, &mut d_phi);
        let mut out = vec![0.0; 2 * m];
        for j in 0..m {
            out[2 * j] = reduced[j];
            out[2 * j + 1] = rhs[2 * j + 1] + alpha * d_phi[j];
        }
        out
    }

    fn weight_classes(&self) -> Vec<WeightClass> {
        let mut classes = Vec::with_capacity(2 * self.m);
        for _ in 0..self.m {
            classes.push(WeightClass::Geopotential);
            classes.push(WeightClass::VerticalVelocity);
        }
        classes
    }

    fn exact_solution(&self, t: f64) -> Option<Vec<f64>> {
        self.exact_at(t).ok()
    }

    fn energy(&self, q: &[f64]) -> Option<f64> {
        Some(self.energy_of(q))
    }

    fn initial_state(&self) -> Vec<f64> {
        self.q0.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::full_rhs;

    fn advection_free(m: usize) -> AcousticColumn {
        AcousticColumn::new(m).with_advection(0.0)
    }

    #[test]
    fn zero_advection_gives_zero_explicit_tendency() {
        let col = advection_free(8);
        let q = col.initial_state();
        let mut out = vec![1.0; col.dim()];
        col.eval_explicit(0.0, &q, &mut out);
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn constant_fields_have_zero_interior_advection() {
        let col = AcousticColumn::new(8);
        let q = vec![3.0; col.dim()];
        let mut out = vec![0.0; col.dim()];
        col.eval_explicit(0.0, &q, &mut out);
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rest_state_has_zero_implicit_tendency() {
        // w = 0, phi constant: Laplacian annihilates constants
        let col = advection_free(8);
        let mut q = vec![0.0; col.dim()];
        for j in 0..8 {
            q[2 * j] = 42.0;
        }
        let mut out = vec![0.0; col.dim()];
        col.eval_implicit(0.0, &q, &mut out);
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn eigenmode_tendency_matches_frequency() {
        // kappa = 0, state = mode k in phi only: dw/dt = -(omega_k^2 / g) phi
        let k = 3;
        let col = advection_free(16).with_initial_mode(k, 1.0, 0.0);
        let q = col.initial_state();
        let mut out = vec![0.0; col.dim()];
        col.eval_implicit(0.0, &q, &mut out);
        let omega = col.mode_frequency(k);
        for j in 1..15 {
            let expected = -(omega * omega / col.g) * q[2 * j];
            assert!(
                (out[2 * j + 1] - expected).abs() <= 1e-10 * expected.abs().max(1.0),
                "interface {j}: {} vs {expected}",
                out[2 * j + 1]
            );
        }
    }

    #[test]
    fn split_additivity_matches_monolithic_sum() {
        let col = AcousticColumn::new(8).with_kappa(0.01);
        let q: Vec<f64> = (0..col.dim()).map(|i| 0.1 * (i as f64 - 3.0)).collect();
        let f = full_rhs(&col, 0.0, &q);
        let mut fe = vec![0.0; col.dim()];
        let mut fi = vec![0.0; col.dim()];
        col.eval_explicit(0.0, &q, &mut fe);
        col.eval_implicit(0.0, &q, &mut fi);
        for i in 0..col.dim() {
            let expected = fe[i] + fi[i];
            assert!((f[i] - expected).abs() <= 1e-14 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn exact_solution_refuses_nonlinear_or_advective() {
        assert!(AcousticColumn::new(8).with_kappa(0.1).with_advection(0.0).exact_at(1.0).is_err());
        assert!(AcousticColumn::new(8).exact_at(1.0).is_err()); // a != 0 by default
        assert!(advection_free(8).exact_at(1.0).is_ok());
    }

    #[test]
    fn single_mode_returns_after_one_period() {
        let k = 2;
        let col = advection_free(12).with_initial_mode(k, 100.0, 0.0);
        let period = 2.0 * std::f64::consts::PI / col.mode_frequency(k);
        let q = col.exact_at(period).unwrap();
        for (a, b) in q.iter().zip(col.initial_state()) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn exact_trajectory_conserves_energy() {
        let col = advection_free(16).with_initial_mode(1, 500.0, 0.2);
        let e0 = col.energy_of(&col.initial_state());
        for i in 1..=100 {
            let t = i as f64 * 0.37;
            let e = col.energy_of(&col.exact_at(t).unwrap());
            assert!((e - e0).abs() <= 1e-12 * e0, "drift at t = {t}: {e} vs {e0}");
        }
    }

    #[test]
    fn energy_is_quadratic() {
        let col = advection_free(8).with_initial_mode(1, 10.0, 1.0);
        let q = col.initial_state();
        let scaled: Vec<f64> = q.iter().map(|x| 2.0 * x).collect();
        assert!((col.energy_of(&scaled) - 4.0 * col.energy_of(&q)).abs() <= 1e-12 * col.energy_of(&q));
        assert_eq!(col.energy_of(&vec![0.0; col.dim()]), 0.0);
    }

    #[test]
    fn linear_jacobian_is_state_independent() {
        let col = advection_free(8);
        let qa = col.initial_state();
        let qb: Vec<f64> = qa.iter().map(|x| x * 3.0 + 1.0).collect();
        let ja = col.implicit_jacobian_dense(&qa);
        let jb = col.implicit_jacobian_dense(&qb);
        assert_eq!(ja, jb);
    }

    #[test]
    fn jacobian_matches_finite_differences_for_kappa_values() {
        for kappa in [0.0, 0.01, 0.1] {
            let col = advection_free(6).with_kappa(kappa).with_initial_mode(1, 0.8, 0.1);
            let q = col.initial_state();
            let jac = col.implicit_jacobian_dense(&q);
            let n = col.dim();
            let h = 1e-6;
            for col_idx in 0..n {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[col_idx] += h;
                qm[col_idx] -= h;
                let mut fp = vec![0.0; n];
                let mut fm = vec![0.0; n];
                col.eval_implicit(0.0, &qp, &mut fp);
                col.eval_implicit(0.0, &qm, &mut fm);
                for row in 0..n {
                    let fd = (fp[row] - fm[row]) / (2.0 * h);
                    let scale = jac[row][col_idx].abs().max(1.0);
                    assert!(
                        (jac[row][col_idx] - fd).abs() <= 1e-6 * scale,
                        "kappa {kappa} J[{row}][{col_idx}]: {} vs fd {fd}",
                        jac[row][col_idx]
                    );
                }
            }
        }
    }

    #[test]
    fn stiffness_separation_at_default_parameters() {
        let col = AcousticColumn::new(32);
        let fastest_implicit = col.mode_frequency(col.m - 2);
        // antisymmetric centered-difference advection: |eigenvalue| <= a/dz
        let fastest_explicit = col.a / col.dz;
        assert!(col.c / col.a == 100.0);
        assert!(fastest_implicit / fastest_explicit >= 50.0);
    }
}
