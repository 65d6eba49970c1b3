//! An ensemble of uncoupled oscillators whose explicit spectrum fills
//! `{±i omega_k}` up to a configurable maximum, used to measure the largest
//! empirically stable explicit step along the imaginary axis and its
//! sensitivity to rescaling the explicit frequencies.

use crate::integrator::tridiag::TridiagonalMatrix;
use crate::problem::{ShiftedBlock, ShiftedImplicitSystem, SplitOdeProblem, WeightClass};

#[derive(Debug, Clone)]
pub struct OscillatorEnsemble {
    /// Base frequencies before scaling, spanning `(0, omega_max]`.
    omegas: Vec<f64>,
    /// Fraction of each frequency handled implicitly (0 leaves `f_I = 0`).
    implicit_share: f64,
    /// Multiplier on the explicit frequencies (the implicit share is fixed).
    explicit_scale: f64,
    id: String,
}

impl OscillatorEnsemble {
    /// `count` oscillators with `omega_k = omega_max * k / count`.
    pub fn new(count: usize, omega_max: f64) -> Self {
        assert!(count >= 1);
        let omegas = (1..=count).map(|k| omega_max * k as f64 / count as f64).collect();
        OscillatorEnsemble {
            omegas,
            implicit_share: 0.0,
            explicit_scale: 1.0,
            id: "oscillator-ensemble".into(),
        }
    }

    /// Route a fixed fraction of every frequency through the implicit part;
    /// 1 leaves no explicit dynamics at all.
    pub fn with_implicit_share(mut self, share: f64) -> Self {
        assert!((0.0..=1.0).contains(&share));
        self.implicit_share = share;
        self
    }

    /// Multiply all explicit-part frequencies by `x`, leaving the implicit
    /// share untouched (smaller horizontal cells at fixed vertical grid).
    pub fn with_explicit_scale(mut self, x: f64) -> Self {
        assert!(x > 0.0);
        self.explicit_scale = x;
        self
    }

    pub fn count(&self) -> usize {
        self.omegas.len()
    }

    fn explicit_omega(&self, k: usize) -> f64 {
        self.omegas[k] * (1.0 - self.implicit_share) * self.explicit_scale
    }

    fn implicit_omega(&self, k: usize) -> f64 {
        self.omegas[k] * self.implicit_share
    }

    /// Largest explicit-part frequency.
    pub fn max_explicit_omega(&self) -> f64 {
        (0..self.count()).map(|k| self.explicit_omega(k)).fold(0.0, f64::max)
    }
}

impl SplitOdeProblem for OscillatorEnsemble {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        2 * self.omegas.len()
    }

    fn eval_explicit(&self, _t: f64, q: &[f64], out: &mut [f64]) {
        for k in 0..self.count() {
            let w = self.explicit_omega(k);
            out[2 * k] = -w * q[2 * k + 1];
            out[2 * k + 1] = w * q[2 * k];
        }
    }

    fn eval_implicit(&self, _t: f64, q: &[f64], out: &mut [f64]) {
        for k in 0..self.count() {
            let w = self.implicit_omega(k);
            out[2 * k] = -w * q[2 * k + 1];
            out[2 * k + 1] = w * q[2 * k];
        }
    }

    fn shifted_implicit_system(&self, _t: f64, _q: &[f64], alpha: f64) -> ShiftedImplicitSystem {
        let blocks = (0..self.count())
            .map(|k| {
                let w = alpha * self.implicit_omega(k);
                ShiftedBlock {
                    range: 2 * k..2 * k + 2,
                    matrix: TridiagonalMatrix::new(vec![-w], vec![1.0, 1.0], vec![w]),
                }
            })
            .collect();
        ShiftedImplicitSystem { reduced_dim: self.dim(), blocks }
    }

    fn weight_classes(&self) -> Vec<WeightClass> {
        vec![WeightClass::HorizontalVelocity; self.dim()]
    }

    fn exact_solution(&self, t: f64) -> Option<Vec<f64>> {
        let mut q = Vec::with_capacity(self.dim());
        for k in 0..self.count() {
            let theta = (self.explicit_omega(k) + self.implicit_omega(k)) * t;
            let (s, c) = theta.sin_cos();
            // initial state (1, 0) per oscillator
            q.push(c);
            q.push(s);
        }
        Some(q)
    }

    fn energy(&self, q: &[f64]) -> Option<f64> {
        Some(q.iter().map(|x| x * x).sum())
    }

    fn initial_state(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.dim()];
        for k in 0..self.count() {
            q[2 * k] = 1.0;
        }
        q
    }
}
