//! The fixed-step ARK IMEX stepper.
//!
//! One step of an s-stage pair computes stage values
//! `z_i = q_n + dt * (sum_{j<i} aE_ij fE(z_j) + sum_{j<=i} aI_ij fI(z_j))`
//! and the update
//! `q_{n+1} = q_n + dt * sum_i (bE_i fE(z_i) + bI_i fI(z_i))`.
//! Stages with a nonzero implicit diagonal entry run a Newton solve; stages
//! with a zero diagonal are explicit. Each right-hand side is evaluated at
//! its own tableau's stage time, so pairs with distinct abscissae evaluate
//! `fE` and `fI` at different internal times. A right-hand side is evaluated
//! at a stage only when some weight or later-stage coefficient actually uses
//! it.

pub mod newton;
pub mod tridiag;

use thiserror::Error;

use crate::exec::ExecMode;
use crate::problem::{NewtonConfig, SplitOdeProblem};
use crate::tableau::ArkMethod;
pub use newton::{wrms_norm, NewtonDiagnostics, NewtonError};

#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("at least one step is required")]
    ZeroSteps,
    #[error("state dimension {state} does not match problem dimension {problem}")]
    DimensionMismatch { state: usize, problem: usize },
    #[error("stage {stage}: {source}")]
    Newton {
        stage: usize,
        #[source]
        source: NewtonError,
    },
}

/// Per-step work counters and Newton diagnostics.
#[derive(Debug, Clone, Default)]
pub struct StepDiagnostics {
    /// Number of stages whose explicit right-hand side was evaluated.
    pub explicit_evals: usize,
    /// Total implicit right-hand-side evaluations (inside and outside Newton).
    pub implicit_evals: usize,
    /// Number of Newton stage solves (stages with nonzero implicit diagonal).
    pub newton_solves: usize,
    /// Newton diagnostics per stage (`None` for explicit stages).
    pub stage_newton: Vec<Option<NewtonDiagnostics>>,
}

/// Accumulate `acc += coeff * v`, reporting whether any nonzero value moved.
fn axpy(acc: &mut [f64], coeff: f64, v: &[f64]) -> bool {
    if coeff == 0.0 {
        return false;
    }
    let mut moved = false;
    for (a, &x) in acc.iter_mut().zip(v) {
        if x != 0.0 {
            moved = true;
        }
        *a += coeff * x;
    }
    moved
}

/// Take one fixed step from `(t_n, q_n)`. On failure the error propagates and
/// `q_n` is untouched (the caller keeps ownership of the state).
pub fn step(
    method: &ArkMethod,
    problem: &dyn SplitOdeProblem,
    t_n: f64,
    q_n: &[f64],
    dt: f64,
    config: &NewtonConfig,
    mode: ExecMode,
) -> Result<(Vec<f64>, StepDiagnostics), IntegratorError> {
    if !(dt > 0.0) {
        return Err(IntegratorError::NonPositiveStep(dt));
    }
    let n = problem.dim();
    if q_n.len() != n {
        return Err(IntegratorError::DimensionMismatch { state: q_n.len(), problem: n });
    }
    let s = method.stages();
    let a_e = method.explicit.a();
    let a_i = method.implicit.a();
    let b_e = method.explicit.b();
    let b_i = method.implicit.b();
    let c_e = method.explicit.c();
    let c_i = method.implicit.c();

    // Which stages need each right-hand side: a weight or a later-stage
    // coefficient must reference the value.
    let needs_e: Vec<bool> = (0..s)
        .map(|j| b_e[j] != 0.0 || (j + 1..s).any(|k| a_e[k][j] != 0.0))
        .collect();
    let needs_i: Vec<bool> = (0..s)
        .map(|j| b_i[j] != 0.0 || (j + 1..s).any(|k| a_i[k][j] != 0.0))
        .collect();

    let weights = config.weights(q_n, &problem.weight_classes());
    let mut f_e: Vec<Option<Vec<f64>>> = vec![None; s];
    let mut f_i: Vec<Option<Vec<f64>>> = vec![None; s];
    let mut diag = StepDiagnostics { stage_newton: vec![None; s], ..Default::default() };

    for i in 0..s {
        // known part: q_n + dt * (earlier-stage contributions)
        let mut acc = vec![0.0; n];
        let mut moved = false;
        for j in 0..i {
            if let Some(fe) = &f_e[j] {
                moved |= axpy(&mut acc, a_e[i][j], fe);
            }
            if let Some(fi) = &f_i[j] {
                moved |= axpy(&mut acc, a_i[i][j], fi);
            }
        }
        let known: Vec<f64> = if moved {
            q_n.iter().zip(&acc).map(|(q, a)| q + dt * a).collect()
        } else {
            q_n.to_vec()
        };

        let t_stage_i = t_n + c_i[i] * dt;
        let z_i = if a_i[i][i] != 0.0 {
            let (z, nd) = newton::solve_stage(
                problem, i, t_stage_i, a_i[i][i], dt, &known, q_n, &weights, config, mode,
            )
            .map_err(|source| IntegratorError::Newton { stage: i, source })?;
            diag.newton_solves += 1;
            diag.implicit_evals += nd.implicit_evaluations;
            diag.stage_newton[i] = Some(nd);
            z
        } else {
            known
        };

        if needs_i[i] {
            let mut fi = vec![0.0; n];
            problem.eval_implicit(t_stage_i, &z_i, &mut fi);
            diag.implicit_evals += 1;
            f_i[i] = Some(fi);
        }
        if needs_e[i] {
            let mut fe = vec![0.0; n];
            problem.eval_explicit(t_n + c_e[i] * dt, &z_i, &mut fe);
            diag.explicit_evals += 1;
            f_e[i] = Some(fe);
        }
    }

    let mut acc = vec![0.0; n];
    let mut moved = false;
    for i in 0..s {
        if let Some(fe) = &f_e[i] {
            moved |= axpy(&mut acc, b_e[i], fe);
        }
        if let Some(fi) = &f_i[i] {
            moved |= axpy(&mut acc, b_i[i], fi);
        }
    }
    let q_next = if moved {
        q_n.iter().zip(&acc).map(|(q, a)| q + dt * a).collect()
    } else {
        q_n.to_vec()
    };
    Ok((q_next, diag))
}

/// A dissipative operator applied in split, sub-stepped fashion after each
/// completed step.
pub trait DissipativeOperator: Sync {
    /// The contiguous state components the operator acts on.
    fn component_range(&self) -> std::ops::Range<usize>;
    /// Dissipative tendency `out = nu * L(u)` on those components; the
    /// post-step subtracts `delta_t * out`.
    fn tendency(&self, u: &[f64], out: &mut [f64]);
}

/// Apply `k` forward-Euler substeps of `op` with `delta_t = dt / k`.
/// `k = 0` skips the post-step entirely and leaves the state untouched.
pub fn apply_split_poststep(state: &mut [f64], op: &dyn DissipativeOperator, dt: f64, k: usize) {
    if k == 0 {
        return;
    }
    let range = op.component_range();
    let delta_t = dt / k as f64;
    let mut tendency = vec![0.0; range.len()];
    for _ in 0..k {
        op.tendency(&state[range.clone()], &mut tendency);
        for (u, &g) in state[range.clone()].iter_mut().zip(&tendency) {
            if g != 0.0 {
                *u -= delta_t * g;
            }
        }
    }
}

/// Post-step configuration for [`integrate`].
pub struct PostStep<'a> {
    pub operator: &'a dyn DissipativeOperator,
    /// Substep count; 0 disables the post-step.
    pub substeps: usize,
}

/// Why a run ended early.
#[derive(Debug, Clone, PartialEq)]
pub enum FailureCause {
    /// A state component became non-finite.
    NonFinite,
    /// The state WRMS norm exceeded 1e8 times its initial value.
    NormBlowup { norm: f64, initial: f64 },
    /// A Newton stage solve failed.
    SolverFailure { message: String },
}

/// Failure metadata for a run that did not reach `n_steps`.
#[derive(Debug, Clone)]
pub struct Failure {
    pub cause: FailureCause,
    /// Time reached before the failing step.
    pub t_reached: f64,
    /// Completed steps before the failure.
    pub steps_completed: usize,
}

/// Totals and outcome of a fixed-step integration.
#[derive(Debug)]
pub struct IntegrationSummary {
    /// State after the last completed step (partial trajectory on failure).
    pub state: Vec<f64>,
    pub t_final: f64,
    pub steps_completed: usize,
    pub failure: Option<Failure>,
    pub total_explicit_evals: usize,
    pub total_implicit_evals: usize,
    pub total_newton_solves: usize,
    /// Maximum Newton iterations seen in any single stage solve.
    pub max_newton_iterations: usize,
    /// Mean Newton iterations per stage solve (0 when no solves ran).
    pub mean_newton_iterations: f64,
}

impl IntegrationSummary {
    pub fn is_stable(&self) -> bool {
        self.failure.is_none()
    }
}

/// Observer invoked after every completed step (post-step included).
pub type Observer<'a> = dyn FnMut(usize, f64, &[f64]) + 'a;

/// State-norm growth factor beyond which a run is declared unstable.
pub const BLOWUP_FACTOR: f64 = 1e8;

/// Integrate `n_steps` fixed steps of size `dt` from `(t0, q0)`, invoking the
/// optional post-step after each step and the observer after post-step. On a
/// mid-run failure the summary carries the partial trajectory and failure
/// metadata; largest-stable-step scans rely on that to detect instability.
#[allow(clippy::too_many_arguments)]
pub fn integrate(
    method: &ArkMethod,
    problem: &dyn SplitOdeProblem,
    t0: f64,
    q0: &[f64],
    dt: f64,
    n_steps: usize,
    post_step: Option<&PostStep>,
    mut observer: Option<&mut Observer>,
    config: &NewtonConfig,
    mode: ExecMode,
) -> Result<IntegrationSummary, IntegratorError> {
    if n_steps == 0 {
        return Err(IntegratorError::ZeroSteps);
    }
    if !(dt > 0.0) {
        return Err(IntegratorError::NonPositiveStep(dt));
    }
    let weights = config.weights(q0, &problem.weight_classes());
    let initial_norm = wrms_norm(q0, &weights)
        .map_err(|source| IntegratorError::Newton { stage: 0, source })?
        .max(1.0);

    let mut q = q0.to_vec();
    let mut t = t0;
    let mut summary = IntegrationSummary {
        state: q.clone(),
        t_final: t,
        steps_completed: 0,
        failure: None,
        total_explicit_evals: 0,
        total_implicit_evals: 0,
        total_newton_solves: 0,
        max_newton_iterations: 0,
        mean_newton_iterations: 0.0,
    };
    let mut newton_iter_total = 0usize;

    for k in 0..n_steps {
        let stepped = step(method, problem, t, &q, dt, config, mode);
        let (q_next, diag) = match stepped {
            Ok(v) => v,
            Err(IntegratorError::Newton { stage, source }) => {
                summary.failure = Some(Failure {
                    cause: FailureCause::SolverFailure {
                        message: format!("stage {stage}: {source}"),
                    },
                    t_reached: t,
                    steps_completed: k,
                });
                summary.state = q;
                summary.t_final = t;
                return Ok(summary);
            }
            Err(e) => return Err(e),
        };
        q = q_next;
        if let Some(ps) = post_step {
            apply_split_poststep(&mut q, ps.operator, dt, ps.substeps);
        }
        t = t0 + (k + 1) as f64 * dt;

        summary.total_explicit_evals += diag.explicit_evals;
        summary.total_implicit_evals += diag.implicit_evals;
        summary.total_newton_solves += diag.newton_solves;
        for nd in diag.stage_newton.iter().flatten() {
            newton_iter_total += nd.iterations;
            summary.max_newton_iterations = summary.max_newton_iterations.max(nd.iterations);
        }

        // instability detection: non-finite values or norm blowup
        if q.iter().any(|x| !x.is_finite()) {
            summary.failure = Some(Failure {
                cause: FailureCause::NonFinite,
                t_reached: t,
                steps_completed: k + 1,
            });
            summary.state = q;
            summary.t_final = t;
            summary.steps_completed = k + 1;
            return Ok(summary);
        }
        let norm = wrms_norm(&q, &weights)
            .map_err(|source| IntegratorError::Newton { stage: 0, source })?;
        if norm > BLOWUP_FACTOR * initial_norm {
            summary.failure = Some(Failure {
                cause: FailureCause::NormBlowup { norm, initial: initial_norm },
                t_reached: t,
                steps_completed: k + 1,
            });
            summary.state = q;
            summary.t_final = t;
            summary.steps_completed = k + 1;
            return Ok(summary);
        }

        if let Some(obs) = observer.as_deref_mut() {
            obs(k + 1, t, &q);
        }
        summary.steps_completed = k + 1;
    }
    summary.state = q;
    summary.t_final = t;
    if summary.total_newton_solves > 0 {
        summary.mean_newton_iterations =
            newton_iter_total as f64 / summary.total_newton_solves as f64;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::get_method;
    use crate::problem::{ShiftedBlock, ShiftedImplicitSystem, WeightClass};

    use tridiag::TridiagonalMatrix;

    /// dq/dt = 0 split into two zero parts.
    struct ZeroProblem;

    impl SplitOdeProblem for ZeroProblem {
        fn id(&self) -> &str {
            "zero"
        }
        fn dim(&self) -> usize {
            3
        }
        fn eval_explicit(&self, _t: f64, _q: &[f64], out: &mut [f64]) {
            out.fill(0.0);
        }
        fn eval_implicit(&self, _t: f64, _q: &[f64], out: &mut [f64]) {
            out.fill(0.0);
        }
        fn shifted_implicit_system(
            &self,
            _t: f64,
            _q: &[f64],
            _alpha: f64,
        ) -> ShiftedImplicitSystem {
            ShiftedImplicitSystem {
                reduced_dim: 3,
                blocks: vec![ShiftedBlock { range: 0..3, matrix: TridiagonalMatrix::identity(3) }],
            }
        }
        fn weight_classes(&self) -> Vec<WeightClass> {
            vec![WeightClass::Other; 3]
        }
        fn initial_state(&self) -> Vec<f64> {
            vec![1.0, -0.0, 2.5]
        }
    }

    #[test]
    fn zero_rhs_reproduces_state_bitwise() {
        let problem = ZeroProblem;
        let q0 = problem.initial_state();
        let config = NewtonConfig::default();
        for name in ["DBM453", "ARS232", "KGU35"] {
            let m = get_method(name).unwrap();
            let (q1, diag) =
                step(&m, &problem, 0.0, &q0, 0.125, &config, ExecMode::Sequential).unwrap();
            for (a, b) in q1.iter().zip(&q0) {
                assert_eq!(a.to_bits(), b.to_bits(), "{name}");
            }
            if name == "KGU35" {
                assert_eq!(diag.newton_solves, 0);
                assert_eq!(diag.explicit_evals, 5);
            }
        }
    }

    #[test]
    fn zero_steps_is_an_error() {
        let problem = ZeroProblem;
        let m = get_method("ARS232").unwrap();
        let err = integrate(
            &m,
            &problem,
            0.0,
            &problem.initial_state(),
            0.1,
            0,
            None,
            None,
            &NewtonConfig::default(),
            ExecMode::Sequential,
        )
        .unwrap_err();
        assert!(matches!(err, IntegratorError::ZeroSteps));
    }

    /// Post-step identity checks on a plain 4-component field.
    struct NullOp {
        nu: f64,
    }
    impl DissipativeOperator for NullOp {
        fn component_range(&self) -> std::ops::Range<usize> {
            0..4
        }
        fn tendency(&self, u: &[f64], out: &mut [f64]) {
            for (o, &x) in out.iter_mut().zip(u) {
                *o = self.nu * x;
            }
        }
    }

    #[test]
    fn poststep_k0_and_nu0_leave_state_bitwise() {
        let original = vec![1.0, -0.0, 3.5, -7.25];
        let mut state = original.clone();
        apply_split_poststep(&mut state, &NullOp { nu: 0.5 }, 0.1, 0);
        for (a, b) in state.iter().zip(&original) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        apply_split_poststep(&mut state, &NullOp { nu: 0.0 }, 0.1, 3);
        for (a, b) in state.iter().zip(&original) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        apply_split_poststep(&mut state, &NullOp { nu: 1.0 }, 0.5, 1);
        assert!((state[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_dt_rejected() {
        let problem = ZeroProblem;
        let m = get_method("ARS232").unwrap();
        let err = step(
            &m,
            &problem,
            0.0,
            &problem.initial_state(),
            0.0,
            &NewtonConfig::default(),
            ExecMode::Sequential,
        )
        .unwrap_err();
        assert!(matches!(err, IntegratorError::NonPositiveStep(_)));
    }
}
