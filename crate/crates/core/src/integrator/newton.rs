//! Modified-Newton stage solves with the WRMS-norm stopping criterion.
//!
//! Each implicit stage solves `F(z) = z - known - dt*a_ii*f_I(t_i, z) = 0`
//! from the initial guess `z = q_n`. Every iteration re-evaluates and
//! re-factors the shifted Jacobian blocks. The iteration stops when
//! `R_m * ||delta_m||_wrms < epsilon`, where the convergence-rate estimate
//! follows `R_m = max(0.3 R_{m-1}, ||delta_m|| / ||delta_{m-1}||)` from
//! `R_0 = 1` (the first increment is tested with rate 1, the ratio needing
//! two increments to exist).

use thiserror::Error;

use crate::exec::{self, ExecMode};
use crate::integrator::tridiag::TridiagError;
use crate::problem::{NewtonConfig, SplitOdeProblem};

#[derive(Debug, Error)]
pub enum NewtonError {
    #[error("WRMS weight {value} at component {index} is not strictly positive")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("WRMS norm: vector length {v_len} != weight length {w_len}")]
    Length { v_len: usize, w_len: usize },
    #[error("Newton iteration for stage {stage} failed to converge in {iterations} iterations (last weighted increment {last_norm:e}, tolerance {epsilon:e})")]
    NonConvergence { stage: usize, iterations: usize, last_norm: f64, epsilon: f64 },
    #[error("shifted Jacobian block {block} (reduced rows {start}..{end}): {source}")]
    SingularBlock {
        block: usize,
        start: usize,
        end: usize,
        #[source]
        source: TridiagError,
    },
    #[error("shifted system blocks do not partition the reduced space")]
    BadPartition,
}

/// Weighted root-mean-square norm `sqrt((1/N) sum_k (v_k / w_k)^2)`.
pub fn wrms_norm(v: &[f64], weights: &[f64]) -> Result<f64, NewtonError> {
    if v.len() != weights.len() {
        return Err(NewtonError::Length { v_len: v.len(), w_len: weights.len() });
    }
    if let Some(index) = weights.iter().position(|&w| !(w > 0.0)) {
        return Err(NewtonError::NonPositiveWeight { index, value: weights[index] });
    }
    let n = v.len() as f64;
    let sum: f64 = v.iter().zip(weights).map(|(x, w)| (x / w) * (x / w)).sum();
    Ok((sum / n).sqrt())
}

/// Per-solve diagnostics.
#[derive(Debug, Clone, Default)]
pub struct NewtonDiagnostics {
    pub iterations: usize,
    /// Weighted WRMS norm of each increment, in order.
    pub increment_norms: Vec<f64>,
    /// Final convergence-rate estimate.
    pub rate: f64,
    pub implicit_evaluations: usize,
}

/// Solve one implicit stage. `known` carries `q_n` plus all earlier-stage
/// contributions; `a_ii` is the implicit diagonal coefficient.
#[allow(clippy::too_many_arguments)]
pub fn solve_stage(
    problem: &dyn SplitOdeProblem,
    stage_index: usize,
    stage_time: f64,
    a_ii: f64,
    dt: f64,
    known: &[f64],
    q_n: &[f64],
    weights: &[f64],
    config: &NewtonConfig,
    mode: ExecMode,
) -> Result<(Vec<f64>, NewtonDiagnostics), NewtonError> {
    let n = problem.dim();
    let alpha = dt * a_ii;
    let mut z = q_n.to_vec();
    let mut diag = NewtonDiagnostics::default();
    let mut rate = 1.0_f64;
    let mut prev_norm: Option<f64> = None;
    let mut f_i = vec![0.0; n];

    for _ in 0..config.max_iterations {
        problem.eval_implicit(stage_time, &z, &mut f_i);
        diag.implicit_evaluations += 1;
        // residual b(z) = known + dt*a_ii*f_I(z) - z
        let residual: Vec<f64> = (0..n).map(|k| known[k] + alpha * f_i[k] - z[k]).collect();

        let delta = solve_shifted(problem, stage_time, &z, alpha, &residual, mode)?;
        for k in 0..n {
            z[k] += delta[k];
        }
        diag.iterations += 1;

        let dn = wrms_norm(&delta, weights)?;
        diag.increment_norms.push(dn);
        if let Some(prev) = prev_norm {
            rate = (config.rate_floor_factor * rate).max(dn / prev);
        }
        diag.rate = rate;
        if rate * dn < config.epsilon {
            return Ok((z, diag));
        }
        prev_norm = Some(dn);
    }
    Err(NewtonError::NonConvergence {
        stage: stage_index,
        iterations: diag.iterations,
        last_norm: diag.increment_norms.last().copied().unwrap_or(f64::NAN),
        epsilon: config.epsilon,
    })
}

/// Solve `(I - alpha J_I(t, z)) delta = rhs` through the problem's reduced
/// block description. Blocks factor and solve independently; results are
/// bitwise identical in sequential and parallel modes.
pub fn solve_shifted(
    problem: &dyn SplitOdeProblem,
    t: f64,
    z: &[f64],
    alpha: f64,
    rhs: &[f64],
    mode: ExecMode,
) -> Result<Vec<f64>, NewtonError> {
    let system = problem.shifted_implicit_system(t, z, alpha);
    if !system.partitions_reduced_space() {
        return Err(NewtonError::BadPartition);
    }
    let mut reduced = problem.reduce_rhs(t, z, alpha, rhs);
    debug_assert_eq!(reduced.len(), system.reduced_dim);

    let ranges: Vec<std::ops::Range<usize>> =
        system.blocks.iter().map(|b| b.range.clone()).collect();
    let blocks = &system.blocks;
    let outcomes = exec::map_blocks(mode, &mut reduced, &ranges, |k, chunk| {
        let b = &blocks[k];
        b.matrix
            .factor()
            .and_then(|lu| lu.solve_in_place(chunk))
            .map_err(|source| NewtonError::SingularBlock {
                block: k,
                start: b.range.start,
                end: b.range.end,
                source,
            })
    });
    for r in outcomes {
        r?;
    }
    Ok(problem.expand_solution(t, z, alpha, rhs, &reduced))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrms_of_zero_vector_is_zero() {
        assert_eq!(wrms_norm(&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn wrms_of_vector_equal_to_weights_is_one() {
        let w = [0.5, 2.0, 7.0, 1e-3];
        assert!((wrms_norm(&w, &w).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wrms_two_component_case() {
        // v = (2 w_1, 0) with N = 2: sqrt((4 + 0)/2) = sqrt(2)
        let w = [0.3, 5.0];
        let v = [2.0 * w[0], 0.0];
        assert!((wrms_norm(&v, &w).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_is_an_error() {
        let err = wrms_norm(&[1.0], &[0.0]).unwrap_err();
        assert!(matches!(err, NewtonError::NonPositiveWeight { index: 0, .. }));
    }
}
