//! The evaluation harness: convergence studies with order fitting and
//! round-off floors, largest-stable-step ladder scans with normalized
//! metrics, scaling-sensitivity sweeps, energy-drift diagnostics, and the
//! split hyperviscosity floor study.

pub mod report;

use thiserror::Error;

use crate::catalog::CatalogError;
use crate::exec::{self, ExecMode};
use crate::integrator::{self, DissipativeOperator, IntegratorError, PostStep};
use crate::models::{OscillatorEnsemble, SplitOscillator};
use crate::problem::{NewtonConfig, SplitOdeProblem};
use crate::tableau::ArkMethod;

/// Guard added to `|ref_k|` in the max-relative-error denominator.
pub const ERROR_DIVISION_GUARD: f64 = 1e-30;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("ladder must contain at least one step size")]
    EmptyLadder,
    #[error("ladder must be sorted {expected}, got {got:?}")]
    LadderOrder { expected: &'static str, got: Vec<f64> },
    #[error("t_final = {t_final} is not an integer multiple of ladder step {dt}")]
    NotDivisible { t_final: f64, dt: f64 },
    #[error("problem {0} provides no exact solution and no reference was configured")]
    NoReference(String),
    #[error("problem {0} provides no energy functional")]
    NoEnergy(String),
    #[error("run of {method} at dt = {dt} failed: {message}")]
    Run { method: String, dt: f64, message: String },
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

/// Maximum over components of `|q_k - ref_k| / (|ref_k| + 1e-30)`.
pub fn max_relative_error(q: &[f64], reference: &[f64]) -> f64 {
    q.iter()
        .zip(reference)
        .map(|(x, r)| (x - r).abs() / (r.abs() + ERROR_DIVISION_GUARD))
        .fold(0.0, f64::max)
}

/// Accumulated round-off estimate: machine epsilon times the number of steps
/// taken by the reference solution.
pub fn roundoff_floor(n_reference_steps: u64) -> f64 {
    f64::EPSILON * n_reference_steps as f64
}

/// A fitted `alpha * dt^beta` error model.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct OrderFit {
    pub alpha: f64,
    pub beta: f64,
    /// The two `(dt, error)` points used, smallest-error first.
    pub points: [(f64, f64); 2],
}

/// Fit `alpha * dt^beta` through the two smallest-error points strictly above
/// the floor. Returns `None` with fewer than two qualifying points.
pub fn fit_order(points: &[(f64, f64)], floor: f64) -> Option<OrderFit> {
    let mut qualifying: Vec<(f64, f64)> =
        points.iter().copied().filter(|&(_, e)| e > floor && e.is_finite()).collect();
    if qualifying.len() < 2 {
        return None;
    }
    qualifying.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.partial_cmp(&b.0).unwrap()));
    let (dt1, e1) = qualifying[0];
    let (dt2, e2) = qualifying[1];
    if dt1 == dt2 || e1 <= 0.0 || e2 <= 0.0 {
        return None;
    }
    let beta = (e1 / e2).ln() / (dt1 / dt2).ln();
    let alpha = e1 / dt1.powf(beta);
    Some(OrderFit { alpha, beta, points: [(dt1, e1), (dt2, e2)] })
}

/// How a single ladder run ended.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum RunOutcome {
    Completed,
    Unstable { t_reached: f64, cause: String },
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct LadderPoint {
    pub dt: f64,
    pub n_steps: usize,
    pub error: Option<f64>,
    pub outcome: RunOutcome,
}

/// Reference against which ladder errors are measured.
#[derive(Debug, Clone)]
pub enum ReferenceSpec {
    /// The problem's analytic solution. The round-off floor is estimated
    /// from the finest ladder entry's step count.
    Exact,
    /// A fine-step run of the explicit KGU35 reference method.
    FineKgu35 { dt: f64 },
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvergenceReport {
    pub method: String,
    pub problem: String,
    pub reference: String,
    pub reference_steps: u64,
    pub floor: f64,
    pub ladder: Vec<LadderPoint>,
    pub fit: Option<OrderFit>,
}

fn steps_for(t_final: f64, dt: f64) -> Result<usize, HarnessError> {
    let ratio = t_final / dt;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-8 * ratio.abs().max(1.0) {
        return Err(HarnessError::NotDivisible { t_final, dt });
    }
    Ok(n as usize)
}

fn require_sorted(ladder: &[f64], descending: bool) -> Result<(), HarnessError> {
    if ladder.is_empty() {
        return Err(HarnessError::EmptyLadder);
    }
    let ok = ladder.windows(2).all(|w| if descending { w[0] > w[1] } else { w[0] < w[1] });
    if !ok {
        return Err(HarnessError::LadderOrder {
            expected: if descending { "descending" } else { "ascending" },
            got: ladder.to_vec(),
        });
    }
    Ok(())
}

struct RunSpec<'a> {
    post_step: Option<(&'a dyn DissipativeOperator, usize)>,
}

fn integrate_once(
    method: &ArkMethod,
    problem: &dyn SplitOdeProblem,
    dt: f64,
    n_steps: usize,
    spec: &RunSpec,
    config: &NewtonConfig,
    mode: ExecMode,
) -> Result<integrator::IntegrationSummary, IntegratorError> {
    let q0 = problem.initial_state();
    let ps = spec.post_step.map(|(op, k)| PostStep { operator: op, substeps: k });
    integrator::integrate(
        method,
        problem,
        0.0,
        &q0,
        dt,
        n_steps,
        ps.as_ref(),
        None,
        config,
        // ladder points already fan out in parallel; block-level parallelism
        // inside one run would nest pools without changing results
        match mode {
            ExecMode::Sequential => ExecMode::Sequential,
            #[cfg(feature = "parallel")]
            ExecMode::Parallel => ExecMode::Sequential,
        },
    )
}

/// Run a convergence ladder and fit the observed order.
#[allow(clippy::too_many_arguments)]
pub fn run_convergence(
    method: &ArkMethod,
    problem: &dyn SplitOdeProblem,
    ladder: &[f64],
    t_final: f64,
    reference: &ReferenceSpec,
    post_step: Option<(&dyn DissipativeOperator, usize)>,
    config: &NewtonConfig,
    mode: ExecMode,
) -> Result<ConvergenceReport, HarnessError> {
    require_sorted(ladder, true)?;
    for &dt in ladder {
        steps_for(t_final, dt)?;
    }

    // resolve the reference state at t_final
    let (ref_state, ref_steps, ref_label) = match reference {
        ReferenceSpec::Exact => {
            let state = problem
                .exact_solution(t_final)
                .ok_or_else(|| HarnessError::NoReference(problem.id().to_owned()))?;
            let finest = ladder.last().copied().unwrap();
            (state, steps_for(t_final, finest)? as u64, "exact".to_owned())
        }
        ReferenceSpec::FineKgu35 { dt } => {
            let n = steps_for(t_final, *dt)?;
            let kgu = crate::catalog::get_method("KGU35")?;
            let spec = RunSpec { post_step };
            let summary = integrate_once(&kgu, problem, *dt, n, &spec, config, mode)?;
            (summary.state, n as u64, format!("kgu35 dt={dt}"))
        }
    };
    let floor = roundoff_floor(ref_steps);

    let spec = RunSpec { post_step };
    let points: Vec<Result<LadderPoint, (f64, String)>> = exec::map_collect(mode, ladder, |&dt| {
        let n = steps_for(t_final, dt).expect("validated above");
        match integrate_once(method, problem, dt, n, &spec, config, mode) {
            Ok(summary) => match summary.failure {
                None => Ok(LadderPoint {
                    dt,
                    n_steps: n,
                    error: Some(max_relative_error(&summary.state, &ref_state)),
                    outcome: RunOutcome::Completed,
                }),
                Some(f) => Ok(LadderPoint {
                    dt,
                    n_steps: n,
                    error: None,
                    outcome: RunOutcome::Unstable {
                        t_reached: f.t_reached,
                        cause: format!("{:?}", f.cause),
                    },
                }),
            },
            Err(e) => Err((dt, e.to_string())),
        }
    });
    let mut ladder_points = Vec::with_capacity(points.len());
    for p in points {
        match p {
            Ok(lp) => ladder_points.push(lp),
            Err((dt, message)) => {
                return Err(HarnessError::Run { method: method.name.clone(), dt, message })
            }
        }
    }

    let fit_points: Vec<(f64, f64)> = ladder_points
        .iter()
        .filter_map(|p| p.error.map(|e| (p.dt, e)))
        .collect();
    let fit = fit_order(&fit_points, floor);
    Ok(ConvergenceReport {
        method: method.name.clone(),
        problem: problem.id().to_owned(),
        reference: ref_label,
        reference_steps: ref_steps,
        floor,
        ladder: ladder_points,
        fit,
    })
}

/// Classification of one scan ladder entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ScanOutcome {
    Unstable,
    StableOnly,
    StableAccurate,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ScanEntry {
    pub dt: f64,
    pub outcome: ScanOutcome,
    pub error: Option<f64>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ScanReport {
    pub method: String,
    pub problem: String,
    pub entries: Vec<ScanEntry>,
    pub largest_stable: Option<f64>,
    pub largest_accurate: Option<f64>,
    /// Best-category largest step over the declared implicit-solve count
    /// (absent for pure explicit methods).
    pub dt_per_implicit_solve: Option<f64>,
    /// Best-category largest step over the declared explicit-eval count.
    pub dt_per_explicit_eval: Option<f64>,
}

/// Default number of steps a scan run takes even when `t_final / dt` is
/// small; marginal instabilities need that many steps to grow past the
/// blowup detector.
pub const SCAN_MIN_STEPS: usize = 400;

/// Scan an ascending ladder for the largest stable (and, with a threshold,
/// accurate) step size. Each run integrates `round(t_final / dt)` steps,
/// floored at `min_steps` so near-threshold growth has room to manifest, and
/// compares against the exact solution at the time actually reached.
#[allow(clippy::too_many_arguments)]
pub fn scan_max_dt(
    method: &ArkMethod,
    problem: &dyn SplitOdeProblem,
    ladder: &[f64],
    t_final: f64,
    min_steps: usize,
    accuracy_threshold: Option<f64>,
    config: &NewtonConfig,
    mode: ExecMode,
) -> Result<ScanReport, HarnessError> {
    require_sorted(ladder, false)?;
    let spec = RunSpec { post_step: None };
    let entries: Vec<ScanEntry> = exec::map_collect(mode, ladder, |&dt| {
        let n = ((t_final / dt).round().max(1.0) as usize).max(min_steps.max(1));
        let reached = n as f64 * dt;
        match integrate_once(method, problem, dt, n, &spec, config, mode) {
            Ok(summary) if summary.failure.is_none() => {
                let error = problem
                    .exact_solution(reached)
                    .map(|r| max_relative_error(&summary.state, &r));
                let outcome = match (accuracy_threshold, error) {
                    (Some(tol), Some(e)) if e <= tol => ScanOutcome::StableAccurate,
                    (Some(_), _) => ScanOutcome::StableOnly,
                    (None, _) => ScanOutcome::StableOnly,
                };
                ScanEntry { dt, outcome, error }
            }
            _ => ScanEntry { dt, outcome: ScanOutcome::Unstable, error: None },
        }
    });

    let largest = |want: &dyn Fn(ScanOutcome) -> bool| {
        entries.iter().filter(|e| want(e.outcome)).map(|e| e.dt).fold(None, |acc: Option<f64>, dt| {
            Some(acc.map_or(dt, |a| a.max(dt)))
        })
    };
    let largest_stable = largest(&|o| o != ScanOutcome::Unstable);
    let largest_accurate = largest(&|o| o == ScanOutcome::StableAccurate);
    let best = if accuracy_threshold.is_some() { largest_accurate } else { largest_stable };
    let dt_per_implicit_solve = match (best, method.declared_implicit_solves) {
        (Some(dt), f) if f > 0 => Some(dt / f as f64),
        _ => None,
    };
    let dt_per_explicit_eval = best.map(|dt| dt / method.declared_explicit_evals as f64);
    Ok(ScanReport {
        method: method.name.clone(),
        problem: problem.id().to_owned(),
        entries,
        largest_stable,
        largest_accurate,
        dt_per_implicit_solve,
        dt_per_explicit_eval,
    })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SensitivityRow {
    pub scale: f64,
    pub dt_max: Option<f64>,
    /// `dt_max(scale) * scale / dt_max(1)`; 1 means the largest step scales
    /// exactly with the explicit frequencies.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SensitivityReport {
    pub method: String,
    pub rows: Vec<SensitivityRow>,
}

/// Rescale the ensemble's explicit frequencies by each scale factor and
/// measure how the largest usable step tracks the scaling. The ladder and
/// horizon divide by the scale so granularity stays proportionate.
#[allow(clippy::too_many_arguments)]
pub fn scan_scaling_sensitivity(
    method: &ArkMethod,
    base: &OscillatorEnsemble,
    scales: &[f64],
    base_ladder: &[f64],
    t_final: f64,
    min_steps: usize,
    accuracy_threshold: Option<f64>,
    config: &NewtonConfig,
    mode: ExecMode,
) -> Result<SensitivityReport, HarnessError> {
    require_sorted(base_ladder, false)?;
    let mut rows = Vec::with_capacity(scales.len());
    let mut base_dt_max = None;
    for &scale in scales {
        let problem = base.clone().with_explicit_scale(scale);
        let ladder: Vec<f64> = base_ladder.iter().map(|dt| dt / scale).collect();
        let scan = scan_max_dt(
            method,
            &problem,
            &ladder,
            t_final / scale,
            min_steps,
            accuracy_threshold,
            config,
            mode,
        )?;
        let dt_max =
            if accuracy_threshold.is_some() { scan.largest_accurate } else { scan.largest_stable };
        if scale == 1.0 {
            base_dt_max = dt_max;
        }
        let ratio = match (dt_max, base_dt_max) {
            (Some(d), Some(b)) if b > 0.0 => Some(d * scale / b),
            _ => None,
        };
        rows.push(SensitivityRow { scale, dt_max, ratio });
    }
    Ok(SensitivityReport { method: method.name.clone(), rows })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct EnergyReport {
    pub method: String,
    pub problem: String,
    pub dt: f64,
    pub post_step_enabled: bool,
    pub substeps: usize,
    pub times: Vec<f64>,
    /// `(E(t) - E(0)) / E(0)` per sample; first entry is exactly 0.
    pub relative_error: Vec<f64>,
    pub truncated: bool,
}

impl EnergyReport {
    pub fn max_abs_drift(&self) -> f64 {
        self.relative_error.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}

/// Sample the relative global energy error each step.
#[allow(clippy::too_many_arguments)]
pub fn run_energy(
    method: &ArkMethod,
    problem: &dyn SplitOdeProblem,
    dt: f64,
    n_steps: usize,
    post_step: Option<(&dyn DissipativeOperator, usize)>,
    config: &NewtonConfig,
    mode: ExecMode,
) -> Result<EnergyReport, HarnessError> {
    let q0 = problem.initial_state();
    let e0 = problem.energy(&q0).ok_or_else(|| HarnessError::NoEnergy(problem.id().to_owned()))?;
    let mut times = vec![0.0];
    let mut relative = vec![0.0];
    {
        let mut observer = |_k: usize, t: f64, q: &[f64]| {
            let e = problem.energy(q).expect("energy checked above");
            times.push(t);
            relative.push(if e0 != 0.0 { (e - e0) / e0 } else { e });
        };
        let ps = post_step.map(|(op, k)| PostStep { operator: op, substeps: k });
        let summary = integrator::integrate(
            method,
            problem,
            0.0,
            &q0,
            dt,
            n_steps,
            ps.as_ref(),
            Some(&mut observer),
            config,
            match mode {
                ExecMode::Sequential => ExecMode::Sequential,
                #[cfg(feature = "parallel")]
                ExecMode::Parallel => ExecMode::Sequential,
            },
        )?;
        let truncated = summary.failure.is_some();
        return Ok(EnergyReport {
            method: method.name.clone(),
            problem: problem.id().to_owned(),
            dt,
            post_step_enabled: post_step.is_some_and(|(_, k)| k > 0),
            substeps: post_step.map_or(0, |(_, k)| k),
            times,
            relative_error: relative,
            truncated,
        });
    }
}

/// Convergence study with the split hyperviscosity post-step enabled: the
/// sub-stepped forward-Euler application limits the small-step order to one
/// while larger steps still show the method's own order.
#[allow(clippy::too_many_arguments)]
pub fn run_split_floor_study(
    method: &ArkMethod,
    problem: &crate::models::OscillatorWithField,
    ladder: &[f64],
    t_final: f64,
    substeps: usize,
    config: &NewtonConfig,
    mode: ExecMode,
) -> Result<ConvergenceReport, HarnessError> {
    let post = if substeps >= 1 {
        Some((problem as &dyn DissipativeOperator, substeps))
    } else {
        None
    };
    run_convergence(method, problem, ladder, t_final, &ReferenceSpec::Exact, post, config, mode)
}

/// Default ladder and horizon for the split oscillator: dyadic steps with an
/// integer number of steps to the horizon.
pub fn default_oscillator_ladder() -> (Vec<f64>, f64) {
    (vec![0.04, 0.02, 0.01, 0.005, 0.0025], 1.0)
}

/// Measured convergence order of a method on a problem with the default
/// ladder; the empirical certification path for declared orders above the
/// algebraic checker's reach.
pub fn empirical_order(
    method: &ArkMethod,
    problem: &dyn SplitOdeProblem,
    config: &NewtonConfig,
    mode: ExecMode,
) -> Result<Option<f64>, HarnessError> {
    let (ladder, t_final) = default_oscillator_ladder();
    let report = run_convergence(
        method,
        problem,
        &ladder,
        t_final,
        &ReferenceSpec::Exact,
        None,
        config,
        mode,
    )?;
    Ok(report.fit.map(|f| f.beta))
}

/// The split oscillator used for empirical order measurement. The total
/// rotation over the default horizon ends well away from the axes, keeping
/// both components' relative-error denominators order one.
pub fn default_oscillator() -> SplitOscillator {
    SplitOscillator::new(1.0, 9.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_values() {
        assert!((roundoff_floor(768_000) - 1.7053e-10).abs() < 1e-13);
        assert_eq!(roundoff_floor(1), 2.220446049250313e-16);
        assert_eq!(roundoff_floor(1_000_000), 2.220446049250313e-10);
    }

    #[test]
    fn fit_exact_power_law() {
        let fit = fit_order(&[(0.1, 1e-2), (0.05, 2.5e-3)], 1e-12).unwrap();
        assert!((fit.beta - 2.0).abs() < 1e-12);
        assert!((fit.alpha - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fit_needs_two_points_above_floor() {
        assert!(fit_order(&[(0.1, 1e-2), (0.05, 1e-11)], 1e-10).is_none());
        assert!(fit_order(&[(0.1, 1e-13), (0.05, 1e-14)], 1e-12).is_none());
    }

    #[test]
    fn fit_uses_two_smallest_errors() {
        let fit = fit_order(&[(0.2, 4e-2), (0.1, 1e-2), (0.05, 2.5e-3)], 1e-12).unwrap();
        assert_eq!(fit.points[0].0, 0.05);
        assert_eq!(fit.points[1].0, 0.1);
    }

    #[test]
    fn fit_beta_is_scale_invariant() {
        let pts = [(0.1, 3e-3), (0.05, 4.1e-4), (0.025, 5.3e-5)];
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(d, e)| (d, 77.7 * e)).collect();
        let f1 = fit_order(&pts, 0.0).unwrap();
        let f2 = fit_order(&scaled, 0.0).unwrap();
        assert!((f1.beta - f2.beta).abs() <= 1e-12);
        assert!(f2.alpha > f1.alpha);
    }

    #[test]
    fn max_relative_error_uses_division_guard() {
        let e = max_relative_error(&[1e-31], &[0.0]);
        assert!(e < 1.0); // guarded division, no infinity
        assert_eq!(max_relative_error(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
    }

    #[test]
    fn ladder_validation() {
        let m = crate::catalog::get_method("ARS232").unwrap();
        let p = default_oscillator();
        let cfg = NewtonConfig::default();
        let err = run_convergence(
            &m,
            &p,
            &[0.01, 0.02],
            1.0,
            &ReferenceSpec::Exact,
            None,
            &cfg,
            ExecMode::Sequential,
        )
        .unwrap_err();
        assert!(matches!(err, HarnessError::LadderOrder { .. }));
        let err = run_convergence(
            &m,
            &p,
            &[0.03],
            1.0,
            &ReferenceSpec::Exact,
            None,
            &cfg,
            ExecMode::Sequential,
        )
        .unwrap_err();
        assert!(matches!(err, HarnessError::NotDivisible { .. }));
    }
}
