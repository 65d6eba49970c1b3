//! Command-line harness: certify methods, emit stability boundaries, run
//! convergence/scan/energy studies, and list the catalog.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 certification
//! mismatch, 4 numerical failure.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{RngExt, SeedableRng};
use serde::Deserialize;

use arkimex::analysis;
use arkimex::catalog::{self, CatalogEntry, CatalogSource};
use arkimex::exec::ExecMode;
use arkimex::harness::{self, report, ReferenceSpec};
use arkimex::models::{
    AcousticColumn, HyperviscosityOperator, OscillatorEnsemble, OscillatorWithField,
    SplitOscillator,
};
use arkimex::problem::{NewtonConfig, SplitOdeProblem};

const EXIT_CONFIG: u8 = 2;
const EXIT_CERTIFICATION: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser)]
#[command(name = "arkimex", version, about = "ARK IMEX method certification and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Configuration file (TOML); flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma-separated method names, or `all`.
    #[arg(long, global = true)]
    methods: Option<String>,
    /// Problem id: split-oscillator | acoustic-column | oscillator-ensemble |
    /// oscillator-with-field.
    #[arg(long, global = true)]
    problem: Option<String>,
    /// Output directory for CSV/JSON reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated step-size ladder.
    #[arg(long, global = true)]
    ladder: Option<String>,
    /// Explicit-frequency scale factor appended to the sensitivity scales.
    #[arg(long, global = true)]
    scale: Option<f64>,
    /// Seed for the randomized Jacobian self-check.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Coefficient file to load instead of the built-in catalog.
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    /// Run work units sequentially even when parallel execution is available.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Certify every selected method against its declared properties.
    Certify {
        /// Certify the whole catalog (same as --methods all).
        #[arg(long)]
        all: bool,
    },
    /// Emit stability-region boundary samples per method.
    Boundary {
        /// Rays per full turn.
        #[arg(long, default_value_t = 256)]
        resolution: usize,
    },
    /// Convergence study with order fitting and round-off floor.
    Converge,
    /// Largest-stable/accurate step ladder scan, plus scaling sensitivity.
    Scan,
    /// Relative global energy error time series.
    Energy,
    /// Split hyperviscosity first-order floor study.
    FloorStudy,
    /// List catalog methods with declared order and stage counts.
    ListMethods,
}

// ---------------------------------------------------------------- config

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    convergence: ConvergenceSection,
    #[serde(default)]
    scan: ScanSection,
    #[serde(default)]
    energy: EnergySection,
    #[serde(default)]
    floor_study: FloorSection,
    #[serde(default)]
    oscillator: OscillatorSection,
    #[serde(default)]
    ensemble: EnsembleSection,
    #[serde(default)]
    column: ColumnSection,
    #[serde(default)]
    field: FieldSection,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RunSection {
    methods: Option<Vec<String>>,
    problem: Option<String>,
    out: Option<PathBuf>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConvergenceSection {
    #[serde(default)]
    ladder: Option<Vec<f64>>,
    #[serde(default = "one")]
    t_final: f64,
    /// "exact" or "kgu35"
    #[serde(default = "exact_reference")]
    reference: String,
    #[serde(default)]
    reference_dt: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn exact_reference() -> String {
    "exact".into()
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        ConvergenceSection {
            ladder: None,
            t_final: 1.0,
            reference: "exact".into(),
            reference_dt: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanSection {
    #[serde(default)]
    ladder: Option<Vec<f64>>,
    #[serde(default = "scan_t_final")]
    t_final: f64,
    #[serde(default = "scan_min_steps")]
    min_steps: usize,
    #[serde(default)]
    accuracy: Option<f64>,
    #[serde(default = "default_scales")]
    scales: Vec<f64>,
}

fn scan_t_final() -> f64 {
    20.0
}

fn scan_min_steps() -> usize {
    harness::SCAN_MIN_STEPS
}

fn default_scales() -> Vec<f64> {
    vec![1.0, 10.0, 100.0]
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            ladder: None,
            t_final: 20.0,
            min_steps: harness::SCAN_MIN_STEPS,
            accuracy: None,
            scales: vec![1.0, 10.0, 100.0],
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnergySection {
    #[serde(default = "energy_dt")]
    dt: f64,
    #[serde(default = "energy_steps")]
    n_steps: usize,
    #[serde(default)]
    substeps: usize,
}

fn energy_dt() -> f64 {
    0.01
}

fn energy_steps() -> usize {
    400
}

impl Default for EnergySection {
    fn default() -> Self {
        EnergySection { dt: 0.01, n_steps: 400, substeps: 0 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FloorSection {
    #[serde(default)]
    ladder: Option<Vec<f64>>,
    #[serde(default = "one")]
    t_final: f64,
    #[serde(default = "floor_substeps")]
    substeps: usize,
    /// Slow/fast split of the carrier oscillator; mild stiffness keeps the
    /// integrator error below the splitting error at the small-step end.
    #[serde(default = "one")]
    omega_e: f64,
    #[serde(default = "floor_omega_i")]
    omega_i: f64,
}

fn floor_substeps() -> usize {
    3
}

fn floor_omega_i() -> f64 {
    2.0
}

impl Default for FloorSection {
    fn default() -> Self {
        FloorSection { ladder: None, t_final: 1.0, substeps: 3, omega_e: 1.0, omega_i: 2.0 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OscillatorSection {
    #[serde(default = "one")]
    omega_e: f64,
    #[serde(default = "oscillator_omega_i")]
    omega_i: f64,
}

fn oscillator_omega_i() -> f64 {
    9.0
}

impl Default for OscillatorSection {
    fn default() -> Self {
        OscillatorSection { omega_e: 1.0, omega_i: 9.0 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleSection {
    #[serde(default = "ensemble_count")]
    count: usize,
    #[serde(default = "one")]
    omega_max: f64,
    #[serde(default)]
    implicit_share: f64,
}

fn ensemble_count() -> usize {
    8
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection { count: 8, omega_max: 1.0, implicit_share: 0.0 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ColumnSection {
    #[serde(default = "column_interfaces")]
    m: usize,
    #[serde(default)]
    kappa: f64,
    #[serde(default = "column_advection")]
    advection: f64,
    #[serde(default = "column_mode")]
    initial_mode: usize,
    #[serde(default = "column_amplitude")]
    phi_amplitude: f64,
}

fn column_interfaces() -> usize {
    32
}

fn column_advection() -> f64 {
    3.4
}

fn column_mode() -> usize {
    1
}

fn column_amplitude() -> f64 {
    1000.0
}

impl Default for ColumnSection {
    fn default() -> Self {
        ColumnSection { m: 32, kappa: 0.0, advection: 3.4, initial_mode: 1, phi_amplitude: 1000.0 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldSection {
    #[serde(default = "field_points")]
    n: usize,
    #[serde(default = "one")]
    dx: f64,
    #[serde(default = "field_nu")]
    nu: f64,
}

fn field_points() -> usize {
    16
}

fn field_nu() -> f64 {
    4.0
}

impl Default for FieldSection {
    fn default() -> Self {
        FieldSection { n: 16, dx: 1.0, nu: 4.0 }
    }
}

struct Resolved {
    entries: Vec<CatalogEntry>,
    selected: Vec<CatalogEntry>,
    problem_id: String,
    out: PathBuf,
    seed: u64,
    mode: ExecMode,
    file: FileConfig,
}

fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("bad ladder entry {s:?}: {e}")))
        .collect()
}

fn resolve(overrides: &Overrides) -> Result<Resolved, String> {
    let file: FileConfig = match &overrides.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            toml::from_str(&text).map_err(|e| format!("config parse error: {e}"))?
        }
        None => FileConfig::default(),
    };

    let source = match &overrides.catalog {
        Some(path) => CatalogSource::File(path.clone()),
        None => CatalogSource::BuiltIn,
    };
    let entries = catalog::load_catalog(&source).map_err(|e| e.to_string())?;

    let method_spec: Vec<String> = match &overrides.methods {
        Some(text) => text.split(',').map(|s| s.trim().to_owned()).collect(),
        None => file.run.methods.clone().unwrap_or_else(|| vec!["all".into()]),
    };
    let selected: Vec<CatalogEntry> = if method_spec.iter().any(|m| m == "all") {
        entries.clone()
    } else {
        let known: BTreeSet<&str> = entries.iter().map(|e| e.method.name.as_str()).collect();
        for name in &method_spec {
            if !known.contains(name.as_str()) {
                return Err(format!("unknown method name {name:?}"));
            }
        }
        entries
            .iter()
            .filter(|e| method_spec.iter().any(|m| *m == e.method.name))
            .cloned()
            .collect()
    };

    let problem_id = overrides
        .problem
        .clone()
        .or_else(|| file.run.problem.clone())
        .unwrap_or_else(|| "split-oscillator".into());
    let out = overrides
        .out
        .clone()
        .or_else(|| file.run.out.clone())
        .unwrap_or_else(|| PathBuf::from("reports"));
    let seed = overrides.seed.or(file.run.seed).unwrap_or(0);

    #[cfg(feature = "parallel")]
    let mode = if overrides.sequential { ExecMode::Sequential } else { ExecMode::Parallel };
    #[cfg(not(feature = "parallel"))]
    let mode = ExecMode::Sequential;

    Ok(Resolved { entries, selected, problem_id, out, seed, mode, file })
}

enum Problem {
    Oscillator(SplitOscillator),
    Ensemble(OscillatorEnsemble),
    Column(AcousticColumn),
    WithField(OscillatorWithField),
}

impl Problem {
    fn as_split(&self) -> &dyn SplitOdeProblem {
        match self {
            Problem::Oscillator(p) => p,
            Problem::Ensemble(p) => p,
            Problem::Column(p) => p,
            Problem::WithField(p) => p,
        }
    }
}

fn build_problem(r: &Resolved, field_decays: bool) -> Result<Problem, String> {
    match r.problem_id.as_str() {
        "split-oscillator" => Ok(Problem::Oscillator(SplitOscillator::new(
            r.file.oscillator.omega_e,
            r.file.oscillator.omega_i,
        ))),
        "oscillator-ensemble" => Ok(Problem::Ensemble(
            OscillatorEnsemble::new(r.file.ensemble.count, r.file.ensemble.omega_max)
                .with_implicit_share(r.file.ensemble.implicit_share),
        )),
        "acoustic-column" => Ok(Problem::Column(
            AcousticColumn::new(r.file.column.m)
                .with_kappa(r.file.column.kappa)
                .with_advection(r.file.column.advection)
                .with_initial_mode(r.file.column.initial_mode, r.file.column.phi_amplitude, 0.0),
        )),
        "oscillator-with-field" => Ok(Problem::WithField(OscillatorWithField::new(
            r.file.oscillator.omega_e,
            r.file.oscillator.omega_i,
            HyperviscosityOperator::new(r.file.field.n, r.file.field.dx, r.file.field.nu),
            field_decays,
        ))),
        other => Err(format!("unknown problem id {other:?}")),
    }
}

/// Randomized directional-derivative check of the column's analytic Jacobian
/// against central finite differences; deterministic for a given seed.
fn jacobian_self_check(column: &AcousticColumn, seed: u64) -> Result<(), String> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let q = column.initial_state();
    let n = q.len();
    let jac = column.implicit_jacobian_dense(&q);
    for _ in 0..4 {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = 1e-6;
        let qp: Vec<f64> = q.iter().zip(&v).map(|(x, d)| x + h * d).collect();
        let qm: Vec<f64> = q.iter().zip(&v).map(|(x, d)| x - h * d).collect();
        let mut fp = vec![0.0; n];
        let mut fm = vec![0.0; n];
        column.eval_implicit(0.0, &qp, &mut fp);
        column.eval_implicit(0.0, &qm, &mut fm);
        for row in 0..n {
            let fd = (fp[row] - fm[row]) / (2.0 * h);
            let jv: f64 = (0..n).map(|cc| jac[row][cc] * v[cc]).sum();
            let scale = jv.abs().max(1.0);
            if (fd - jv).abs() > 1e-6 * scale {
                return Err(format!(
                    "column Jacobian self-check failed at row {row}: analytic {jv} vs finite difference {fd}"
                ));
            }
        }
    }
    Ok(())
}

fn write_outputs(out_dir: &Path, base: &str, csv: Vec<u8>, json: String) -> Result<(), String> {
    fs::create_dir_all(out_dir).map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    let csv_path = out_dir.join(format!("{base}.csv"));
    let json_path = out_dir.join(format!("{base}.json"));
    fs::write(&csv_path, csv).map_err(|e| format!("cannot write {}: {e}", csv_path.display()))?;
    fs::write(&json_path, json)
        .map_err(|e| format!("cannot write {}: {e}", json_path.display()))?;
    Ok(())
}

fn default_scan_ladder(entries: &[CatalogEntry]) -> Vec<f64> {
    // paper-shaped 16-entry ladder rescaled so the top entry sits ~10% above
    // the best declared stability limit
    const SHAPE: [f64; 16] = [
        10.0, 20.0, 50.0, 100.0, 120.0, 135.0, 150.0, 160.0, 180.0, 192.0, 200.0, 216.0, 240.0,
        270.0, 300.0, 320.0,
    ];
    let best = entries
        .iter()
        .filter_map(|e| e.declared.as_ref().and_then(|d| d.max_imag_step))
        .fold(0.0_f64, f64::max)
        .max(1.0);
    let factor = 1.1 * best / SHAPE[15];
    SHAPE.iter().map(|x| x * factor).collect()
}

fn run(cli: Cli) -> Result<(), (u8, String)> {
    let conf = |e: String| (EXIT_CONFIG, e);
    let numerical = |e: String| (EXIT_NUMERICAL, e);

    let r = resolve(&cli.overrides).map_err(conf)?;
    let newton = NewtonConfig::default();

    match cli.command {
        Command::ListMethods => {
            let rows: Vec<(String, u32, u32, u32)> = r
                .entries
                .iter()
                .map(|e| {
                    (
                        e.method.name.clone(),
                        e.method.declared_order,
                        e.method.declared_implicit_solves,
                        e.method.declared_explicit_evals,
                    )
                })
                .collect();
            println!("{:<10} {:>5} {:>4} {:>4}", "method", "order", "f_i", "f_e");
            for (name, order, fi, fe) in &rows {
                println!("{name:<10} {order:>5} {fi:>4} {fe:>4}");
            }
            let mut csv = Vec::new();
            report::write_methods_csv(&rows, &mut csv).map_err(|e| conf(e.to_string()))?;
            write_outputs(&r.out, "methods", csv, report::to_json("methods", &rows))
                .map_err(conf)?;
            Ok(())
        }
        Command::Certify { all } => {
            let selected =
                if all { r.entries.clone() } else { r.selected.clone() };
            let results = arkimex::exec::map_collect(r.mode, &selected, |e| {
                analysis::certify(&e.method, &newton, ExecMode::Sequential)
                    .map(|rep| (rep, e.clone()))
            });
            let mut rows = Vec::new();
            let mut failed = Vec::new();
            for res in results {
                let (rep, entry) = res.map_err(|e| numerical(e.to_string()))?;
                let mismatches = entry
                    .declared
                    .as_ref()
                    .map(|d| analysis::compare_with_declared(&rep, d))
                    .unwrap_or_default();
                if !analysis::certification_passes(&mismatches) {
                    failed.push(format!(
                        "{}: {}",
                        rep.name,
                        mismatches
                            .iter()
                            .filter(|m| !m.indeterminate)
                            .map(|m| format!(
                                "{} computed {} declared {}",
                                m.field, m.computed, m.declared
                            ))
                            .collect::<Vec<_>>()
                            .join("; ")
                    ));
                }
                rows.push((
                    rep,
                    entry.method.declared_implicit_solves,
                    entry.method.declared_explicit_evals,
                    mismatches,
                ));
            }
            println!(
                "{:<10} {:>3} {:>3} {:>3} {:>3} {:>3} {:>3} {:>3}  {:<2} {:<2} {:<2} {:<4} {:<4} {:<2} {:<2} {:>8}  {}",
                "method", "f_i", "f_e", "oE", "oI", "oA", "sE", "sI", "A", "L", "B", "saD",
                "saE", "b", "c", "max_exp", "status"
            );
            for (rep, fi, fe, mism) in &rows {
                let flag = |x: Option<bool>| match x {
                    Some(true) => "y",
                    Some(false) => "n",
                    None => "-",
                };
                let ou = |x: Option<u32>| x.map(|v| v.to_string()).unwrap_or("-".into());
                println!(
                    "{:<10} {:>3} {:>3} {:>3} {:>3} {:>3} {:>3} {:>3}  {:<2} {:<2} {:<2} {:<4} {:<4} {:<2} {:<2} {:>8.4}  {}",
                    rep.name,
                    fi,
                    fe,
                    rep.order_explicit,
                    ou(rep.order_implicit),
                    ou(rep.order_coupled),
                    rep.stage_order_explicit,
                    ou(rep.stage_order_implicit),
                    flag(rep.a_stable),
                    flag(rep.l_stable),
                    flag(rep.algebraically_stable),
                    flag(rep.stiffly_accurate_dirk),
                    if rep.stiffly_accurate_erk { "y" } else { "n" },
                    if rep.shared_b { "y" } else { "n" },
                    if rep.shared_c { "y" } else { "n" },
                    rep.max_imag_step,
                    if mism.is_empty() {
                        "ok".into()
                    } else if mism.iter().all(|m| m.indeterminate) {
                        "indeterminate".to_string()
                    } else {
                        "MISMATCH".to_string()
                    }
                );
            }
            let mut csv = Vec::new();
            report::write_certify_csv(&rows, &mut csv).map_err(|e| conf(e.to_string()))?;
            let payload: Vec<_> = rows.iter().map(|(rep, _, _, m)| (rep, m)).collect();
            write_outputs(&r.out, "certify", csv, report::to_json("certify", &payload))
                .map_err(conf)?;
            if failed.is_empty() {
                Ok(())
            } else {
                Err((EXIT_CERTIFICATION, format!("certification mismatch:\n{}", failed.join("\n"))))
            }
        }
        Command::Boundary { resolution } => {
            if resolution == 0 {
                return Err(conf("boundary resolution must be positive".into()));
            }
            for e in &r.selected {
                let m = &e.method;
                let implicit = if m.is_pure_explicit { None } else { Some(&m.implicit) };
                let b = analysis::stability_boundary(&m.explicit, implicit, resolution);
                let mut csv = Vec::new();
                report::write_boundary_csv(&b, &mut csv).map_err(|er| conf(er.to_string()))?;
                let mut axis_csv = Vec::new();
                report::write_implicit_axis_csv(&b, &mut axis_csv)
                    .map_err(|er| conf(er.to_string()))?;
                #[derive(serde::Serialize)]
                struct BoundaryPayload {
                    method: String,
                    resolution: usize,
                    explicit_boundary: Vec<(f64, f64)>,
                    implicit_boundary: Vec<(f64, f64)>,
                    implicit_axis: Vec<(f64, f64)>,
                    failed_angles: Vec<f64>,
                }
                let payload = BoundaryPayload {
                    method: m.name.clone(),
                    resolution,
                    explicit_boundary: b.explicit_boundary.clone(),
                    implicit_boundary: b.implicit_boundary.clone(),
                    implicit_axis: b.implicit_axis.clone(),
                    failed_angles: b.failed_angles.clone(),
                };
                write_outputs(
                    &r.out,
                    &format!("boundary_{}", m.name),
                    csv,
                    report::to_json("boundary", &payload),
                )
                .map_err(conf)?;
                fs::write(r.out.join(format!("implicit_axis_{}.csv", m.name)), axis_csv)
                    .map_err(|er| conf(er.to_string()))?;
                println!(
                    "{}: {} explicit boundary points, {} implicit, {} angles without crossing",
                    m.name,
                    payload.explicit_boundary.len(),
                    payload.implicit_boundary.len(),
                    payload.failed_angles.len()
                );
            }
            Ok(())
        }
        Command::Converge => {
            let problem = build_problem(&r, false).map_err(conf)?;
            if let Problem::Column(col) = &problem {
                jacobian_self_check(col, r.seed).map_err(numerical)?;
            }
            let ladder = match &cli.overrides.ladder {
                Some(text) => parse_list(text).map_err(conf)?,
                None => r
                    .file
                    .convergence
                    .ladder
                    .clone()
                    .unwrap_or_else(|| harness::default_oscillator_ladder().0),
            };
            let reference = match r.file.convergence.reference.as_str() {
                "exact" => ReferenceSpec::Exact,
                "kgu35" => ReferenceSpec::FineKgu35 {
                    dt: r.file.convergence.reference_dt.ok_or_else(|| {
                        conf("reference = \"kgu35\" requires reference_dt".into())
                    })?,
                },
                other => return Err(conf(format!("unknown reference {other:?}"))),
            };
            let t_final = r.file.convergence.t_final;
            let reports: Vec<_> = arkimex::exec::map_collect(r.mode, &r.selected, |e| {
                harness::run_convergence(
                    &e.method,
                    problem.as_split(),
                    &ladder,
                    t_final,
                    &reference,
                    None,
                    &newton,
                    ExecMode::Sequential,
                )
            });
            let mut done = Vec::new();
            for rep in reports {
                let rep = rep.map_err(|e| numerical(e.to_string()))?;
                if let Some(fit) = &rep.fit {
                    println!("{:<10} beta = {:.3}  alpha = {:.3e}", rep.method, fit.beta, fit.alpha);
                } else {
                    println!("{:<10} fit unavailable", rep.method);
                }
                done.push(rep);
            }
            let mut csv = Vec::new();
            report::write_convergence_csv(&done, &mut csv).map_err(|e| conf(e.to_string()))?;
            write_outputs(&r.out, "converge", csv, report::to_json("converge", &done))
                .map_err(conf)?;
            Ok(())
        }
        Command::Scan => {
            let problem = build_problem(&r, false).map_err(conf)?;
            if let Problem::Column(col) = &problem {
                jacobian_self_check(col, r.seed).map_err(numerical)?;
            }
            let ladder = match &cli.overrides.ladder {
                Some(text) => parse_list(text).map_err(conf)?,
                None => {
                    r.file.scan.ladder.clone().unwrap_or_else(|| default_scan_ladder(&r.entries))
                }
            };
            let t_final = r.file.scan.t_final;
            let min_steps = r.file.scan.min_steps;
            let accuracy = r.file.scan.accuracy;
            let scans: Vec<_> = arkimex::exec::map_collect(r.mode, &r.selected, |e| {
                harness::scan_max_dt(
                    &e.method,
                    problem.as_split(),
                    &ladder,
                    t_final,
                    min_steps,
                    accuracy,
                    &newton,
                    ExecMode::Sequential,
                )
            });
            let mut done = Vec::new();
            for s in scans {
                let s = s.map_err(|e| numerical(e.to_string()))?;
                println!(
                    "{:<10} largest stable dt = {}  accurate = {}",
                    s.method,
                    s.largest_stable.map(|v| format!("{v:.4}")).unwrap_or("-".into()),
                    s.largest_accurate.map(|v| format!("{v:.4}")).unwrap_or("-".into()),
                );
                done.push(s);
            }
            let mut csv = Vec::new();
            report::write_scan_csv(&done, &mut csv).map_err(|e| conf(e.to_string()))?;
            write_outputs(&r.out, "scan", csv, report::to_json("scan", &done)).map_err(conf)?;

            // scaling sensitivity on the ensemble
            if let Problem::Ensemble(base) = &problem {
                let mut scales = r.file.scan.scales.clone();
                if let Some(x) = cli.overrides.scale {
                    if !scales.contains(&x) {
                        scales.push(x);
                    }
                }
                let sens: Vec<_> = arkimex::exec::map_collect(r.mode, &r.selected, |e| {
                    harness::scan_scaling_sensitivity(
                        &e.method,
                        base,
                        &scales,
                        &ladder,
                        t_final,
                        min_steps,
                        accuracy,
                        &newton,
                        ExecMode::Sequential,
                    )
                });
                let mut done = Vec::new();
                for s in sens {
                    done.push(s.map_err(|e| numerical(e.to_string()))?);
                }
                let mut csv = Vec::new();
                report::write_sensitivity_csv(&done, &mut csv)
                    .map_err(|e| conf(e.to_string()))?;
                write_outputs(&r.out, "sensitivity", csv, report::to_json("sensitivity", &done))
                    .map_err(conf)?;
            }
            Ok(())
        }
        Command::Energy => {
            let substeps = r.file.energy.substeps;
            let problem = build_problem(&r, substeps > 0).map_err(conf)?;
            let dt = r.file.energy.dt;
            let n_steps = r.file.energy.n_steps;
            let mut done = Vec::new();
            for e in &r.selected {
                let post = match &problem {
                    Problem::WithField(p) if substeps > 0 => {
                        Some((p as &dyn arkimex::integrator::DissipativeOperator, substeps))
                    }
                    _ => None,
                };
                let rep = harness::run_energy(
                    &e.method,
                    problem.as_split(),
                    dt,
                    n_steps,
                    post,
                    &newton,
                    r.mode,
                )
                .map_err(|er| numerical(er.to_string()))?;
                println!(
                    "{:<10} max |dE/E| = {:.3e}{}",
                    rep.method,
                    rep.max_abs_drift(),
                    if rep.truncated { "  (truncated: unstable)" } else { "" }
                );
                done.push(rep);
            }
            let mut csv = Vec::new();
            report::write_energy_csv(&done, &mut csv).map_err(|e| conf(e.to_string()))?;
            write_outputs(&r.out, "energy", csv, report::to_json("energy", &done))
                .map_err(conf)?;
            Ok(())
        }
        Command::FloorStudy => {
            let substeps = r.file.floor_study.substeps;
            let base = OscillatorWithField::new(
                r.file.floor_study.omega_e,
                r.file.floor_study.omega_i,
                HyperviscosityOperator::new(r.file.field.n, r.file.field.dx, r.file.field.nu),
                substeps > 0,
            );
            let ladder = match &cli.overrides.ladder {
                Some(text) => parse_list(text).map_err(conf)?,
                None => r
                    .file
                    .floor_study
                    .ladder
                    .clone()
                    .unwrap_or_else(|| harness::default_oscillator_ladder().0),
            };
            let t_final = r.file.floor_study.t_final;
            let reports: Vec<_> = arkimex::exec::map_collect(r.mode, &r.selected, |e| {
                harness::run_split_floor_study(
                    &e.method,
                    &base,
                    &ladder,
                    t_final,
                    substeps,
                    &newton,
                    ExecMode::Sequential,
                )
            });
            let mut done = Vec::new();
            for rep in reports {
                let rep = rep.map_err(|e| numerical(e.to_string()))?;
                if let Some(fit) = &rep.fit {
                    println!("{:<10} small-step beta = {:.3}", rep.method, fit.beta);
                } else {
                    println!("{:<10} fit unavailable", rep.method);
                }
                done.push(rep);
            }
            let mut csv = Vec::new();
            report::write_convergence_csv(&done, &mut csv).map_err(|e| conf(e.to_string()))?;
            write_outputs(&r.out, "floor_study", csv, report::to_json("floor-study", &done))
                .map_err(conf)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
