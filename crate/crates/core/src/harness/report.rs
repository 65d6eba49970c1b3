//! CSV and JSON report emission.
//!
//! Every CSV starts with a `# <kind> schema v<N>` comment line followed by a
//! fixed, documented header row. The JSON mirror wraps the payload as
//! `{ "schema": <kind>, "version": <N>, "payload": ... }` and carries full
//! diagnostics. Reports contain no timestamps, so identical configuration
//! and catalog produce bitwise-identical payloads.

use std::io::Write;

use serde::Serialize;

use crate::analysis::{MethodPropertyReport, PropertyMismatch, StabilityBoundary};
use crate::harness::{ConvergenceReport, EnergyReport, ScanReport, SensitivityReport};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
struct JsonEnvelope<'a, T: Serialize> {
    schema: &'a str,
    version: u32,
    payload: &'a T,
}

/// Serialize any report payload with its schema envelope.
pub fn to_json<T: Serialize>(kind: &str, payload: &T) -> String {
    serde_json::to_string_pretty(&JsonEnvelope { schema: kind, version: REPORT_VERSION, payload })
        .expect("report serialization cannot fail")
}

fn csv_writer<W: Write>(kind: &str, mut w: W) -> std::io::Result<csv::Writer<W>> {
    writeln!(w, "# {kind} schema v{REPORT_VERSION}")?;
    Ok(csv::WriterBuilder::new().from_writer(w))
}

fn opt(x: Option<impl ToString>) -> String {
    x.map(|v| v.to_string()).unwrap_or_else(|| "-".into())
}

/// One certification row per method, columns following the property table:
/// counts, orders, stage orders, stability flags, stiff accuracy, sharing,
/// and the maximum stable explicit imaginary step.
pub fn write_certify_csv<W: Write>(
    rows: &[(MethodPropertyReport, u32, u32, Vec<PropertyMismatch>)],
    w: W,
) -> std::io::Result<()> {
    let mut csv = csv_writer("certify", w)?;
    csv.write_record([
        "method",
        "f_i",
        "f_e",
        "order_e",
        "order_i",
        "order_a",
        "stage_order_e",
        "stage_order_i",
        "a_stable",
        "l_stable",
        "algebraically_stable",
        "sa_dirk",
        "sa_erk",
        "shared_b",
        "shared_c",
        "max_imag_step",
        "empirical_order",
        "status",
    ])?;
    for (r, f_i, f_e, mismatches) in rows {
        let status = if mismatches.is_empty() {
            "ok".to_owned()
        } else if mismatches.iter().all(|m| m.indeterminate) {
            "indeterminate".to_owned()
        } else {
            let fields: Vec<&str> = mismatches
                .iter()
                .filter(|m| !m.indeterminate)
                .map(|m| m.field)
                .collect();
            format!("mismatch:{}", fields.join("+"))
        };
        csv.write_record([
            r.name.clone(),
            f_i.to_string(),
            f_e.to_string(),
            r.order_explicit.to_string(),
            opt(r.order_implicit),
            opt(r.order_coupled),
            r.stage_order_explicit.to_string(),
            opt(r.stage_order_implicit),
            opt(r.a_stable),
            opt(r.l_stable),
            opt(r.algebraically_stable),
            opt(r.stiffly_accurate_dirk),
            r.stiffly_accurate_erk.to_string(),
            r.shared_b.to_string(),
            r.shared_c.to_string(),
            format!("{:.4}", r.max_imag_step),
            opt(r.empirical_order.map(|b| format!("{b:.3}"))),
            status,
        ])?;
    }
    csv.flush()
}

/// Boundary points: `re, im, which` with `which` in
/// `{explicit, implicit}`.
pub fn write_boundary_csv<W: Write>(b: &StabilityBoundary, w: W) -> std::io::Result<()> {
    let mut csv = csv_writer("boundary", w)?;
    csv.write_record(["re", "im", "which"])?;
    for &(re, im) in &b.explicit_boundary {
        csv.write_record([re.to_string(), im.to_string(), "explicit".into()])?;
    }
    for &(re, im) in &b.implicit_boundary {
        csv.write_record([re.to_string(), im.to_string(), "implicit".into()])?;
    }
    csv.flush()
}

/// `|R(iy)|` samples for the implicit tableau: `y, modulus`.
pub fn write_implicit_axis_csv<W: Write>(b: &StabilityBoundary, w: W) -> std::io::Result<()> {
    let mut csv = csv_writer("implicit-axis", w)?;
    csv.write_record(["y", "modulus"])?;
    for &(y, m) in &b.implicit_axis {
        csv.write_record([y.to_string(), m.to_string()])?;
    }
    csv.flush()
}

/// Ladder rows with the fit repeated on each row:
/// `method, problem, reference, dt, n_steps, error, outcome, floor, alpha, beta`.
pub fn write_convergence_csv<W: Write>(
    reports: &[ConvergenceReport],
    w: W,
) -> std::io::Result<()> {
    let mut csv = csv_writer("converge", w)?;
    csv.write_record([
        "method", "problem", "reference", "dt", "n_steps", "error", "outcome", "floor", "alpha",
        "beta",
    ])?;
    for r in reports {
        for p in &r.ladder {
            csv.write_record([
                r.method.clone(),
                r.problem.clone(),
                r.reference.clone(),
                p.dt.to_string(),
                p.n_steps.to_string(),
                opt(p.error),
                match &p.outcome {
                    crate::harness::RunOutcome::Completed => "completed".to_owned(),
                    crate::harness::RunOutcome::Unstable { t_reached, .. } => {
                        format!("unstable@t={t_reached}")
                    }
                },
                r.floor.to_string(),
                opt(r.fit.as_ref().map(|f| f.alpha)),
                opt(r.fit.as_ref().map(|f| f.beta)),
            ])?;
        }
    }
    csv.flush()
}

/// Scan rows: `method, problem, dt, outcome, error, largest_stable,
/// largest_accurate, dt_per_implicit_solve, dt_per_explicit_eval`.
pub fn write_scan_csv<W: Write>(reports: &[ScanReport], w: W) -> std::io::Result<()> {
    let mut csv = csv_writer("scan", w)?;
    csv.write_record([
        "method",
        "problem",
        "dt",
        "outcome",
        "error",
        "largest_stable",
        "largest_accurate",
        "dt_per_implicit_solve",
        "dt_per_explicit_eval",
    ])?;
    for r in reports {
        for e in &r.entries {
            csv.write_record([
                r.method.clone(),
                r.problem.clone(),
                e.dt.to_string(),
                format!("{:?}", e.outcome),
                opt(e.error),
                opt(r.largest_stable),
                opt(r.largest_accurate),
                opt(r.dt_per_implicit_solve),
                opt(r.dt_per_explicit_eval),
            ])?;
        }
    }
    csv.flush()
}

/// Scaling-sensitivity rows: `method, scale, dt_max, ratio`.
pub fn write_sensitivity_csv<W: Write>(
    reports: &[SensitivityReport],
    w: W,
) -> std::io::Result<()> {
    let mut csv = csv_writer("scaling-sensitivity", w)?;
    csv.write_record(["method", "scale", "dt_max", "ratio"])?;
    for r in reports {
        for row in &r.rows {
            csv.write_record([
                r.method.clone(),
                row.scale.to_string(),
                opt(row.dt_max),
                opt(row.ratio),
            ])?;
        }
    }
    csv.flush()
}

/// Energy time series: `method, problem, dt, substeps, t, relative_error`.
pub fn write_energy_csv<W: Write>(reports: &[EnergyReport], w: W) -> std::io::Result<()> {
    let mut csv = csv_writer("energy", w)?;
    csv.write_record(["method", "problem", "dt", "substeps", "t", "relative_error"])?;
    for r in reports {
        for (t, e) in r.times.iter().zip(&r.relative_error) {
            csv.write_record([
                r.method.clone(),
                r.problem.clone(),
                r.dt.to_string(),
                r.substeps.to_string(),
                t.to_string(),
                e.to_string(),
            ])?;
        }
    }
    csv.flush()
}

/// Method listing: `method, order, f_i, f_e`.
pub fn write_methods_csv<W: Write>(
    rows: &[(String, u32, u32, u32)],
    w: W,
) -> std::io::Result<()> {
    let mut csv = csv_writer("methods", w)?;
    csv.write_record(["method", "order", "f_i", "f_e"])?;
    for (name, order, f_i, f_e) in rows {
        csv.write_record([
            name.clone(),
            order.to_string(),
            f_i.to_string(),
            f_e.to_string(),
        ])?;
    }
    csv.flush()
}
