//! Task execution. All computation finishes before any file is written, so a
//! numerical failure leaves the output directory untouched; a failed write
//! removes the files written so far.

use std::path::{Path, PathBuf};

use grating_core::asymptotic::{fit_log_slope, omega_expansion_check, scaling_exponent, AsymptoticTable, ExpansionPoint};
use grating_core::fields::{eval_exterior_fields, GridSpec};
use grating_core::lattice::{anomaly_margin, verify_leading_order, LatticeSumTable, LeadingOrderRatio};
use grating_core::solver::{converged_truncation, CoefficientTable, Prepared, SolveMethod};
use grating_core::GratingConfig;
use rayon::prelude::*;

use crate::config::{RunSpec, Task};
use crate::report::{
    asymptotic_csv, coefficients_csv, fields_csv, lattice_csv, AsymptoticReport, ComparisonReport, ConfigEcho,
    Derived, FieldSummary, LatticeCheck, NeumannReport, PointReport, RemainderFit, RunReport, ScalingFit,
    SolutionReport, SolverSummary,
};
use crate::CliError;

/// Computed results: file name and contents, in write order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<(String, String)>,
    pub report: RunReport,
}

struct PointResult {
    report: PointReport,
    exact: Option<CoefficientTable>,
    asym: Vec<AsymptoticTable>,
    files: Vec<(String, String)>,
}

/// Largest lattice-sum order the leading-order table covers.
pub const LATTICE_CHECK_MAX: u32 = 5;

fn solve_point(spec: &RunSpec, index: usize, cfg: &GratingConfig) -> Result<PointResult, CliError> {
    let tasks = &spec.tasks;
    let has = |t: Task| tasks.contains(&t);
    let prep = Prepared::new(cfg)?;
    let wn = prep.wn;
    let opts = &spec.solver;
    let mut files = Vec::new();

    let need_exact = has(Task::SolveExact) || has(Task::Compare) || has(Task::Fields);
    let mut sums: Option<LatticeSumTable> = None;
    let exact = if need_exact {
        Some(match spec.truncation_tol {
            Some(tol) => converged_truncation(cfg, spec.order, tol, opts)?,
            None => {
                let s = LatticeSumTable::compute(&wn, 2 * spec.order, &opts.lattice)?;
                let t = prep.solve_with(spec.order, &s, SolveMethod::Direct, opts)?;
                sums = Some(s);
                t
            }
        })
    } else {
        None
    };
    let order = exact.as_ref().map_or(spec.order, |t| t.order);

    let grid = spec.fields.as_ref().filter(|_| has(Task::Fields)).map(|f| {
        let mut g = GridSpec::uniform((f.x_min, f.x_max), (f.y_min, f.y_max), f.nx, f.ny, f.reference);
        g.z = f.z;
        g.modes = f.modes;
        g
    });
    let mut needed = 0usize;
    if has(Task::SolveNeumann) {
        needed = needed.max(2 * order);
    }
    if let Some(g) = &grid {
        needed = needed.max(g.required_sum_index(&wn, order));
    }
    if needed > 0 && !sums.as_ref().is_some_and(|s| s.covers(needed as i32)) {
        sums = Some(LatticeSumTable::compute(&wn, needed, &opts.lattice)?);
    }

    let neumann = if has(Task::SolveNeumann) {
        let s = sums.as_ref().expect("lattice sums computed for the Neumann solve");
        let t = prep.solve_with(order, s, SolveMethod::Neumann, opts)?;
        let diff = exact.as_ref().map(|e| {
            t.modes()
                .flat_map(|n| [(t.a(n) - e.a(n)).norm(), (t.ah(n) - e.ah(n)).norm()])
                .fold(0.0, f64::max)
        });
        Some((t, diff))
    } else {
        None
    };

    let asym: Vec<AsymptoticTable> = if has(Task::Asymptotic) || has(Task::Compare) {
        spec.asymptotic_orders
            .iter()
            .map(|&o| AsymptoticTable::compute(cfg, &prep.pol, &wn, o))
            .collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };

    let lattice_rows: Option<Vec<LeadingOrderRatio>> = if has(Task::LatticeCheck) {
        Some(
            (0..=LATTICE_CHECK_MAX)
                .map(|n| verify_leading_order(&wn, n, &opts.lattice))
                .collect::<Result<_, _>>()?,
        )
    } else {
        None
    };

    let field_grid = match (&grid, &exact) {
        (Some(g), Some(t)) => Some(eval_exterior_fields(
            cfg,
            &wn,
            t,
            sums.as_ref().expect("lattice sums computed for the field grid"),
            g,
        )?),
        _ => None,
    };

    if let (true, Some(t)) = (has(Task::SolveExact), &exact) {
        files.push((format!("coefficients_exact_{index:03}.csv"), coefficients_csv(t)));
    }
    if let Some((t, _)) = &neumann {
        files.push((format!("coefficients_neumann_{index:03}.csv"), coefficients_csv(t)));
    }
    if has(Task::Asymptotic) {
        files.push((format!("asymptotic_{index:03}.csv"), asymptotic_csv(&asym)));
    }
    if let Some(rows) = &lattice_rows {
        files.push((format!("lattice_{index:03}.csv"), lattice_csv(rows)));
    }
    let fields_summary = field_grid.as_ref().map(|g| {
        let name = format!("fields_{index:03}.csv");
        files.push((name.clone(), fields_csv(g)));
        FieldSummary {
            file: name,
            modes: g.modes,
            solver_order: g.solver_order,
            points: g.points.len(),
        }
    });

    let report = PointReport {
        index,
        config: ConfigEcho::from(cfg),
        derived: Derived {
            kr_a: wn.kr_a(),
            kr_d: wn.kr_d(),
            a_over_d: wn.xi,
            delta: wn.delta,
            anomaly_margin: anomaly_margin(&wn),
        },
        exact: exact.as_ref().filter(|_| has(Task::SolveExact) || has(Task::Compare)).map(SolutionReport::from),
        neumann: neumann.as_ref().map(|(t, diff)| NeumannReport {
            solution: SolutionReport::from(t),
            max_diff_to_direct: *diff,
        }),
        asymptotic: has(Task::Asymptotic).then(|| asym.iter().map(AsymptoticReport::from).collect()),
        comparison: match (&exact, has(Task::Compare)) {
            (Some(t), true) => Some(asym.iter().map(|a| ComparisonReport::build(t, a)).collect()),
            _ => None,
        },
        lattice_check: lattice_rows.as_ref().map(|rows| rows.iter().map(LatticeCheck::from).collect()),
        fields: fields_summary,
    };
    Ok(PointResult {
        report,
        exact,
        asym,
        files,
    })
}

fn scaling_fits(spec: &RunSpec, results: &[PointResult]) -> Option<Vec<ScalingFit>> {
    if spec.sweep.varying() != Some("kr_a") || !spec.tasks.contains(&Task::Compare) {
        return None;
    }
    let tables: Vec<&CoefficientTable> = results.iter().map(|r| r.exact.as_ref()).collect::<Option<_>>()?;
    let x: Vec<f64> = results.iter().map(|r| r.report.derived.kr_a).collect();
    let max_mode = tables.iter().map(|t| t.order as i32).min()?.min(AsymptoticTable::MAX_MODE);
    Some(
        (-max_mode..=max_mode)
            .map(|n| {
                let y: Vec<f64> = tables.iter().map(|t| t.a(n).norm()).collect();
                ScalingFit {
                    n,
                    slope: fit_log_slope(&x, &y),
                    expected: scaling_exponent(n),
                }
            })
            .collect(),
    )
}

fn remainder_fits(spec: &RunSpec, results: &[PointResult]) -> Result<Option<Vec<RemainderFit>>, CliError> {
    if spec.sweep.varying() != Some("a_over_d") || !spec.tasks.contains(&Task::Compare) {
        return Ok(None);
    }
    let fits = (0..spec.asymptotic_orders.len())
        .map(|k| {
            let points: Vec<ExpansionPoint> = results
                .iter()
                .map(|r| ExpansionPoint {
                    xi: r.report.derived.a_over_d,
                    exact: r.exact.clone().expect("compare task solves the exact system"),
                    asym: r.asym[k].clone(),
                })
                .collect();
            omega_expansion_check(&points).map(|rep| RemainderFit::from(&rep))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Some(fits))
}

/// Run every task for every sweep point; sweep points run concurrently and
/// are reported in sweep order.
pub fn execute(spec: &RunSpec) -> Result<RunOutput, CliError> {
    let results: Vec<PointResult> = spec
        .points
        .par_iter()
        .enumerate()
        .map(|(i, cfg)| solve_point(spec, i, cfg))
        .collect::<Result<_, _>>()?;

    let scaling_exponents = scaling_fits(spec, &results);
    let remainder_fits = remainder_fits(spec, &results)?;
    let mut files = Vec::new();
    let mut points = Vec::new();
    for r in &results {
        files.extend(r.files.iter().cloned());
        points.push(r.report.clone());
    }
    let report = RunReport {
        tasks: spec.tasks.iter().copied().collect(),
        solver: SolverSummary {
            order: spec.order,
            truncation_tol: spec.truncation_tol,
            max_order: spec.solver.max_order,
            lattice_tol: spec.solver.lattice.tol,
            anomaly_threshold: spec.solver.lattice.anomaly_threshold,
        },
        sweep_axis: spec.sweep.varying().map(String::from),
        points,
        scaling_exponents,
        remainder_fits,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    files.push((spec.report_name.clone(), json + "\n"));
    Ok(RunOutput { files, report })
}

pub fn write_outputs(dir: &Path, output: &RunOutput) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for (name, contents) in &output.files {
        let path = dir.join(name);
        if let Err(e) = std::fs::write(&path, contents) {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            let _ = std::fs::remove_file(&path);
            return Err(CliError::Io(format!("cannot write {}: {e}", path.display())));
        }
        written.push(path);
    }
    Ok(written)
}

pub fn run(spec: &RunSpec) -> Result<(RunOutput, Vec<PathBuf>), CliError> {
    let output = execute(spec)?;
    let written = write_outputs(&spec.out_dir, &output)?;
    Ok((output, written))
}
