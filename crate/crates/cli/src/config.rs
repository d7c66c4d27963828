//! Run configuration: TOML file, defaults, validation and sweep expansion.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use grating_core::lattice::{check_anomaly, LatticeOptions};
use grating_core::medium::derive_wavenumbers;
use grating_core::solver::SolverOptions;
use grating_core::{GratingConfig, UnitsMode};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    SolveExact,
    SolveNeumann,
    Asymptotic,
    Compare,
    Fields,
    LatticeCheck,
}

impl Task {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        Ok(match name {
            "solve_exact" => Task::SolveExact,
            "solve_neumann" => Task::SolveNeumann,
            "asymptotic" => Task::Asymptotic,
            "compare" => Task::Compare,
            "fields" => Task::Fields,
            "lattice_check" => Task::LatticeCheck,
            other => {
                return Err(CliError::Config(format!(
                    "tasks: unknown task `{other}` (expected solve_exact, solve_neumann, asymptotic, compare, fields or lattice_check)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default)]
    tasks: Vec<String>,
    grating: RawGrating,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    lattice: RawLattice,
    #[serde(default)]
    asymptotic: RawAsymptotic,
    fields: Option<RawFields>,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrating {
    lambda0: f64,
    theta_i_deg: f64,
    #[serde(default)]
    phi_i_deg: f64,
    eps_r: f64,
    #[serde(default = "one")]
    mu_r: f64,
    a: f64,
    d: f64,
    #[serde(default = "one")]
    e0: f64,
    #[serde(default)]
    units: UnitsMode,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    a_over_d: Option<Vec<f64>>,
    kr_d: Option<Vec<f64>>,
    kr_a: Option<Vec<f64>>,
    theta_i_deg: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    order: Option<usize>,
    truncation_tol: Option<f64>,
    max_order: Option<usize>,
    neumann_max_iters: Option<usize>,
    neumann_tol: Option<f64>,
    condition_limit: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    tol: Option<f64>,
    anomaly_threshold: Option<f64>,
    max_terms: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAsymptotic {
    orders: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFields {
    x_min: f64,
    x_max: f64,
    nx: usize,
    y_min: f64,
    y_max: f64,
    ny: usize,
    #[serde(default)]
    reference: i64,
    #[serde(default)]
    z: f64,
    modes: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    report: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
    pub reference: i64,
    pub z: f64,
    pub modes: Option<usize>,
}

/// Which geometric parameters the sweep varies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAxes {
    pub a_over_d: Option<Vec<f64>>,
    pub kr_d: Option<Vec<f64>>,
    pub kr_a: Option<Vec<f64>>,
    pub theta_i_deg: Option<Vec<f64>>,
}

impl SweepAxes {
    /// The single axis with more than one value, if exactly one varies.
    pub fn varying(&self) -> Option<&'static str> {
        let axes = [
            ("a_over_d", &self.a_over_d),
            ("kr_d", &self.kr_d),
            ("kr_a", &self.kr_a),
            ("theta_i_deg", &self.theta_i_deg),
        ];
        let varying: Vec<&'static str> = axes
            .iter()
            .filter(|(_, v)| v.as_ref().is_some_and(|v| v.len() > 1))
            .map(|(k, _)| *k)
            .collect();
        if varying.len() == 1 {
            Some(varying[0])
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub base: GratingConfig,
    pub points: Vec<GratingConfig>,
    pub sweep: SweepAxes,
    pub tasks: BTreeSet<Task>,
    pub order: usize,
    pub truncation_tol: Option<f64>,
    pub solver: SolverOptions,
    pub asymptotic_orders: Vec<u32>,
    pub fields: Option<FieldSpec>,
    pub out_dir: PathBuf,
    pub report_name: String,
}

pub const DEFAULT_ORDER: usize = 6;

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tasks: Vec<String>,
    pub out_dir: Option<PathBuf>,
    pub tol: Option<f64>,
    pub max_order: Option<usize>,
}

pub fn load_run_spec(path: &Path, overrides: &Overrides) -> Result<RunSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_run_spec(&text, overrides)
}

pub fn parse_run_spec(text: &str, overrides: &Overrides) -> Result<RunSpec, CliError> {
    let raw: RawSpec = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    build(raw, overrides)
}

fn positive_list(key: &str, v: &Option<Vec<f64>>) -> Result<(), CliError> {
    if let Some(list) = v {
        if list.is_empty() {
            return Err(CliError::Config(format!("{key}: sweep list must not be empty")));
        }
        if let Some(bad) = list.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(CliError::Config(format!("{key}: values must be positive and finite, got {bad}")));
        }
    }
    Ok(())
}

fn build(raw: RawSpec, overrides: &Overrides) -> Result<RunSpec, CliError> {
    let task_names = if overrides.tasks.is_empty() {
        raw.tasks.clone()
    } else {
        overrides.tasks.clone()
    };
    if task_names.is_empty() {
        return Err(CliError::Config("tasks: at least one task is required".into()));
    }
    let tasks = task_names
        .iter()
        .map(|t| Task::parse(t))
        .collect::<Result<BTreeSet<_>, _>>()?;

    let g = &raw.grating;
    let base = GratingConfig {
        lambda0: g.lambda0,
        theta_i: g.theta_i_deg.to_radians(),
        phi_i: g.phi_i_deg.to_radians(),
        eps_r: g.eps_r,
        mu_r: g.mu_r,
        a: g.a,
        d: g.d,
        e0: g.e0,
        units: g.units,
    };

    let s = &raw.sweep;
    positive_list("sweep.a_over_d", &s.a_over_d)?;
    positive_list("sweep.kr_d", &s.kr_d)?;
    positive_list("sweep.kr_a", &s.kr_a)?;
    positive_list("sweep.theta_i_deg", &s.theta_i_deg)?;
    if s.a_over_d.is_some() && s.kr_d.is_some() && s.kr_a.is_some() {
        return Err(CliError::Config(
            "sweep: at most two of a_over_d, kr_d, kr_a may be given".into(),
        ));
    }
    let sweep = SweepAxes {
        a_over_d: s.a_over_d.clone(),
        kr_d: s.kr_d.clone(),
        kr_a: s.kr_a.clone(),
        theta_i_deg: s.theta_i_deg.clone(),
    };

    let lattice_defaults = LatticeOptions::default();
    let lattice = LatticeOptions {
        tol: raw.lattice.tol.unwrap_or(lattice_defaults.tol),
        anomaly_threshold: raw.lattice.anomaly_threshold.unwrap_or(lattice_defaults.anomaly_threshold),
        max_terms: raw.lattice.max_terms.unwrap_or(lattice_defaults.max_terms),
    };
    if !(lattice.tol > 0.0) || !(lattice.anomaly_threshold >= 0.0) || lattice.max_terms == 0 {
        return Err(CliError::Config(
            "lattice: tol and max_terms must be positive, anomaly_threshold non-negative".into(),
        ));
    }
    let solver_defaults = SolverOptions::default();
    let mut solver = SolverOptions {
        neumann_max_iters: raw.solver.neumann_max_iters.unwrap_or(solver_defaults.neumann_max_iters),
        neumann_tol: raw.solver.neumann_tol.unwrap_or(solver_defaults.neumann_tol),
        condition_limit: raw.solver.condition_limit.unwrap_or(solver_defaults.condition_limit),
        max_order: raw.solver.max_order.unwrap_or(solver_defaults.max_order),
        lattice,
        ..solver_defaults
    };
    let mut order = raw.solver.order.unwrap_or(DEFAULT_ORDER);
    let mut truncation_tol = raw.solver.truncation_tol;
    if let Some(t) = overrides.tol {
        truncation_tol = Some(t);
    }
    if let Some(m) = overrides.max_order {
        solver.max_order = m;
        order = order.min(m);
    }
    if truncation_tol.is_some() && order < 2 {
        return Err(CliError::Config(format!(
            "solver.order: adaptive truncation needs a base order >= 2, got {order}"
        )));
    }
    if let Some(t) = truncation_tol {
        if !t.is_finite() || t < 0.0 {
            return Err(CliError::Config(format!("solver.truncation_tol: must be finite and >= 0, got {t}")));
        }
    }

    let asymptotic_orders = raw.asymptotic.orders.clone().unwrap_or_else(|| vec![4]);
    if asymptotic_orders.is_empty() || asymptotic_orders.iter().any(|o| !matches!(o, 0 | 2 | 4)) {
        return Err(CliError::Config(
            "asymptotic.orders: entries must be 0, 2 or 4 and the list must not be empty".into(),
        ));
    }

    let fields = raw.fields.map(|f| FieldSpec {
        x_min: f.x_min,
        x_max: f.x_max,
        nx: f.nx,
        y_min: f.y_min,
        y_max: f.y_max,
        ny: f.ny,
        reference: f.reference,
        z: f.z,
        modes: f.modes,
    });
    if tasks.contains(&Task::Fields) {
        match &fields {
            None => return Err(CliError::Config("fields: section required by the fields task".into())),
            Some(f) if f.nx == 0 || f.ny == 0 => {
                return Err(CliError::Config("fields.nx, fields.ny: must be positive".into()))
            }
            _ => {}
        }
    }

    let points = expand_sweep(&base, &sweep)?;
    for (i, p) in points.iter().enumerate() {
        p.validate()
            .map_err(|e| CliError::Config(format!("sweep point {i}: {e}")))?;
        let wn = derive_wavenumbers(p).map_err(|e| CliError::Config(format!("sweep point {i}: {e}")))?;
        check_anomaly(&wn, solver.lattice.anomaly_threshold)
            .map_err(|e| CliError::Config(format!("sweep point {i}: {e}")))?;
    }

    Ok(RunSpec {
        base,
        points,
        sweep,
        tasks,
        order,
        truncation_tol,
        solver,
        asymptotic_orders,
        fields,
        out_dir: overrides
            .out_dir
            .clone()
            .or(raw.output.dir)
            .unwrap_or_else(|| PathBuf::from(".")),
        report_name: raw.output.report.unwrap_or_else(|| "report.json".into()),
    })
}

/// Cartesian product of the sweep lists, `theta_i` outermost, then `k_r d`,
/// then `a/d`, then `k_r a`. Geometry rules per point:
/// `k_r d` fixes `d`; `k_r a` fixes `a`; `a/d` ties the one not fixed to the
/// other; a missing `a/d` is taken from the base configuration.
pub fn expand_sweep(base: &GratingConfig, sweep: &SweepAxes) -> Result<Vec<GratingConfig>, CliError> {
    let single = |v: &Option<Vec<f64>>| -> Vec<Option<f64>> {
        match v {
            Some(list) => list.iter().map(|x| Some(*x)).collect(),
            None => vec![None],
        }
    };
    let mut out = Vec::new();
    for theta in single(&sweep.theta_i_deg) {
        for kr_d in single(&sweep.kr_d) {
            for xi in single(&sweep.a_over_d) {
                for kr_a in single(&sweep.kr_a) {
                    let mut cfg = *base;
                    if let Some(t) = theta {
                        cfg.theta_i = t.to_radians();
                    }
                    let kr = 2.0 * std::f64::consts::PI / cfg.lambda0 * cfg.theta_i.sin();
                    let ratio = xi.unwrap_or(base.a / base.d);
                    match (kr_d, kr_a) {
                        (Some(kd), Some(ka)) => {
                            cfg.d = kd / kr;
                            cfg.a = ka / kr;
                        }
                        (Some(kd), None) => {
                            cfg.d = kd / kr;
                            cfg.a = ratio * cfg.d;
                        }
                        (None, Some(ka)) => {
                            cfg.a = ka / kr;
                            cfg.d = cfg.a / ratio;
                        }
                        (None, None) => {
                            cfg.a = ratio * cfg.d;
                        }
                    }
                    out.push(cfg);
                }
            }
        }
    }
    Ok(out)
}
