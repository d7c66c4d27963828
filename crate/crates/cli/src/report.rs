//! Serializable report types and CSV rendering.
//!
//! Every optional section of the JSON report is always present and set to
//! `null` when the task producing it did not run.

use std::fmt::Write as _;

use grating_core::asymptotic::{AsymptoticTable, ExpansionReport};
use grating_core::fields::FieldGrid;
use grating_core::lattice::LeadingOrderRatio;
use grating_core::solver::{CoefficientTable, SolveMethod};
use grating_core::{GratingConfig, UnitsMode};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::Task;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct C {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for C {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub lambda0: f64,
    pub theta_i_deg: f64,
    pub phi_i_deg: f64,
    pub eps_r: f64,
    pub mu_r: f64,
    pub a: f64,
    pub d: f64,
    pub e0: f64,
    pub units: UnitsMode,
}

impl From<&GratingConfig> for ConfigEcho {
    fn from(c: &GratingConfig) -> Self {
        Self {
            lambda0: c.lambda0,
            theta_i_deg: c.theta_i.to_degrees(),
            phi_i_deg: c.phi_i.to_degrees(),
            eps_r: c.eps_r,
            mu_r: c.mu_r,
            a: c.a,
            d: c.d,
            e0: c.e0,
            units: c.units,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Derived {
    pub kr_a: f64,
    pub kr_d: f64,
    pub a_over_d: f64,
    pub delta: f64,
    pub anomaly_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeValue {
    pub n: i32,
    pub a: C,
    pub ah: C,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionReport {
    pub order: usize,
    pub residual: f64,
    pub method: SolveMethod,
    pub neumann_iters: Option<usize>,
    pub coefficients: Vec<ModeValue>,
}

impl From<&CoefficientTable> for SolutionReport {
    fn from(t: &CoefficientTable) -> Self {
        Self {
            order: t.order,
            residual: t.residual,
            method: t.method,
            neumann_iters: t.neumann_iters,
            coefficients: t
                .modes()
                .map(|n| ModeValue {
                    n,
                    a: t.a(n).into(),
                    ah: t.ah(n).into(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeumannReport {
    #[serde(flatten)]
    pub solution: SolutionReport,
    /// Largest coefficient difference to the direct solution, when both ran.
    pub max_diff_to_direct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticMode {
    pub n: i32,
    pub exponent: i32,
    pub a0: C,
    pub ah0: C,
    pub a: C,
    pub ah: C,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub order_included: u32,
    pub modes: Vec<AsymptoticMode>,
}

impl From<&AsymptoticTable> for AsymptoticReport {
    fn from(t: &AsymptoticTable) -> Self {
        Self {
            order_included: t.order_included,
            modes: t
                .entries
                .iter()
                .map(|e| AsymptoticMode {
                    n: e.n,
                    exponent: e.exponent,
                    a0: e.a0.into(),
                    ah0: e.ah0.into(),
                    a: e.a.into(),
                    ah: e.ah.into(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonMode {
    pub n: i32,
    pub exact_a: C,
    pub exact_ah: C,
    pub asymptotic_a: C,
    pub asymptotic_ah: C,
    pub rel_error_a: f64,
    pub rel_error_ah: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub order_included: u32,
    pub modes: Vec<ComparisonMode>,
}

/// Relative error; falls back to the absolute difference when the
/// reference vanishes, so the value is always finite and non-negative.
pub fn relative_error(approx: Complex64, exact: Complex64) -> f64 {
    let diff = (approx - exact).norm();
    let scale = exact.norm();
    let e = if scale > 0.0 { diff / scale } else { diff };
    if e.is_finite() {
        e
    } else {
        f64::MAX
    }
}

impl ComparisonReport {
    pub fn build(exact: &CoefficientTable, asym: &AsymptoticTable) -> Self {
        let modes = asym
            .entries
            .iter()
            .filter(|e| exact.covers(e.n))
            .map(|e| ComparisonMode {
                n: e.n,
                exact_a: exact.a(e.n).into(),
                exact_ah: exact.ah(e.n).into(),
                asymptotic_a: e.a.into(),
                asymptotic_ah: e.ah.into(),
                rel_error_a: relative_error(e.a, exact.a(e.n)),
                rel_error_ah: relative_error(e.ah, exact.ah(e.n)),
            })
            .collect();
        Self {
            order_included: asym.order_included,
            modes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeCheck {
    pub n: u32,
    pub kr_d: f64,
    pub lattice: C,
    pub h: C,
    pub ratio: Option<C>,
}

impl From<&LeadingOrderRatio> for LatticeCheck {
    fn from(r: &LeadingOrderRatio) -> Self {
        Self {
            n: r.n,
            kr_d: r.kr_d,
            lattice: r.lattice.into(),
            h: r.h.into(),
            ratio: r.ratio.map(C::from),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSummary {
    pub file: String,
    pub modes: usize,
    pub solver_order: usize,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointReport {
    pub index: usize,
    pub config: ConfigEcho,
    pub derived: Derived,
    pub exact: Option<SolutionReport>,
    pub neumann: Option<NeumannReport>,
    pub asymptotic: Option<Vec<AsymptoticReport>>,
    pub comparison: Option<Vec<ComparisonReport>>,
    pub lattice_check: Option<Vec<LatticeCheck>>,
    pub fields: Option<FieldSummary>,
}

/// Log-log slope of `|A_n|` against `k_r a` across the sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub n: i32,
    pub slope: Option<f64>,
    pub expected: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemainderMode {
    pub n: i32,
    pub rel_error_a: Vec<f64>,
    pub rel_error_ah: Vec<f64>,
    pub q_a: Option<f64>,
    pub q_ah: Option<f64>,
    pub degenerate_a: bool,
    pub degenerate_ah: bool,
    pub expected_min_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemainderFit {
    pub order_included: u32,
    pub a_over_d: Vec<f64>,
    pub modes: Vec<RemainderMode>,
}

impl From<&ExpansionReport> for RemainderFit {
    fn from(r: &ExpansionReport) -> Self {
        Self {
            order_included: r.order_included,
            a_over_d: r.xi.clone(),
            modes: r
                .modes
                .iter()
                .map(|m| RemainderMode {
                    n: m.n,
                    rel_error_a: m.rel_error_a.clone(),
                    rel_error_ah: m.rel_error_ah.clone(),
                    q_a: m.q_a,
                    q_ah: m.q_ah,
                    degenerate_a: m.degenerate_a,
                    degenerate_ah: m.degenerate_ah,
                    expected_min_q: m.expected_min_q,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverSummary {
    pub order: usize,
    pub truncation_tol: Option<f64>,
    pub max_order: usize,
    pub lattice_tol: f64,
    pub anomaly_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub tasks: Vec<Task>,
    pub solver: SolverSummary,
    pub sweep_axis: Option<String>,
    pub points: Vec<PointReport>,
    pub scaling_exponents: Option<Vec<ScalingFit>>,
    pub remainder_fits: Option<Vec<RemainderFit>>,
}

fn num(out: &mut String, v: f64) {
    let _ = write!(out, ",{v:.16e}");
}

pub fn coefficients_csv(t: &CoefficientTable) -> String {
    let mut s = String::from("n,re_a,im_a,re_ah,im_ah\n");
    for n in t.modes() {
        let _ = write!(s, "{n}");
        for v in [t.a(n).re, t.a(n).im, t.ah(n).re, t.ah(n).im] {
            num(&mut s, v);
        }
        s.push('\n');
    }
    s
}

pub fn asymptotic_csv(tables: &[AsymptoticTable]) -> String {
    let mut s = String::from("order_included,n,exponent,re_a0,im_a0,re_ah0,im_ah0,re_a,im_a,re_ah,im_ah\n");
    for t in tables {
        for e in &t.entries {
            let _ = write!(s, "{},{},{}", t.order_included, e.n, e.exponent);
            for v in [e.a0.re, e.a0.im, e.ah0.re, e.ah0.im, e.a.re, e.a.im, e.ah.re, e.ah.im] {
                num(&mut s, v);
            }
            s.push('\n');
        }
    }
    s
}

pub fn lattice_csv(rows: &[LeadingOrderRatio]) -> String {
    let mut s = String::from("n,kr_d,re_i,im_i,re_h,im_h,re_ratio,im_ratio\n");
    for r in rows {
        let _ = write!(s, "{}", r.n);
        for v in [r.kr_d, r.lattice.re, r.lattice.im, r.h.re, r.h.im] {
            num(&mut s, v);
        }
        match r.ratio {
            Some(z) => {
                num(&mut s, z.re);
                num(&mut s, z.im);
            }
            None => s.push_str(",,"),
        }
        s.push('\n');
    }
    s
}

pub fn fields_csv(grid: &FieldGrid) -> String {
    let mut s = String::from("x,y,re_ez,im_ez,re_hz,im_hz\n");
    for p in &grid.points {
        let _ = write!(s, "{:.16e}", p.x);
        for v in [p.y, p.ez.re, p.ez.im, p.hz.re, p.hz.im] {
            num(&mut s, v);
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_full_precision() {
        let t = CoefficientTable {
            order: 1,
            a: vec![Complex64::new(0.1, -1.0 / 3.0), Complex64::new(0.0, 0.0), Complex64::new(1e-300, 2.5)],
            ah: vec![Complex64::new(std::f64::consts::PI, 0.0); 3],
            residual: 0.0,
            method: SolveMethod::Direct,
            neumann_iters: None,
        };
        let csv = coefficients_csv(&t);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "n,re_a,im_a,re_ah,im_ah");
        assert_eq!(lines.len(), 4);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields[0], "-1");
        assert_eq!(fields[2].parse::<f64>().unwrap(), -1.0 / 3.0);
        assert_eq!(lines[2].split(',').nth(3).unwrap().parse::<f64>().unwrap(), std::f64::consts::PI);
        assert_eq!(lines[3].split(',').nth(1).unwrap().parse::<f64>().unwrap(), 1e-300);
    }

    #[test]
    fn relative_error_is_finite() {
        let z = Complex64::new(0.0, 0.0);
        assert_eq!(relative_error(z, z), 0.0);
        assert_eq!(relative_error(Complex64::new(2.0, 0.0), z), 2.0);
        assert!((relative_error(Complex64::new(1.1, 0.0), Complex64::new(1.0, 0.0)) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn absent_sections_serialize_as_null() {
        let p = PointReport {
            index: 0,
            config: ConfigEcho::from(&GratingConfig::default()),
            derived: Derived {
                kr_a: 0.1,
                kr_d: 1.0,
                a_over_d: 0.1,
                delta: 0.16,
                anomaly_margin: 0.5,
            },
            exact: None,
            neumann: None,
            asymptotic: None,
            comparison: None,
            lattice_check: None,
            fields: None,
        };
        let v = serde_json::to_value(&p).unwrap();
        for key in ["exact", "neumann", "asymptotic", "comparison", "lattice_check", "fields"] {
            assert!(v.get(key).unwrap().is_null(), "{key}");
        }
    }
}
