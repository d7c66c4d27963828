//! Long-wavelength closed forms for the normalized coefficients
//! `A_{n,0} = A_n / (k_r a)^{e_n}`, `|n| <= 3`, as power series in `a/d`,
//! together with the per-mode `S_n` matrices and a remainder-order check
//! against the exact solver.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GratingError, Result};
use crate::lattice::leading_h;
use crate::medium::{DerivedWavenumbers, GratingConfig, PolarizationConstants};
use crate::solver::CoefficientTable;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `(A_{p,0}, A^H_{p,0})` for one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaVector {
    pub p: i32,
    pub value: [Complex64; 2],
}

/// `S_{±n} = (k_r a)^{2n} (1/D) (i n pi / (2^n n!)^2) [[s_em, s_xi], [s_eta, s_me]]`;
/// `entries` excludes the `(k_r a)^{2n}` factor, which is kept in `scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SMatrix {
    pub n: u32,
    pub positive: bool,
    pub entries: [[Complex64; 2]; 2],
    pub scale: f64,
}

impl SMatrix {
    pub fn determinant(&self) -> Complex64 {
        let e = &self.entries;
        e[0][0] * e[1][1] - e[0][1] * e[1][0]
    }

    pub fn scaled(&self) -> [[Complex64; 2]; 2] {
        let e = &self.entries;
        [
            [e[0][0] * self.scale, e[0][1] * self.scale],
            [e[1][0] * self.scale, e[1][1] * self.scale],
        ]
    }
}

/// `i n pi / (2^n n!)^2`.
pub fn mode_weight(n: u32) -> Complex64 {
    let fact: f64 = (1..=n).map(f64::from).product();
    let denom = (2f64.powi(n as i32) * fact).powi(2);
    Complex64::new(0.0, n as f64 * PI / denom)
}

pub fn s_matrix(n: u32, positive: bool, pol: &PolarizationConstants, wn: &DerivedWavenumbers, a: f64) -> Result<SMatrix> {
    if n == 0 {
        return Err(GratingError::Domain("S_n is defined for n >= 1".into()));
    }
    let w = mode_weight(n) / pol.d;
    Ok(SMatrix {
        n,
        positive,
        entries: [
            [w * pol.s_em, w * pol.s_xi(positive)],
            [w * pol.s_eta(positive), w * pol.s_me],
        ],
        scale: (wn.kr * a).powi(2 * n as i32),
    })
}

/// Power of `k_r a` relating `A_n` to `A_{n,0}`: `A_{±(2k-1)} ~ (k_r a)^{2k}`,
/// `A_{±2k} ~ (k_r a)^{2k+2}`, and `A_0 ~ (k_r a)^2`.
pub fn scaling_exponent(n: i32) -> i32 {
    let m = n.abs();
    if m == 0 {
        2
    } else if m % 2 == 1 {
        m + 1
    } else {
        m + 2
    }
}

fn check_order(order: u32) -> Result<()> {
    if matches!(order, 0 | 2 | 4) {
        Ok(())
    } else {
        Err(GratingError::Domain(format!(
            "asymptotic truncation order must be 0, 2 or 4, got {order}"
        )))
    }
}

/// Shared scalars of the closed forms.
struct Terms {
    amp: f64,
    s: Complex64,
    sme: Complex64,
    s0: Complex64,
    f2: f64,
    q: f64,
    er: f64,
    mr: f64,
    xi2: f64,
    p1: Complex64,
    h_prefactor: Complex64,
    psi: f64,
}

impl Terms {
    fn new(cfg: &GratingConfig, pol: &PolarizationConstants, wn: &DerivedWavenumbers) -> Self {
        Self {
            amp: wn.sin_theta * cfg.e0,
            s: Complex64::new(pol.s_em, 0.0),
            sme: Complex64::new(pol.s_me, 0.0),
            s0: pol.s0_em,
            f2: pol.f * pol.f,
            q: pol.ratio_sq,
            er: cfg.eps_r,
            mr: cfg.mu_r,
            xi2: wn.xi * wn.xi,
            p1: prefactor(4.0, pol.d),
            h_prefactor: Complex64::new(0.0, -2.0 * pol.eta0 * pol.f),
            psi: wn.psi_i,
        }
    }

    fn phase(&self, k: f64) -> Complex64 {
        Complex64::from_polar(1.0, k * self.psi)
    }

    /// `s_em^2 - 4 F^2`.
    fn cross(&self) -> Complex64 {
        self.s * self.s - 4.0 * self.f2
    }

    fn electric_quartic(&self) -> Complex64 {
        self.s * self.cross() + 8.0 * self.f2 * (self.er - self.mr) * self.q
    }
}

/// `i pi / (m D)`.
fn prefactor(m: f64, d: f64) -> Complex64 {
    Complex64::new(0.0, PI / (m * d))
}

fn sign_of(positive: bool) -> f64 {
    if positive {
        1.0
    } else {
        -1.0
    }
}

pub fn asymptotic_order0(cfg: &GratingConfig, pol: &PolarizationConstants, wn: &DerivedWavenumbers) -> (Complex64, Complex64) {
    (wn.sin_theta * cfg.e0 * pol.s0_em, ZERO)
}

pub fn asymptotic_order1(
    cfg: &GratingConfig,
    pol: &PolarizationConstants,
    wn: &DerivedWavenumbers,
    positive: bool,
    order: u32,
) -> Result<(Complex64, Complex64)> {
    check_order(order)?;
    let t = Terms::new(cfg, pol, wn);
    let sg = sign_of(positive);
    let h2 = leading_h(2, wn)?;
    let (lead, flip) = (t.phase(-sg), t.phase(sg));

    let mut a = t.s * lead;
    let mut ah = lead;
    if order >= 2 {
        a += t.xi2 * h2 * t.cross() * t.p1 * flip;
        ah += t.xi2 * h2 * 2.0 * (t.mr - t.er) * t.q * t.p1 * flip;
    }
    if order >= 4 {
        let xi4 = t.xi2 * t.xi2;
        let p1sq = t.p1 * t.p1;
        a += xi4 * h2 * h2 * t.electric_quartic() * p1sq * lead;
        let magnetic = (t.sme * t.sme - 4.0 * t.f2) + 2.0 * (t.mr - t.er) * t.q * t.s;
        ah += xi4 * h2 * h2 * magnetic * p1sq * lead;
    }
    let base = t.amp * t.p1;
    Ok((base * a, sg * t.h_prefactor * base * ah))
}

pub fn asymptotic_order2(
    cfg: &GratingConfig,
    pol: &PolarizationConstants,
    wn: &DerivedWavenumbers,
    positive: bool,
    order: u32,
) -> Result<(Complex64, Complex64)> {
    check_order(order)?;
    let t = Terms::new(cfg, pol, wn);
    let sg = sign_of(positive);
    let p2 = prefactor(32.0, pol.d);
    let (h2, h3, h4, h5) = (
        leading_h(2, wn)?,
        leading_h(3, wn)?,
        leading_h(4, wn)?,
        leading_h(5, wn)?,
    );

    let mut a = t.s * t.phase(-2.0 * sg);
    let mut ah = t.phase(-2.0 * sg);
    if order >= 2 {
        a += t.xi2 * (h2 * t.s0 * t.s + sg * h3 * t.cross()) * t.p1 * t.phase(sg);
        ah += t.xi2 * (h2 * t.s0 + sg * h3 * t.p1 * 2.0 * (t.mr - t.er) * t.q * t.phase(sg));
    }
    if order >= 4 {
        let xi4 = t.xi2 * t.xi2;
        let p1sq = t.p1 * t.p1;
        a += xi4
            * (h4 * p2 * t.cross() * t.phase(2.0 * sg)
                + sg * h5 * h2 * p1sq * t.electric_quartic() * t.phase(-sg));
        let magnetic = t.cross() + 2.0 * (t.er - t.mr) * t.q * t.sme;
        ah += xi4
            * (h4 * p2 * 2.0 * (t.mr - t.er) * t.q * t.phase(2.0 * sg)
                + sg * h5 * h2 * p1sq * magnetic * t.phase(-sg));
    }
    let base = t.amp * p2;
    Ok((base * a, sg * t.h_prefactor * base * ah))
}

pub fn asymptotic_order3(
    cfg: &GratingConfig,
    pol: &PolarizationConstants,
    wn: &DerivedWavenumbers,
    positive: bool,
    order: u32,
) -> Result<(Complex64, Complex64)> {
    check_order(order)?;
    if order < 4 {
        return Ok((ZERO, ZERO));
    }
    let t = Terms::new(cfg, pol, wn);
    let sg = sign_of(positive);
    let p3 = prefactor(768.0, pol.d);
    let h4 = leading_h(4, wn)?;
    let xi4 = t.xi2 * t.xi2;
    let a = xi4 * h4 * t.cross() * t.p1 * t.phase(sg);
    let ah = xi4 * h4 * 2.0 * (t.mr - t.er) * t.q * t.p1 * t.phase(sg);
    let base = t.amp * p3;
    Ok((base * a, sg * t.h_prefactor * base * ah))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticEntry {
    pub n: i32,
    pub a0: Complex64,
    pub ah0: Complex64,
    pub exponent: i32,
    /// `a0 (k_r a)^exponent`.
    pub a: Complex64,
    pub ah: Complex64,
}

/// Closed-form coefficients for `n` in `[-3, 3]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticTable {
    pub order_included: u32,
    pub kr_a: f64,
    pub xi: f64,
    pub entries: Vec<AsymptoticEntry>,
}

impl AsymptoticTable {
    pub const MAX_MODE: i32 = 3;

    pub fn compute(
        cfg: &GratingConfig,
        pol: &PolarizationConstants,
        wn: &DerivedWavenumbers,
        order_included: u32,
    ) -> Result<Self> {
        check_order(order_included)?;
        let kr_a = wn.kr_a();
        let entries = (-Self::MAX_MODE..=Self::MAX_MODE)
            .map(|n| {
                let positive = n > 0;
                let (a0, ah0) = match n.abs() {
                    0 => asymptotic_order0(cfg, pol, wn),
                    1 => asymptotic_order1(cfg, pol, wn, positive, order_included)?,
                    2 => asymptotic_order2(cfg, pol, wn, positive, order_included)?,
                    _ => asymptotic_order3(cfg, pol, wn, positive, order_included)?,
                };
                let exponent = scaling_exponent(n);
                let scale = kr_a.powi(exponent);
                Ok(AsymptoticEntry {
                    n,
                    a0,
                    ah0,
                    exponent,
                    a: a0 * scale,
                    ah: ah0 * scale,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            order_included,
            kr_a,
            xi: wn.xi,
            entries,
        })
    }

    pub fn get(&self, n: i32) -> Option<&AsymptoticEntry> {
        self.entries.iter().find(|e| e.n == n)
    }

    pub fn omega(&self, n: i32) -> Option<OmegaVector> {
        self.get(n).map(|e| OmegaVector {
            p: n,
            value: [e.a0, e.ah0],
        })
    }
}

/// Least-squares slope of `ln y` against `ln x`; `None` unless at least two
/// distinct positive abscissae with positive finite ordinates are given.
pub fn fit_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 || pts.len() != x.len() {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// One point of an `a/d` sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionPoint {
    pub xi: f64,
    pub exact: CoefficientTable,
    pub asym: AsymptoticTable,
}

/// Relative error of `A_{n,0}` and `A^H_{n,0}` across the sweep and the fitted
/// remainder exponents `q` in `error ~ (a/d)^q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeFit {
    pub n: i32,
    pub rel_error_a: Vec<f64>,
    pub rel_error_ah: Vec<f64>,
    pub q_a: Option<f64>,
    pub q_ah: Option<f64>,
    /// Set when the exact coefficient vanishes or the error is exactly zero,
    /// so no exponent can be fitted.
    pub degenerate_a: bool,
    pub degenerate_ah: bool,
    pub expected_min_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub order_included: u32,
    pub xi: Vec<f64>,
    pub modes: Vec<ModeFit>,
}

impl ExpansionReport {
    pub fn mode(&self, n: i32) -> Option<&ModeFit> {
        self.modes.iter().find(|m| m.n == n)
    }
}

/// Relative error, or the absolute one when the reference vanishes.
fn relative_error(approx: Complex64, exact: Complex64) -> f64 {
    let diff = (approx - exact).norm();
    let scale = exact.norm();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

pub fn omega_expansion_check(points: &[ExpansionPoint]) -> Result<ExpansionReport> {
    if points.len() < 2 {
        return Err(GratingError::InsufficientData(format!(
            "remainder fit needs at least 2 sweep points, got {}",
            points.len()
        )));
    }
    let order_included = points[0].asym.order_included;
    if points.iter().any(|p| p.asym.order_included != order_included) {
        return Err(GratingError::InsufficientData(
            "sweep points mix asymptotic truncation orders".into(),
        ));
    }
    let xi: Vec<f64> = points.iter().map(|p| p.xi).collect();
    let mut distinct = xi.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(GratingError::InsufficientData(
            "remainder fit needs at least 2 distinct a/d values".into(),
        ));
    }

    let max_mode = AsymptoticTable::MAX_MODE.min(
        points.iter().map(|p| p.exact.order as i32).min().unwrap_or(0),
    );
    let modes = (-max_mode..=max_mode)
        .map(|n| {
            let mut err_a = Vec::with_capacity(points.len());
            let mut err_ah = Vec::with_capacity(points.len());
            let (mut deg_a, mut deg_ah) = (false, false);
            for p in points {
                let entry = p.asym.get(n).expect("asymptotic table covers |n| <= 3");
                let scale = p.asym.kr_a.powi(entry.exponent);
                let ex_a = p.exact.a(n) / scale;
                let ex_ah = p.exact.ah(n) / scale;
                let ea = relative_error(entry.a0, ex_a);
                let eh = relative_error(entry.ah0, ex_ah);
                deg_a |= ex_a.norm() == 0.0 || ea == 0.0 || !ea.is_finite();
                deg_ah |= ex_ah.norm() == 0.0 || eh == 0.0 || !eh.is_finite();
                err_a.push(if ea.is_finite() { ea } else { f64::MAX });
                err_ah.push(if eh.is_finite() { eh } else { f64::MAX });
            }
            ModeFit {
                n,
                q_a: if deg_a { None } else { fit_log_slope(&xi, &err_a) },
                q_ah: if deg_ah { None } else { fit_log_slope(&xi, &err_ah) },
                rel_error_a: err_a,
                rel_error_ah: err_ah,
                degenerate_a: deg_a,
                degenerate_ah: deg_ah,
                expected_min_q: order_included as f64 + 2.0,
            }
        })
        .collect();
    Ok(ExpansionReport {
        order_included,
        xi,
        modes,
    })
}
