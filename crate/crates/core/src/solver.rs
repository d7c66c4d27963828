//! Truncated multiple-scattering system for the coefficients `A_n`, `A^H_n`.
//!
//! Unknowns are ordered `[A_{-N} .. A_N, AH_{-N} .. AH_N]`. For each `n` the
//! electric row reads
//!
//! ```text
//! b^mu_n A_n + sum_m b^mu_n c_n I_{n-m} A_m + AH_n + sum_m a^mu_n I_{n-m} AH_m = -b^mu_n c_n E_n
//! ```
//!
//! and the magnetic row
//!
//! ```text
//! -A_n - sum_m a^eps_n I_{n-m} A_m + b^eps_n AH_n + sum_m b^eps_n c_n I_{n-m} AH_m = a^eps_n E_n
//! ```

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GratingError, Result};
use crate::isolated::{IsolatedCoefficients, Zeta};
use crate::lattice::{LatticeOptions, LatticeSumTable};
use crate::linalg::{ComplexMatrix, LuDecomposition};
use crate::medium::{
    derive_polarization_constants, derive_wavenumbers, incident_mode_amplitude, DerivedWavenumbers,
    GratingConfig, PolarizationConstants,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Direct,
    Neumann,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub order: usize,
    pub matrix: ComplexMatrix,
    pub rhs: Vec<Complex64>,
    /// Per-mode diagonal block `[[b^mu_n, 1], [-1, b^eps_n]]`, the part kept
    /// on the left-hand side by the Neumann iteration.
    local: Vec<[Complex64; 4]>,
}

impl LinearSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn modes(&self) -> usize {
        2 * self.order + 1
    }

    /// `max_i |(M x - b)_i| / max(1, sum_j |M_ij x_j| + |b_i|)`.
    pub fn residual(&self, x: &[Complex64]) -> f64 {
        (0..self.dim())
            .map(|r| {
                let row = self.matrix.row(r);
                let mut acc = -self.rhs[r];
                let mut scale = self.rhs[r].norm();
                for (m, v) in row.iter().zip(x) {
                    let t = m * v;
                    acc += t;
                    scale += t.norm();
                }
                acc.norm() / scale.max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

pub fn assemble_system(
    coeffs: &IsolatedCoefficients,
    sums: &LatticeSumTable,
    incident: &[Complex64],
    order: usize,
) -> Result<LinearSystem> {
    let n_max = order as i32;
    let modes = 2 * order + 1;
    if coeffs.order < order {
        return Err(GratingError::TableRange(format!(
            "isolated coefficients cover |n| <= {}, system needs {order}",
            coeffs.order
        )));
    }
    if !sums.covers(2 * n_max) {
        return Err(GratingError::TableRange(format!(
            "lattice sums cover |n| <= {}, system needs {}",
            sums.max_index,
            2 * order
        )));
    }
    if incident.len() != modes {
        return Err(GratingError::TableRange(format!(
            "incident table has {} entries, system needs {modes}",
            incident.len()
        )));
    }

    let rows: Vec<(Vec<Complex64>, Vec<Complex64>, [Complex64; 4])> = (-n_max..=n_max)
        .into_par_iter()
        .map(|n| {
            let i = (n + n_max) as usize;
            let c = coeffs.c(n);
            let (a_e, a_m) = (coeffs.a(n, Zeta::Eps), coeffs.a(n, Zeta::Mu));
            let (b_e, b_m) = (coeffs.b(n, Zeta::Eps), coeffs.b(n, Zeta::Mu));
            let mut electric = vec![ZERO; 2 * modes];
            let mut magnetic = vec![ZERO; 2 * modes];
            electric[i] += b_m;
            electric[modes + i] += ONE;
            magnetic[i] -= ONE;
            magnetic[modes + i] += b_e;
            for m in -n_max..=n_max {
                let j = (m + n_max) as usize;
                let s = sums.get(n - m);
                electric[j] += b_m * c * s;
                electric[modes + j] += a_m * s;
                magnetic[j] -= a_e * s;
                magnetic[modes + j] += b_e * c * s;
            }
            (electric, magnetic, [b_m, ONE, -ONE, b_e])
        })
        .collect();

    let dim = 2 * modes;
    let mut matrix = ComplexMatrix::zeros(dim);
    let mut rhs = vec![ZERO; dim];
    let mut local = Vec::with_capacity(modes);
    for (i, (electric, magnetic, block)) in rows.into_iter().enumerate() {
        let n = i as i32 - n_max;
        for (col, v) in electric.into_iter().enumerate() {
            matrix.set(i, col, v);
        }
        for (col, v) in magnetic.into_iter().enumerate() {
            matrix.set(modes + i, col, v);
        }
        let e = incident[i];
        rhs[i] = -coeffs.b(n, Zeta::Mu) * coeffs.c(n) * e;
        rhs[modes + i] = coeffs.a(n, Zeta::Eps) * e;
        local.push(block);
    }
    Ok(LinearSystem {
        order,
        matrix,
        rhs,
        local,
    })
}

/// `A_n` and `A^H_n` for `n` in `[-order, order]`, indexed by `n + order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub order: usize,
    pub a: Vec<Complex64>,
    pub ah: Vec<Complex64>,
    pub residual: f64,
    pub method: SolveMethod,
    pub neumann_iters: Option<usize>,
}

impl CoefficientTable {
    fn from_solution(order: usize, x: &[Complex64], residual: f64, method: SolveMethod, iters: Option<usize>) -> Self {
        let modes = 2 * order + 1;
        Self {
            order,
            a: x[..modes].to_vec(),
            ah: x[modes..].to_vec(),
            residual,
            method,
            neumann_iters: iters,
        }
    }

    pub fn covers(&self, n: i32) -> bool {
        n.unsigned_abs() as usize <= self.order
    }

    /// `A_n`, zero outside the truncation.
    pub fn a(&self, n: i32) -> Complex64 {
        if self.covers(n) {
            self.a[(n + self.order as i32) as usize]
        } else {
            ZERO
        }
    }

    /// `A^H_n`, zero outside the truncation.
    pub fn ah(&self, n: i32) -> Complex64 {
        if self.covers(n) {
            self.ah[(n + self.order as i32) as usize]
        } else {
            ZERO
        }
    }

    pub fn modes(&self) -> impl Iterator<Item = i32> {
        let n = self.order as i32;
        -n..=n
    }
}

pub const DEFAULT_CONDITION_LIMIT: f64 = 1e12;

pub fn solve_direct(system: &LinearSystem) -> Result<CoefficientTable> {
    solve_direct_with_limit(system, DEFAULT_CONDITION_LIMIT)
}

pub fn solve_direct_with_limit(system: &LinearSystem, condition_limit: f64) -> Result<CoefficientTable> {
    let lu = LuDecomposition::new(&system.matrix).map_err(|_| GratingError::SingularSystem {
        condition: f64::INFINITY,
        limit: condition_limit,
    })?;
    let condition = lu.condition_one(&system.matrix);
    if !(condition <= condition_limit) {
        return Err(GratingError::SingularSystem {
            condition,
            limit: condition_limit,
        });
    }
    let x = lu.solve(&system.rhs);
    let residual = system.residual(&x);
    Ok(CoefficientTable::from_solution(system.order, &x, residual, SolveMethod::Direct, None))
}

/// Fixed-point iteration: the per-mode blocks stay on the left, all lattice
/// couplings are evaluated at the previous iterate. The first iterate is the
/// isolated-cylinder response.
pub fn solve_neumann(system: &LinearSystem, max_iters: usize, tol: f64) -> Result<CoefficientTable> {
    let modes = system.modes();
    let mut inverse = Vec::with_capacity(modes);
    for (i, &[p, q, r, s]) in system.local.iter().enumerate() {
        let det = p * s - q * r;
        if det.norm() == 0.0 {
            return Err(GratingError::NoConvergence(format!(
                "local block of mode {} is singular",
                i as i32 - system.order as i32
            )));
        }
        inverse.push([s / det, -q / det, -r / det, p / det]);
    }
    let apply_local = |source: &[Complex64]| -> Vec<Complex64> {
        let mut out = vec![ZERO; 2 * modes];
        for (i, inv) in inverse.iter().enumerate() {
            let (u, v) = (source[i], source[modes + i]);
            out[i] = inv[0] * u + inv[1] * v;
            out[modes + i] = inv[2] * u + inv[3] * v;
        }
        out
    };
    let coupling = |x: &[Complex64]| -> Vec<Complex64> {
        let mut full = system.matrix.mul_vec(x);
        for (i, &[p, q, r, s]) in system.local.iter().enumerate() {
            let (u, v) = (x[i], x[modes + i]);
            full[i] -= p * u + q * v;
            full[modes + i] -= r * u + s * v;
        }
        full
    };

    let mut x = apply_local(&system.rhs);
    let mut first_change: Option<f64> = None;
    for iter in 1..=max_iters {
        let coupled = coupling(&x);
        let source: Vec<Complex64> = system.rhs.iter().zip(&coupled).map(|(b, c)| b - c).collect();
        let next = apply_local(&source);
        let change = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if !change.is_finite() || next.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(GratingError::NoConvergence(format!(
                "Neumann iteration produced non-finite values at iteration {iter}"
            )));
        }
        x = next;
        if change <= tol {
            let residual = system.residual(&x);
            return Ok(CoefficientTable::from_solution(
                system.order,
                &x,
                residual,
                SolveMethod::Neumann,
                Some(iter),
            ));
        }
        let base = *first_change.get_or_insert(change);
        if change > 1e6 * base.max(f64::MIN_POSITIVE) {
            return Err(GratingError::NoConvergence(format!(
                "Neumann iteration diverges: update grew from {base:.3e} to {change:.3e} by iteration {iter}"
            )));
        }
    }
    Err(GratingError::NoConvergence(format!(
        "Neumann iteration did not reach tol {tol:.1e} in {max_iters} iterations"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub method: SolveMethod,
    pub neumann_max_iters: usize,
    pub neumann_tol: f64,
    pub condition_limit: f64,
    /// Largest truncation order tried by [`converged_truncation`].
    pub max_order: usize,
    pub lattice: LatticeOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: SolveMethod::Direct,
            neumann_max_iters: 500,
            neumann_tol: 1e-14,
            condition_limit: DEFAULT_CONDITION_LIMIT,
            max_order: 32,
            lattice: LatticeOptions::default(),
        }
    }
}

/// Everything derived from a configuration that the solvers and the field
/// evaluator share.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub cfg: GratingConfig,
    pub wn: DerivedWavenumbers,
    pub pol: PolarizationConstants,
}

impl Prepared {
    pub fn new(cfg: &GratingConfig) -> Result<Self> {
        let wn = derive_wavenumbers(cfg)?;
        let pol = derive_polarization_constants(cfg, &wn)?;
        Ok(Self { cfg: *cfg, wn, pol })
    }

    pub fn incident(&self, order: usize) -> Vec<Complex64> {
        let n = order as i32;
        (-n..=n)
            .map(|k| incident_mode_amplitude(&self.cfg, &self.wn, k))
            .collect()
    }

    pub fn system(&self, order: usize, sums: &LatticeSumTable) -> Result<LinearSystem> {
        let coeffs = IsolatedCoefficients::compute(&self.cfg, &self.wn, &self.pol, order)?;
        assemble_system(&coeffs, sums, &self.incident(order), order)
    }

    pub fn solve_with(&self, order: usize, sums: &LatticeSumTable, method: SolveMethod, opts: &SolverOptions) -> Result<CoefficientTable> {
        let system = self.system(order, sums)?;
        match method {
            SolveMethod::Direct => solve_direct_with_limit(&system, opts.condition_limit),
            SolveMethod::Neumann => solve_neumann(&system, opts.neumann_max_iters, opts.neumann_tol),
        }
    }
}

/// Lattice sums and solution at a fixed truncation order.
pub fn solve_config(cfg: &GratingConfig, order: usize, opts: &SolverOptions) -> Result<(CoefficientTable, LatticeSumTable)> {
    let prep = Prepared::new(cfg)?;
    let sums = LatticeSumTable::compute(&prep.wn, 2 * order, &opts.lattice)?;
    let table = prep.solve_with(order, &sums, opts.method, opts)?;
    Ok((table, sums))
}

/// Solve at `N` and `2N`, doubling `N` until the retained coefficients agree
/// within `tol`; returns the `2N` solution.
pub fn converged_truncation(
    cfg: &GratingConfig,
    base_order: usize,
    tol: f64,
    opts: &SolverOptions,
) -> Result<CoefficientTable> {
    if base_order < 2 {
        return Err(GratingError::InvalidConfig(format!(
            "base truncation order must be >= 2, got {base_order}"
        )));
    }
    if !(tol > 0.0) {
        return Err(GratingError::Truncation {
            max_order: opts.max_order,
            last_change: f64::NAN,
            tol,
        });
    }
    let prep = Prepared::new(cfg)?;
    let mut order = base_order;
    let mut sums = LatticeSumTable::compute(&prep.wn, 4 * order, &opts.lattice)?;
    let mut coarse = prep.solve_with(order, &sums, opts.method, opts)?;
    let mut last_change = f64::INFINITY;
    while 2 * order <= opts.max_order {
        let fine_order = 2 * order;
        if !sums.covers(2 * fine_order as i32) {
            sums = LatticeSumTable::compute(&prep.wn, 2 * fine_order, &opts.lattice)?;
        }
        let fine = prep.solve_with(fine_order, &sums, opts.method, opts)?;
        let n = order as i32;
        last_change = (-n..=n)
            .flat_map(|k| [(coarse.a(k) - fine.a(k)).norm(), (coarse.ah(k) - fine.ah(k)).norm()])
            .fold(0.0, f64::max);
        if last_change <= tol {
            return Ok(fine);
        }
        coarse = fine;
        order = fine_order;
    }
    Err(GratingError::Truncation {
        max_order: opts.max_order,
        last_change,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn config(theta: f64, er: f64, mr: f64, xi: f64, kr_d: f64) -> GratingConfig {
        let kr = 2.0 * PI * theta.sin();
        let d = kr_d / kr;
        GratingConfig {
            theta_i: theta,
            phi_i: PI / 6.0,
            eps_r: er,
            mu_r: mr,
            a: xi * d,
            d,
            ..GratingConfig::default()
        }
    }

    fn max_abs(v: &[Complex64]) -> f64 {
        v.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn vacuum_gives_zero_solution() {
        let cfg = config(PI / 3.0, 1.0, 1.0, 0.2, 0.5);
        let (t, _) = solve_config(&cfg, 3, &SolverOptions::default()).unwrap();
        assert!(max_abs(&t.a) < 1e-14 && max_abs(&t.ah) < 1e-14);

        let prep = Prepared::new(&cfg).unwrap();
        let sums = LatticeSumTable::compute(&prep.wn, 6, &LatticeOptions::default()).unwrap();
        let sys = prep.system(3, &sums).unwrap();
        let n = solve_neumann(&sys, 10, 1e-14).unwrap();
        assert_eq!(n.neumann_iters, Some(1));
        assert!(max_abs(&n.a) < 1e-14);
    }

    #[test]
    fn matrix_entries_read_off_rows() {
        let cfg = config(PI / 3.0, 2.25, 1.4, 0.1, 0.3);
        let prep = Prepared::new(&cfg).unwrap();
        let sums = LatticeSumTable::compute(&prep.wn, 2, &LatticeOptions::default()).unwrap();
        let coeffs = IsolatedCoefficients::compute(&prep.cfg, &prep.wn, &prep.pol, 1).unwrap();
        let sys = assemble_system(&coeffs, &sums, &prep.incident(1), 1).unwrap();
        assert_eq!(sys.dim(), 6);
        // magnetic row n = 0, column A_0
        let expect = -(ONE + coeffs.a(0, Zeta::Eps) * sums.get(0));
        assert!((sys.matrix.get(4, 1) - expect).norm() < 1e-15 * expect.norm());

        // independent element-by-element assembly
        let modes = [-1, 0, 1];
        for (i, &n) in modes.iter().enumerate() {
            for (j, &m) in modes.iter().enumerate() {
                let s = sums.get(n - m);
                let delta = if n == m { ONE } else { ZERO };
                let bm = coeffs.b(n, Zeta::Mu);
                let be = coeffs.b(n, Zeta::Eps);
                let cn = coeffs.c(n);
                let entries = [
                    (i, j, bm * delta + bm * cn * s),
                    (i, 3 + j, delta + coeffs.a(n, Zeta::Mu) * s),
                    (3 + i, j, -delta - coeffs.a(n, Zeta::Eps) * s),
                    (3 + i, 3 + j, be * delta + be * cn * s),
                ];
                for (r, c, v) in entries {
                    assert!((sys.matrix.get(r, c) - v).norm() <= 1e-15 * v.norm().max(1e-300));
                }
            }
            let e = prep.incident(1)[i];
            assert_eq!(sys.rhs[i], -coeffs.b(n, Zeta::Mu) * coeffs.c(n) * e);
            assert_eq!(sys.rhs[3 + i], coeffs.a(n, Zeta::Eps) * e);
        }
    }

    #[test]
    fn short_tables_are_rejected() {
        let cfg = config(PI / 3.0, 2.25, 1.0, 0.1, 0.3);
        let prep = Prepared::new(&cfg).unwrap();
        let sums = LatticeSumTable::zeros(3);
        assert!(matches!(prep.system(2, &sums), Err(GratingError::TableRange(_))));
    }

    #[test]
    fn normal_incidence_decouples_and_matches_scalar_recursion() {
        let cfg = config(FRAC_PI_2, 2.25, 1.0, 0.2, 0.5);
        let order = 4;
        let prep = Prepared::new(&cfg).unwrap();
        let sums = LatticeSumTable::compute(&prep.wn, 2 * order, &LatticeOptions::default()).unwrap();
        let t = prep.solve_with(order, &sums, SolveMethod::Direct, &SolverOptions::default()).unwrap();
        assert!(max_abs(&t.ah) <= 1e-12);
        assert!(t.residual <= 1e-10);

        // A_n + a_n sum_m I_{n-m} A_m = -a_n E_n, solved on its own
        let coeffs = IsolatedCoefficients::compute(&prep.cfg, &prep.wn, &prep.pol, order).unwrap();
        let inc = prep.incident(order);
        let dim = 2 * order + 1;
        let mut m = ComplexMatrix::zeros(dim);
        let mut b = vec![ZERO; dim];
        for i in 0..dim {
            let n = i as i32 - order as i32;
            let an = coeffs.a(n, Zeta::Eps);
            for j in 0..dim {
                let k = j as i32 - order as i32;
                m.add(i, j, an * sums.get(n - k));
            }
            m.add(i, i, ONE);
            b[i] = -an * inc[i];
        }
        let x = LuDecomposition::new(&m).unwrap().solve(&b);
        for (got, want) in t.a.iter().zip(&x) {
            assert!((got - want).norm() <= 1e-12 * want.norm().max(1e-30));
        }
    }

    #[test]
    fn residual_is_small_for_generic_config() {
        let cfg = config(0.9, 3.0, 1.5, 0.3, 1.1);
        let (t, _) = solve_config(&cfg, 5, &SolverOptions::default()).unwrap();
        assert!(t.residual <= 1e-10, "residual {}", t.residual);
        assert!(max_abs(&t.ah) > 0.0);
    }

    #[test]
    fn neumann_matches_direct_for_weak_coupling() {
        let cfg = config(PI / 3.0, 2.25, 1.0, 0.05, 0.1);
        let opts = SolverOptions::default();
        let prep = Prepared::new(&cfg).unwrap();
        let sums = LatticeSumTable::compute(&prep.wn, 8, &opts.lattice).unwrap();
        let d = prep.solve_with(4, &sums, SolveMethod::Direct, &opts).unwrap();
        let n = prep.solve_with(4, &sums, SolveMethod::Neumann, &opts).unwrap();
        for k in -4..=4 {
            assert!((d.a(k) - n.a(k)).norm() <= 1e-10);
            assert!((d.ah(k) - n.ah(k)).norm() <= 1e-10);
        }
        assert!(n.neumann_iters.unwrap() >= 1);
    }

    #[test]
    fn truncation_control() {
        let cfg = config(PI / 3.0, 2.25, 1.0, 0.1, 0.1);
        let opts = SolverOptions::default();
        let t = converged_truncation(&cfg, 4, 1e-12, &opts).unwrap();
        assert_eq!(t.order, 8);
        assert!(matches!(
            converged_truncation(&cfg, 4, 0.0, &opts),
            Err(GratingError::Truncation { .. })
        ));
        let vac = config(PI / 3.0, 1.0, 1.0, 0.1, 0.1);
        assert_eq!(converged_truncation(&vac, 2, 1e-12, &opts).unwrap().order, 4);
    }
}
