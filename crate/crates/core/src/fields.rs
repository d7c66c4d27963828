//! Exterior axial fields in the frame of one grating element.
//!
//! About cylinder `s`, at local polar coordinates `(R, phi)`,
//!
//! ```text
//! E_z = e^{i k_r s d sin psi_i} e^{-i k_z z} sum_n [ (E_n + sum_m A_m I_{n-m}) J_n(k_r R)
//!                                                  + A_n H_n(k_r R) ] e^{i n (phi + pi/2)}
//! H_z = e^{i k_r s d sin psi_i} e^{-i k_z z} sum_n [ (sum_m AH_m I_{n-m}) J_n(k_r R)
//!                                                  + AH_n H_n(k_r R) ] e^{i n (phi + pi/2)}
//! ```
//!
//! The local expansion is valid between the cylinder surface and the nearest
//! neighbouring element.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GratingError, Result};
use crate::lattice::LatticeSumTable;
use crate::medium::{incident_mode_amplitude, DerivedWavenumbers, GratingConfig};
use crate::solver::CoefficientTable;
use crate::special::BesselTable;

/// Cartesian grid in global coordinates; points are referred to cylinder
/// `reference`, centred at `(0, reference d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub reference: i64,
    pub z: f64,
    /// Mode truncation of the field sum; `None` selects `ceil(k_r R_max) + 15`.
    pub modes: Option<usize>,
}

impl GridSpec {
    pub fn uniform(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize, reference: i64) -> Self {
        let axis = |(lo, hi): (f64, f64), n: usize| -> Vec<f64> {
            if n <= 1 {
                vec![lo]
            } else {
                (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
            }
        };
        Self {
            xs: axis(x, nx),
            ys: axis(y, ny),
            reference,
            z: 0.0,
            modes: None,
        }
    }

    fn local(&self, wn: &DerivedWavenumbers, x: f64, y: f64) -> (f64, f64) {
        let ly = y - self.reference as f64 * wn.d;
        (x.hypot(ly), ly.atan2(x))
    }

    fn max_radius(&self, wn: &DerivedWavenumbers) -> f64 {
        self.points()
            .map(|(x, y)| self.local(wn, x, y).0)
            .fold(0.0, f64::max)
    }

    /// Row-major over `ys`, then `xs`.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ys
            .iter()
            .flat_map(move |&y| self.xs.iter().map(move |&x| (x, y)))
    }

    pub fn field_modes(&self, wn: &DerivedWavenumbers) -> usize {
        self.modes
            .unwrap_or_else(|| (wn.kr * self.max_radius(wn)).ceil() as usize + 15)
    }

    /// Largest lattice-sum index the field sum needs for a solution of order `solver_order`.
    pub fn required_sum_index(&self, wn: &DerivedWavenumbers, solver_order: usize) -> usize {
        self.field_modes(wn) + solver_order
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldPoint {
    pub x: f64,
    pub y: f64,
    pub ez: Complex64,
    pub hz: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub reference: i64,
    pub z: f64,
    pub modes: usize,
    pub solver_order: usize,
    pub points: Vec<FieldPoint>,
}

pub fn eval_exterior_fields(
    cfg: &GratingConfig,
    wn: &DerivedWavenumbers,
    table: &CoefficientTable,
    sums: &LatticeSumTable,
    grid: &GridSpec,
) -> Result<FieldGrid> {
    for (x, y) in grid.points() {
        let (r, _) = grid.local(wn, x, y);
        if !(r > wn.a) {
            return Err(GratingError::Domain(format!(
                "point ({x}, {y}) lies at R = {r} <= a = {} from cylinder {}",
                wn.a, grid.reference
            )));
        }
    }
    let modes = grid.field_modes(wn);
    let needed = modes + table.order;
    if !sums.covers(needed as i32) {
        return Err(GratingError::TableRange(format!(
            "field sum needs lattice sums up to |n| = {needed}, table has {}",
            sums.max_index
        )));
    }

    // Regular-wave amplitudes per mode, shared by every grid point.
    let nf = modes as i32;
    let order = table.order as i32;
    let regular: Vec<(Complex64, Complex64)> = (-nf..=nf)
        .map(|n| {
            let mut e = incident_mode_amplitude(cfg, wn, n);
            let mut h = Complex64::new(0.0, 0.0);
            for m in -order..=order {
                let s = sums.get(n - m);
                e += table.a(m) * s;
                h += table.ah(m) * s;
            }
            (e, h)
        })
        .collect();

    let frame_phase = Complex64::from_polar(1.0, wn.kr * grid.reference as f64 * wn.d * wn.sin_psi)
        * Complex64::from_polar(1.0, -wn.kz * grid.z);

    let coords: Vec<(f64, f64)> = grid.points().collect();
    let points = coords
        .par_iter()
        .map(|&(x, y)| {
            let (r, phi) = grid.local(wn, x, y);
            let bessel = BesselTable::new(modes, wn.kr * r)?;
            let mut ez = Complex64::new(0.0, 0.0);
            let mut hz = Complex64::new(0.0, 0.0);
            for n in -nf..=nf {
                let (e, h) = regular[(n + nf) as usize];
                let j = bessel.j(n);
                let angular = Complex64::from_polar(1.0, n as f64 * (phi + FRAC_PI_2));
                let mut te = e * j;
                let mut th = h * j;
                if n.abs() <= order {
                    let hn = bessel.h1(n);
                    te += table.a(n) * hn;
                    th += table.ah(n) * hn;
                }
                ez += te * angular;
                hz += th * angular;
            }
            Ok(FieldPoint {
                x,
                y,
                ez: frame_phase * ez,
                hz: frame_phase * hz,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(FieldGrid {
        reference: grid.reference,
        z: grid.z,
        modes,
        solver_order: table.order,
        points,
    })
}
