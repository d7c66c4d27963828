//! Physical configuration and the quantities derived from it once per run:
//! wavenumbers, the in-plane incidence phase, and the polarization coupling
//! constants used by both the exact and the asymptotic solutions.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GratingError, Result};

const MU0_SI: f64 = 1.256_637_062_12e-6;
const EPS0_SI: f64 = 8.854_187_812_8e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitsMode {
    /// `eps_0 = mu_0 = 1`, so the wave impedance and admittance are both 1.
    #[default]
    Normalized,
    Si,
}

/// Grating of identical cylinders of radius `a`, centres on the y-axis at
/// `(0, s d)`, illuminated by a plane wave of obliquity `theta_i` (from the
/// cylinder axis) and in-plane angle `phi_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GratingConfig {
    pub lambda0: f64,
    /// Radians, in `(0, pi/2]`.
    pub theta_i: f64,
    /// Radians.
    pub phi_i: f64,
    pub eps_r: f64,
    pub mu_r: f64,
    pub a: f64,
    pub d: f64,
    pub e0: f64,
    pub units: UnitsMode,
}

impl Default for GratingConfig {
    fn default() -> Self {
        Self {
            lambda0: 1.0,
            theta_i: FRAC_PI_2,
            phi_i: 0.0,
            eps_r: 1.0,
            mu_r: 1.0,
            a: 0.01,
            d: 0.1,
            e0: 1.0,
            units: UnitsMode::Normalized,
        }
    }
}

impl GratingConfig {
    pub fn fill_ratio(&self) -> f64 {
        self.a / self.d
    }

    /// Geometry and medium invariants. The anomaly condition depends on the
    /// lattice-sum threshold and is checked in [`crate::lattice`].
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda0", self.lambda0),
            ("eps_r", self.eps_r),
            ("mu_r", self.mu_r),
            ("a", self.a),
            ("d", self.d),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(GratingError::InvalidConfig(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !self.e0.is_finite() {
            return Err(GratingError::InvalidConfig("e0 must be finite".into()));
        }
        if !self.phi_i.is_finite() {
            return Err(GratingError::InvalidConfig("phi_i must be finite".into()));
        }
        if !(self.a / self.d < 0.5) {
            return Err(GratingError::InvalidConfig(format!(
                "fill ratio a/d = {} violates xi = a/d < 1/2",
                self.a / self.d
            )));
        }
        if !(self.theta_i > 0.0 && self.theta_i <= FRAC_PI_2 + 1e-15) {
            return Err(GratingError::InvalidConfig(format!(
                "theta_i = {} rad must lie in (0, pi/2]",
                self.theta_i
            )));
        }
        let cos2 = (FRAC_PI_2 - self.theta_i).sin().powi(2);
        let product = self.eps_r * self.mu_r;
        if product <= cos2 {
            return Err(GratingError::BranchPoint { product, cos2 });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedWavenumbers {
    pub k0: f64,
    pub kr: f64,
    pub kz: f64,
    /// Transverse wavenumber inside the cylinders.
    pub k1: f64,
    /// `k_r d / (2 pi)`.
    pub delta: f64,
    /// `a / d`.
    pub xi: f64,
    /// `pi + phi_i`.
    pub psi_i: f64,
    /// `sin psi_i = -sin phi_i`, exact zero for `phi_i = 0`.
    pub sin_psi: f64,
    pub cos_psi: f64,
    pub sin_theta: f64,
    pub cos_theta: f64,
    pub a: f64,
    pub d: f64,
}

impl DerivedWavenumbers {
    pub fn kr_a(&self) -> f64 {
        self.kr * self.a
    }

    pub fn kr_d(&self) -> f64 {
        self.kr * self.d
    }

    pub fn k1_a(&self) -> f64 {
        self.k1 * self.a
    }

    /// Floquet phase step `k_r d sin psi_i` between adjacent cylinders.
    pub fn floquet_phase(&self) -> f64 {
        self.kr * self.d * self.sin_psi
    }
}

pub fn derive_wavenumbers(cfg: &GratingConfig) -> Result<DerivedWavenumbers> {
    cfg.validate()?;
    let k0 = 2.0 * PI / cfg.lambda0;
    // complementary angle keeps cos(pi/2) exactly zero
    let (cos_theta, sin_theta) = (FRAC_PI_2 - cfg.theta_i).sin_cos();
    let kr = k0 * sin_theta;
    let kz = k0 * cos_theta;
    // eps mu - cos^2 = (eps mu - 1) + sin^2; k1 == kr exactly in vacuum.
    let k1 = k0 * ((cfg.eps_r * cfg.mu_r - 1.0) + sin_theta * sin_theta).sqrt();
    Ok(DerivedWavenumbers {
        k0,
        kr,
        kz,
        k1,
        delta: kr * cfg.d / (2.0 * PI),
        xi: cfg.a / cfg.d,
        psi_i: PI + cfg.phi_i,
        sin_psi: -cfg.phi_i.sin(),
        cos_psi: -cfg.phi_i.cos(),
        sin_theta,
        cos_theta,
        a: cfg.a,
        d: cfg.d,
    })
}

/// Cross-polarization constants. `s_xi_*` scale with the admittance `xi0`,
/// `s_eta_*` with the impedance `eta0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationConstants {
    pub f: f64,
    pub d: f64,
    pub s_em: f64,
    pub s_me: f64,
    pub s_xi_plus: Complex64,
    pub s_xi_minus: Complex64,
    pub s_eta_plus: Complex64,
    pub s_eta_minus: Complex64,
    pub s0_em: Complex64,
    pub eta0: f64,
    pub xi0: f64,
    /// `(k_r / k_1)^2`, shared by most of the closed forms.
    pub ratio_sq: f64,
}

impl PolarizationConstants {
    pub fn s_xi(&self, positive: bool) -> Complex64 {
        if positive {
            self.s_xi_plus
        } else {
            self.s_xi_minus
        }
    }

    pub fn s_eta(&self, positive: bool) -> Complex64 {
        if positive {
            self.s_eta_plus
        } else {
            self.s_eta_minus
        }
    }
}

pub fn wave_impedance(units: UnitsMode) -> f64 {
    match units {
        UnitsMode::Normalized => 1.0,
        UnitsMode::Si => (MU0_SI / EPS0_SI).sqrt(),
    }
}

pub fn derive_polarization_constants(
    cfg: &GratingConfig,
    wn: &DerivedWavenumbers,
) -> Result<PolarizationConstants> {
    if !(wn.k1 > 0.0) {
        return Err(GratingError::BranchPoint {
            product: cfg.eps_r * cfg.mu_r,
            cos2: wn.cos_theta * wn.cos_theta,
        });
    }
    let er = cfg.eps_r;
    let mr = cfg.mu_r;
    let em = er * mr;
    let cos2 = wn.cos_theta * wn.cos_theta;
    let f = (em - 1.0) * wn.cos_theta / (em - cos2);
    let q = (wn.kr / wn.k1).powi(2);
    let f2 = f * f;
    let d = (1.0 + er * q) * (1.0 + mr * q) - f2;
    if d == 0.0 || !d.is_finite() {
        return Err(GratingError::DegenerateMedium);
    }
    let s_em = (1.0 - er * q) * (1.0 + mr * q) + f2;
    let s_me = (1.0 - mr * q) * (1.0 + er * q) + f2;
    let eta0 = wave_impedance(cfg.units);
    let xi0 = 1.0 / eta0;
    let i = Complex64::i();
    let s_xi_plus = 2.0 * i * xi0 * f;
    let s_eta_plus = -2.0 * i * eta0 * f;
    Ok(PolarizationConstants {
        f,
        d,
        s_em,
        s_me,
        s_xi_plus,
        s_xi_minus: -s_xi_plus,
        s_eta_plus,
        s_eta_minus: -s_eta_plus,
        s0_em: i * (PI / 4.0) * (er - 1.0),
        eta0,
        xi0,
        ratio_sq: q,
    })
}

/// Cylindrical-harmonic amplitude of the incident `E_z`: `sin(theta_i) E0 e^{-i n psi_i}`.
pub fn incident_mode_amplitude(cfg: &GratingConfig, wn: &DerivedWavenumbers, n: i32) -> Complex64 {
    wn.sin_theta * cfg.e0 * Complex64::from_polar(1.0, -(n as f64) * wn.psi_i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cfg(theta: f64, er: f64, mr: f64) -> GratingConfig {
        GratingConfig {
            theta_i: theta,
            eps_r: er,
            mu_r: mr,
            ..GratingConfig::default()
        }
    }

    #[test]
    fn normal_incidence_wavenumbers() {
        let wn = derive_wavenumbers(&cfg(FRAC_PI_2, 2.0, 1.0)).unwrap();
        assert_relative_eq!(wn.k0, 2.0 * PI);
        assert_relative_eq!(wn.kr, 2.0 * PI);
        assert!(wn.kz.abs() < 1e-15);
    }

    #[test]
    fn oblique_wavenumbers() {
        let wn = derive_wavenumbers(&cfg(PI / 3.0, 2.0, 1.0)).unwrap();
        assert_relative_eq!(wn.kr, 5.441398092702653, max_relative = 1e-14);
        assert_relative_eq!(wn.kz, PI, max_relative = 1e-14);
        assert_relative_eq!(wn.k1, 2.0 * PI * 1.75f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn vacuum_k1_equals_kr() {
        let wn = derive_wavenumbers(&cfg(PI / 4.0, 1.0, 1.0)).unwrap();
        assert_eq!(wn.k1, wn.kr);
        assert_relative_eq!(wn.kr, wn.k0 / 2f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn branch_point_rejected() {
        let err = derive_wavenumbers(&cfg(PI / 6.0, 0.5, 1.0)).unwrap_err();
        assert!(matches!(err, GratingError::BranchPoint { .. }));
    }

    #[test]
    fn geometry_rejected() {
        let mut c = cfg(PI / 3.0, 2.0, 1.0);
        c.a = 0.06;
        c.d = 0.1;
        assert!(matches!(c.validate(), Err(GratingError::InvalidConfig(_))));
        let mut c = cfg(0.0, 2.0, 1.0);
        c.theta_i = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn polarization_normal_incidence_decouples() {
        let c = cfg(FRAC_PI_2, 3.0, 1.7);
        let wn = derive_wavenumbers(&c).unwrap();
        let p = derive_polarization_constants(&c, &wn).unwrap();
        assert!(p.f.abs() < 1e-15);
        assert!(p.s_xi_plus.norm() < 1e-15 && p.s_eta_minus.norm() < 1e-15);
    }

    #[test]
    fn polarization_vacuum() {
        let c = cfg(PI / 5.0, 1.0, 1.0);
        let wn = derive_wavenumbers(&c).unwrap();
        let p = derive_polarization_constants(&c, &wn).unwrap();
        assert_eq!(p.f, 0.0);
        assert_eq!(p.s_em, 0.0);
        assert_eq!(p.s_me, 0.0);
        assert_relative_eq!(p.d, 4.0, max_relative = 1e-15);
    }

    #[test]
    fn coupling_constant_value() {
        let c = cfg(PI / 3.0, 2.0, 1.0);
        let wn = derive_wavenumbers(&c).unwrap();
        let p = derive_polarization_constants(&c, &wn).unwrap();
        assert_relative_eq!(p.f, 2.0 / 7.0, max_relative = 1e-14);
        assert_relative_eq!(p.s0_em.im, PI / 4.0, max_relative = 1e-15);
    }

    #[test]
    fn si_units_set_impedance() {
        let mut c = cfg(PI / 3.0, 2.0, 1.0);
        c.units = UnitsMode::Si;
        let wn = derive_wavenumbers(&c).unwrap();
        let p = derive_polarization_constants(&c, &wn).unwrap();
        assert_relative_eq!(p.eta0, 376.730313668, max_relative = 1e-9);
        assert_relative_eq!(p.eta0 * p.xi0, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn incident_amplitudes() {
        let mut c = cfg(PI / 3.0, 2.0, 1.0);
        c.phi_i = 0.4;
        c.e0 = 1.5;
        let wn = derive_wavenumbers(&c).unwrap();
        let e0 = incident_mode_amplitude(&c, &wn, 0);
        assert_relative_eq!(e0.re, wn.sin_theta * 1.5);
        assert_eq!(e0.im, 0.0);
        for n in 1..6 {
            let p = incident_mode_amplitude(&c, &wn, n);
            let m = incident_mode_amplitude(&c, &wn, -n);
            assert_relative_eq!(p.norm(), 1.5 * wn.sin_theta, max_relative = 1e-15);
            assert_relative_eq!(m.re, p.re, max_relative = 1e-14);
            assert_relative_eq!(m.im, -p.im, max_relative = 1e-14);
        }
    }

    proptest! {
        #[test]
        fn wavenumber_closure(
            lambda in 0.1f64..10.0,
            theta in 0.05f64..FRAC_PI_2,
            er in 1.0f64..12.0,
            mr in 1.0f64..4.0,
        ) {
            let c = GratingConfig { lambda0: lambda, theta_i: theta, eps_r: er, mu_r: mr, ..GratingConfig::default() };
            let wn = derive_wavenumbers(&c).unwrap();
            let lhs = wn.kr * wn.kr + wn.kz * wn.kz;
            prop_assert!((lhs / (wn.k0 * wn.k0) - 1.0).abs() < 1e-14);
            prop_assert!(wn.k1 > 0.0);
            let p = derive_polarization_constants(&c, &wn).unwrap();
            prop_assert_eq!(p.s_eta_plus + p.s_eta_minus, Complex64::new(0.0, 0.0));
            prop_assert_eq!(p.s_xi_plus + p.s_xi_minus, Complex64::new(0.0, 0.0));
            prop_assert!(p.d > 0.0);
        }

        #[test]
        fn coupling_vanishes_on_unit_index_surface(theta in 0.05f64..FRAC_PI_2, er in 0.5f64..4.0) {
            let c = GratingConfig { theta_i: theta, eps_r: er, mu_r: 1.0 / er, ..GratingConfig::default() };
            let wn = derive_wavenumbers(&c).unwrap();
            let p = derive_polarization_constants(&c, &wn).unwrap();
            prop_assert!(p.f.abs() < 1e-12);
        }
    }
}
