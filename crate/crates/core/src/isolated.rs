//! Scattering constants of a single dielectric cylinder at oblique incidence.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GratingError, Result};
use crate::medium::{DerivedWavenumbers, GratingConfig, PolarizationConstants};
use crate::special::{hankel1, BesselTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Zeta {
    Eps,
    Mu,
}

impl Zeta {
    fn relative(self, cfg: &GratingConfig) -> f64 {
        match self {
            Zeta::Eps => cfg.eps_r,
            Zeta::Mu => cfg.mu_r,
        }
    }

    /// `sqrt(eps_0 mu_0 / zeta_0^2)`: impedance for `Eps`, admittance for `Mu`.
    fn prefactor(self, pol: &PolarizationConstants) -> f64 {
        match self {
            Zeta::Eps => pol.eta0,
            Zeta::Mu => pol.xi0,
        }
    }
}

/// Bessel data at `k_r a` and `k_1 a` shared by all three constants.
struct Radial {
    outer: BesselTable,
    inner: BesselTable,
    ratio: f64,
}

impl Radial {
    fn new(wn: &DerivedWavenumbers, order: usize) -> Result<Self> {
        Ok(Self {
            outer: BesselTable::new(order, wn.kr_a())?,
            inner: BesselTable::new(order, wn.k1_a())?,
            ratio: wn.kr / wn.k1,
        })
    }

    fn denominator(&self, n: i32, zeta_r: f64) -> Result<Complex64> {
        let den = self.inner.j(n) * self.outer.h1p(n)
            - zeta_r * self.ratio * self.outer.h1(n) * self.inner.jp(n);
        if den.norm() == 0.0 || !den.re.is_finite() || !den.im.is_finite() {
            return Err(GratingError::Resonance { order: n });
        }
        Ok(den)
    }

    fn a_numerator(&self, n: i32, zeta_r: f64) -> f64 {
        self.inner.j(n) * self.outer.jp(n) - zeta_r * self.ratio * self.outer.j(n) * self.inner.jp(n)
    }

    fn b_numerator(&self, n: i32) -> Complex64 {
        self.inner.j(n) * self.outer.h1(n)
    }
}

/// `c_n = J_n(k_r a) / H_n(k_r a)`.
pub fn compute_cn(wn: &DerivedWavenumbers, a: f64, n: i32) -> Result<Complex64> {
    let x = wn.kr * a;
    let h = hankel1(n, x)?;
    Ok(h.re / h)
}

pub fn compute_an(
    wn: &DerivedWavenumbers,
    cfg: &GratingConfig,
    n: i32,
    zeta: Zeta,
) -> Result<Complex64> {
    let r = Radial::new(wn, n.unsigned_abs() as usize)?;
    let zr = zeta.relative(cfg);
    Ok(r.a_numerator(n, zr) / r.denominator(n, zr)?)
}

pub fn compute_bn(
    wn: &DerivedWavenumbers,
    cfg: &GratingConfig,
    pol: &PolarizationConstants,
    n: i32,
    zeta: Zeta,
) -> Result<Complex64> {
    let r = Radial::new(wn, n.unsigned_abs() as usize)?;
    let zr = zeta.relative(cfg);
    let den = r.denominator(n, zr)?;
    Ok(b_from_parts(wn, pol, zeta, n, r.b_numerator(n), den))
}

fn b_from_parts(
    wn: &DerivedWavenumbers,
    pol: &PolarizationConstants,
    zeta: Zeta,
    n: i32,
    numerator: Complex64,
    den: Complex64,
) -> Complex64 {
    let coupling = Complex64::new(0.0, n as f64 * pol.f / wn.kr_a());
    zeta.prefactor(pol) * numerator / den * coupling
}

/// `c_n`, `a_n^zeta`, `b_n^zeta` for `n` in `[-order, order]`, indexed by `n + order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolatedCoefficients {
    pub order: usize,
    pub c: Vec<Complex64>,
    pub a_eps: Vec<Complex64>,
    pub a_mu: Vec<Complex64>,
    pub b_eps: Vec<Complex64>,
    pub b_mu: Vec<Complex64>,
}

impl IsolatedCoefficients {
    pub fn compute(
        cfg: &GratingConfig,
        wn: &DerivedWavenumbers,
        pol: &PolarizationConstants,
        order: usize,
    ) -> Result<Self> {
        let radial = Radial::new(wn, order)?;
        let n_max = order as i32;
        let rows: Vec<[Complex64; 5]> = (-n_max..=n_max)
            .into_par_iter()
            .map(|n| {
                let h = radial.outer.h1(n);
                let c = radial.outer.j(n) / h;
                let den_e = radial.denominator(n, cfg.eps_r)?;
                let den_m = radial.denominator(n, cfg.mu_r)?;
                let a_eps = radial.a_numerator(n, cfg.eps_r) / den_e;
                let a_mu = radial.a_numerator(n, cfg.mu_r) / den_m;
                let num = radial.b_numerator(n);
                let b_eps = b_from_parts(wn, pol, Zeta::Eps, n, num, den_e);
                let b_mu = b_from_parts(wn, pol, Zeta::Mu, n, num, den_m);
                Ok([c, a_eps, a_mu, b_eps, b_mu])
            })
            .collect::<Result<_>>()?;
        let column = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<_>>();
        Ok(Self {
            order,
            c: column(0),
            a_eps: column(1),
            a_mu: column(2),
            b_eps: column(3),
            b_mu: column(4),
        })
    }

    fn index(&self, n: i32) -> usize {
        let idx = n + self.order as i32;
        assert!(
            idx >= 0 && (idx as usize) < self.c.len(),
            "order {n} outside coefficient table"
        );
        idx as usize
    }

    pub fn c(&self, n: i32) -> Complex64 {
        self.c[self.index(n)]
    }

    pub fn a(&self, n: i32, zeta: Zeta) -> Complex64 {
        let i = self.index(n);
        match zeta {
            Zeta::Eps => self.a_eps[i],
            Zeta::Mu => self.a_mu[i],
        }
    }

    pub fn b(&self, n: i32, zeta: Zeta) -> Complex64 {
        let i = self.index(n);
        match zeta {
            Zeta::Eps => self.b_eps[i],
            Zeta::Mu => self.b_mu[i],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{derive_polarization_constants, derive_wavenumbers};
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn setup(
        theta: f64,
        er: f64,
        mr: f64,
        a: f64,
    ) -> (GratingConfig, DerivedWavenumbers, PolarizationConstants) {
        let cfg = GratingConfig {
            theta_i: theta,
            eps_r: er,
            mu_r: mr,
            a,
            d: 4.0 * a,
            ..GratingConfig::default()
        };
        let wn = derive_wavenumbers(&cfg).unwrap();
        let pol = derive_polarization_constants(&cfg, &wn).unwrap();
        (cfg, wn, pol)
    }

    /// Power-series J_n and its derivative, independent of the special module.
    fn series_j(n: i32, x: f64) -> (f64, f64) {
        let m = n.unsigned_abs() as usize;
        let mut j = 0.0;
        let mut jp = 0.0;
        let mut fact_k = 1.0;
        for k in 0..40usize {
            if k > 0 {
                fact_k *= k as f64;
            }
            let fact_mk: f64 = (1..=(m + k)).map(|v| v as f64).product();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let p = (2 * k + m) as i32;
            let c = sign / (fact_k * fact_mk * 2f64.powi(p));
            j += c * x.powi(p);
            if p > 0 {
                jp += c * p as f64 * x.powi(p - 1);
            }
        }
        let s = if n < 0 && m % 2 == 1 { -1.0 } else { 1.0 };
        (s * j, s * jp)
    }

    #[test]
    fn cn_composition() {
        let (_, wn, _) = setup(FRAC_PI_2, 2.0, 1.0, 0.5 / (2.0 * PI));
        assert_relative_eq!(wn.kr_a(), 0.5, max_relative = 1e-15);
        let j = crate::special::bessel_j(0, 0.5).unwrap();
        let y = crate::special::bessel_y(0, 0.5).unwrap();
        let expect = j / Complex64::new(j, y);
        let c = compute_cn(&wn, wn.a, 0).unwrap();
        assert_relative_eq!(c.re, expect.re, max_relative = 1e-15);
        assert_relative_eq!(c.im, expect.im, max_relative = 1e-15);
        for n in 1..5 {
            assert_eq!(compute_cn(&wn, wn.a, n).unwrap(), compute_cn(&wn, wn.a, -n).unwrap());
        }
    }

    #[test]
    fn cn_small_argument_slope() {
        let slope_for = |n: i32| {
            let xs = [1e-3, 1e-2];
            let v: Vec<f64> = xs
                .iter()
                .map(|&x| {
                    let (_, wn, _) = setup(FRAC_PI_2, 2.0, 1.0, x / (2.0 * PI));
                    compute_cn(&wn, wn.a, n).unwrap().norm().ln()
                })
                .collect();
            (v[1] - v[0]) / (xs[1].ln() - xs[0].ln())
        };
        for n in 1..4 {
            let s = slope_for(n);
            assert!((s - 2.0 * n as f64).abs() < 0.05 * 2.0 * n as f64, "n={n} slope {s}");
        }
        // |c_0| ~ pi / (2 |ln x|): decays, only logarithmically
        assert!(slope_for(0) > 0.0);
    }

    #[test]
    fn an_matches_series_oracle() {
        let (cfg, wn, _) = setup(FRAC_PI_2, 2.25, 1.0, 0.05 / (2.0 * PI));
        assert_relative_eq!(wn.kr_a(), 0.05, max_relative = 1e-15);
        let (x, y) = (wn.kr_a(), wn.k1_a());
        let (jx, jpx) = series_j(0, x);
        let (jy, jpy) = series_j(0, y);
        let yx = crate::special::bessel_y(0, x).unwrap();
        let ypx = -crate::special::bessel_y(1, x).unwrap();
        let ratio = wn.kr / wn.k1;
        let num = jy * jpx - 2.25 * ratio * jx * jpy;
        let den = jy * Complex64::new(jpx, ypx) - 2.25 * ratio * Complex64::new(jx, yx) * jpy;
        let expect = num / den;
        let got = compute_an(&wn, &cfg, 0, Zeta::Eps).unwrap();
        assert_relative_eq!(got.re, expect.re, max_relative = 1e-12);
        assert_relative_eq!(got.im, expect.im, max_relative = 1e-12);
        // small-radius limit -i pi/4 (eps-1) (k a)^2
        let lead = Complex64::new(0.0, -PI / 4.0 * 1.25 * 0.0025);
        assert!((got - lead).norm() < 0.05 * lead.norm());
    }

    #[test]
    fn vacuum_constants_vanish() {
        let (cfg, wn, pol) = setup(PI / 4.0, 1.0, 1.0, 0.05);
        let t = IsolatedCoefficients::compute(&cfg, &wn, &pol, 8).unwrap();
        for n in -8..=8 {
            for z in [Zeta::Eps, Zeta::Mu] {
                assert!(t.a(n, z).norm() + t.b(n, z).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn parity_and_table_consistency() {
        let (cfg, wn, pol) = setup(PI / 3.0, 2.25, 1.3, 0.04);
        let t = IsolatedCoefficients::compute(&cfg, &wn, &pol, 6).unwrap();
        for z in [Zeta::Eps, Zeta::Mu] {
            assert_eq!(t.b(0, z), Complex64::new(0.0, 0.0));
            for n in 1..=6 {
                assert_relative_eq!(t.a(-n, z).re, t.a(n, z).re, max_relative = 1e-14);
                assert_relative_eq!(t.a(-n, z).im, t.a(n, z).im, max_relative = 1e-14);
                assert_relative_eq!(t.b(-n, z).re, -t.b(n, z).re, max_relative = 1e-14);
                assert_relative_eq!(t.b(-n, z).im, -t.b(n, z).im, max_relative = 1e-14);
                assert_eq!(t.c(-n), t.c(n));
            }
            for n in -6..=6 {
                let a = compute_an(&wn, &cfg, n, z).unwrap();
                let b = compute_bn(&wn, &cfg, &pol, n, z).unwrap();
                assert_relative_eq!(a.re, t.a(n, z).re, max_relative = 1e-13, epsilon = 1e-300);
                assert_relative_eq!(b.im, t.b(n, z).im, max_relative = 1e-13, epsilon = 1e-300);
            }
        }
    }

    #[test]
    fn normal_incidence_has_no_cross_coupling() {
        let (cfg, wn, pol) = setup(FRAC_PI_2, 4.0, 2.0, 0.05);
        for n in -4..=4 {
            assert_eq!(compute_bn(&wn, &cfg, &pol, n, Zeta::Eps).unwrap().norm(), 0.0);
            assert_eq!(compute_bn(&wn, &cfg, &pol, n, Zeta::Mu).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn small_radius_scaling_of_a_eps() {
        let fit = |n: i32| {
            let xs = [1e-3, 3e-3, 1e-2];
            let pts: Vec<(f64, f64)> = xs
                .iter()
                .map(|&ka| {
                    let theta = PI / 3.0;
                    let a = ka / (2.0 * PI * theta.sin());
                    let (cfg, wn, _) = setup(theta, 2.25, 1.0, a);
                    (ka.ln(), compute_an(&wn, &cfg, n, Zeta::Eps).unwrap().norm().ln())
                })
                .collect();
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            sxy / sxx
        };
        assert!((fit(0) - 2.0).abs() < 0.1);
        for n in 1..=3 {
            let expect = 2.0 * n as f64;
            assert!((fit(n) - expect).abs() < 0.05 * expect);
        }
    }
}
