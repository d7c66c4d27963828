//! Oblique-incidence Schlömilch series
//!
//! ```text
//! I_n(2 pi Delta) = sum_{p>=1} H_n(2 pi p Delta) [ (-1)^n e^{i p beta} + e^{-i p beta} ],
//! beta = 2 pi Delta sin(psi_i)
//! ```
//!
//! The terms decay like `p^{-1/2}` and carry the two phases
//! `z_± = e^{i 2 pi Delta (1 ± sin psi_i)}`, so the raw partial sums converge
//! only conditionally. Partial sums are sampled every `q` terms, with `q`
//! chosen so that both `z_±^q` sit far from 1, and the sampled sequence is
//! extrapolated with Wynn's epsilon algorithm.
//!
//! The small-spacing leading terms `h_n` live here too.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GratingError, Result};
use crate::medium::DerivedWavenumbers;
use crate::special::{bernoulli_poly_at_zero, hankel1};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeOptions {
    /// Accepted change between successive extrapolations, relative to `max(1, |I_n|)`.
    pub tol: f64,
    pub anomaly_threshold: f64,
    pub max_terms: usize,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            anomaly_threshold: 1e-3,
            max_terms: 100_000,
        }
    }
}

/// One evaluated series with its convergence metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSum {
    pub value: Complex64,
    pub terms_used: usize,
    /// Difference between the extrapolated value and the last raw partial sum.
    pub est_tail: f64,
    /// Spread of the last accepted extrapolations.
    pub est_error: f64,
}

/// Distance of `Delta (1 ± sin psi_i)` to the nearest positive integer, or
/// `1 - |sin psi_i|` when that is smaller (grazing in-plane incidence, where
/// the zeroth order itself grazes the grating). Small `Delta` alone is the
/// long-wavelength regime, not an anomaly.
pub fn anomaly_margin(wn: &DerivedWavenumbers) -> f64 {
    let s = wn.sin_psi;
    [1.0 + s, 1.0 - s]
        .iter()
        .map(|f| {
            let v = wn.delta * f;
            (v - v.round().max(1.0)).abs()
        })
        .fold(1.0 - s.abs(), f64::min)
}

pub fn check_anomaly(wn: &DerivedWavenumbers, threshold: f64) -> Result<f64> {
    let margin = anomaly_margin(wn);
    if margin <= threshold {
        Err(GratingError::Anomaly { margin, threshold })
    } else {
        Ok(margin)
    }
}

/// Sampling stride maximizing `min_± |1 - z_±^q|`; the smallest stride within
/// 10% of the best is taken.
fn sampling_stride(delta: f64, sin_psi: f64, cap: usize) -> usize {
    let score = |q: usize| {
        [1.0 + sin_psi, 1.0 - sin_psi]
            .iter()
            .map(|f| {
                let phase = 2.0 * PI * q as f64 * delta * f;
                (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, phase)).norm()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let q_max = ((2.0 / delta).ceil() as usize).clamp(1, cap.max(1));
    let scores: Vec<f64> = (1..=q_max).map(score).collect();
    let best = scores.iter().cloned().fold(0.0, f64::max);
    scores
        .iter()
        .position(|&s| s >= 0.9 * best)
        .map(|i| i + 1)
        .unwrap_or(1)
}

/// Wynn epsilon algorithm; returns the last entry of the highest even column
/// reached before a breakdown.
pub(crate) fn wynn_epsilon(seq: &[Complex64]) -> Complex64 {
    let Some(&last) = seq.last() else {
        return Complex64::new(0.0, 0.0);
    };
    let mut best = last;
    let mut prev = vec![Complex64::new(0.0, 0.0); seq.len() + 1];
    let mut cur = seq.to_vec();
    let mut column = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for j in 0..cur.len() - 1 {
            let diff = cur[j + 1] - cur[j];
            if diff.norm() == 0.0 {
                return best;
            }
            let v = prev[j + 1] + diff.inv();
            if !(v.re.is_finite() && v.im.is_finite()) {
                return best;
            }
            next.push(v);
        }
        prev = cur;
        cur = next;
        column += 1;
        if column % 2 == 0 {
            best = *cur.last().expect("non-empty column");
        }
    }
    best
}

const WYNN_WINDOW: usize = 24;
const MIN_SAMPLES: usize = 8;

fn series_term(n: i32, p: usize, delta: f64, beta: f64) -> Result<Complex64> {
    let pf = p as f64;
    let h = hankel1(n, 2.0 * PI * pf * delta)?;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let fwd = Complex64::from_polar(1.0, pf * beta);
    Ok(h * (sign * fwd + fwd.conj()))
}

/// `I_n(k_r d)` by sampled, epsilon-extrapolated partial sums.
pub fn schlomilch_in(wn: &DerivedWavenumbers, n: i32, opts: &LatticeOptions) -> Result<LatticeSum> {
    check_anomaly(wn, opts.anomaly_threshold)?;
    let sin_psi = wn.sin_psi;
    let beta = 2.0 * PI * wn.delta * sin_psi;
    let stride = sampling_stride(wn.delta, sin_psi, opts.max_terms / (4 * MIN_SAMPLES));

    let mut partial = Complex64::new(0.0, 0.0);
    let mut samples: Vec<Complex64> = Vec::new();
    let mut estimates: Vec<Complex64> = Vec::new();
    for p in 1..=opts.max_terms {
        partial += series_term(n, p, wn.delta, beta)?;
        if !(partial.re.is_finite() && partial.im.is_finite()) {
            return Err(GratingError::NoConvergence(format!(
                "lattice sum I_{n} overflowed at term {p}"
            )));
        }
        if p % stride != 0 {
            continue;
        }
        samples.push(partial);
        let start = samples.len().saturating_sub(WYNN_WINDOW);
        estimates.push(wynn_epsilon(&samples[start..]));
        let k = estimates.len();
        if k < MIN_SAMPLES {
            continue;
        }
        let e = estimates[k - 1];
        let scale = e.norm().max(1.0);
        let d1 = (e - estimates[k - 2]).norm();
        let d2 = (estimates[k - 2] - estimates[k - 3]).norm();
        if d1 <= opts.tol * scale && d2 <= opts.tol * scale {
            return Ok(LatticeSum {
                value: e,
                terms_used: p,
                est_tail: (e - partial).norm(),
                est_error: d1.max(d2),
            });
        }
    }
    Err(GratingError::NoConvergence(format!(
        "lattice sum I_{n} did not reach tol {:.1e} within {} terms (Delta = {}, stride {stride})",
        opts.tol, opts.max_terms, wn.delta
    )))
}

/// `I_n` for all `n` in `[-max_index, max_index]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSumTable {
    pub max_index: usize,
    pub values: Vec<Complex64>,
    pub terms_used: Vec<usize>,
    pub est_tail: Vec<f64>,
    pub anomaly_margin: f64,
}

impl LatticeSumTable {
    pub fn compute(wn: &DerivedWavenumbers, max_index: usize, opts: &LatticeOptions) -> Result<Self> {
        let anomaly_margin = check_anomaly(wn, opts.anomaly_threshold)?;
        let m = max_index as i32;
        let sums: Vec<LatticeSum> = (-m..=m)
            .into_par_iter()
            .map(|n| schlomilch_in(wn, n, opts))
            .collect::<Result<_>>()?;
        Ok(Self {
            max_index,
            values: sums.iter().map(|s| s.value).collect(),
            terms_used: sums.iter().map(|s| s.terms_used).collect(),
            est_tail: sums.iter().map(|s| s.est_tail).collect(),
            anomaly_margin,
        })
    }

    /// Table with every sum set to zero; useful for the isolated-cylinder limit.
    pub fn zeros(max_index: usize) -> Self {
        let len = 2 * max_index + 1;
        Self {
            max_index,
            values: vec![Complex64::new(0.0, 0.0); len],
            terms_used: vec![0; len],
            est_tail: vec![0.0; len],
            anomaly_margin: f64::INFINITY,
        }
    }

    pub fn covers(&self, n: i32) -> bool {
        n.unsigned_abs() as usize <= self.max_index
    }

    pub fn get(&self, n: i32) -> Complex64 {
        assert!(self.covers(n), "lattice index {n} outside table");
        self.values[(n + self.max_index as i32) as usize]
    }
}

/// `(sin phi_0, cos phi_0)`: `sin phi_0 = sin psi_i`, `cos phi_0 >= 0`.
pub fn phi_zero(wn: &DerivedWavenumbers) -> (f64, f64) {
    let s = wn.sin_psi;
    (s, (1.0 - s * s).max(0.0).sqrt())
}

/// `h_n` from the Bernoulli-number forms valid for `n >= 2`:
/// `h_2k = (i/k)(-1)^k 2^{4k-1} pi^{2k-1} B_2k(0)`, `h_{2k+1} = -4 i k h_2k sin phi_0`.
pub fn leading_h_bernoulli(n: u32, sin_phi0: f64) -> Result<Complex64> {
    if n < 2 {
        return Err(GratingError::Domain(format!(
            "Bernoulli form of h_n needs n >= 2, got {n}"
        )));
    }
    let k = n / 2;
    let kf = k as f64;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let b = bernoulli_poly_at_zero(2 * k)?;
    let magnitude = sign * 2f64.powi(4 * k as i32 - 1) * PI.powi(2 * k as i32 - 1) * b / kf;
    let even = Complex64::new(0.0, magnitude);
    if n % 2 == 0 {
        Ok(even)
    } else {
        Ok(Complex64::new(0.0, -4.0 * kf) * even * sin_phi0)
    }
}

/// Leading small-spacing coefficient `h_n`, `n >= 0`; explicit forms through
/// `n = 5`, the Bernoulli forms beyond.
pub fn leading_h(n: u32, wn: &DerivedWavenumbers) -> Result<Complex64> {
    let (s, c) = phi_zero(wn);
    leading_h_with(n, s, c)
}

pub fn leading_h_with(n: u32, sin_phi0: f64, cos_phi0: f64) -> Result<Complex64> {
    let pi3 = PI.powi(3);
    Ok(match n {
        0 => Complex64::new(2.0 / cos_phi0, 0.0),
        1 => Complex64::new(0.0, -2.0 * sin_phi0 / cos_phi0),
        2 => Complex64::new(0.0, -4.0 * PI / 3.0),
        3 => Complex64::new(-16.0 * PI * sin_phi0 / 3.0, 0.0),
        4 => Complex64::new(0.0, -32.0 * pi3 / 15.0),
        5 => Complex64::new(-256.0 * pi3 * sin_phi0 / 15.0, 0.0),
        _ => leading_h_bernoulli(n, sin_phi0)?,
    })
}

/// Power of `k_r d` in `I_n ~ h_n / (k_r d)^e`.
pub fn leading_exponent(n: u32) -> i32 {
    if n < 2 {
        1
    } else {
        2 * (n / 2) as i32
    }
}

/// `(k_r d)^e I_n / h_n`; `ratio` is `None` when `h_n` vanishes (odd `n` with `sin psi_i = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadingOrderRatio {
    pub n: u32,
    pub kr_d: f64,
    pub lattice: Complex64,
    pub h: Complex64,
    pub ratio: Option<Complex64>,
}

pub fn verify_leading_order(
    wn: &DerivedWavenumbers,
    n: u32,
    opts: &LatticeOptions,
) -> Result<LeadingOrderRatio> {
    let sum = schlomilch_in(wn, n as i32, opts)?;
    let h = leading_h(n, wn)?;
    let kd = wn.kr_d();
    let ratio = if h.norm() == 0.0 {
        None
    } else {
        Some(sum.value * kd.powi(leading_exponent(n)) / h)
    };
    Ok(LeadingOrderRatio {
        n,
        kr_d: kd,
        lattice: sum.value,
        h,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{derive_wavenumbers, GratingConfig};
    use approx::assert_relative_eq;

    /// Wavenumbers for a given `k_r d` and `psi_i` (normal obliquity, unit wavelength).
    pub(crate) fn wn_for(kr_d: f64, psi_deg: f64) -> DerivedWavenumbers {
        let cfg = GratingConfig {
            lambda0: 1.0,
            theta_i: std::f64::consts::FRAC_PI_2,
            phi_i: psi_deg.to_radians() - PI,
            eps_r: 2.0,
            d: kr_d / (2.0 * PI),
            a: 0.1 * kr_d / (2.0 * PI),
            ..GratingConfig::default()
        };
        derive_wavenumbers(&cfg).unwrap()
    }

    #[test]
    fn wynn_sums_geometric_series_exactly() {
        let z = Complex64::from_polar(0.9, 2.0);
        let mut s = Complex64::new(0.0, 0.0);
        let mut seq = Vec::new();
        let mut t = Complex64::new(1.0, 0.0);
        for _ in 0..5 {
            s += t;
            seq.push(s);
            t *= z;
        }
        let exact = 1.0 / (1.0 - z);
        assert!((wynn_epsilon(&seq) - exact).norm() < 1e-13);
        assert_eq!(wynn_epsilon(&[]), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn stride_keeps_phases_apart() {
        let delta = 0.05 / (2.0 * PI);
        let q = sampling_stride(delta, 0.0, 10_000);
        // |1 - z^q| = 2 |sin(pi q Delta)| within 10% of its maximum 2
        assert!((PI * q as f64 * delta).sin().abs() >= 0.9, "q = {q}");
        assert_eq!(sampling_stride(0.45, 0.0, 100), 1);
    }

    #[test]
    fn odd_sums_vanish_without_in_plane_phase() {
        let wn = wn_for(1.3, 360.0);
        for n in [1, 3, -5] {
            let s = schlomilch_in(&wn, n, &LatticeOptions::default()).unwrap();
            assert!(s.value.norm() < 1e-9, "I_{n} = {}", s.value);
        }
    }

    #[test]
    fn index_reflection_matches_phase_reflection() {
        let opts = LatticeOptions { tol: 1e-11, ..Default::default() };
        let wp = wn_for(1.7, 200.0);
        let wm = wn_for(1.7, 160.0);
        for n in 0..4 {
            let a = schlomilch_in(&wp, -n, &opts).unwrap().value;
            let b = schlomilch_in(&wm, n, &opts).unwrap().value;
            assert!((a - b).norm() < 1e-9 * a.norm().max(1.0));
        }
    }

    #[test]
    fn anomaly_is_rejected() {
        let wn = DerivedWavenumbers { delta: 1.0 + 1e-4, ..wn_for(PI, 180.0) };
        let err = schlomilch_in(&wn, 0, &LatticeOptions::default()).unwrap_err();
        assert!(matches!(err, GratingError::Anomaly { .. }));
        assert!(anomaly_margin(&wn) < 1e-3);
    }

    #[test]
    fn two_depths_agree() {
        let wn = wn_for(0.4, 210.0);
        let loose = schlomilch_in(&wn, 2, &LatticeOptions { tol: 1e-8, ..Default::default() }).unwrap();
        let tight = schlomilch_in(&wn, 2, &LatticeOptions { tol: 1e-12, ..Default::default() }).unwrap();
        assert!(tight.terms_used >= loose.terms_used);
        assert!((loose.value - tight.value).norm() <= 2e-8 * tight.value.norm().max(1.0));
    }

    #[test]
    fn explicit_h_values() {
        let h2 = leading_h_with(2, 0.0, 1.0).unwrap();
        assert_relative_eq!(h2.im, -4.0 * PI / 3.0, max_relative = 1e-15);
        let h4 = leading_h_with(4, 0.0, 1.0).unwrap();
        assert_relative_eq!(h4.im, -32.0 * PI.powi(3) / 15.0, max_relative = 1e-15);
        let s = 0.37;
        let h3 = leading_h_with(3, s, (1.0 - s * s).sqrt()).unwrap();
        assert_relative_eq!(h3.re, -16.0 * PI * s / 3.0, max_relative = 1e-15);
        assert_eq!(h3.im, 0.0);
        let h0 = leading_h_with(0, 0.6, 0.8).unwrap();
        assert_relative_eq!(h0.re, 2.5);
        let h1 = leading_h_with(1, 0.6, 0.8).unwrap();
        assert_relative_eq!(h1.im, -1.5);
    }

    #[test]
    fn bernoulli_forms_reproduce_explicit_terms() {
        let s: f64 = -0.42;
        let c = (1.0 - s * s).sqrt();
        for n in 2..=5 {
            let a = leading_h_bernoulli(n, s).unwrap();
            let b = leading_h_with(n, s, c).unwrap();
            assert!((a - b).norm() <= 1e-14 * b.norm(), "n={n}: {a} vs {b}");
        }
        // h_3 = -4 i h_2 sin phi_0
        let h2 = leading_h_with(2, s, c).unwrap();
        let h3 = leading_h_with(3, s, c).unwrap();
        assert!((Complex64::new(0.0, -4.0) * h2 * s - h3).norm() <= 1e-14 * h3.norm());
        assert!(leading_h_bernoulli(1, s).is_err());
    }

    #[test]
    fn leading_order_ratio_for_quadrupole_sum() {
        let wn = wn_for(0.05, 180.0);
        let r = verify_leading_order(&wn, 2, &LatticeOptions::default()).unwrap();
        assert!((r.ratio.unwrap() - 1.0).norm() < 0.05);
        let r1 = verify_leading_order(&wn, 1, &LatticeOptions::default()).unwrap();
        assert!(r1.ratio.is_none());
    }

    #[test]
    fn leading_order_ratios_improve_with_spacing() {
        for n in [0u32, 2, 4] {
            let dev: Vec<f64> = [0.2, 0.06, 0.02]
                .iter()
                .map(|&kd| {
                    let r = verify_leading_order(&wn_for(kd, 180.0), n, &LatticeOptions::default()).unwrap();
                    (r.ratio.unwrap() - 1.0).norm()
                })
                .collect();
            assert!(dev[0] > dev[1] && dev[1] > dev[2], "n={n}: {dev:?}");
        }
    }

    #[test]
    fn odd_leading_terms_follow_in_plane_phase() {
        for psi in [200.0, 210.0, 160.0] {
            let wn = wn_for(0.01, psi);
            for n in [1u32, 3] {
                let r = verify_leading_order(&wn, n, &LatticeOptions::default()).unwrap();
                assert!((r.ratio.unwrap() - 1.0).norm() < 0.01, "psi {psi} n {n}");
            }
        }
    }
}
