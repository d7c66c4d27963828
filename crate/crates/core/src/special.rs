//! Bessel and Hankel functions of integer order for real positive arguments,
//! plus Bernoulli numbers.
//!
//! Evaluation strategy:
//!
//! * `x <= 2`: ascending power series for `J_n`, `Y_0`, `Y_1`.
//! * `2 < x`: Miller backward recurrence for `J_n`, normalized either by
//!   `J_0 + 2 sum J_2k = 1` or (for `x >= 25`) by the Hankel expansion of `J_0`/`J_1`.
//!   `Y_0`, `Y_1` come from the Neumann series in the same `J_2k`, `J_2k+1`.
//! * `Y_n` by forward recurrence, which is stable.
//! * A single order far in the oscillatory region (`x >= 25 + n^2/2`) uses the
//!   Hankel asymptotic expansion directly; the lattice sums rely on this for
//!   arguments up to ~1e7.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{GratingError, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 2.0;
const HANKEL_LIMIT: f64 = 25.0;
const RESCALE_AT: f64 = 1e250;

/// Which function family a derivative is taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselKind {
    J,
    H1,
}

/// All first-kind/second-kind values and derivatives at one `(n, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval {
    pub order: i32,
    pub argument: f64,
    pub j: f64,
    pub y: f64,
    pub jp: f64,
    pub yp: f64,
}

impl BesselEval {
    pub fn new(order: i32, argument: f64) -> Result<Self> {
        check_positive(argument)?;
        let (j, y, jp, yp) = jy_with_derivative(order, argument);
        Ok(Self {
            order,
            argument,
            j,
            y,
            jp,
            yp,
        })
    }

    pub fn hankel1(&self) -> Complex64 {
        Complex64::new(self.j, self.y)
    }

    pub fn hankel1_deriv(&self) -> Complex64 {
        Complex64::new(self.jp, self.yp)
    }

    /// `J Y' - J' Y`, which should equal `2 / (pi x)`.
    pub fn wronskian(&self) -> f64 {
        self.j * self.yp - self.jp * self.y
    }
}

fn check_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(GratingError::Domain(format!("non-finite Bessel argument {x}")))
    }
}

fn check_positive(x: f64) -> Result<()> {
    check_finite(x)?;
    if x > 0.0 {
        Ok(())
    } else {
        Err(GratingError::Domain(format!(
            "Bessel argument must be positive, got {x}"
        )))
    }
}

fn parity(n: i32) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `J_n(x)` for `x >= 0`.
pub fn bessel_j(n: i32, x: f64) -> Result<f64> {
    check_finite(x)?;
    if x < 0.0 {
        return Err(GratingError::Domain(format!(
            "negative Bessel argument {x}"
        )));
    }
    if x == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    Ok(jy(n, x).0)
}

/// `Y_n(x)` for `x > 0`.
pub fn bessel_y(n: i32, x: f64) -> Result<f64> {
    check_positive(x)?;
    Ok(jy(n, x).1)
}

/// `H_n^(1)(x) = J_n(x) + i Y_n(x)` for `x > 0`.
pub fn hankel1(n: i32, x: f64) -> Result<Complex64> {
    check_positive(x)?;
    let (j, y) = jy(n, x);
    Ok(Complex64::new(j, y))
}

/// First derivative with respect to the argument, `f'_n = (f_{n-1} - f_{n+1}) / 2`.
/// For `BesselKind::J` the imaginary part is zero.
pub fn bessel_deriv(kind: BesselKind, n: i32, x: f64) -> Result<Complex64> {
    check_positive(x)?;
    let (_, _, jp, yp) = jy_with_derivative(n, x);
    Ok(match kind {
        BesselKind::J => Complex64::new(jp, 0.0),
        BesselKind::H1 => Complex64::new(jp, yp),
    })
}

/// Unchecked `(J_n(x), Y_n(x))` for `x > 0`.
pub(crate) fn jy(n: i32, x: f64) -> (f64, f64) {
    let m = n.unsigned_abs() as usize;
    let sign = parity(n.min(0).abs());
    let (j, y) = if uses_hankel_expansion(m, x) {
        let h = hankel_expansion(m, x);
        (h.re, h.im)
    } else {
        let (js, ys) = jy_orders(m, x);
        (js[m], ys[m])
    };
    (sign * j, sign * y)
}

/// `(J_n, Y_n, J'_n, Y'_n)` at `x > 0`.
pub(crate) fn jy_with_derivative(n: i32, x: f64) -> (f64, f64, f64, f64) {
    let (jm, ym) = jy(n - 1, x);
    let (j, y) = jy(n, x);
    let (jn, yn) = jy(n + 1, x);
    (j, y, 0.5 * (jm - jn), 0.5 * (ym - yn))
}

fn uses_hankel_expansion(m: usize, x: f64) -> bool {
    let mf = m as f64;
    x >= HANKEL_LIMIT + 0.5 * mf * mf
}

/// `e^{-i k pi/4}` from the residue of `k` mod 8, exact to rounding.
fn eighth_turn(k: i64) -> Complex64 {
    let r = FRAC_1_SQRT_2;
    match k.rem_euclid(8) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(r, -r),
        2 => Complex64::new(0.0, -1.0),
        3 => Complex64::new(-r, -r),
        4 => Complex64::new(-1.0, 0.0),
        5 => Complex64::new(-r, r),
        6 => Complex64::new(0.0, 1.0),
        _ => Complex64::new(r, r),
    }
}

/// Large-argument expansion
/// `H_m(x) = sqrt(2/(pi x)) e^{i(x - m pi/2 - pi/4)} sum_k i^k a_k(m) / x^k`.
fn hankel_expansion(m: usize, x: f64) -> Complex64 {
    let mu = 4.0 * (m as f64) * (m as f64);
    let i_over_x = Complex64::new(0.0, 1.0 / x);
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term = term * i_over_x * ((mu - odd * odd) / (8.0 * k as f64));
        let size = term.norm();
        if size > last {
            break;
        }
        sum += term;
        if size <= 1e-17 * sum.norm() {
            break;
        }
        last = size;
    }
    let phase = Complex64::new(x.cos(), x.sin()) * eighth_turn(2 * m as i64 + 1);
    phase * sum * (2.0 / (PI * x)).sqrt()
}

/// `J_k(x)` and `Y_k(x)` for `k = 0..=nmax`, `x > 0`.
pub(crate) fn jy_orders(nmax: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let (js, y0, y1) = if x <= SERIES_LIMIT {
        series_block(nmax, x)
    } else {
        miller_block(nmax, x)
    };
    let mut ys = Vec::with_capacity(nmax + 1);
    ys.push(y0);
    if nmax >= 1 {
        ys.push(y1);
    }
    for k in 1..nmax {
        let next = (2.0 * k as f64 / x) * ys[k] - ys[k - 1];
        ys.push(next);
    }
    (js, ys)
}

fn series_block(nmax: usize, x: f64) -> (Vec<f64>, f64, f64) {
    let half = 0.5 * x;
    let q = -0.25 * x * x;
    let mut js = Vec::with_capacity(nmax + 1);
    // (x/2)^k / k!
    let mut lead = 1.0;
    for k in 0..=nmax {
        if k > 0 {
            lead *= half / k as f64;
        }
        let mut term = 1.0;
        let mut sum = 1.0;
        for i in 1..60 {
            term *= q / (i as f64 * (k + i) as f64);
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        js.push(lead * sum);
    }
    let (j0, j1) = if nmax >= 1 {
        (js[0], js[1])
    } else {
        (js[0], series_j1(x))
    };

    let log_term = (half.ln() + EULER_GAMMA) * 2.0 / PI;
    // Y_0 = (2/pi)(ln(x/2)+gamma) J_0 + (2/pi) sum (-1)^{k+1} H_k (x^2/4)^k / (k!)^2
    let mut y0_sum = 0.0;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    for k in 1..60 {
        term *= -q / (k as f64 * k as f64);
        harmonic += 1.0 / k as f64;
        let contrib = if k % 2 == 1 { 1.0 } else { -1.0 } * harmonic * term;
        y0_sum += contrib;
        if contrib.abs() <= 1e-18 * y0_sum.abs() {
            break;
        }
    }
    let y0 = log_term * j0 + 2.0 / PI * y0_sum;

    // Y_1 = -2/(pi x) + (2/pi) ln(x/2) J_1
    //       - (1/pi)(x/2) sum [psi(k+1) + psi(k+2)] (-x^2/4)^k / (k!(k+1)!)
    let mut y1_sum = 0.0;
    let mut term = 1.0;
    let mut h_k = 0.0;
    for k in 0..60 {
        if k > 0 {
            term *= q / (k as f64 * (k + 1) as f64);
            h_k += 1.0 / k as f64;
        }
        let h_k1 = h_k + 1.0 / (k + 1) as f64;
        let digamma_sum = -2.0 * EULER_GAMMA + h_k + h_k1;
        let contrib = digamma_sum * term;
        y1_sum += contrib;
        if k > 2 && contrib.abs() <= 1e-18 * y1_sum.abs() {
            break;
        }
    }
    let y1 = -2.0 / (PI * x) + 2.0 / PI * half.ln() * j1 - half / PI * y1_sum;
    (js, y0, y1)
}

fn series_j1(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for i in 1..60 {
        term *= q / (i as f64 * (i + 1) as f64);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    0.5 * x * sum
}

fn miller_block(nmax: usize, x: f64) -> (Vec<f64>, f64, f64) {
    let top = (nmax as f64).max(x);
    let mut start = (top + 30.0 + 8.0 * x.cbrt()).ceil() as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let keep = nmax.max(1);
    let mut js = vec![0.0; keep + 1];

    let mut above = 0.0;
    let mut current = 1e-30;
    // J_0 + 2 sum J_2k
    let mut norm = 0.0;
    // sum_{k>=1} (-1)^k J_2k / k
    let mut y0_acc = 0.0;
    // sum_{j>=1} (-1)^j (2j+1)/(j(j+1)) J_{2j+1}
    let mut y1_acc = 0.0;

    let mut k = start;
    loop {
        if k <= keep {
            js[k] = current;
        }
        if k % 2 == 0 {
            if k == 0 {
                norm += current;
            } else {
                norm += 2.0 * current;
                let half = (k / 2) as f64;
                let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
                y0_acc += sign * current / half;
            }
        } else if k >= 3 {
            let j = ((k - 1) / 2) as f64;
            let sign = if ((k - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            y1_acc += sign * (2.0 * j + 1.0) / (j * (j + 1.0)) * current;
        }
        if k == 0 {
            break;
        }
        let below = (2.0 * k as f64 / x) * current - above;
        above = current;
        current = below;
        k -= 1;
        if current.abs() > RESCALE_AT {
            let s = 1.0 / RESCALE_AT;
            current *= s;
            above *= s;
            norm *= s;
            y0_acc *= s;
            y1_acc *= s;
            for v in js.iter_mut() {
                *v *= s;
            }
        }
    }

    let scale = if x < HANKEL_LIMIT {
        1.0 / norm
    } else {
        let h0 = hankel_expansion(0, x).re;
        let h1 = hankel_expansion(1, x).re;
        if h0.abs() >= h1.abs() {
            h0 / js[0]
        } else {
            h1 / js[1]
        }
    };
    for v in js.iter_mut() {
        *v *= scale;
    }
    let j0 = js[0];
    let j1 = js[1];
    let (y0, y1) = if x < HANKEL_LIMIT {
        let log_term = (0.5 * x).ln() + EULER_GAMMA;
        let y0 = 2.0 / PI * log_term * j0 - 4.0 / PI * y0_acc * scale;
        let y1 = 2.0 / PI * ((log_term - 1.0) * j1 - j0 / x - y1_acc * scale);
        (y0, y1)
    } else {
        (hankel_expansion(0, x).im, hankel_expansion(1, x).im)
    };
    js.truncate(nmax + 1);
    (js, y0, y1)
}

/// Values of `J`, `Y` and their derivatives for every order `|n| <= max_order`
/// at one argument. Used to build coefficient tables without recomputing the
/// recurrences per order.
#[derive(Debug, Clone)]
pub struct BesselTable {
    max_order: usize,
    argument: f64,
    j: Vec<f64>,
    y: Vec<f64>,
}

impl BesselTable {
    pub fn new(max_order: usize, argument: f64) -> Result<Self> {
        check_positive(argument)?;
        let (j, y) = jy_orders(max_order + 1, argument);
        Ok(Self {
            max_order,
            argument,
            j,
            y,
        })
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn argument(&self) -> f64 {
        self.argument
    }

    fn raw(&self, n: i32) -> (f64, f64) {
        let m = n.unsigned_abs() as usize;
        assert!(
            m <= self.max_order + 1,
            "order {n} outside Bessel table range"
        );
        let s = parity(n.min(0).abs());
        (s * self.j[m], s * self.y[m])
    }

    pub fn j(&self, n: i32) -> f64 {
        self.raw(n).0
    }

    pub fn y(&self, n: i32) -> f64 {
        self.raw(n).1
    }

    pub fn h1(&self, n: i32) -> Complex64 {
        let (j, y) = self.raw(n);
        Complex64::new(j, y)
    }

    pub fn jp(&self, n: i32) -> f64 {
        0.5 * (self.j(n - 1) - self.j(n + 1))
    }

    pub fn h1p(&self, n: i32) -> Complex64 {
        0.5 * (self.h1(n - 1) - self.h1(n + 1))
    }
}

pub const MAX_BERNOULLI_INDEX: u32 = 30;

/// Classical Bernoulli numbers `B_m = B_m(0)` for `m = 0..=60` (with `B_1 = -1/2`).
fn classical_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // Akiyama–Tanigawa yields B_m with B_1 = +1/2.
        let size = 2 * MAX_BERNOULLI_INDEX as usize + 1;
        let mut work: Vec<BigRational> = Vec::with_capacity(size);
        let mut out = Vec::with_capacity(size);
        for m in 0..size {
            work.push(BigRational::new(BigInt::from(1), BigInt::from(m + 1)));
            for j in (1..=m).rev() {
                let diff = &work[j - 1] - &work[j];
                work[j - 1] = diff * BigRational::from_integer(BigInt::from(j));
            }
            let value = work[0].clone();
            let value = if m == 1 { -value } else { value };
            out.push(if value.is_zero() {
                0.0
            } else {
                value.to_f64().unwrap_or(f64::NAN)
            });
        }
        out
    })
}

/// Value of the Bernoulli polynomial at zero, `B_m(0)`, for `m <= 60`.
pub fn bernoulli_poly_at_zero(m: u32) -> Result<f64> {
    classical_table()
        .get(m as usize)
        .copied()
        .ok_or_else(|| GratingError::Domain(format!("Bernoulli index {m} exceeds 60")))
}

/// Bernoulli number in the positive convention `B_1 = 1/6, B_2 = 1/30, B_3 = 1/42, ...`,
/// i.e. `|B_{2k}|`, related to the polynomial values by `B_{2k}(0) = (-1)^{k-1} B_k`.
pub fn bernoulli_number(k: u32) -> Result<f64> {
    if k > MAX_BERNOULLI_INDEX {
        return Err(GratingError::Domain(format!(
            "Bernoulli index {k} exceeds {MAX_BERNOULLI_INDEX}"
        )));
    }
    Ok(bernoulli_poly_at_zero(2 * k)?.abs())
}
