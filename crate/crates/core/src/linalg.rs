//! Dense complex LU with partial pivoting.
//!
//! The grating system mixes rows whose entries span many decades (the lattice
//! sums grow like `(k_r d)^{-|n|}` while the isolated constants shrink like
//! `(k_r a)^{2|n|}`), so the matrix is equilibrated by powers of two before
//! factorization and the condition estimate refers to the equilibrated matrix.

use num_complex::Complex64;

use crate::error::{GratingError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[row * self.dim + col] = v;
    }

    pub fn add(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[row * self.dim + col] += v;
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Induced 1-norm (max column sum).
    pub fn norm_one(&self) -> f64 {
        (0..self.dim)
            .map(|c| (0..self.dim).map(|r| self.get(r, c).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

fn pow2_scale(max: f64) -> f64 {
    if max == 0.0 || !max.is_finite() {
        1.0
    } else {
        2f64.powi(-(max.log2().round() as i32))
    }
}

/// `P R A C = L U`, with diagonal row/column scalings `R`, `C`.
#[derive(Debug, Clone)]
pub struct LuDecomposition {
    dim: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
}

impl LuDecomposition {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        let n = a.dim;
        let mut lu = a.data.clone();
        let row_scale: Vec<f64> = (0..n)
            .map(|r| pow2_scale(a.row(r).iter().map(|v| v.norm()).fold(0.0, f64::max)))
            .collect();
        for r in 0..n {
            for c in 0..n {
                lu[r * n + c] *= row_scale[r];
            }
        }
        let col_scale: Vec<f64> = (0..n)
            .map(|c| pow2_scale((0..n).map(|r| lu[r * n + c].norm()).fold(0.0, f64::max)))
            .collect();
        for r in 0..n {
            for c in 0..n {
                lu[r * n + c] *= col_scale[c];
            }
        }

        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (pivot_row, pivot_mag) = (k..n)
                .map(|r| (r, lu[r * n + k].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot_mag == 0.0 || !pivot_mag.is_finite() {
                return Err(GratingError::SingularSystem {
                    condition: f64::INFINITY,
                    limit: f64::INFINITY,
                });
            }
            if pivot_row != k {
                for c in 0..n {
                    lu.swap(k * n + c, pivot_row * n + c);
                }
                perm.swap(k, pivot_row);
            }
            let pivot = lu[k * n + k];
            for r in k + 1..n {
                let factor = lu[r * n + k] / pivot;
                lu[r * n + k] = factor;
                if factor.norm() == 0.0 {
                    continue;
                }
                for c in k + 1..n {
                    let u = lu[k * n + c];
                    lu[r * n + c] -= factor * u;
                }
            }
        }
        Ok(Self {
            dim: n,
            lu,
            perm,
            row_scale,
            col_scale,
        })
    }

    /// Solve the equilibrated system `(R A C) y = rhs` (no rescaling).
    fn solve_scaled(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        let mut y: Vec<Complex64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for r in 0..n {
            let mut acc = y[r];
            for c in 0..r {
                acc -= self.lu[r * n + c] * y[c];
            }
            y[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = y[r];
            for c in r + 1..n {
                acc -= self.lu[r * n + c] * y[c];
            }
            y[r] = acc / self.lu[r * n + r];
        }
        y
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(b.len(), self.dim);
        let scaled: Vec<Complex64> = b.iter().zip(&self.row_scale).map(|(v, s)| v * s).collect();
        self.solve_scaled(&scaled)
            .into_iter()
            .zip(&self.col_scale)
            .map(|(v, s)| v * s)
            .collect()
    }

    /// `||B||_1 ||B^{-1}||_1` for the equilibrated matrix `B = R A C`, with the
    /// inverse formed column by column.
    pub fn condition_one(&self, a: &ComplexMatrix) -> f64 {
        let n = self.dim;
        let mut scaled = ComplexMatrix::zeros(n);
        for r in 0..n {
            for c in 0..n {
                scaled.set(r, c, a.get(r, c) * self.row_scale[r] * self.col_scale[c]);
            }
        }
        let mut inv_norm: f64 = 0.0;
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            e.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            e[c] = Complex64::new(1.0, 0.0);
            let col = self.solve_scaled(&e);
            inv_norm = inv_norm.max(col.iter().map(|v| v.norm()).sum());
        }
        scaled.norm_one() * inv_norm
    }
}
