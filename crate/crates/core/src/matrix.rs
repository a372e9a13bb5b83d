//! Dense square complex matrices.
//!
//! Storage is a 0-based `ndarray::Array2`; the `site` accessors speak the
//! 1-based lattice labels used everywhere else in the public API.

use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(Array2<C64>);

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self(Array2::zeros((dim, dim)))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Array2::eye(dim))
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (k, d) in diag.iter().enumerate() {
            m.0[[k, k]] = *d;
        }
        m
    }

    /// Wraps an array, rejecting non-square, empty or non-finite input.
    pub fn from_array(a: Array2<C64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::BadShape);
        }
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(a))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        let mut a = Array2::zeros((n, n));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::BadShape);
            }
            for (j, z) in row.iter().enumerate() {
                a[[i, j]] = *z;
            }
        }
        Self::from_array(a)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Entry at 1-based (row, col) site labels.
    pub fn site(&self, row: usize, col: usize) -> C64 {
        self.0[[row - 1, col - 1]]
    }

    pub fn set_site(&mut self, row: usize, col: usize, value: C64) {
        self.0[[row - 1, col - 1]] = value;
    }

    pub fn as_array(&self) -> &Array2<C64> {
        &self.0
    }

    pub fn view(&self) -> ArrayView2<'_, C64> {
        self.0.view()
    }

    pub fn into_array(self) -> Array2<C64> {
        self.0
    }

    pub fn diagonal(&self) -> Array1<C64> {
        self.0.diag().to_owned()
    }

    pub fn trace(&self) -> C64 {
        self.0.diag().sum()
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.t().to_owned())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.mapv(|z| z.conj()))
    }

    pub fn dagger(&self) -> Self {
        Self(self.0.t().mapv(|z| z.conj()))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(self.0.mapv(|z| z * s))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    pub fn matmul(&self, other: &Self) -> Self {
        Self(self.0.dot(&other.0))
    }

    pub fn matvec(&self, v: &Array1<C64>) -> Array1<C64> {
        self.0.dot(v)
    }

    /// Largest absolute entry; the residual norm used throughout.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0.view())
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.0.rows().into_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Matrix exponential by scaling and squaring of the Taylor series.
    pub fn expm(&self) -> Result<Self> {
        let norm = self.norm_inf();
        if !norm.is_finite() {
            return Err(Error::NonFinite);
        }
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
        let a = self.0.mapv(|z| z * 0.5f64.powi(squarings));
        let n = self.dim();
        let mut sum = Array2::<C64>::eye(n);
        let mut term = Array2::<C64>::eye(n);
        for k in 1..=40 {
            term = term.dot(&a).mapv(|z| z / k as f64);
            sum += &term;
            if max_abs(&term.view()) <= f64::EPSILON * max_abs(&sum.view()) {
                break;
            }
        }
        for _ in 0..squarings {
            sum = sum.dot(&sum);
        }
        Ok(Self(sum))
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// True when every entry with |row - col| > 1 vanishes exactly.
    pub fn is_tridiagonal(&self) -> bool {
        self.0
            .indexed_iter()
            .all(|((i, j), z)| i.abs_diff(j) <= 1 || *z == C64::new(0.0, 0.0))
    }

    pub fn symmetry_defect(&self) -> f64 {
        max_abs(&(&self.0 - &self.0.t()).view())
    }

    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.0 - &self.0.t().mapv(|z| z.conj())).view())
    }
}

impl From<ComplexMatrix> for Array2<C64> {
    fn from(m: ComplexMatrix) -> Self {
        m.0
    }
}

pub(crate) fn max_abs(a: &ArrayView2<'_, C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Inverse of a small dense matrix by Gauss-Jordan elimination with partial
/// pivoting. Returns `None` for a numerically singular input.
pub(crate) fn invert(a: &Array2<C64>) -> Option<Array2<C64>> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut inv = Array2::<C64>::eye(n);
    let scale = max_abs(&a.view()).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let (piv, pmag) = (col..n)
            .map(|r| (r, m[[r, col]].norm()))
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pmag <= f64::EPSILON * scale * 1e-3 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap([piv, k], [col, k]);
                inv.swap([piv, k], [col, k]);
            }
        }
        let d = m[[col, col]].inv();
        for k in 0..n {
            m[[col, k]] *= d;
            inv[[col, k]] *= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[[r, col]];
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..n {
                let mk = m[[col, k]];
                let ik = inv[[col, k]];
                m[[r, k]] -= f * mk;
                inv[[r, k]] -= f * ik;
            }
        }
    }
    Some(inv)
}
