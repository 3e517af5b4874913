//! Dense complex linear algebra used by every other module.
//!
//! Operators are stored as [`ComplexMatrix`], a thin wrapper over a
//! `nalgebra` dynamic matrix. Tensor products use the row-major index
//! convention `(i1, i2) -> i1 * d2 + i2`, so the first factor is the slow
//! index.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default absolute tolerance on the entrywise max-norm.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Eigenvalues below this fraction of the largest eigenvalue are read as zero
/// by [`frac_power`].
pub const ZERO_EIGEN_RATIO: f64 = 1e-12;

/// Candidate vectors whose residual norm falls below this are skipped by
/// [`complete_isometry`].
pub const GRAM_SCHMIDT_REJECT: f64 = 1e-8;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Which tensor factor survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self.0[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Builds a matrix from entries in row-major order.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::dims(
                format!("{} entries", rows * cols),
                format!("{} entries", entries.len()),
            ));
        }
        Ok(Self(DMatrix::from_row_iterator(rows, cols, entries)))
    }

    /// Builds a matrix from real entries given row by row. Panics on ragged input;
    /// intended for literals.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
        Self(DMatrix::from_fn(n, m, |i, j| r(rows[i][j])))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        Self(DMatrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { C64::default() }))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| r(x)).collect();
        Self::from_diagonal(&d)
    }

    /// Column vector.
    pub fn column(v: &[C64]) -> Self {
        Self(DMatrix::from_column_slice(v.len(), 1, v))
    }

    /// Rank-one operator `|v><v|` (not normalised).
    pub fn ket_projector(v: &[C64]) -> Self {
        let col = Self::column(v);
        &col * &col.adjoint()
    }

    /// `|i><i|` on an `n`-dimensional space.
    pub fn basis_projector(n: usize, i: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m.0[(i, i)] = r(1.0);
        m
    }

    pub fn from_inner(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.0[(i, j)] = value;
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn column_vec(&self, j: usize) -> Vec<C64> {
        self.0.column(j).iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(r(factor))
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> f64 {
        if self.rows() == 0 || self.cols() == 0 {
            return 0.0;
        }
        self.0
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .fold(0.0, |acc, &s| acc.max(s))
    }

    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!(
            (self.rows(), self.cols()),
            (other.rows(), other.cols()),
            "distance between matrices of different shape"
        );
        (self - other).max_norm()
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.rows() == other.rows() && self.cols() == other.cols() && self.distance(other) <= tol
    }

    /// `max |A - A^dag|`; infinite for non-square input.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.distance(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let id = Self::identity(n);
        let left = (&self.adjoint() * self).distance(&id);
        let right = (self * &self.adjoint()).distance(&id);
        left.max(right)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        if !self.is_hermitian(tol) {
            return false;
        }
        match eigh(self) {
            Ok(e) => e.values.first().is_none_or(|&l| l >= -tol),
            Err(_) => false,
        }
    }

    pub fn is_projection(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && (self * self).approx_eq(self, tol)
    }

    /// `(A + A^dag) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * r(0.5))
    }

    /// Real part of `tr[self * other]`.
    pub fn trace_product(&self, other: &Self) -> f64 {
        assert_eq!(self.cols(), other.rows());
        assert_eq!(self.rows(), other.cols());
        let mut acc = C64::default();
        for i in 0..self.rows() {
            for k in 0..self.cols() {
                acc += self.0[(i, k)] * other.0[(k, i)];
            }
        }
        acc.re
    }

    /// Real part of the expectation `tr[self * rho]`.
    pub fn expectation(&self, rho: &Self) -> f64 {
        self.trace_product(rho)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(self.0 + rhs.0)
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        self.0 += &rhs.0;
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Sub for ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(self.0 - rhs.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(self.0 * rhs.0)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.rows())
            .map(|i| {
                (0..self.cols())
                    .map(|j| {
                        let z = self.0[(i, j)];
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(D::Error::custom(format!(
                "ragged matrix: row {bad} has {} entries, expected {m}",
                rows[bad].len()
            )));
        }
        let entries = rows.iter().flatten().map(|&[re, im]| c(re, im)).collect();
        ComplexMatrix::from_row_major(n, m, entries).map_err(D::Error::custom)
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.0.kronecker(&b.0))
}

/// Commutator `[a, b] = ab - ba`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    &(a * b) - &(b * a)
}

/// Partial trace of an operator on a `d1 * d2` dimensional product space,
/// discarding the factor not named by `keep`.
pub fn partial_trace(t: &ComplexMatrix, dims: (usize, usize), keep: Keep) -> Result<ComplexMatrix> {
    let (d1, d2) = dims;
    if t.rows() != d1 * d2 || t.cols() != d1 * d2 {
        return Err(Error::dims(
            format!("{0}x{0} operator", d1 * d2),
            format!("{}x{}", t.rows(), t.cols()),
        ));
    }
    let out = match keep {
        Keep::First => ComplexMatrix::from_fn(d1, d1, |i, j| {
            (0..d2).map(|k| t.0[(i * d2 + k, j * d2 + k)]).sum()
        }),
        Keep::Second => ComplexMatrix::from_fn(d2, d2, |a, b| {
            (0..d1).map(|k| t.0[(k * d2 + a, k * d2 + b)]).sum()
        }),
    };
    Ok(out)
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column_vec(k)
    }

    /// `sum_k f(lambda_k) |v_k><v_k|`.
    pub fn map(&self, mut f: impl FnMut(f64) -> C64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.vectors.0;
        let scaled = DMatrix::from_fn(n, n, |i, k| v[(i, k)] * f(self.values[k]));
        ComplexMatrix(scaled * v.adjoint())
    }

    /// Projector onto the span of eigenvectors whose eigenvalues satisfy `pred`.
    pub fn projector(&self, mut pred: impl FnMut(f64) -> bool) -> ComplexMatrix {
        self.map(|l| if pred(l) { r(1.0) } else { r(0.0) })
    }
}

/// Eigendecomposition of the Hermitian part of `a`. The caller is responsible
/// for checking hermiticity first when it matters.
pub fn eigh(a: &ComplexMatrix) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(Error::dims("square matrix", format!("{}x{}", a.rows(), a.cols())));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: vec![],
            vectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let sym = a.hermitian_part();
    let eig = SymmetricEigen::try_new(sym.0, EIGEN_EPS, EIGEN_MAX_ITER).ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
    Ok(HermitianEigen {
        values,
        vectors: ComplexMatrix(vectors),
    })
}

fn require_hermitian(a: &ComplexMatrix, tol: f64) -> Result<()> {
    if !a.is_square() {
        return Err(Error::dims("square matrix", format!("{}x{}", a.rows(), a.cols())));
    }
    let deviation = a.hermiticity_defect();
    if deviation > tol {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// `rho^alpha` for positive semidefinite `rho` and `alpha` in `(0, 1]`, with
/// the convention `0^alpha = 0`.
pub fn frac_power(rho: &ComplexMatrix, alpha: f64) -> Result<ComplexMatrix> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidExponent(alpha));
    }
    require_hermitian(rho, DEFAULT_TOL)?;
    let eig = eigh(rho)?;
    if let Some(&min) = eig.values.first() {
        if min < -DEFAULT_TOL {
            return Err(Error::NegativeEigenvalue { eigenvalue: min });
        }
    }
    let max = eig.values.last().copied().unwrap_or(0.0);
    let cutoff = ZERO_EIGEN_RATIO * max;
    Ok(eig.map(|l| if max <= 0.0 || l < cutoff { r(0.0) } else { r(l.powf(alpha)) }))
}

/// Principal square root of a positive semidefinite matrix.
pub fn psd_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    frac_power(a, 0.5)
}

/// `exp(-i g H)` for Hermitian `h`.
pub fn herm_unitary(h: &ComplexMatrix, g: f64) -> Result<ComplexMatrix> {
    require_hermitian(h, DEFAULT_TOL)?;
    let eig = eigh(h)?;
    Ok(eig.map(|l| C64::from_polar(1.0, -g * l)))
}

/// `max |V^dag V - I|` for a matrix with at least as many rows as columns.
pub fn isometry_defect(v: &ComplexMatrix) -> f64 {
    (&v.adjoint() * v).distance(&ComplexMatrix::identity(v.cols()))
}

/// Extends an isometry to a square unitary. The first `v.cols()` columns of
/// the result are exactly the columns of `v`; the rest come from Gram–Schmidt
/// over the canonical basis vectors `e_0, e_1, ...` in order.
pub fn complete_isometry(v: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (n, k) = (v.rows(), v.cols());
    if k > n {
        return Err(Error::dims(
            format!("at most {n} columns"),
            format!("{k} columns"),
        ));
    }
    let deviation = isometry_defect(v);
    if deviation > DEFAULT_TOL {
        return Err(Error::NotIsometry { deviation });
    }

    let mut basis: Vec<Vec<C64>> = (0..k).map(|j| v.column_vec(j)).collect();
    for e in 0..n {
        if basis.len() == n {
            break;
        }
        let mut cand = vec![C64::default(); n];
        cand[e] = r(1.0);
        // two passes of classical Gram–Schmidt keep the residual orthogonal to
        // working precision
        for _ in 0..2 {
            for b in &basis {
                let overlap: C64 = b.iter().zip(&cand).map(|(bi, ci)| bi.conj() * ci).sum();
                for (ci, bi) in cand.iter_mut().zip(b) {
                    *ci -= overlap * bi;
                }
            }
        }
        let norm = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < GRAM_SCHMIDT_REJECT {
            continue;
        }
        cand.iter_mut().for_each(|z| *z /= norm);
        basis.push(cand);
    }
    debug_assert_eq!(basis.len(), n);

    let mut u = ComplexMatrix::from_fn(n, n, |i, j| basis[j][i]);
    for j in 0..k {
        for i in 0..n {
            u.0[(i, j)] = v.0[(i, j)];
        }
    }
    Ok(u)
}

/// Trace norm of a Hermitian matrix: sum of absolute eigenvalues.
pub fn hermitian_trace_norm(a: &ComplexMatrix) -> Result<f64> {
    Ok(eigh(a)?.values.iter().map(|l| l.abs()).sum())
}
