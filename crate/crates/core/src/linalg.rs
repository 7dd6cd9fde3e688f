//! Dense complex matrix helpers shared by the other modules.
//!
//! Everything is column-major `nalgebra` storage. `vec(M)` therefore means the
//! column-stacked vector of `M`, and the Kronecker identities used by the
//! Sylvester/Stein solvers are
//!
//! ```text
//! vec(L M R) = (R^T kron L) vec(M)
//! ```

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Largest entry modulus.
pub fn max_norm(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_norm_real(m: &RMat) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn max_norm_vec(v: &CVec) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `1 + max` of the given magnitudes; every relative tolerance in the crate
/// is multiplied by this.
pub fn scale<I: IntoIterator<Item = f64>>(norms: I) -> f64 {
    1.0 + norms.into_iter().fold(0.0, f64::max)
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Max-entry distance between `m` and its conjugate transpose.
pub fn hermitian_deviation(m: &CMat) -> f64 {
    max_norm(&(m - m.adjoint()))
}

/// `(M + M^H) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn singular_values_real(m: &RMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn smallest_singular_value(m: &CMat) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Spectral radius from the complex Schur form. Falls back to the spectral
/// norm (an upper bound) if the QR iteration fails to converge.
pub fn spectral_radius(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    match m.clone().try_schur(1e-15, 10_000) {
        Some(schur) => {
            let (_, t) = schur.unpack();
            (0..t.nrows()).fold(0.0, |acc, k| acc.max(t[(k, k)].norm()))
        }
        None => spectral_norm(m),
    }
}

/// Solve `m x = rhs` by partial-pivot LU.
pub fn solve(m: &CMat, rhs: &CMat) -> Result<CMat> {
    m.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::SingularLinearSystem(format!("{}x{} LU solve", m.nrows(), m.ncols())))
}

pub fn solve_vec(m: &CMat, rhs: &CVec) -> Result<CVec> {
    m.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::SingularLinearSystem(format!("{}x{} LU solve", m.nrows(), m.ncols())))
}

pub fn inverse(m: &CMat) -> Result<CMat> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularLinearSystem(format!("{}x{} inverse", m.nrows(), m.ncols())))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Column-stacked vector of a matrix.
pub fn vectorize(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &CVec, n: usize) -> CMat {
    CMat::from_column_slice(n, n, v.as_slice())
}

/// `sum_j coeffs[j] * mats[j]`.
pub fn combination(coeffs: &[Complex64], mats: &[CMat]) -> CMat {
    let n = mats.first().map_or(0, |m| m.nrows());
    coeffs
        .iter()
        .zip(mats)
        .fold(CMat::zeros(n, n), |acc, (w, m)| acc + m * *w)
}

pub fn real_combination(coeffs: &[f64], mats: &[CMat]) -> CMat {
    let n = mats.first().map_or(0, |m| m.nrows());
    coeffs
        .iter()
        .zip(mats)
        .fold(CMat::zeros(n, n), |acc, (w, m)| acc + m.scale(*w))
}

/// Hermitian inner product `v^H w`.
pub fn inner(v: &CVec, w: &CVec) -> Complex64 {
    v.dotc(w)
}

/// `v^H M w`.
pub fn sesquilinear(v: &CVec, m: &CMat, w: &CVec) -> Complex64 {
    v.dotc(&(m * w))
}

/// Integer power of a square matrix by repeated multiplication.
pub fn matrix_power(m: &CMat, k: usize) -> CMat {
    (0..k).fold(identity(m.nrows()), |acc, _| acc * m)
}

/// `N` equally spaced points `exp(2 pi i k / N)` on the unit circle.
pub fn roots_of_unity(count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|k| Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / count as f64))
        .collect()
}

/// Real matrix whose columns are the given complex vectors, each split into
/// `[Re; Im]` blocks.
pub fn realify_columns(columns: &[CVec]) -> RMat {
    let rows = columns.first().map_or(0, |v| 2 * v.len());
    let mut out = RMat::zeros(rows, columns.len());
    for (j, col) in columns.iter().enumerate() {
        let n = col.len();
        for (k, z) in col.iter().enumerate() {
            out[(k, j)] = z.re;
            out[(n + k, j)] = z.im;
        }
    }
    out
}

/// Numerical rank of a real matrix against an absolute threshold.
pub fn rank_real(m: &RMat, threshold: f64) -> usize {
    singular_values_real(m).iter().filter(|s| **s > threshold).count()
}

pub fn condition_number(singular_values: &[f64]) -> f64 {
    match (singular_values.first(), singular_values.last()) {
        (Some(&max), Some(&min)) if min > 0.0 => max / min,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

pub fn ensure_finite(values: impl IntoIterator<Item = f64>, what: &str) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(Error::Input(format!("{what} contains NaN or infinite entries")))
    }
}
