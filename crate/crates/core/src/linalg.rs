//! Small dense helpers shared by the rest of the crate.
//!
//! Everything is complex double precision. Hermitian eigenproblems go through
//! nalgebra's symmetric (Hermitian) eigensolver, and all spectra are returned
//! in ascending order.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest entry-wise modulus of `a - a†`.
pub fn hermitian_deviation(a: &CMatrix) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(a + a†) / 2`
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Largest entry-wise modulus of `u u† - 1`.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    let p = u * u.adjoint();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((p[(i, j)] - target).norm());
        }
    }
    worst
}

/// Ascending eigenvalues of a Hermitian matrix. The input is symmetrized
/// first so round-off in the strict lower triangle cannot leak in.
pub fn eigvalsh(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let h = hermitian_part(a);
    let mut vals: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Ascending eigenvalues of a real symmetric matrix together with the
/// matching orthonormal eigenvectors (as columns, same order).
pub fn eigh_real(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (a + a.transpose()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// `tr(a b)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn frobenius_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Schatten 1-norm of a Hermitian matrix (sum of absolute eigenvalues).
pub fn trace_norm_hermitian(a: &CMatrix) -> f64 {
    eigvalsh(a).iter().map(|v| v.abs()).sum()
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().iter().copied().fold(ZERO, |acc, z| acc + z)
}

/// Matrix unit `|row⟩⟨col|` of size `dim`.
pub fn matrix_unit(dim: usize, row: usize, col: usize) -> CMatrix {
    let mut e = CMatrix::zeros(dim, dim);
    e[(row, col)] = ONE;
    e
}

/// Real and imaginary parts as nested row vectors (the JSON matrix layout).
pub fn split_parts(a: &CMatrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let rows =
        |f: fn(Complex64) -> f64| (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| f(a[(i, j)])).collect()).collect();
    (rows(|z| z.re), rows(|z| z.im))
}

/// Largest element-wise absolute difference of two ascending lists after
/// zero-padding the shorter one and re-sorting.
pub fn max_sorted_deviation(a: &[f64], b: &[f64]) -> f64 {
    let (pa, pb) = pad_pair(a, b);
    pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Zero-pads the shorter list to the common length and sorts both ascending.
pub fn pad_pair(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let len = a.len().max(b.len());
    let pad = |v: &[f64]| {
        let mut out = v.to_vec();
        out.resize(len, 0.0);
        out.sort_by(f64::total_cmp);
        out
    };
    (pad(a), pad(b))
}
