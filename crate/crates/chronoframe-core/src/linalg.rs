//! Numerical linear algebra: orthonormalization with re-orthogonalization,
//! canonical unitary completion, a complex Jacobi eigensolver for Hermitian
//! matrices, matrix functions of Hermitian matrices, small dense solves, and
//! seeded Haar-random unitary sampling.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_core::{RngCore, SeedableRng};

use crate::tensor::ComplexMatrix;
use crate::{Complex64, ONE, ZERO};

/// Error type for linear-algebra routines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinalgError {
    /// The input matrix must be square.
    NotSquare { rows: usize, cols: usize },
    /// The input matrix must be Hermitian within the given tolerance.
    NotHermitian { residual_times_1e15: u64 },
    /// A linear system was singular to working precision.
    SingularSystem,
    /// The eigensolver failed to converge in the sweep budget.
    NoConvergence { sweeps: usize },
    /// Vector lengths disagree with the expected dimension.
    LengthMismatch { expected: usize, found: usize },
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::NotSquare { rows, cols } => {
                write!(f, "matrix is not square: {rows}x{cols}")
            }
            LinalgError::NotHermitian { residual_times_1e15 } => {
                write!(f, "matrix is not Hermitian (residual ~{residual_times_1e15}e-15)")
            }
            LinalgError::SingularSystem => write!(f, "linear system is singular"),
            LinalgError::NoConvergence { sweeps } => {
                write!(f, "eigensolver did not converge within {sweeps} sweeps")
            }
            LinalgError::LengthMismatch { expected, found } => {
                write!(f, "vector length mismatch: expected {expected}, found {found}")
            }
        }
    }
}

impl core::error::Error for LinalgError {}

/// Inner-product space interface shared by dense vectors and sparse
/// clock-keyed states, so orthonormalization can run on either.
pub trait InnerProduct: Clone {
    /// Hermitian inner product ⟨self, other⟩, conjugate-linear in `self`.
    fn inner(&self, other: &Self) -> Complex64;
    /// In-place update `self += c · other`.
    fn axpy(&mut self, c: Complex64, other: &Self);
    /// In-place scalar multiplication.
    fn scale_in_place(&mut self, c: Complex64);
    /// Euclidean norm.
    fn norm(&self) -> f64 {
        libm::sqrt(self.inner(self).re)
    }
}

impl InnerProduct for Vec<Complex64> {
    fn inner(&self, other: &Self) -> Complex64 {
        debug_assert_eq!(self.len(), other.len());
        self.iter().zip(other).map(|(a, b)| a.conj() * b).sum()
    }

    fn axpy(&mut self, c: Complex64, other: &Self) {
        debug_assert_eq!(self.len(), other.len());
        for (x, y) in self.iter_mut().zip(other) {
            *x += c * y;
        }
    }

    fn scale_in_place(&mut self, c: Complex64) {
        for x in self.iter_mut() {
            *x *= c;
        }
    }
}

/// Result of orthonormalizing a family of vectors.
pub struct OrthonormalBasis<T> {
    /// Orthonormal vectors spanning the input family.
    pub basis: Vec<T>,
    /// For each input vector, its expansion coefficients over `basis`
    /// (length equals the basis size; later coefficients are zero for
    /// earlier inputs).
    pub coefficients: Vec<Vec<Complex64>>,
}

/// Modified Gram-Schmidt with one re-orthogonalization pass. Input vectors
/// whose residual norm falls below `tol` are treated as linearly dependent
/// and contribute no basis vector; their expansion coefficients are still
/// recorded.
pub fn orthonormalize<T: InnerProduct>(vectors: &[T], tol: f64) -> OrthonormalBasis<T> {
    let mut basis: Vec<T> = Vec::new();
    let mut coefficients: Vec<Vec<Complex64>> = Vec::new();
    for v in vectors {
        let mut residual = v.clone();
        let mut coeffs = vec![ZERO; basis.len()];
        for _pass in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let overlap = q.inner(&residual);
                residual.axpy(-overlap, q);
                coeffs[i] += overlap;
            }
        }
        let norm = residual.norm();
        if norm > tol {
            residual.scale_in_place(Complex64::new(1.0 / norm, 0.0));
            basis.push(residual);
            coeffs.push(Complex64::new(norm, 0.0));
        }
        coefficients.push(coeffs);
    }
    let rank = basis.len();
    for coeffs in &mut coefficients {
        coeffs.resize(rank, ZERO);
    }
    OrthonormalBasis { basis, coefficients }
}

/// Completes a family of orthonormal columns to a full unitary by appending
/// orthonormalized computational basis vectors in fixed index order.
/// The input columns are re-orthonormalized first; they must be linearly
/// independent.
pub fn complete_to_unitary(columns: &[Vec<Complex64>], dim: usize) -> Result<ComplexMatrix, LinalgError> {
    for col in columns {
        if col.len() != dim {
            return Err(LengthMismatch(dim, col.len()));
        }
    }
    let ortho = orthonormalize(columns, 1e-9);
    if ortho.basis.len() != columns.len() {
        return Err(LinalgError::SingularSystem);
    }
    let mut all = ortho.basis;
    for index in 0..dim {
        if all.len() == dim {
            break;
        }
        let mut candidate = vec![ZERO; dim];
        candidate[index] = ONE;
        for _pass in 0..2 {
            for q in &all {
                let overlap = q.inner(&candidate);
                candidate.axpy(-overlap, q);
            }
        }
        let norm = candidate.norm();
        if norm > 1e-9 {
            candidate.scale_in_place(Complex64::new(1.0 / norm, 0.0));
            all.push(candidate);
        }
    }
    if all.len() != dim {
        return Err(LinalgError::SingularSystem);
    }
    ComplexMatrix::from_columns(&all).map_err(|_| LinalgError::SingularSystem)
}

#[allow(non_snake_case)]
fn LengthMismatch(expected: usize, found: usize) -> LinalgError {
    LinalgError::LengthMismatch { expected, found }
}

/// Eigendecomposition of a Hermitian matrix: ascending real eigenvalues and
/// a unitary matrix of eigenvectors (columns).
pub struct HermitianEig {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unitary whose column `i` is the eigenvector for `values[i]`.
    pub vectors: ComplexMatrix,
}

/// Cyclic complex Jacobi eigensolver for Hermitian matrices.
///
/// Off-diagonal mass is annihilated pairwise with complex rotations until the
/// largest off-diagonal magnitude falls below 1e-14 times the largest entry.
pub fn hermitian_eig(matrix: &ComplexMatrix) -> Result<HermitianEig, LinalgError> {
    if !matrix.is_square() {
        return Err(LinalgError::NotSquare { rows: matrix.rows(), cols: matrix.cols() });
    }
    let n = matrix.rows();
    let herm_residual = matrix.sub(&matrix.dagger()).max_abs();
    let scale = matrix.max_abs().max(1.0);
    if herm_residual > 1e-10 * scale {
        return Err(LinalgError::NotHermitian {
            residual_times_1e15: (herm_residual * 1e15) as u64,
        });
    }

    let mut a = matrix.add(&matrix.dagger()).scale(Complex64::new(0.5, 0.0));
    let mut v = ComplexMatrix::identity(n);
    let threshold = 1e-14 * scale;
    let max_sweeps = 60;
    for sweep in 0..=max_sweeps {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).norm());
            }
        }
        if off <= threshold {
            break;
        }
        if sweep == max_sweeps {
            return Err(LinalgError::NoConvergence { sweeps: max_sweeps });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let gnorm = apq.norm();
                if gnorm <= threshold * 1e-2 {
                    continue;
                }
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let phase = apq / Complex64::new(gnorm, 0.0);
                let tau = (aqq - app) / (2.0 * gnorm);
                let t = if tau >= 0.0 {
                    1.0 / (tau + libm::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
                };
                let cth = 1.0 / libm::sqrt(1.0 + t * t);
                let sth = t * cth;
                let s = phase * Complex64::new(sth, 0.0);

                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, akp * cth - akq * s.conj());
                    a.set(k, q, akp * s + akq * cth);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, apk * cth - aqk * s);
                    a.set(q, k, apk * s.conj() + aqk * cth);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp * cth - vkq * s.conj());
                    v.set(k, q, vkp * s + vkq * cth);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let values_raw: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| values_raw[i].partial_cmp(&values_raw[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| values_raw[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v.get(r, order[c]));
    Ok(HermitianEig { values, vectors })
}

/// Applies a real-to-complex scalar function to a Hermitian matrix through
/// its eigendecomposition: f(M) = V f(Λ) V†.
pub fn hermitian_function(
    matrix: &ComplexMatrix,
    f: impl Fn(f64) -> Complex64,
) -> Result<ComplexMatrix, LinalgError> {
    let eig = hermitian_eig(matrix)?;
    let fd = ComplexMatrix::diagonal(&eig.values.iter().map(|&x| f(x)).collect::<Vec<_>>());
    Ok(eig.vectors.mul(&fd).mul(&eig.vectors.dagger()))
}

/// Operator 2-norm (largest singular value), computed from the largest
/// eigenvalue of M†M.
pub fn operator_two_norm(matrix: &ComplexMatrix) -> Result<f64, LinalgError> {
    let gram = matrix.dagger().mul(matrix);
    let eig = hermitian_eig(&gram)?;
    let top = eig.values.last().copied().unwrap_or(0.0);
    Ok(libm::sqrt(top.max(0.0)))
}

/// Solves the square linear system `A x = b` by LU decomposition with
/// partial pivoting.
pub fn solve(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    if b.len() != n {
        return Err(LengthMismatch(n, b.len()));
    }
    let mut lu = a.clone();
    let mut x: Vec<Complex64> = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (pivot_row, pivot_mag) = (k..n)
            .map(|r| (r, lu.get(r, k).norm()))
            .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if pivot_mag < 1e-14 {
            return Err(LinalgError::SingularSystem);
        }
        if pivot_row != k {
            for c in 0..n {
                let tmp = lu.get(k, c);
                lu.set(k, c, lu.get(pivot_row, c));
                lu.set(pivot_row, c, tmp);
            }
            perm.swap(k, pivot_row);
            x.swap(k, pivot_row);
        }
        let pivot = lu.get(k, k);
        for r in (k + 1)..n {
            let factor = lu.get(r, k) / pivot;
            lu.set(r, k, factor);
            for c in (k + 1)..n {
                let v = lu.get(r, c) - factor * lu.get(k, c);
                lu.set(r, c, v);
            }
            let xk = x[k];
            x[r] -= factor * xk;
        }
    }
    for r in (0..n).rev() {
        let mut acc = x[r];
        for c in (r + 1)..n {
            acc -= lu.get(r, c) * x[c];
        }
        x[r] = acc / lu.get(r, r);
    }
    Ok(x)
}

/// Inverse of a square matrix via LU solves against the identity columns.
pub fn matrix_inverse(a: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    let mut columns = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![ZERO; n];
        e[j] = ONE;
        columns.push(solve(a, &e)?);
    }
    ComplexMatrix::from_columns(&columns).map_err(|_| LinalgError::SingularSystem)
}

/// Least-squares solution of the overdetermined system `A X = B` (matrix
/// right-hand side) via the normal equations. Column `j` of the result
/// minimizes ‖A x − B_{·j}‖₂.
pub fn least_squares(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    if a.rows() != b.rows() {
        return Err(LengthMismatch(a.rows(), b.rows()));
    }
    let ata = a.dagger().mul(a);
    let ridge = 1e-13 * ata.max_abs().max(1.0);
    let mut regularized = ata;
    for i in 0..regularized.rows() {
        let v = regularized.get(i, i) + Complex64::new(ridge, 0.0);
        regularized.set(i, i, v);
    }
    let atb = a.dagger().mul(b);
    let mut columns = Vec::with_capacity(b.cols());
    for j in 0..atb.cols() {
        columns.push(solve(&regularized, &atb.column(j))?);
    }
    ComplexMatrix::from_columns(&columns).map_err(|_| LinalgError::SingularSystem)
}

/// Deterministic RNG used for all sampling in the crate.
pub type Rng = rand_chacha::ChaCha12Rng;

/// Builds the crate's deterministic RNG from a seed.
pub fn seeded_rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Uniform double in [0, 1) with 53 bits of precision.
fn uniform_f64(rng: &mut Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Standard complex Gaussian sample (real and imaginary parts independent
/// N(0, 1/2)-like up to overall scale, which Haar sampling does not care
/// about), via Box-Muller.
pub fn complex_gaussian(rng: &mut Rng) -> Complex64 {
    let u1 = uniform_f64(rng).max(1e-300);
    let u2 = uniform_f64(rng);
    let radius = libm::sqrt(-2.0 * libm::log(u1));
    let angle = 2.0 * core::f64::consts::PI * u2;
    Complex64::new(radius * libm::cos(angle), radius * libm::sin(angle))
}

/// Haar-random unitary of the given dimension: orthonormalize the columns of
/// a complex Gaussian matrix. Modified Gram-Schmidt yields the QR factor with
/// positive real diagonal R, which is exactly the phase convention that makes
/// the Q factor Haar-distributed.
pub fn haar_unitary(dim: usize, rng: &mut Rng) -> ComplexMatrix {
    loop {
        let columns: Vec<Vec<Complex64>> =
            (0..dim).map(|_| (0..dim).map(|_| complex_gaussian(rng)).collect()).collect();
        let ortho = orthonormalize(&columns, 1e-9);
        if ortho.basis.len() == dim {
            return ComplexMatrix::from_columns(&ortho.basis).expect("square by construction");
        }
    }
}

/// Random complex matrix with independent Gaussian entries, for probing
/// linear (not necessarily unitary) behavior.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}
