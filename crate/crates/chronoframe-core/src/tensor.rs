//! Dense complex matrices over explicit tensor-factor structures.
//!
//! [`ComplexMatrix`] is a row-major dense matrix of [`Complex64`] entries.
//! [`DimLayout`] names an ordered list of tensor factors and provides the
//! index arithmetic for embedding operators on factor subsets and for
//! partial traces. Factor order is fixed by declaration order and every
//! operation preserves it.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::{Complex64, ONE, ZERO};

/// Error type for tensor-structure operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TensorError {
    /// Operation requires a square matrix.
    NotSquare { rows: usize, cols: usize },
    /// Matrix dimensions do not match the operation's requirement.
    DimensionMismatch { expected: usize, found: usize, context: &'static str },
    /// A factor label was not found in the layout.
    UnknownLabel { label: String },
    /// A layout declaration was invalid (duplicate label or zero dimension).
    InvalidLayout { reason: String },
}

impl fmt::Display for TensorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorError::NotSquare { rows, cols } => {
                write!(f, "matrix is not square: {rows}x{cols}")
            }
            TensorError::DimensionMismatch { expected, found, context } => {
                write!(f, "dimension mismatch in {context}: expected {expected}, found {found}")
            }
            TensorError::UnknownLabel { label } => {
                write!(f, "factor label not in layout: {label}")
            }
            TensorError::InvalidLayout { reason } => write!(f, "invalid layout: {reason}"),
        }
    }
}

impl core::error::Error for TensorError {}

/// Dense complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major data; the entry count must be rows × cols.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, TensorError> {
        if data.len() != rows * cols {
            return Err(TensorError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
                context: "ComplexMatrix::new entry count",
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    /// Identity matrix of dimension `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, ONE);
        }
        m
    }

    /// Builds a matrix by evaluating `f(row, col)` at every entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self, TensorError> {
        let data = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::new(rows, cols, data)
    }

    /// Builds a square matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Result<Self, TensorError> {
        let rows = columns.first().map(Vec::len).unwrap_or(0);
        for col in columns {
            if col.len() != rows {
                return Err(TensorError::DimensionMismatch {
                    expected: rows,
                    found: col.len(),
                    context: "from_columns column length",
                });
            }
        }
        Ok(Self::from_fn(rows, columns.len(), |r, c| columns[c][r]))
    }

    /// Diagonal matrix with the given diagonal entries.
    pub fn diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// True when the matrix is square.
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Entry at `(row, col)`.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.cols + col]
    }

    /// Overwrites the entry at `(row, col)`.
    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.cols + col] = value;
    }

    /// Adds `value` to the entry at `(row, col)`.
    #[inline]
    pub fn add_to(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.cols + col] += value;
    }

    /// Row-major entry slice.
    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    /// Copy of column `c` as a vector.
    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Matrix product `self · other`; panics on shape mismatch, which is a
    /// programming error rather than a data error at every call site.
    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, other.rows,
            "matrix product shape mismatch: {}x{} times {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == ZERO {
                    continue;
                }
                for c in 0..other.cols {
                    out.add_to(r, c, a * other.get(k, c));
                }
            }
        }
        out
    }

    /// Matrix-vector product; panics on length mismatch.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        let mut out = vec![ZERO; self.rows];
        for r in 0..self.rows {
            let mut acc = ZERO;
            for c in 0..self.cols {
                acc += self.get(r, c) * v[c];
            }
            out[r] = acc;
        }
        out
    }

    /// Entry-wise sum; panics on shape mismatch.
    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "matrix sum shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    /// Entry-wise difference; panics on shape mismatch.
    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "matrix difference shape mismatch"
        );
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    /// Scalar multiple.
    pub fn scale(&self, s: Complex64) -> ComplexMatrix {
        let data = self.data.iter().map(|a| a * s).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    /// Trace; requires a square matrix.
    pub fn trace(&self) -> Result<Complex64, TensorError> {
        if !self.is_square() {
            return Err(TensorError::NotSquare { rows: self.rows, cols: self.cols });
        }
        Ok((0..self.rows).map(|i| self.get(i, i)).sum())
    }

    /// Largest entry magnitude, ‖M‖_max.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    /// ‖self − other‖_max; panics on shape mismatch.
    pub fn max_diff(&self, other: &ComplexMatrix) -> f64 {
        self.sub(other).max_abs()
    }

    /// Residual ‖M†M − 1‖_max measuring failure of unitarity.
    pub fn unitarity_residual(&self) -> Result<f64, TensorError> {
        if !self.is_square() {
            return Err(TensorError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let product = self.dagger().mul(self);
        Ok(product.sub(&ComplexMatrix::identity(self.rows)).max_abs())
    }

    /// True iff ‖M†M − 1‖_max ≤ tol; errors on non-square input.
    pub fn is_unitary(&self, tol: f64) -> Result<bool, TensorError> {
        Ok(self.unitarity_residual()? <= tol)
    }

    /// Residual ‖M − M†‖_max measuring failure of Hermiticity.
    pub fn hermiticity_residual(&self) -> Result<f64, TensorError> {
        if !self.is_square() {
            return Err(TensorError::NotSquare { rows: self.rows, cols: self.cols });
        }
        Ok(self.sub(&self.dagger()).max_abs())
    }

    /// True iff the matrix equals its conjugate transpose within `tol`.
    pub fn is_hermitian(&self, tol: f64) -> Result<bool, TensorError> {
        Ok(self.hermiticity_residual()? <= tol)
    }
}

/// Kronecker product with row-major factor order: the left factor is the
/// slower index, matching [`DimLayout`] declaration order.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows() * b.rows();
    let cols = a.cols() * b.cols();
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ar in 0..a.rows() {
        for ac in 0..a.cols() {
            let av = a.get(ar, ac);
            if av == ZERO {
                continue;
            }
            for br in 0..b.rows() {
                for bc in 0..b.cols() {
                    out.set(ar * b.rows() + br, ac * b.cols() + bc, av * b.get(br, bc));
                }
            }
        }
    }
    out
}

/// Kronecker product of a sequence of matrices in declaration order.
pub fn kron_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    let mut out = ComplexMatrix::identity(1);
    for f in factors {
        out = kron(&out, f);
    }
    out
}

/// Conjugate transpose as a free function mirroring [`ComplexMatrix::dagger`].
pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.dagger()
}

/// Kronecker product of vectors, left factor slower.
pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}

/// Computational basis vector |index⟩ of the given dimension.
pub fn basis_vector(dim: usize, index: usize) -> Vec<Complex64> {
    let mut v = vec![ZERO; dim];
    v[index] = ONE;
    v
}

/// One named tensor factor of a layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    label: String,
    dim: usize,
}

impl Factor {
    /// The factor's label.
    pub fn label(&self) -> &str {
        &self.label
    }

    /// The factor's dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Ordered list of labeled tensor factors with the index arithmetic for
/// embeddings and partial traces. Declaration order fixes index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimLayout {
    factors: Vec<Factor>,
}

impl DimLayout {
    /// Builds a layout from `(label, dimension)` pairs. Labels must be unique
    /// and dimensions at least 1.
    pub fn new(pairs: &[(&str, usize)]) -> Result<Self, TensorError> {
        let mut factors = Vec::with_capacity(pairs.len());
        for (label, dim) in pairs {
            if *dim == 0 {
                return Err(TensorError::InvalidLayout {
                    reason: format!("factor {label} has dimension 0"),
                });
            }
            if factors.iter().any(|f: &Factor| f.label == *label) {
                return Err(TensorError::InvalidLayout {
                    reason: format!("duplicate factor label {label}"),
                });
            }
            factors.push(Factor { label: label.to_string(), dim: *dim });
        }
        Ok(Self { factors })
    }

    /// The factors in declaration order.
    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Number of factors.
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    /// True when the layout has no factors (total dimension 1).
    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Product of all factor dimensions.
    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).product()
    }

    /// Position of a label in declaration order.
    pub fn position(&self, label: &str) -> Result<usize, TensorError> {
        self.factors
            .iter()
            .position(|f| f.label == label)
            .ok_or(TensorError::UnknownLabel { label: label.to_string() })
    }

    /// Dimension of the named factor.
    pub fn dim_of(&self, label: &str) -> Result<usize, TensorError> {
        Ok(self.factors[self.position(label)?].dim)
    }

    /// Row-major strides per factor.
    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.factors.len()];
        for i in (0..self.factors.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.factors[i + 1].dim;
        }
        strides
    }

    /// Flat index of a coordinate tuple (one coordinate per factor).
    pub fn index_of(&self, coords: &[usize]) -> Result<usize, TensorError> {
        if coords.len() != self.factors.len() {
            return Err(TensorError::DimensionMismatch {
                expected: self.factors.len(),
                found: coords.len(),
                context: "index_of coordinate count",
            });
        }
        let strides = self.strides();
        let mut index = 0;
        for (i, (&c, f)) in coords.iter().zip(&self.factors).enumerate() {
            if c >= f.dim {
                return Err(TensorError::DimensionMismatch {
                    expected: f.dim,
                    found: c,
                    context: "index_of coordinate range",
                });
            }
            index += c * strides[i];
        }
        Ok(index)
    }

    /// Coordinate tuple of a flat index.
    pub fn coords_of(&self, index: usize) -> Vec<usize> {
        let mut coords = vec![0usize; self.factors.len()];
        let mut rem = index;
        for i in (0..self.factors.len()).rev() {
            coords[i] = rem % self.factors[i].dim;
            rem /= self.factors[i].dim;
        }
        coords
    }

    /// Resolves a set of target labels to sorted factor positions.
    fn resolve_positions(&self, labels: &[&str]) -> Result<Vec<usize>, TensorError> {
        let mut positions = Vec::with_capacity(labels.len());
        for label in labels {
            let p = self.position(label)?;
            if positions.contains(&p) {
                return Err(TensorError::InvalidLayout {
                    reason: format!("label {label} repeated in factor set"),
                });
            }
            positions.push(p);
        }
        positions.sort_unstable();
        Ok(positions)
    }

    /// Embeds `op`, acting on the named factors (in layout order), into the
    /// full space, acting as the identity on every other factor. The target
    /// factors need not be adjacent.
    pub fn embed(&self, op: &ComplexMatrix, target_labels: &[&str]) -> Result<ComplexMatrix, TensorError> {
        let targets = self.resolve_positions(target_labels)?;
        let target_dim: usize = targets.iter().map(|&p| self.factors[p].dim).product();
        if op.rows() != target_dim || op.cols() != target_dim {
            return Err(TensorError::DimensionMismatch {
                expected: target_dim,
                found: op.rows(),
                context: "embed operator dimension",
            });
        }
        let complement: Vec<usize> =
            (0..self.factors.len()).filter(|p| !targets.contains(p)).collect();
        let comp_dims: Vec<usize> = complement.iter().map(|&p| self.factors[p].dim).collect();
        let comp_total: usize = comp_dims.iter().product();
        let target_dims: Vec<usize> = targets.iter().map(|&p| self.factors[p].dim).collect();
        let strides = self.strides();

        let total = self.total_dim();
        let mut out = ComplexMatrix::zeros(total, total);
        let mut comp_coords = vec![0usize; complement.len()];
        for comp_index in 0..comp_total {
            unrank(comp_index, &comp_dims, &mut comp_coords);
            let base: usize =
                comp_coords.iter().zip(&complement).map(|(&c, &p)| c * strides[p]).sum();
            let mut row_coords = vec![0usize; targets.len()];
            let mut col_coords = vec![0usize; targets.len()];
            for a in 0..target_dim {
                unrank(a, &target_dims, &mut row_coords);
                let row_off: usize =
                    row_coords.iter().zip(&targets).map(|(&c, &p)| c * strides[p]).sum();
                for b in 0..target_dim {
                    let value = op.get(a, b);
                    if value == ZERO {
                        continue;
                    }
                    unrank(b, &target_dims, &mut col_coords);
                    let col_off: usize =
                        col_coords.iter().zip(&targets).map(|(&c, &p)| c * strides[p]).sum();
                    out.set(base + row_off, base + col_off, value);
                }
            }
        }
        Ok(out)
    }

    /// Partial trace of `m` over the named factors; the result acts on the
    /// remaining factors in declaration order.
    pub fn partial_trace(
        &self,
        m: &ComplexMatrix,
        traced_labels: &[&str],
    ) -> Result<ComplexMatrix, TensorError> {
        let total = self.total_dim();
        if m.rows() != total || m.cols() != total {
            return Err(TensorError::DimensionMismatch {
                expected: total,
                found: m.rows(),
                context: "partial_trace matrix dimension",
            });
        }
        let traced = self.resolve_positions(traced_labels)?;
        let kept: Vec<usize> = (0..self.factors.len()).filter(|p| !traced.contains(p)).collect();
        let traced_dims: Vec<usize> = traced.iter().map(|&p| self.factors[p].dim).collect();
        let kept_dims: Vec<usize> = kept.iter().map(|&p| self.factors[p].dim).collect();
        let traced_total: usize = traced_dims.iter().product();
        let kept_total: usize = kept_dims.iter().product();
        let strides = self.strides();

        let mut out = ComplexMatrix::zeros(kept_total, kept_total);
        let mut kept_row = vec![0usize; kept.len()];
        let mut kept_col = vec![0usize; kept.len()];
        let mut tr_coords = vec![0usize; traced.len()];
        for a in 0..kept_total {
            unrank(a, &kept_dims, &mut kept_row);
            let row_base: usize = kept_row.iter().zip(&kept).map(|(&c, &p)| c * strides[p]).sum();
            for b in 0..kept_total {
                unrank(b, &kept_dims, &mut kept_col);
                let col_base: usize =
                    kept_col.iter().zip(&kept).map(|(&c, &p)| c * strides[p]).sum();
                let mut acc = ZERO;
                for t in 0..traced_total {
                    unrank(t, &traced_dims, &mut tr_coords);
                    let off: usize =
                        tr_coords.iter().zip(&traced).map(|(&c, &p)| c * strides[p]).sum();
                    acc += m.get(row_base + off, col_base + off);
                }
                out.set(a, b, acc);
            }
        }
        Ok(out)
    }
}

/// Writes the mixed-radix digits of `index` over `dims` into `out`.
fn unrank(index: usize, dims: &[usize], out: &mut [usize]) {
    let mut rem = index;
    for i in (0..dims.len()).rev() {
        out[i] = rem % dims[i];
        rem /= dims[i];
    }
}
