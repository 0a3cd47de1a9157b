//! Normalization operators: block-diagonal over remaining clock readings,
//! acting on the system factor only.
//!
//! An operator N_t^(X) stores one positive invertible block per
//! remaining-clock tuple; undeclared tuples act as identity, and an optional
//! uniform block covers every tuple without enumeration. Validation reports
//! positivity, invertibility, and boundary-time identity without failing.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::history::{ClockTuple, ConditionedState};
use crate::linalg::{hermitian_eig, matrix_inverse};
use crate::tensor::ComplexMatrix;
use crate::Complex64;

/// Error type for normalization-operator application.
#[derive(Debug, Clone, PartialEq)]
pub enum NormError {
    /// Branch dimension is not a multiple of the block dimension.
    SystemDimMismatch { branch_dim: usize, system_dim: usize },
    /// A block is not square or has the wrong dimension.
    BlockDimMismatch { expected: usize, found_rows: usize, found_cols: usize },
    /// A block could not be inverted.
    NotInvertible { detail: String },
}

impl fmt::Display for NormError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormError::SystemDimMismatch { branch_dim, system_dim } => write!(
                f,
                "branch dimension {branch_dim} is not a multiple of system dimension {system_dim}"
            ),
            NormError::BlockDimMismatch { expected, found_rows, found_cols } => write!(
                f,
                "normalization block is {found_rows}x{found_cols}, expected {expected}x{expected}"
            ),
            NormError::NotInvertible { detail } => {
                write!(f, "normalization block not invertible: {detail}")
            }
        }
    }
}

impl core::error::Error for NormError {}

/// Block-diagonal normalization operator N_t^(X): one block per
/// remaining-clock tuple, each acting on the system factor and trivially on
/// ancillas.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationOperator {
    agent: usize,
    time: usize,
    system_dim: usize,
    uniform_block: Option<ComplexMatrix>,
    blocks: BTreeMap<ClockTuple, ComplexMatrix>,
}

impl NormalizationOperator {
    /// Identity operator for one agent and time.
    pub fn identity(agent: usize, time: usize, system_dim: usize) -> Self {
        Self { agent, time, system_dim, uniform_block: None, blocks: BTreeMap::new() }
    }

    /// Operator applying the same block at every remaining-clock tuple.
    pub fn uniform(agent: usize, time: usize, block: ComplexMatrix) -> Self {
        assert!(block.is_square(), "normalization blocks are square");
        let system_dim = block.rows();
        Self { agent, time, system_dim, uniform_block: Some(block), blocks: BTreeMap::new() }
    }

    /// Declares the block at one remaining-clock tuple, overriding the
    /// uniform block there.
    pub fn with_block(mut self, tuple: ClockTuple, block: ComplexMatrix) -> Self {
        assert_eq!(block.rows(), self.system_dim, "block dimension fixed per operator");
        assert_eq!(block.cols(), self.system_dim, "block dimension fixed per operator");
        self.blocks.insert(tuple, block);
        self
    }

    /// Agent whose clock was conditioned on.
    pub fn agent(&self) -> usize {
        self.agent
    }

    /// Conditioned time.
    pub fn time(&self) -> usize {
        self.time
    }

    /// Dimension of the system factor the blocks act on.
    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    /// The block acting at one remaining-clock tuple.
    pub fn block_at(&self, tuple: &ClockTuple) -> ComplexMatrix {
        if let Some(b) = self.blocks.get(tuple) {
            return b.clone();
        }
        if let Some(b) = &self.uniform_block {
            return b.clone();
        }
        ComplexMatrix::identity(self.system_dim)
    }

    /// Every explicitly declared block, uniform first (keyed by `None`).
    pub fn declared_blocks(&self) -> Vec<(Option<&ClockTuple>, &ComplexMatrix)> {
        let mut out = Vec::new();
        if let Some(b) = &self.uniform_block {
            out.push((None, b));
        }
        for (t, b) in &self.blocks {
            out.push((Some(t), b));
        }
        out
    }

    /// True when no block differs from the identity beyond `tol`.
    pub fn is_identity(&self, tol: f64) -> bool {
        let id = ComplexMatrix::identity(self.system_dim);
        self.declared_blocks().iter().all(|(_, b)| b.max_diff(&id) <= tol)
    }

    /// Applies the operator to a conditioned state: each term's system
    /// factor is hit by the block for its tuple, ancillas untouched.
    pub fn apply(&self, state: &ConditionedState) -> Result<ConditionedState, NormError> {
        let branch_dim = state.branch_dim();
        if branch_dim % self.system_dim != 0 {
            return Err(NormError::SystemDimMismatch { branch_dim, system_dim: self.system_dim });
        }
        let ancilla_dim = branch_dim / self.system_dim;
        let mut out = state.clone();
        for (tuple, vector) in out.terms_mut() {
            let block = match self.blocks.get(tuple).or(self.uniform_block.as_ref()) {
                Some(b) => b,
                None => continue,
            };
            *vector = apply_to_leading_factor(block, vector, ancilla_dim)?;
        }
        Ok(out)
    }

    /// The inverse operator, block by block.
    pub fn inverse(&self) -> Result<NormalizationOperator, NormError> {
        let invert = |b: &ComplexMatrix| {
            matrix_inverse(b).map_err(|e| NormError::NotInvertible { detail: format!("{e}") })
        };
        let uniform_block = match &self.uniform_block {
            Some(b) => Some(invert(b)?),
            None => None,
        };
        let mut blocks = BTreeMap::new();
        for (t, b) in &self.blocks {
            blocks.insert(t.clone(), invert(b)?);
        }
        Ok(NormalizationOperator {
            agent: self.agent,
            time: self.time,
            system_dim: self.system_dim,
            uniform_block,
            blocks,
        })
    }
}

/// Applies `block` to the leading factor of `vector`, viewed as a
/// (block dimension × trailing dimension) array in row-major order.
fn apply_to_leading_factor(
    block: &ComplexMatrix,
    vector: &[Complex64],
    trailing_dim: usize,
) -> Result<Vec<Complex64>, NormError> {
    let d = block.rows();
    if !block.is_square() || d * trailing_dim != vector.len() {
        return Err(NormError::BlockDimMismatch {
            expected: vector.len() / trailing_dim.max(1),
            found_rows: block.rows(),
            found_cols: block.cols(),
        });
    }
    let mut out = vec![crate::ZERO; vector.len()];
    for s in 0..d {
        for sp in 0..d {
            let c = block.get(s, sp);
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            for a in 0..trailing_dim {
                out[s * trailing_dim + a] += c * vector[sp * trailing_dim + a];
            }
        }
    }
    Ok(out)
}

/// One defect found while validating a normalization operator.
#[derive(Debug, Clone, PartialEq)]
pub enum NormIssue {
    /// A block is not Hermitian positive definite.
    NonPositiveBlock { tuple: Option<ClockTuple>, min_eigenvalue: f64, hermiticity_residual: f64 },
    /// A block's smallest singular value is below the invertibility floor.
    NonInvertibleBlock { tuple: Option<ClockTuple>, min_singular: f64 },
    /// The operator sits at a boundary time but is not the identity.
    BoundaryNotIdentity { time: usize, residual: f64 },
}

impl fmt::Display for NormIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tuple_str = |t: &Option<ClockTuple>| match t {
            Some(t) => format!("tuple {t}"),
            None => String::from("uniform block"),
        };
        match self {
            NormIssue::NonPositiveBlock { tuple, min_eigenvalue, hermiticity_residual } => write!(
                f,
                "{}: not positive (min eigenvalue {min_eigenvalue:.3e}, hermiticity residual {hermiticity_residual:.3e})",
                tuple_str(tuple)
            ),
            NormIssue::NonInvertibleBlock { tuple, min_singular } => write!(
                f,
                "{}: not invertible (min singular value {min_singular:.3e})",
                tuple_str(tuple)
            ),
            NormIssue::BoundaryNotIdentity { time, residual } => write!(
                f,
                "boundary time {time}: differs from identity by {residual:.3e}"
            ),
        }
    }
}

/// Validation outcome for one normalization operator; empty issues means the
/// operator satisfies positivity, invertibility, and boundary identity.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationReport {
    pub agent: usize,
    pub time: usize,
    pub issues: Vec<NormIssue>,
}

impl NormalizationReport {
    /// True when no defect was found.
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Invertibility floor for singular values.
pub const MIN_SINGULAR: f64 = 1e-12;

/// Checks one operator: every declared block must be Hermitian positive
/// definite and invertible, and at times {0, 1, T_X−1, T_X} the operator
/// must be the identity. Defects are reported, not raised.
pub fn validate(op: &NormalizationOperator, final_time: usize) -> NormalizationReport {
    let mut issues = Vec::new();
    for (tuple, block) in op.declared_blocks() {
        let herm_residual = block.hermiticity_residual().expect("blocks are square");
        let symmetrized = block.add(&block.dagger()).scale(Complex64::new(0.5, 0.0));
        let min_eig = match hermitian_eig(&symmetrized) {
            Ok(eig) => eig.values[0],
            Err(_) => f64::NEG_INFINITY,
        };
        if herm_residual > 1e-10 || min_eig <= 0.0 {
            issues.push(NormIssue::NonPositiveBlock {
                tuple: tuple.cloned(),
                min_eigenvalue: min_eig,
                hermiticity_residual: herm_residual,
            });
        }
        let gram = block.dagger().mul(block);
        let min_singular = match hermitian_eig(&gram) {
            Ok(eig) => libm::sqrt(eig.values[0].max(0.0)),
            Err(_) => 0.0,
        };
        if min_singular < MIN_SINGULAR {
            issues.push(NormIssue::NonInvertibleBlock { tuple: tuple.cloned(), min_singular });
        }
    }
    let t = op.time();
    let boundary =
        t == 0 || t == 1 || t + 1 == final_time || t == final_time;
    if boundary && !op.is_identity(1e-12) {
        let id = ComplexMatrix::identity(op.system_dim());
        let residual = op
            .declared_blocks()
            .iter()
            .map(|(_, b)| b.max_diff(&id))
            .fold(0.0_f64, f64::max);
        issues.push(NormIssue::BoundaryNotIdentity { time: t, residual });
    }
    NormalizationReport { agent: op.agent(), time: op.time(), issues }
}

/// Two-clock example with one clock ticking at half speed: branches
/// (t_A, ⌊t_A/2⌋) for t_A = 0…5, trivial system. The slow agent's interior
/// view holds two terms, so its normalization block is 1/√2; the fast
/// agent's views are already unit vectors.
///
/// Returns the history state and per-agent, per-time normalization
/// operators, indexed `[agent][time]`.
pub fn two_speed_example() -> (crate::history::HistoryState, Vec<Vec<NormalizationOperator>>) {
    use crate::history::{ClockTuple, HistoryState};
    use crate::tensor::DimLayout;

    let final_a = 5;
    let final_b = 2;
    let layout = DimLayout::new(&[("cA", final_a + 1), ("cB", final_b + 1), ("S", 1)])
        .expect("valid layout");
    let mut hs = HistoryState::new(layout, vec![final_a, final_b]).expect("valid final times");
    for t_a in 0..=final_a {
        let tuple = ClockTuple::new(vec![t_a, t_a / 2]);
        hs.add_branch(tuple, vec![Complex64::new(1.0, 0.0)]).expect("in-range branch");
    }

    let half = ComplexMatrix::from_real(1, 1, &[1.0 / libm::sqrt(2.0)]).expect("1x1 block");
    let ops_a: Vec<NormalizationOperator> =
        (0..=final_a).map(|t| NormalizationOperator::identity(0, t, 1)).collect();
    let ops_b: Vec<NormalizationOperator> = (0..=final_b)
        .map(|t| {
            if t > 0 && t < final_b {
                NormalizationOperator::uniform(1, t, half.clone())
            } else {
                NormalizationOperator::identity(1, t, 1)
            }
        })
        .collect();
    (hs, vec![ops_a, ops_b])
}
