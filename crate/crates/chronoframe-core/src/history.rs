//! Multi-clock history states, conditioning on clock readings, and
//! evolution matrices.
//!
//! A history state is a sparse sum Σ_t⃗ |t₁, …, t_N⟩_clocks ⊗ |ψ(t⃗)⟩ over
//! clock-reading tuples; absent tuples carry zero amplitude. Conditioning on
//! one agent's reading produces that agent's raw (unnormalized) view on the
//! remaining clocks and the system; the per-time evolution matrix is
//! assembled by probing a scenario builder with computational basis inputs.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::InnerProduct;
use crate::norm::NormalizationOperator;
use crate::tensor::{ComplexMatrix, DimLayout};
use crate::{Complex64, ZERO};
use alloc::collections::BTreeMap;

/// Error type for history-state operations.
#[derive(Debug, Clone, PartialEq)]
pub enum HistoryError {
    /// A clock reading exceeded the agent's final time.
    ReadingOutOfRange { agent: usize, reading: usize, final_time: usize },
    /// The agent index exceeded the number of clocks.
    UnknownAgent { agent: usize, agents: usize },
    /// A branch vector's length disagreed with the layout.
    BranchDimMismatch { expected: usize, found: usize },
    /// Two states with different layouts or final times were combined.
    LayoutMismatch,
    /// A tuple's length disagreed with the number of clocks.
    TupleLength { expected: usize, found: usize },
    /// A builder was given the wrong number of agent operators.
    OperatorCount { expected: usize, found: usize },
    /// An agent operator's dimension disagreed with its slot.
    OperatorDim { agent: usize, expected: usize, found: usize },
    /// A conditioned vector was zero where a state was required.
    ZeroConditionedState { agent: usize, time: usize },
    /// The boundary branch (all zeros or all final) is missing.
    MissingBoundaryBranch { all_final: bool },
    /// A normalization operator failed to apply.
    Normalization(String),
}

impl fmt::Display for HistoryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HistoryError::ReadingOutOfRange { agent, reading, final_time } => write!(
                f,
                "clock reading {reading} for agent {agent} exceeds final time {final_time}"
            ),
            HistoryError::UnknownAgent { agent, agents } => {
                write!(f, "agent index {agent} out of range (have {agents})")
            }
            HistoryError::BranchDimMismatch { expected, found } => {
                write!(f, "branch vector length {found}, expected {expected}")
            }
            HistoryError::LayoutMismatch => write!(f, "history states have different layouts"),
            HistoryError::TupleLength { expected, found } => {
                write!(f, "clock tuple length {found}, expected {expected}")
            }
            HistoryError::OperatorCount { expected, found } => {
                write!(f, "expected {expected} agent operators, found {found}")
            }
            HistoryError::OperatorDim { agent, expected, found } => {
                write!(f, "agent {agent} operator is {found}-dimensional, slot needs {expected}")
            }
            HistoryError::ZeroConditionedState { agent, time } => {
                write!(f, "conditioned state of agent {agent} at time {time} is zero")
            }
            HistoryError::MissingBoundaryBranch { all_final } => {
                let which = if *all_final { "all-final" } else { "all-zeros" };
                write!(f, "history state lacks the {which} branch")
            }
            HistoryError::Normalization(msg) => write!(f, "normalization failure: {msg}"),
        }
    }
}

impl core::error::Error for HistoryError {}

/// Ordered clock readings, one per agent. Orders lexicographically, which
/// makes branch maps deterministic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ClockTuple {
    readings: Vec<usize>,
}

impl ClockTuple {
    /// Builds a tuple from per-agent readings.
    pub fn new(readings: Vec<usize>) -> Self {
        Self { readings }
    }

    /// The readings in agent order.
    pub fn readings(&self) -> &[usize] {
        &self.readings
    }

    /// Number of clocks.
    pub fn len(&self) -> usize {
        self.readings.len()
    }

    /// True for the empty tuple (zero clocks remaining).
    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }

    /// Reading of one agent's clock.
    pub fn reading(&self, agent: usize) -> usize {
        self.readings[agent]
    }

    /// Tuple with the given agent's reading removed (for conditioning).
    pub fn without(&self, agent: usize) -> ClockTuple {
        let mut readings = Vec::with_capacity(self.readings.len() - 1);
        for (i, &r) in self.readings.iter().enumerate() {
            if i != agent {
                readings.push(r);
            }
        }
        ClockTuple { readings }
    }
}

impl fmt::Display for ClockTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, r) in self.readings.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, ")")
    }
}

/// Sparse multi-clock history state.
///
/// `layout` lists the clock factors first (one per agent, labels `c1…cN`),
/// then the system factors, then the per-agent ancilla factors. Branch
/// vectors live on the non-clock part of the layout.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryState {
    layout: DimLayout,
    final_times: Vec<usize>,
    branches: BTreeMap<ClockTuple, Vec<Complex64>>,
}

impl HistoryState {
    /// Creates an empty history state over the given layout. The layout's
    /// first `final_times.len()` factors are the clocks; each final time must
    /// fit inside its clock dimension.
    pub fn new(layout: DimLayout, final_times: Vec<usize>) -> Result<Self, HistoryError> {
        let n = final_times.len();
        assert!(layout.len() >= n, "layout must contain one factor per clock");
        for (agent, &t) in final_times.iter().enumerate() {
            let dim = layout.factors()[agent].dim();
            if t >= dim {
                return Err(HistoryError::ReadingOutOfRange {
                    agent,
                    reading: t,
                    final_time: dim.saturating_sub(1),
                });
            }
        }
        Ok(Self { layout, final_times, branches: BTreeMap::new() })
    }

    /// Full layout: clocks, then system, then ancillas.
    pub fn layout(&self) -> &DimLayout {
        &self.layout
    }

    /// Number of agents (clocks).
    pub fn agent_count(&self) -> usize {
        self.final_times.len()
    }

    /// Per-agent final times T_X.
    pub fn final_times(&self) -> &[usize] {
        &self.final_times
    }

    /// Dimension of one agent's clock space.
    pub fn clock_dim(&self, agent: usize) -> usize {
        self.layout.factors()[agent].dim()
    }

    /// Dimension of the branch vectors (system ⊗ ancillas).
    pub fn branch_dim(&self) -> usize {
        self.layout.factors()[self.final_times.len()..].iter().map(|f| f.dim()).product()
    }

    /// The branch map, keyed by clock tuple.
    pub fn branches(&self) -> &BTreeMap<ClockTuple, Vec<Complex64>> {
        &self.branches
    }

    /// Branch vector at a tuple, if present.
    pub fn branch(&self, tuple: &ClockTuple) -> Option<&Vec<Complex64>> {
        self.branches.get(tuple)
    }

    /// Adds `vector` into the branch at `tuple`, accumulating with any
    /// existing amplitude there.
    pub fn add_branch(&mut self, tuple: ClockTuple, vector: Vec<Complex64>) -> Result<(), HistoryError> {
        if tuple.len() != self.final_times.len() {
            return Err(HistoryError::TupleLength {
                expected: self.final_times.len(),
                found: tuple.len(),
            });
        }
        for (agent, &r) in tuple.readings().iter().enumerate() {
            if r > self.final_times[agent] {
                return Err(HistoryError::ReadingOutOfRange {
                    agent,
                    reading: r,
                    final_time: self.final_times[agent],
                });
            }
        }
        let expected = self.branch_dim();
        if vector.len() != expected {
            return Err(HistoryError::BranchDimMismatch { expected, found: vector.len() });
        }
        match self.branches.get_mut(&tuple) {
            Some(existing) => {
                for (x, y) in existing.iter_mut().zip(&vector) {
                    *x += y;
                }
            }
            None => {
                self.branches.insert(tuple, vector);
            }
        }
        Ok(())
    }

    /// Removes branches whose vector is exactly zero, so that absence and
    /// zero amplitude coincide.
    pub fn prune_zero_branches(&mut self) {
        self.branches.retain(|_, v| v.iter().any(|z| z.re != 0.0 || z.im != 0.0));
    }

    /// Inner product ⟨⟨a|b⟩⟩ as a sum over shared clock tuples.
    pub fn inner(&self, other: &HistoryState) -> Result<Complex64, HistoryError> {
        if self.layout != other.layout || self.final_times != other.final_times {
            return Err(HistoryError::LayoutMismatch);
        }
        let mut acc = ZERO;
        for (tuple, v) in &self.branches {
            if let Some(w) = other.branches.get(tuple) {
                acc += v.inner(w);
            }
        }
        Ok(acc)
    }

    /// Norm of the history state.
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.inner(self).expect("same layout").re)
    }

    /// Checks the structural invariants: boundary branches present at the
    /// all-zeros and all-final tuples and no stored zero branch vectors.
    pub fn validate_boundary_branches(&self) -> Result<(), HistoryError> {
        let zeros = ClockTuple::new(vec![0; self.final_times.len()]);
        if !self.branches.contains_key(&zeros) {
            return Err(HistoryError::MissingBoundaryBranch { all_final: false });
        }
        let finals = ClockTuple::new(self.final_times.clone());
        if !self.branches.contains_key(&finals) {
            return Err(HistoryError::MissingBoundaryBranch { all_final: true });
        }
        Ok(())
    }

    /// Raw conditioning ⟨t_X|Ψ⟩⟩: collects every branch whose `agent` clock
    /// reads `t` onto the remaining clocks. The result may be unnormalized
    /// or zero.
    pub fn condition(&self, agent: usize, t: usize) -> Result<ConditionedState, HistoryError> {
        let agents = self.final_times.len();
        if agent >= agents {
            return Err(HistoryError::UnknownAgent { agent, agents });
        }
        if t > self.final_times[agent] {
            return Err(HistoryError::ReadingOutOfRange {
                agent,
                reading: t,
                final_time: self.final_times[agent],
            });
        }
        let remaining_clock_dims: Vec<usize> = (0..agents)
            .filter(|&i| i != agent)
            .map(|i| self.layout.factors()[i].dim())
            .collect();
        let mut terms = BTreeMap::new();
        for (tuple, vector) in &self.branches {
            if tuple.reading(agent) == t {
                let key = tuple.without(agent);
                match terms.get_mut(&key) {
                    None => {
                        terms.insert(key, vector.clone());
                    }
                    Some(existing) => {
                        let existing: &mut Vec<Complex64> = existing;
                        for (x, y) in existing.iter_mut().zip(vector) {
                            *x += y;
                        }
                    }
                }
            }
        }
        Ok(ConditionedState { remaining_clock_dims, branch_dim: self.branch_dim(), terms })
    }
}

/// One agent's raw view after conditioning on their clock reading: a sparse
/// vector on remaining-clocks ⊗ system ⊗ ancillas, keyed by the remaining
/// agents' readings (original agent order with the conditioned clock
/// removed).
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedState {
    remaining_clock_dims: Vec<usize>,
    branch_dim: usize,
    terms: BTreeMap<ClockTuple, Vec<Complex64>>,
}

impl ConditionedState {
    /// Builds a conditioned state directly from parts.
    pub fn from_parts(
        remaining_clock_dims: Vec<usize>,
        branch_dim: usize,
        terms: BTreeMap<ClockTuple, Vec<Complex64>>,
    ) -> Self {
        Self { remaining_clock_dims, branch_dim, terms }
    }

    /// Dimensions of the remaining clocks.
    pub fn remaining_clock_dims(&self) -> &[usize] {
        &self.remaining_clock_dims
    }

    /// Dimension of the system ⊗ ancilla part.
    pub fn branch_dim(&self) -> usize {
        self.branch_dim
    }

    /// The sparse terms keyed by remaining-clock tuples.
    pub fn terms(&self) -> &BTreeMap<ClockTuple, Vec<Complex64>> {
        &self.terms
    }

    /// Mutable access for in-place block operations.
    pub fn terms_mut(&mut self) -> &mut BTreeMap<ClockTuple, Vec<Complex64>> {
        &mut self.terms
    }

    /// True when every amplitude is zero.
    pub fn is_zero(&self, tol: f64) -> bool {
        self.norm() <= tol
    }

    /// Total dimension of the dense representation.
    pub fn dense_dim(&self) -> usize {
        self.remaining_clock_dims.iter().product::<usize>() * self.branch_dim
    }

    /// Dense vector on remaining-clocks ⊗ system ⊗ ancillas, remaining
    /// clocks ordered as in the original layout.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.dense_dim()];
        for (tuple, vector) in &self.terms {
            let mut base = 0usize;
            for (i, &r) in tuple.readings().iter().enumerate() {
                base = base * self.remaining_clock_dims[i] + r;
            }
            let offset = base * self.branch_dim;
            for (i, &z) in vector.iter().enumerate() {
                out[offset + i] += z;
            }
        }
        out
    }

    /// Applies one matrix to the system ⊗ ancilla part of every term.
    pub fn apply_branch_op(&self, op: &ComplexMatrix) -> ConditionedState {
        let mut terms = BTreeMap::new();
        for (tuple, vector) in &self.terms {
            terms.insert(tuple.clone(), op.apply(vector));
        }
        ConditionedState {
            remaining_clock_dims: self.remaining_clock_dims.clone(),
            branch_dim: op.rows(),
            terms,
        }
    }
}

impl InnerProduct for ConditionedState {
    fn inner(&self, other: &Self) -> Complex64 {
        let mut acc = ZERO;
        for (tuple, v) in &self.terms {
            if let Some(w) = other.terms.get(tuple) {
                acc += v.inner(w);
            }
        }
        acc
    }

    fn axpy(&mut self, c: Complex64, other: &Self) {
        for (tuple, w) in &other.terms {
            match self.terms.get_mut(tuple) {
                Some(v) => {
                    for (x, y) in v.iter_mut().zip(w) {
                        *x += c * y;
                    }
                }
                None => {
                    self.terms.insert(tuple.clone(), w.iter().map(|y| c * y).collect());
                }
            }
        }
    }

    fn scale_in_place(&mut self, c: Complex64) {
        for v in self.terms.values_mut() {
            for x in v.iter_mut() {
                *x *= c;
            }
        }
    }
}

/// Scenario description: spaces, times of action, a linear constructor from
/// (input state, agent operators) to a history state, declared normalization
/// operators, and optionally declared candidate step unitaries.
pub trait ScenarioBuilder {
    /// Short scenario name for reports.
    fn name(&self) -> &str;

    /// Number of agents.
    fn agent_count(&self) -> usize;

    /// Per-agent final times T_X.
    fn final_times(&self) -> Vec<usize>;

    /// Layout of the branch space: system factors then per-agent ancilla
    /// factors (labels fixed per scenario).
    fn system_layout(&self) -> DimLayout;

    /// Labels of the system factors (the part normalization blocks act on).
    fn system_factor_labels(&self) -> Vec<String>;

    /// Labels of the factors forming one agent's operand slot, in layout
    /// order.
    fn slot_labels(&self, agent: usize) -> Vec<String>;

    /// Label of one agent's ancilla factor, when that agent has one.
    fn ancilla_label(&self, agent: usize) -> Option<String>;

    /// Declared time of action t*_X.
    fn time_of_action(&self, agent: usize) -> usize;

    /// The agent operators the scenario was constructed with, used when a
    /// caller does not supply its own.
    fn default_ops(&self) -> Vec<ComplexMatrix>;

    /// Builds the history state for one input vector on system ⊗ ancillas
    /// and one operator per agent (each on that agent's slot).
    fn construct(
        &self,
        input: &[Complex64],
        ops: &[ComplexMatrix],
    ) -> Result<HistoryState, HistoryError>;

    /// Declared normalization operator of one agent at one time.
    fn normalization(&self, agent: usize, time: usize) -> NormalizationOperator;

    /// Declared candidate step unitary 𝒰_X(time, time−1) on
    /// remaining-clocks ⊗ system ⊗ ancillas, when the scenario ships one.
    fn candidate_step(
        &self,
        _agent: usize,
        _time: usize,
        _ops: &[ComplexMatrix],
    ) -> Option<ComplexMatrix> {
        None
    }

    /// Dimension of one agent's operand slot.
    fn op_slot_dim(&self, agent: usize) -> usize {
        let layout = self.system_layout();
        self.slot_labels(agent)
            .iter()
            .map(|l| layout.dim_of(l).expect("slot label in layout"))
            .product()
    }

    /// Dimension of the branch space (system ⊗ ancillas).
    fn branch_dim(&self) -> usize {
        self.system_layout().total_dim()
    }

    /// Embeds an operator on one agent's slot into the branch space.
    fn embed_slot_op(&self, agent: usize, op: &ComplexMatrix) -> ComplexMatrix {
        let layout = self.system_layout();
        let labels = self.slot_labels(agent);
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        layout.embed(op, &refs).expect("slot labels consistent with layout")
    }
}

/// The raw conditioned state with a normalization operator applied, checked
/// to be nonzero.
pub fn perspectival_state(
    hs: &HistoryState,
    agent: usize,
    t: usize,
    n_op: &NormalizationOperator,
) -> Result<ConditionedState, HistoryError> {
    let raw = hs.condition(agent, t)?;
    if raw.is_zero(0.0) {
        return Err(HistoryError::ZeroConditionedState { agent, time: t });
    }
    n_op.apply(&raw).map_err(|e| HistoryError::Normalization(alloc::format!("{e}")))
}

/// Inner product of two history states (free-function form of
/// [`HistoryState::inner`]).
pub fn history_inner(a: &HistoryState, b: &HistoryState) -> Result<Complex64, HistoryError> {
    a.inner(b)
}

/// Evolution matrix M_t⃗ relating the input to the branch at `tuple`,
/// assembled column-by-column by probing `builder` with computational basis
/// inputs. Absent branches yield zero columns.
pub fn evolution_matrix(
    builder: &dyn ScenarioBuilder,
    ops: &[ComplexMatrix],
    tuple: &ClockTuple,
) -> Result<ComplexMatrix, HistoryError> {
    let dim = builder.branch_dim();
    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut input = vec![ZERO; dim];
        input[i] = Complex64::new(1.0, 0.0);
        let hs = builder.construct(&input, ops)?;
        match hs.branch(tuple) {
            Some(v) => columns.push(v.clone()),
            None => columns.push(vec![ZERO; dim]),
        }
    }
    ComplexMatrix::from_columns(&columns)
        .map_err(|_| HistoryError::BranchDimMismatch { expected: dim, found: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::two_speed_example;
    use crate::tensor::DimLayout;
    use crate::ONE;
    use alloc::string::ToString;

    fn small_state() -> HistoryState {
        let layout =
            DimLayout::new(&[("c1", 3), ("c2", 2), ("S", 2)]).expect("valid layout");
        HistoryState::new(layout, vec![2, 1]).expect("valid final times")
    }

    #[test]
    fn clock_tuples_order_lexicographically_and_display() {
        let a = ClockTuple::new(vec![0, 1]);
        let b = ClockTuple::new(vec![1, 0]);
        assert!(a < b);
        assert_eq!(a.to_string(), "(0,1)");
        assert_eq!(a.without(0), ClockTuple::new(vec![1]));
        assert_eq!(a.without(1), ClockTuple::new(vec![0]));
    }

    #[test]
    fn add_branch_accumulates_amplitudes() {
        let mut hs = small_state();
        let t = ClockTuple::new(vec![0, 0]);
        hs.add_branch(t.clone(), vec![ONE, ZERO]).unwrap();
        hs.add_branch(t.clone(), vec![Complex64::new(2.0, 0.0), ONE]).unwrap();
        assert_eq!(hs.branch(&t).unwrap()[0], Complex64::new(3.0, 0.0));
        assert_eq!(hs.branch(&t).unwrap()[1], ONE);
    }

    #[test]
    fn pruning_removes_exactly_cancelled_branches() {
        let mut hs = small_state();
        let t = ClockTuple::new(vec![1, 1]);
        hs.add_branch(t.clone(), vec![ONE, ZERO]).unwrap();
        hs.add_branch(t.clone(), vec![-ONE, ZERO]).unwrap();
        hs.prune_zero_branches();
        assert!(hs.branch(&t).is_none());
    }

    #[test]
    fn out_of_range_readings_are_rejected() {
        let mut hs = small_state();
        let err = hs.add_branch(ClockTuple::new(vec![0, 2]), vec![ONE, ZERO]).unwrap_err();
        assert_eq!(err, HistoryError::ReadingOutOfRange { agent: 1, reading: 2, final_time: 1 });
        let err = hs.condition(1, 2).unwrap_err();
        assert_eq!(err, HistoryError::ReadingOutOfRange { agent: 1, reading: 2, final_time: 1 });
        let err = hs.condition(2, 0).unwrap_err();
        assert_eq!(err, HistoryError::UnknownAgent { agent: 2, agents: 2 });
    }

    #[test]
    fn boundary_branch_validation_flags_missing_ends() {
        let mut hs = small_state();
        hs.add_branch(ClockTuple::new(vec![0, 0]), vec![ONE, ZERO]).unwrap();
        assert_eq!(
            hs.validate_boundary_branches().unwrap_err(),
            HistoryError::MissingBoundaryBranch { all_final: true }
        );
        hs.add_branch(ClockTuple::new(vec![2, 1]), vec![ONE, ZERO]).unwrap();
        assert!(hs.validate_boundary_branches().is_ok());
    }

    #[test]
    fn half_speed_clock_conditioning_matches_known_views() {
        let (hs, _) = two_speed_example();
        let fast_mid = hs.condition(0, 2).unwrap();
        assert_eq!(fast_mid.terms().len(), 1);
        assert_eq!(fast_mid.terms().iter().next().unwrap().0, &ClockTuple::new(vec![1]));
        assert!((fast_mid.norm() - 1.0).abs() < 1e-15);

        let slow_start = hs.condition(1, 0).unwrap();
        let dense = slow_start.to_dense();
        assert_eq!(dense.len(), 6);
        assert_eq!(dense[0], ONE);
        assert_eq!(dense[1], ONE);
        assert!((slow_start.norm() - libm::sqrt(2.0)).abs() < 1e-15);
    }

    #[test]
    fn conditioning_on_each_time_reconstructs_the_state() {
        let (hs, _) = two_speed_example();
        for agent in 0..hs.agent_count() {
            let mut rebuilt = HistoryState::new(hs.layout().clone(), hs.final_times().to_vec())
                .expect("same layout");
            for t in 0..=hs.final_times()[agent] {
                let cond = hs.condition(agent, t).unwrap();
                for (rest, vector) in cond.terms() {
                    let mut readings = rest.readings().to_vec();
                    readings.insert(agent, t);
                    rebuilt.add_branch(ClockTuple::new(readings), vector.clone()).unwrap();
                }
            }
            rebuilt.prune_zero_branches();
            assert_eq!(&rebuilt, &hs);
        }
    }

    #[test]
    fn history_inner_sums_over_shared_tuples() {
        let (hs, _) = two_speed_example();
        let ip = history_inner(&hs, &hs).unwrap();
        assert_eq!(ip, Complex64::new(6.0, 0.0));

        let other = small_state();
        assert_eq!(hs.inner(&other).unwrap_err(), HistoryError::LayoutMismatch);
    }

    #[test]
    fn perspectival_state_rejects_zero_views() {
        let mut hs = small_state();
        hs.add_branch(ClockTuple::new(vec![0, 0]), vec![ONE, ZERO]).unwrap();
        hs.add_branch(ClockTuple::new(vec![2, 1]), vec![ONE, ZERO]).unwrap();
        let n = crate::norm::NormalizationOperator::identity(0, 1, 2);
        let err = perspectival_state(&hs, 0, 1, &n).unwrap_err();
        assert_eq!(err, HistoryError::ZeroConditionedState { agent: 0, time: 1 });
    }

    #[test]
    fn conditioned_state_dense_layout_orders_remaining_clocks_first() {
        let layout = DimLayout::new(&[("c1", 2), ("c2", 2), ("S", 2)]).expect("valid layout");
        let mut hs = HistoryState::new(layout, vec![1, 1]).expect("valid final times");
        hs.add_branch(ClockTuple::new(vec![0, 0]), vec![ONE, ZERO]).unwrap();
        hs.add_branch(ClockTuple::new(vec![0, 1]), vec![ZERO, Complex64::new(2.0, 0.0)]).unwrap();
        let cond = hs.condition(0, 0).unwrap();
        let dense = cond.to_dense();
        assert_eq!(dense.len(), 4);
        assert_eq!(dense[0], ONE);
        assert_eq!(dense[3], Complex64::new(2.0, 0.0));
    }

    #[test]
    fn conditioned_inner_product_is_sparse_overlap() {
        let layout = DimLayout::new(&[("c1", 2), ("c2", 3), ("S", 1)]).expect("valid layout");
        let mut hs = HistoryState::new(layout, vec![1, 2]).expect("valid final times");
        hs.add_branch(ClockTuple::new(vec![0, 0]), vec![ONE]).unwrap();
        hs.add_branch(ClockTuple::new(vec![0, 1]), vec![Complex64::new(0.0, 1.0)]).unwrap();
        hs.add_branch(ClockTuple::new(vec![1, 2]), vec![ONE]).unwrap();
        let a = hs.condition(0, 0).unwrap();
        let b = hs.condition(0, 1).unwrap();
        assert_eq!(a.inner(&a), Complex64::new(2.0, 0.0));
        assert_eq!(a.inner(&b), ZERO);

        let mut scaled = a.clone();
        scaled.scale_in_place(Complex64::new(0.0, 2.0));
        assert_eq!(a.inner(&scaled), Complex64::new(0.0, 4.0));

        let mut combo = a.clone();
        combo.axpy(ONE, &b);
        assert_eq!(combo.inner(&combo), Complex64::new(3.0, 0.0));
    }
}
