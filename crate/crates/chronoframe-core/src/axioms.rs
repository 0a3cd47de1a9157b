//! Axiom checks over scenario builders: boundary structure (S.1–S.2),
//! normalization conformance (N.1–N.3), input-independent step unitaries and
//! their composition (U.1–U.2), the time-of-action factorization (U.3), and
//! the affine-linearity restriction on induced processes.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::history::{
    perspectival_state, ClockTuple, ConditionedState, HistoryError, ScenarioBuilder,
};
use crate::linalg::{
    complete_to_unitary, complex_gaussian, gaussian_matrix, haar_unitary, least_squares,
    seeded_rng, InnerProduct,
};
use crate::norm::{validate, NormIssue, NormalizationOperator};
use crate::tensor::basis_vector;
use crate::tensor::ComplexMatrix;
use crate::{Complex64, DEFAULT_TOL, ZERO};

/// Residual norm below which a probed state is treated as linearly dependent
/// during span construction.
const SPAN_DROP_TOL: f64 = 1e-6;

/// Verdict of one axiom check, with witness data in `detail` (failing time,
/// failing input, residuals) when the check fails.
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomCheck {
    /// Axiom label, e.g. "S.1" or "affine linearity".
    pub axiom: String,
    /// Whether the check passed.
    pub passed: bool,
    /// Witness or summary text.
    pub detail: String,
}

impl AxiomCheck {
    fn pass(axiom: &str, detail: String) -> Self {
        Self { axiom: axiom.to_string(), passed: true, detail }
    }

    fn fail(axiom: &str, detail: String) -> Self {
        Self { axiom: axiom.to_string(), passed: false, detail }
    }
}

impl fmt::Display for AxiomCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "pass" } else { "FAIL" };
        write!(f, "{:<18} {verdict}  {}", self.axiom, self.detail)
    }
}

/// Aggregate verdict over the nine axioms plus the affine-linearity
/// restriction, in a fixed order.
#[derive(Debug, Clone)]
pub struct AxiomReport {
    scenario: String,
    checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    /// Name of the checked scenario.
    pub fn scenario(&self) -> &str {
        &self.scenario
    }

    /// All checks in report order.
    pub fn checks(&self) -> &[AxiomCheck] {
        &self.checks
    }

    /// True when every check passed.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Looks up one check by its axiom label.
    pub fn check(&self, axiom: &str) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.axiom == axiom)
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "axiom report for scenario `{}`", self.scenario)?;
        for check in &self.checks {
            writeln!(f, "  {check}")?;
        }
        Ok(())
    }
}

/// Failure while extracting input-independent step unitaries.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtractionError {
    /// Construction or conditioning failed.
    History(HistoryError),
    /// Gram matrices of the probed states at consecutive ticks disagree, so
    /// no input-independent unitary connects them (U.1 violation).
    GramMismatch { agent: usize, time: usize, residual: f64 },
    /// The canonically completed step fails to advance the probed states.
    AdvanceMismatch { agent: usize, time: usize, residual: f64 },
    /// Canonical completion to a unitary failed.
    Completion { agent: usize, time: usize },
    /// One normalization operator per tick in [0, T_X] is required.
    NormalizationCount { expected: usize, found: usize },
}

impl fmt::Display for ExtractionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractionError::History(e) => write!(f, "{e}"),
            ExtractionError::GramMismatch { agent, time, residual } => write!(
                f,
                "agent {agent}: Gram matrices at times {} and {time} differ by {residual:.3e}, no input-independent unitary exists",
                time - 1
            ),
            ExtractionError::AdvanceMismatch { agent, time, residual } => write!(
                f,
                "agent {agent}: completed step ({time}, {}) misses the probed states by {residual:.3e}",
                time - 1
            ),
            ExtractionError::Completion { agent, time } => {
                write!(f, "agent {agent}: unitary completion failed at time {time}")
            }
            ExtractionError::NormalizationCount { expected, found } => {
                write!(f, "need {expected} normalization operators, got {found}")
            }
        }
    }
}

impl core::error::Error for ExtractionError {}

impl From<HistoryError> for ExtractionError {
    fn from(e: HistoryError) -> Self {
        ExtractionError::History(e)
    }
}

/// One extracted step unitary 𝒰_X(t, t−1), stored as a dense unitary on the
/// occupied remaining-clock tuples ⊗ system ⊗ ancillas block and acting as
/// the identity on every other remaining-clock tuple.
#[derive(Debug, Clone)]
pub struct StepOperator {
    agent: usize,
    time: usize,
    tuples: Vec<ClockTuple>,
    branch_dim: usize,
    matrix: ComplexMatrix,
}

impl StepOperator {
    /// The conditioned agent.
    pub fn agent(&self) -> usize {
        self.agent
    }

    /// The step target time t (the operator maps tick t−1 to tick t).
    pub fn time(&self) -> usize {
        self.time
    }

    /// Remaining-clock tuples the dense block acts on, sorted.
    pub fn tuples(&self) -> &[ClockTuple] {
        &self.tuples
    }

    /// Dense unitary on tuples ⊗ system ⊗ ancillas.
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Dimension of the dense block.
    pub fn block_dim(&self) -> usize {
        self.tuples.len() * self.branch_dim
    }

    /// Applies the step: dense action on the stored block, identity on
    /// terms at other remaining-clock tuples.
    pub fn apply(&self, state: &ConditionedState) -> ConditionedState {
        let mut terms: BTreeMap<ClockTuple, Vec<Complex64>> = state
            .terms()
            .iter()
            .filter(|(tuple, _)| self.tuples.binary_search(tuple).is_err())
            .map(|(tuple, v)| (tuple.clone(), v.clone()))
            .collect();
        let sub = gather_block(state, &self.tuples, self.branch_dim);
        let out = self.matrix.apply(&sub);
        for (i, tuple) in self.tuples.iter().enumerate() {
            let block = &out[i * self.branch_dim..(i + 1) * self.branch_dim];
            if block.iter().any(|z| z.re != 0.0 || z.im != 0.0) {
                terms.insert(tuple.clone(), block.to_vec());
            }
        }
        ConditionedState::from_parts(
            state.remaining_clock_dims().to_vec(),
            self.branch_dim,
            terms,
        )
    }
}

/// One agent's perspectival trajectory: normalized states |ψ_X(t)⟩ for every
/// computational basis input at every tick, and the extracted step unitaries
/// connecting consecutive ticks.
#[derive(Debug, Clone)]
pub struct PerspectivalTrajectory {
    agent: usize,
    states: Vec<Vec<ConditionedState>>,
    steps: Vec<StepOperator>,
}

impl PerspectivalTrajectory {
    /// The conditioned agent.
    pub fn agent(&self) -> usize {
        self.agent
    }

    /// The agent's final time T_X.
    pub fn final_time(&self) -> usize {
        self.states.len() - 1
    }

    /// Perspectival states at tick `t`, one per computational basis input.
    pub fn states(&self, t: usize) -> &[ConditionedState] {
        &self.states[t]
    }

    /// All step operators; entry t−1 is 𝒰_X(t, t−1).
    pub fn steps(&self) -> &[StepOperator] {
        &self.steps
    }

    /// The step unitary 𝒰_X(time, time−1), for `time` in [1, T_X].
    pub fn step(&self, time: usize) -> &StepOperator {
        &self.steps[time - 1]
    }
}

/// All declared normalization operators of one agent, indexed by time.
pub fn builder_normalizations(
    builder: &dyn ScenarioBuilder,
    agent: usize,
) -> Vec<NormalizationOperator> {
    let final_time = builder.final_times()[agent];
    (0..=final_time).map(|t| builder.normalization(agent, t)).collect()
}

/// Normalized perspectival states for every computational basis input,
/// indexed `[time][input]`.
pub fn probe_states(
    builder: &dyn ScenarioBuilder,
    ops: &[ComplexMatrix],
    agent: usize,
    n_ops: &[NormalizationOperator],
) -> Result<Vec<Vec<ConditionedState>>, ExtractionError> {
    let agents = builder.agent_count();
    if agent >= agents {
        return Err(HistoryError::UnknownAgent { agent, agents }.into());
    }
    let final_time = builder.final_times()[agent];
    if n_ops.len() != final_time + 1 {
        return Err(ExtractionError::NormalizationCount {
            expected: final_time + 1,
            found: n_ops.len(),
        });
    }
    let dim = builder.branch_dim();
    let mut states: Vec<Vec<ConditionedState>> = vec![Vec::new(); final_time + 1];
    for i in 0..dim {
        let hs = builder.construct(&basis_vector(dim, i), ops)?;
        for (t, slot) in states.iter_mut().enumerate() {
            slot.push(perspectival_state(&hs, agent, t, &n_ops[t])?);
        }
    }
    Ok(states)
}

/// Sorted union of the remaining-clock tuples occupied by the given states.
fn occupied_tuples(families: &[&[ConditionedState]]) -> Vec<ClockTuple> {
    let mut set: BTreeSet<ClockTuple> = BTreeSet::new();
    for family in families {
        for state in *family {
            for tuple in state.terms().keys() {
                set.insert(tuple.clone());
            }
        }
    }
    set.into_iter().collect()
}

/// Concatenated per-tuple blocks of `state` over the sorted `tuples` list;
/// absent tuples contribute zeros. Every occupied tuple must be listed.
fn gather_block(
    state: &ConditionedState,
    tuples: &[ClockTuple],
    branch_dim: usize,
) -> Vec<Complex64> {
    let mut out = vec![ZERO; tuples.len() * branch_dim];
    for (tuple, v) in state.terms() {
        match tuples.binary_search(tuple) {
            Ok(i) => out[i * branch_dim..i * branch_dim + v.len()].copy_from_slice(v),
            Err(_) => {}
        }
    }
    out
}

/// Max entrywise difference between the Gram matrices of two state families.
fn gram_residual<T: InnerProduct>(a: &[T], b: &[T]) -> f64 {
    let mut residual = 0.0_f64;
    for i in 0..a.len() {
        for j in 0..=i {
            let d = (a[i].inner(&a[j]) - b[i].inner(&b[j])).norm();
            residual = residual.max(d);
        }
    }
    residual
}

/// Runs modified Gram–Schmidt on the domain family while mirroring every
/// elimination step on the range family, so that matching coefficients give
/// the input-independent isometry domain-span → range-span. Returns the
/// paired orthonormal bases.
fn paired_orthonormal_spans(
    domain: &[Vec<Complex64>],
    range: &[Vec<Complex64>],
) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let mut q_domain: Vec<Vec<Complex64>> = Vec::new();
    let mut q_range: Vec<Vec<Complex64>> = Vec::new();
    for (d0, r0) in domain.iter().zip(range) {
        let mut d = d0.clone();
        let mut r = r0.clone();
        for _pass in 0..2 {
            for (qd, qr) in q_domain.iter().zip(&q_range) {
                let overlap = qd.inner(&d);
                d.axpy(-overlap, qd);
                r.axpy(-overlap, qr);
            }
        }
        let norm = d.norm();
        if norm > SPAN_DROP_TOL {
            let scale = Complex64::new(1.0 / norm, 0.0);
            d.scale_in_place(scale);
            r.scale_in_place(scale);
            q_domain.push(d);
            q_range.push(r);
        }
    }
    (q_domain, q_range)
}

/// Builds the step unitaries from probed states: at each tick the Gram
/// criterion certifies an input-independent isometry, which is completed to
/// a unitary deterministically over the computational basis in index order.
fn steps_from_states(
    agent: usize,
    branch_dim: usize,
    states: &[Vec<ConditionedState>],
) -> Result<Vec<StepOperator>, ExtractionError> {
    let mut steps = Vec::with_capacity(states.len().saturating_sub(1));
    for time in 1..states.len() {
        let tuples = occupied_tuples(&[&states[time - 1], &states[time]]);
        let domain: Vec<Vec<Complex64>> =
            states[time - 1].iter().map(|s| gather_block(s, &tuples, branch_dim)).collect();
        let range: Vec<Vec<Complex64>> =
            states[time].iter().map(|s| gather_block(s, &tuples, branch_dim)).collect();

        let residual = gram_residual(&domain, &range);
        if residual > DEFAULT_TOL {
            return Err(ExtractionError::GramMismatch { agent, time, residual });
        }

        let (q_domain, q_range) = paired_orthonormal_spans(&domain, &range);
        let dim = tuples.len() * branch_dim;
        let domain_full = complete_to_unitary(&q_domain, dim)
            .map_err(|_| ExtractionError::Completion { agent, time })?;
        let range_full = complete_to_unitary(&q_range, dim)
            .map_err(|_| ExtractionError::Completion { agent, time })?;
        let matrix = range_full.mul(&domain_full.dagger());

        let mut advance = 0.0_f64;
        for (l, r) in domain.iter().zip(&range) {
            let mut diff = matrix.apply(l);
            diff.axpy(-crate::ONE, r);
            advance = advance.max(diff.norm());
        }
        if advance > DEFAULT_TOL {
            return Err(ExtractionError::AdvanceMismatch { agent, time, residual: advance });
        }

        steps.push(StepOperator { agent, time, tuples, branch_dim, matrix });
    }
    Ok(steps)
}

/// Extracts one agent's perspectival trajectory: probes every computational
/// basis input, certifies the Gram criterion at every tick (U.1), and
/// completes each step to a canonical unitary. Composition (U.2) then holds
/// on the probed states by construction.
pub fn extract_step_unitaries(
    builder: &dyn ScenarioBuilder,
    ops: &[ComplexMatrix],
    agent: usize,
    n_ops: &[NormalizationOperator],
) -> Result<PerspectivalTrajectory, ExtractionError> {
    let states = probe_states(builder, ops, agent, n_ops)?;
    let steps = steps_from_states(agent, builder.branch_dim(), &states)?;
    Ok(PerspectivalTrajectory { agent, states, steps })
}

/// Checks S.1 and S.2: the all-zeros branch reproduces |ψ⟩_S ⊗ |0⟩ on the
/// ancillas, no branch mixes boundary and interior readings, and the first
/// and last ticks repeat their neighbors.
pub fn check_boundaries(
    builder: &dyn ScenarioBuilder,
    ops: &[ComplexMatrix],
) -> Result<Vec<AxiomCheck>, HistoryError> {
    let layout = builder.system_layout();
    let system_labels = builder.system_factor_labels();
    let final_times = builder.final_times();
    let agents = builder.agent_count();
    let dim = builder.branch_dim();
    let zeros = ClockTuple::new(vec![0; agents]);
    let finals = ClockTuple::new(final_times.clone());
    let ones = ClockTuple::new(vec![1; agents]);
    let befores = ClockTuple::new(final_times.iter().map(|&t| t - 1).collect());

    let is_system: Vec<bool> = layout
        .factors()
        .iter()
        .map(|f| system_labels.iter().any(|l| l == f.label()))
        .collect();
    let system_dims: Vec<usize> = layout
        .factors()
        .iter()
        .zip(&is_system)
        .filter(|(_, &s)| s)
        .map(|(f, _)| f.dim())
        .collect();
    let system_dim: usize = system_dims.iter().product();

    let mut s1_witness: Option<String> = None;
    for s in 0..system_dim {
        let mut coords = vec![0usize; layout.len()];
        let mut rem = s;
        for (pos, &sys) in is_system.iter().enumerate().rev() {
            if sys {
                let d = layout.factors()[pos].dim();
                coords[pos] = rem % d;
                rem /= d;
            }
        }
        let flat = layout.index_of(&coords).expect("coords within layout");
        let input = basis_vector(dim, flat);
        let hs = builder.construct(&input, ops)?;
        let defect = match hs.branch(&zeros) {
            None => 1.0,
            Some(v) => max_entry_diff(v, &input),
        };
        if defect > DEFAULT_TOL {
            s1_witness =
                Some(format!("system basis input {s}: zero branch differs by {defect:.3e}"));
            break;
        }
    }
    let s1 = match s1_witness {
        None => AxiomCheck::pass(
            "S.1",
            format!("all-zeros branch equals ψ_S ⊗ |0⟩ for {system_dim} system basis inputs"),
        ),
        Some(w) => AxiomCheck::fail("S.1", w),
    };

    let mut s2_witness: Option<String> = None;
    'probe: for i in 0..dim {
        let hs = builder.construct(&basis_vector(dim, i), ops)?;
        for tuple in hs.branches().keys() {
            for agent in 0..agents {
                if tuple.reading(agent) == 0 && *tuple != zeros {
                    s2_witness = Some(format!(
                        "input {i}: branch {tuple} has clock {agent} at 0 but is not all-zeros"
                    ));
                    break 'probe;
                }
                if tuple.reading(agent) == final_times[agent] && *tuple != finals {
                    s2_witness = Some(format!(
                        "input {i}: branch {tuple} has clock {agent} final but is not all-final"
                    ));
                    break 'probe;
                }
            }
        }
        for (first, second, which) in
            [(&zeros, &ones, "first"), (&finals, &befores, "last")]
        {
            let defect = branch_diff(hs.branch(first), hs.branch(second), dim);
            if defect > DEFAULT_TOL {
                s2_witness = Some(format!(
                    "input {i}: {which} two synchronized branches differ by {defect:.3e}"
                ));
                break 'probe;
            }
        }
    }
    let s2 = match s2_witness {
        None => AxiomCheck::pass(
            "S.2",
            format!("boundary readings isolate the synchronized branches over {dim} basis inputs"),
        ),
        Some(w) => AxiomCheck::fail("S.2", w),
    };

    Ok(vec![s1, s2])
}

fn max_entry_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0_f64, f64::max)
}

fn branch_diff(a: Option<&Vec<Complex64>>, b: Option<&Vec<Complex64>>, dim: usize) -> f64 {
    let zero = vec![ZERO; dim];
    let a = a.map(|v| v.as_slice()).unwrap_or(&zero);
    let b = b.map(|v| v.as_slice()).unwrap_or(&zero);
    max_entry_diff(a, b)
}

/// Reshapes a mixed-radix vector over `dims` (row-major, first digit most
/// significant) into a matrix whose rows run over the `selected` digit
/// positions and whose columns run over the remaining positions in order.
fn matricize(v: &[Complex64], dims: &[usize], selected: &[usize]) -> ComplexMatrix {
    let rest: Vec<usize> = (0..dims.len()).filter(|p| !selected.contains(p)).collect();
    let row_dim: usize = selected.iter().map(|&p| dims[p]).product();
    let col_dim: usize = rest.iter().map(|&p| dims[p]).product();
    let mut out = ComplexMatrix::zeros(row_dim, col_dim);
    let mut digits = vec![0usize; dims.len()];
    for (flat, &z) in v.iter().enumerate() {
        let mut rem = flat;
        for (pos, &d) in dims.iter().enumerate().rev() {
            digits[pos] = rem % d;
            rem /= d;
        }
        let row = selected.iter().fold(0usize, |acc, &p| acc * dims[p] + digits[p]);
        let col = rest.iter().fold(0usize, |acc, &p| acc * dims[p] + digits[p]);
        out.set(row, col, z);
    }
    out
}

/// Least-squares residual of the best single operator W with
/// matricize(rhs_k) = matricize(lhs_k) · Wᵀ across all pairs: the defect of
/// the family factorizing as (identity on the selected factors) ⊗ W.
fn identity_on_cut_residual(
    pairs: &[(Vec<Complex64>, Vec<Complex64>)],
    dims: &[usize],
    selected: &[usize],
) -> f64 {
    let lhs: Vec<ComplexMatrix> =
        pairs.iter().map(|(l, _)| matricize(l, dims, selected)).collect();
    let rhs: Vec<ComplexMatrix> =
        pairs.iter().map(|(_, r)| matricize(r, dims, selected)).collect();
    let rows: usize = lhs.iter().map(ComplexMatrix::rows).sum();
    let cols = lhs[0].cols();
    let mut stacked_l = ComplexMatrix::zeros(rows, cols);
    let mut stacked_r = ComplexMatrix::zeros(rows, cols);
    let mut offset = 0;
    for (l, r) in lhs.iter().zip(&rhs) {
        for row in 0..l.rows() {
            for col in 0..cols {
                stacked_l.set(offset + row, col, l.get(row, col));
                stacked_r.set(offset + row, col, r.get(row, col));
            }
        }
        offset += l.rows();
    }
    let mut solution = match least_squares(&stacked_l, &stacked_r) {
        Ok(s) => s,
        Err(_) => return f64::INFINITY,
    };
    let refinement = stacked_r.sub(&stacked_l.mul(&solution));
    if let Ok(correction) = least_squares(&stacked_l, &refinement) {
        solution = solution.add(&correction);
    }
    stacked_l.mul(&solution).sub(&stacked_r).max_abs()
}

/// Checks U.3 for one agent at the declared time of action: over `samples`
/// random unitary choices of that agent's operator (others fixed), the step
/// at t* factorizes as U_agent ⊗ Rest with Rest independent of U_agent,
/// while every other step is independent of U_agent and acts as the
/// identity on the agent's ancilla factor.
pub fn check_time_of_action(
    builder: &dyn ScenarioBuilder,
    base_ops: &[ComplexMatrix],
    agent: usize,
    t_star: usize,
    samples: usize,
    seed: u64,
) -> Result<AxiomCheck, HistoryError> {
    let final_time = builder.final_times()[agent];
    if t_star == 0 || t_star > final_time {
        return Ok(AxiomCheck::fail(
            "U.3",
            format!("agent {agent}: declared time of action {t_star} outside [1, {final_time}]"),
        ));
    }
    let n_ops = builder_normalizations(builder, agent);
    let slot_dim = builder.op_slot_dim(agent);
    let mut rng = seeded_rng(seed);
    let sample_count = samples.max(2);
    let drawn: Vec<ComplexMatrix> =
        (0..sample_count).map(|_| haar_unitary(slot_dim, &mut rng)).collect();

    let mut per_sample: Vec<Vec<Vec<ConditionedState>>> = Vec::with_capacity(sample_count);
    for u in &drawn {
        let mut ops = base_ops.to_vec();
        ops[agent] = u.clone();
        match probe_states(builder, &ops, agent, &n_ops) {
            Ok(states) => per_sample.push(states),
            Err(ExtractionError::History(e)) => return Err(e),
            Err(e) => {
                return Ok(AxiomCheck::fail("U.3", format!("agent {agent}: probing failed: {e}")))
            }
        }
    }
    let branch_dim = builder.branch_dim();
    let layout = builder.system_layout();
    let slot_positions: Vec<usize> = builder
        .slot_labels(agent)
        .iter()
        .map(|l| layout.position(l).expect("slot label in layout") + 1)
        .collect();
    let ancilla_position = builder
        .ancilla_label(agent)
        .map(|l| layout.position(&l).expect("ancilla label in layout") + 1);
    let branch_factor_dims: Vec<usize> = layout.factors().iter().map(|f| f.dim()).collect();

    let mut failures: Vec<String> = Vec::new();

    let before: &[ConditionedState] = &per_sample[0][t_star - 1];
    let mut domain_drift = 0.0_f64;
    for sample in &per_sample[1..] {
        for (a, b) in sample[t_star - 1].iter().zip(before) {
            let mut diff = a.clone();
            diff.axpy(-crate::ONE, b);
            domain_drift = domain_drift.max(diff.norm());
        }
    }
    if domain_drift > DEFAULT_TOL {
        failures.push(format!(
            "states at t*−1={} depend on the agent's operator (drift {domain_drift:.3e})",
            t_star - 1
        ));
    }

    let undone: Vec<Vec<ConditionedState>> = per_sample
        .iter()
        .zip(&drawn)
        .map(|(states, u)| {
            let inverse = builder.embed_slot_op(agent, u).dagger();
            states[t_star].iter().map(|s| s.apply_branch_op(&inverse)).collect()
        })
        .collect();
    let mut rest_drift = 0.0_f64;
    for sample in &undone[1..] {
        for (a, b) in sample.iter().zip(&undone[0]) {
            let mut diff = a.clone();
            diff.axpy(-crate::ONE, b);
            rest_drift = rest_drift.max(diff.norm());
        }
    }
    if rest_drift > DEFAULT_TOL {
        failures.push(format!(
            "after undoing the agent's operator the step at t*={t_star} still depends on it (drift {rest_drift:.3e})"
        ));
    }

    {
        let tuples = occupied_tuples(&[before, &undone[0]]);
        let mut dims = vec![tuples.len()];
        dims.extend(&branch_factor_dims);
        let pairs: Vec<(Vec<Complex64>, Vec<Complex64>)> = before
            .iter()
            .zip(&undone[0])
            .map(|(l, s)| {
                (gather_block(l, &tuples, branch_dim), gather_block(s, &tuples, branch_dim))
            })
            .collect();
        let residual = identity_on_cut_residual(&pairs, &dims, &slot_positions);
        if residual > DEFAULT_TOL {
            failures.push(format!(
                "the undone step at t*={t_star} is not identity ⊗ Rest across the slot cut (residual {residual:.3e})"
            ));
        }
    }

    for time in 1..=final_time {
        if time == t_star {
            continue;
        }
        let domain: Vec<&ConditionedState> =
            per_sample.iter().flat_map(|s| s[time - 1].iter()).collect();
        let range: Vec<&ConditionedState> =
            per_sample.iter().flat_map(|s| s[time].iter()).collect();
        let domain_owned: Vec<ConditionedState> = domain.iter().map(|&s| s.clone()).collect();
        let range_owned: Vec<ConditionedState> = range.iter().map(|&s| s.clone()).collect();
        let residual = gram_residual(&domain_owned, &range_owned);
        if residual > DEFAULT_TOL {
            failures.push(format!(
                "no operator-independent step at time {time} (combined Gram residual {residual:.3e})"
            ));
            break;
        }
        if let Some(anc) = ancilla_position {
            let tuples = occupied_tuples(&[&domain_owned, &range_owned]);
            let mut dims = vec![tuples.len()];
            dims.extend(&branch_factor_dims);
            let pairs: Vec<(Vec<Complex64>, Vec<Complex64>)> = domain_owned
                .iter()
                .zip(&range_owned)
                .map(|(l, r)| {
                    (gather_block(l, &tuples, branch_dim), gather_block(r, &tuples, branch_dim))
                })
                .collect();
            let residual = identity_on_cut_residual(&pairs, &dims, &[anc]);
            if residual > DEFAULT_TOL {
                failures.push(format!(
                    "step at time {time} acts on the agent's ancilla (residual {residual:.3e})"
                ));
                break;
            }
        }
    }

    Ok(if failures.is_empty() {
        AxiomCheck::pass(
            "U.3",
            format!(
                "agent {agent}: action factorizes at t*={t_star}, other steps operator-free ({sample_count} samples)"
            ),
        )
    } else {
        AxiomCheck::fail("U.3", format!("agent {agent}: {}", failures.join("; ")))
    })
}

/// Checks that every populated branch is an affine-linear function of the
/// operator in `slot`: construct with A + B − C must equal the sum of the
/// separate constructions, branch by branch.
pub fn check_affine_linearity(
    builder: &dyn ScenarioBuilder,
    base_ops: &[ComplexMatrix],
    slot: usize,
    seed: u64,
) -> Result<AxiomCheck, HistoryError> {
    let mut rng = seeded_rng(seed);
    let dim = builder.op_slot_dim(slot);
    let a = gaussian_matrix(dim, dim, &mut rng);
    let b = gaussian_matrix(dim, dim, &mut rng);
    let c = gaussian_matrix(dim, dim, &mut rng);
    let combo = a.add(&b).sub(&c);
    let branch_dim = builder.branch_dim();
    let mut input: Vec<Complex64> = (0..branch_dim).map(|_| complex_gaussian(&mut rng)).collect();
    let scale = Complex64::new(1.0 / input.norm(), 0.0);
    input.scale_in_place(scale);

    let build = |op: &ComplexMatrix| -> Result<_, HistoryError> {
        let mut ops = base_ops.to_vec();
        ops[slot] = op.clone();
        builder.construct(&input, &ops)
    };
    let h_combo = build(&combo)?;
    let h_a = build(&a)?;
    let h_b = build(&b)?;
    let h_c = build(&c)?;

    let mut tuples: BTreeSet<ClockTuple> = BTreeSet::new();
    for hs in [&h_combo, &h_a, &h_b, &h_c] {
        tuples.extend(hs.branches().keys().cloned());
    }
    let zero = vec![ZERO; branch_dim];
    let fetch = |hs: &crate::history::HistoryState, tuple: &ClockTuple| -> Vec<Complex64> {
        hs.branch(tuple).cloned().unwrap_or_else(|| zero.clone())
    };
    for tuple in &tuples {
        let lhs = fetch(&h_combo, tuple);
        let va = fetch(&h_a, tuple);
        let vb = fetch(&h_b, tuple);
        let vc = fetch(&h_c, tuple);
        let defect = lhs
            .iter()
            .zip(va.iter().zip(vb.iter().zip(vc.iter())))
            .map(|(l, (x, (y, z)))| (l - (x + y - z)).norm())
            .fold(0.0_f64, f64::max);
        if defect > DEFAULT_TOL {
            return Ok(AxiomCheck::fail(
                "affine linearity",
                format!("slot {slot}: branch {tuple} deviates by {defect:.3e}"),
            ));
        }
    }
    Ok(AxiomCheck::pass(
        "affine linearity",
        format!("slot {slot}: every branch is degree ≤ 1 in the slot operator"),
    ))
}

/// Runs every check and aggregates one entry per axiom: S.1, S.2, N.1, N.2,
/// N.3, U.1, U.2, U.3, the process-extension probe, and affine linearity.
pub fn full_report(
    builder: &dyn ScenarioBuilder,
    base_ops: &[ComplexMatrix],
    samples: usize,
    seed: u64,
) -> Result<AxiomReport, HistoryError> {
    let agents = builder.agent_count();
    let final_times = builder.final_times();
    let system_dim: usize = {
        let layout = builder.system_layout();
        builder
            .system_factor_labels()
            .iter()
            .map(|l| layout.dim_of(l).expect("system label in layout"))
            .product()
    };

    let mut checks = check_boundaries(builder, base_ops)?;

    let mut n1_witness: Option<String> = None;
    let mut n2_witness: Option<String> = None;
    let mut n3_witness: Option<String> = None;
    for agent in 0..agents {
        for time in 0..=final_times[agent] {
            let op = builder.normalization(agent, time);
            if op.system_dim() != system_dim && n2_witness.is_none() {
                n2_witness = Some(format!(
                    "agent {agent} t={time}: block dimension {} is not the system dimension {system_dim}",
                    op.system_dim()
                ));
            }
            for issue in &validate(&op, final_times[agent]).issues {
                match issue {
                    NormIssue::NonPositiveBlock { .. } | NormIssue::NonInvertibleBlock { .. } => {
                        if n1_witness.is_none() {
                            n1_witness = Some(format!("agent {agent} t={time}: {issue}"));
                        }
                    }
                    NormIssue::BoundaryNotIdentity { .. } => {
                        if n3_witness.is_none() {
                            n3_witness = Some(format!("agent {agent} t={time}: {issue}"));
                        }
                    }
                }
            }
        }
    }

    let mut trajectories: Vec<Result<PerspectivalTrajectory, ExtractionError>> =
        Vec::with_capacity(agents);
    for agent in 0..agents {
        let n_ops = builder_normalizations(builder, agent);
        trajectories.push(extract_step_unitaries(builder, base_ops, agent, &n_ops));
    }

    let branch_dim = builder.branch_dim();
    let mut rng = seeded_rng(seed.wrapping_add(4000));
    let mut random_input: Vec<Complex64> =
        (0..branch_dim).map(|_| complex_gaussian(&mut rng)).collect();
    let scale = Complex64::new(1.0 / random_input.norm(), 0.0);
    random_input.scale_in_place(scale);
    let random_hs = builder.construct(&random_input, base_ops)?;
    'norm_probe: for agent in 0..agents {
        if let Ok(trajectory) = &trajectories[agent] {
            for t in 0..=final_times[agent] {
                for (i, state) in trajectory.states(t).iter().enumerate() {
                    let defect = (state.norm() - 1.0).abs();
                    if defect > DEFAULT_TOL {
                        n2_witness.get_or_insert(format!(
                            "agent {agent} t={t} basis input {i}: perspectival norm off by {defect:.3e}"
                        ));
                        break 'norm_probe;
                    }
                }
            }
        }
        for t in 0..=final_times[agent] {
            let op = builder.normalization(agent, t);
            match perspectival_state(&random_hs, agent, t, &op) {
                Err(e) => {
                    n2_witness.get_or_insert(format!("agent {agent} t={t}: {e}"));
                    break 'norm_probe;
                }
                Ok(state) => {
                    let defect = (state.norm() - 1.0).abs();
                    if defect > DEFAULT_TOL {
                        n2_witness.get_or_insert(format!(
                            "agent {agent} t={t} random input: perspectival norm off by {defect:.3e}"
                        ));
                        break 'norm_probe;
                    }
                }
            }
        }
    }

    checks.push(match n1_witness {
        None => AxiomCheck::pass("N.1", "every block is positive and invertible".to_string()),
        Some(w) => AxiomCheck::fail("N.1", w),
    });
    checks.push(match n2_witness {
        None => AxiomCheck::pass(
            "N.2",
            "blocks act on the system factors and give unit-norm perspectival states".to_string(),
        ),
        Some(w) => AxiomCheck::fail("N.2", w),
    });
    checks.push(match n3_witness {
        None => AxiomCheck::pass("N.3", "identity at the first and last two ticks".to_string()),
        Some(w) => AxiomCheck::fail("N.3", w),
    });

    let mut u1_witness: Option<String> = None;
    let mut u2_witness: Option<String> = None;
    for (agent, trajectory) in trajectories.iter().enumerate() {
        match trajectory {
            Err(e) => {
                u1_witness.get_or_insert(format!("{e}"));
            }
            Ok(trajectory) => {
                let mut unit = 0.0_f64;
                for step in trajectory.steps() {
                    unit = unit.max(
                        step.matrix().unitarity_residual().expect("step matrices are square"),
                    );
                }
                if unit > DEFAULT_TOL {
                    u1_witness.get_or_insert(format!(
                        "agent {agent}: extracted step unitarity residual {unit:.3e}"
                    ));
                }
                let mut compose = 0.0_f64;
                for (i, start) in trajectory.states(0).iter().enumerate() {
                    let mut current = start.clone();
                    for time in 1..=trajectory.final_time() {
                        current = trajectory.step(time).apply(&current);
                        let mut diff = current.clone();
                        diff.axpy(-crate::ONE, &trajectory.states(time)[i]);
                        compose = compose.max(diff.norm());
                    }
                }
                if compose > DEFAULT_TOL {
                    u2_witness.get_or_insert(format!(
                        "agent {agent}: composed steps drift from the probed states by {compose:.3e}"
                    ));
                }
            }
        }
    }
    checks.push(match u1_witness {
        None => AxiomCheck::pass(
            "U.1",
            "input-independent unitary steps exist at every tick".to_string(),
        ),
        Some(w) => AxiomCheck::fail("U.1", w),
    });
    checks.push(match u2_witness {
        None => {
            AxiomCheck::pass("U.2", "steps compose consistently along every probe".to_string())
        }
        Some(w) => AxiomCheck::fail("U.2", w),
    });

    let mut u3_failures: Vec<String> = Vec::new();
    let mut u3_summaries: Vec<String> = Vec::new();
    for agent in 0..agents {
        let check = check_time_of_action(
            builder,
            base_ops,
            agent,
            builder.time_of_action(agent),
            samples,
            seed.wrapping_add(1000 + agent as u64),
        )?;
        if check.passed {
            u3_summaries.push(format!("agent {agent} t*={}", builder.time_of_action(agent)));
        } else {
            u3_failures.push(check.detail);
        }
    }
    checks.push(if u3_failures.is_empty() {
        AxiomCheck::pass("U.3", format!("action factorizes: {}", u3_summaries.join(", ")))
    } else {
        AxiomCheck::fail("U.3", u3_failures.join("; "))
    });

    checks.push(
        match crate::process::ancilla_extension_residual(
            builder,
            base_ops,
            samples,
            seed.wrapping_add(3000),
        )? {
            None => AxiomCheck::pass(
                "process extension",
                "no ancilla factors declared; extension probe is vacuous".to_string(),
            ),
            Some(residual) if residual <= DEFAULT_TOL => AxiomCheck::pass(
                "process extension",
                format!("ancilla factors enter only through the agents' operators (residual {residual:.3e})"),
            ),
            Some(residual) => AxiomCheck::fail(
                "process extension",
                format!("process acts on an ancilla beyond the agent's operator (residual {residual:.3e})"),
            ),
        },
    );

    let mut affine_witness: Option<String> = None;
    for slot in 0..agents {
        let check =
            check_affine_linearity(builder, base_ops, slot, seed.wrapping_add(2000 + slot as u64))?;
        if !check.passed {
            affine_witness.get_or_insert(check.detail);
        }
    }
    checks.push(match affine_witness {
        None => AxiomCheck::pass(
            "affine linearity",
            "every branch is degree ≤ 1 in each slot operator".to_string(),
        ),
        Some(w) => AxiomCheck::fail("affine linearity", w),
    });

    Ok(AxiomReport { scenario: builder.name().to_string(), checks })
}
