//! Concrete scenario builders: clock operators, the twin-paradox circuit,
//! the quantum switch, coherently controlled combs with an arbitrary number
//! of agents, and the reversed three-party process with its failing
//! synchronization attempt.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::history::{ClockTuple, HistoryError, HistoryState, ScenarioBuilder};
use crate::norm::NormalizationOperator;
use crate::tensor::{kron, ComplexMatrix, DimLayout};
use crate::{Complex64, ONE, ZERO};

/// Error type for scenario construction.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    /// A clock operator needs at least two levels.
    ClockDimTooSmall { dim: usize },
    /// The spread index must leave room for |i−1⟩ and |i+2⟩.
    SpreadIndexOutOfRange { index: usize, dim: usize },
    /// An operator's dimension disagreed with its slot.
    DimensionMismatch { context: &'static str, expected: usize, found: usize },
    /// The agent ordering is not a permutation of 0..N.
    InvalidPermutation { detail: String },
    /// Two comb specifications disagree on a shared dimension.
    CombIncompatible { field: &'static str, comb: usize, expected: usize, found: usize },
    /// A comb-chain operator is not unitary.
    NotUnitary { context: &'static str, residual_times_1e12: u64 },
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::ClockDimTooSmall { dim } => {
                write!(f, "clock dimension {dim} is below 2")
            }
            ScenarioError::SpreadIndexOutOfRange { index, dim } => {
                write!(f, "spread index {index} out of range for clock dimension {dim}")
            }
            ScenarioError::DimensionMismatch { context, expected, found } => {
                write!(f, "{context}: expected dimension {expected}, found {found}")
            }
            ScenarioError::InvalidPermutation { detail } => {
                write!(f, "invalid agent permutation: {detail}")
            }
            ScenarioError::CombIncompatible { field, comb, expected, found } => write!(
                f,
                "comb {comb} disagrees on {field}: expected {expected}, found {found}"
            ),
            ScenarioError::NotUnitary { context, residual_times_1e12 } => {
                write!(f, "{context} is not unitary (residual ~{residual_times_1e12}e-12)")
            }
        }
    }
}

impl core::error::Error for ScenarioError {}

/// Clock ticking operator T: |t⟩ ↦ |t+1 mod dim⟩. The wrap at the top
/// reading keeps T unitary; shipped scenarios never reach it.
pub fn clock_tick(dim: usize) -> Result<ComplexMatrix, ScenarioError> {
    if dim < 2 {
        return Err(ScenarioError::ClockDimTooSmall { dim });
    }
    Ok(ComplexMatrix::from_fn(dim, dim, |r, c| {
        if r == (c + 1) % dim {
            ONE
        } else {
            ZERO
        }
    }))
}

/// Spreading clock operator T′_i: |i−1⟩ ↦ (|i⟩+|i+1⟩)/√2,
/// (|i⟩+|i+1⟩)/√2 ↦ |i+2⟩, (|i⟩−|i+1⟩)/√2 fixed, and a plain tick on every
/// other basis state. Indices wrap modulo the dimension.
pub fn clock_spread(i: usize, dim: usize) -> Result<ComplexMatrix, ScenarioError> {
    if dim < 4 {
        return Err(ScenarioError::ClockDimTooSmall { dim });
    }
    if i < 1 || i > dim - 2 {
        return Err(ScenarioError::SpreadIndexOutOfRange { index: i, dim });
    }
    let inv_sqrt2 = Complex64::new(1.0 / libm::sqrt(2.0), 0.0);
    let half = Complex64::new(0.5, 0.0);
    let mut m = ComplexMatrix::zeros(dim, dim);
    for j in 0..dim {
        if j == i - 1 {
            m.set(i, j, inv_sqrt2);
            m.set((i + 1) % dim, j, inv_sqrt2);
        } else if j == i {
            m.set(i, j, half);
            m.set((i + 1) % dim, j, -half);
            m.set((i + 2) % dim, j, inv_sqrt2);
        } else if j == (i + 1) % dim {
            m.set(i, j, -half);
            m.set((i + 1) % dim, j, half);
            m.set((i + 2) % dim, j, inv_sqrt2);
        } else {
            m.set((j + 1) % dim, j, ONE);
        }
    }
    Ok(m)
}

fn require_dim(
    context: &'static str,
    op: &ComplexMatrix,
    dim: usize,
) -> Result<(), ScenarioError> {
    if !op.is_square() || op.rows() != dim {
        return Err(ScenarioError::DimensionMismatch { context, expected: dim, found: op.rows() });
    }
    Ok(())
}

fn check_op_dims(ops: &[ComplexMatrix], dims: &[usize]) -> Result<(), HistoryError> {
    if ops.len() != dims.len() {
        return Err(HistoryError::OperatorCount { expected: dims.len(), found: ops.len() });
    }
    for (agent, (op, &d)) in ops.iter().zip(dims).enumerate() {
        if !op.is_square() || op.rows() != d {
            return Err(HistoryError::OperatorDim { agent, expected: d, found: op.rows() });
        }
    }
    Ok(())
}

/// Two agents crossing a circuit at different rates: the first agent acts,
/// an interaction couples both subsystems, then the second agent acts. One
/// clock runs to 6, the other to 9, and the mid-circuit views overlap two
/// branches each.
pub struct TwinScenario {
    u_a: ComplexMatrix,
    u_b: ComplexMatrix,
    v: ComplexMatrix,
    dim_a: usize,
    dim_b: usize,
}

/// Builds the two-agent crossing scenario from the agents' local unitaries
/// and the shared interaction V on the joint system.
pub fn build_twin(
    u_a: ComplexMatrix,
    u_b: ComplexMatrix,
    v: ComplexMatrix,
) -> Result<TwinScenario, ScenarioError> {
    let dim_a = u_a.rows();
    let dim_b = u_b.rows();
    require_dim("first agent operator", &u_a, dim_a)?;
    require_dim("second agent operator", &u_b, dim_b)?;
    require_dim("interaction", &v, dim_a * dim_b)?;
    Ok(TwinScenario { u_a, u_b, v, dim_a, dim_b })
}

impl TwinScenario {
    const FINAL_A: usize = 6;
    const FINAL_B: usize = 9;

    fn branch_table(&self, ops: &[ComplexMatrix]) -> Vec<(ClockTuple, ComplexMatrix)> {
        let id = ComplexMatrix::identity(self.dim_a * self.dim_b);
        let first = kron(&ops[0], &ComplexMatrix::identity(self.dim_b));
        let after_v = self.v.mul(&first);
        let full = kron(&ComplexMatrix::identity(self.dim_a), &ops[1]).mul(&after_v);
        let rows = [
            (vec![0, 0], id.clone()),
            (vec![1, 1], id),
            (vec![2, 2], first.clone()),
            (vec![2, 3], first),
            (vec![3, 4], after_v.clone()),
            (vec![3, 5], after_v),
            (vec![4, 6], full.clone()),
            (vec![4, 7], full.clone()),
            (vec![5, 8], full.clone()),
            (vec![6, 9], full),
        ];
        rows.into_iter().map(|(t, m)| (ClockTuple::new(t), m)).collect()
    }
}

impl ScenarioBuilder for TwinScenario {
    fn name(&self) -> &str {
        "twin"
    }

    fn agent_count(&self) -> usize {
        2
    }

    fn final_times(&self) -> Vec<usize> {
        vec![Self::FINAL_A, Self::FINAL_B]
    }

    fn system_layout(&self) -> DimLayout {
        DimLayout::new(&[("SA", self.dim_a), ("SB", self.dim_b)]).expect("distinct labels")
    }

    fn system_factor_labels(&self) -> Vec<String> {
        vec!["SA".to_string(), "SB".to_string()]
    }

    fn slot_labels(&self, agent: usize) -> Vec<String> {
        match agent {
            0 => vec!["SA".to_string()],
            _ => vec!["SB".to_string()],
        }
    }

    fn ancilla_label(&self, _agent: usize) -> Option<String> {
        None
    }

    fn time_of_action(&self, agent: usize) -> usize {
        match agent {
            0 => 2,
            _ => 6,
        }
    }

    fn default_ops(&self) -> Vec<ComplexMatrix> {
        vec![self.u_a.clone(), self.u_b.clone()]
    }

    fn construct(
        &self,
        input: &[Complex64],
        ops: &[ComplexMatrix],
    ) -> Result<HistoryState, HistoryError> {
        check_op_dims(ops, &[self.dim_a, self.dim_b])?;
        let layout = DimLayout::new(&[
            ("cA", Self::FINAL_A + 1),
            ("cB", Self::FINAL_B + 1),
            ("SA", self.dim_a),
            ("SB", self.dim_b),
        ])
        .expect("distinct labels");
        let mut hs = HistoryState::new(layout, self.final_times())?;
        for (tuple, op) in self.branch_table(ops) {
            hs.add_branch(tuple, op.apply(input))?;
        }
        hs.prune_zero_branches();
        Ok(hs)
    }

    fn normalization(&self, agent: usize, time: usize) -> NormalizationOperator {
        let dim = self.dim_a * self.dim_b;
        if agent == 0 && (2..=4).contains(&time) {
            let block = ComplexMatrix::identity(dim)
                .scale(Complex64::new(1.0 / libm::sqrt(2.0), 0.0));
            NormalizationOperator::uniform(agent, time, block)
        } else {
            NormalizationOperator::identity(agent, time, dim)
        }
    }

    fn candidate_step(
        &self,
        agent: usize,
        time: usize,
        ops: &[ComplexMatrix],
    ) -> Option<ComplexMatrix> {
        if ops.len() != 2 {
            return None;
        }
        let ia = ComplexMatrix::identity(self.dim_a);
        let ib = ComplexMatrix::identity(self.dim_b);
        let sys_id = ComplexMatrix::identity(self.dim_a * self.dim_b);
        let first = kron(&ops[0], &ib);
        let second = kron(&ia, &ops[1]);
        if agent == 0 {
            let dim_cb = Self::FINAL_B + 1;
            let tick = clock_tick(dim_cb).expect("clock dimension above 1");
            let tick2 = tick.mul(&tick);
            let step = match time {
                1 => kron(&tick, &sys_id),
                2 => kron(&clock_spread(2, dim_cb).expect("valid spread"), &first),
                3 => kron(&tick2, &self.v),
                4 => kron(&tick2, &second),
                5 => kron(&clock_spread(6, dim_cb).expect("valid spread"), &sys_id),
                6 => kron(&tick, &sys_id),
                _ => return None,
            };
            Some(step)
        } else {
            let dim_ca = Self::FINAL_A + 1;
            let tick = clock_tick(dim_ca).expect("clock dimension above 1");
            let full_id = ComplexMatrix::identity(dim_ca * self.dim_a * self.dim_b);
            let step = match time {
                1 => kron(&tick, &sys_id),
                2 => kron(&tick, &first),
                3 => full_id,
                4 => kron(&tick, &self.v),
                5 => full_id,
                6 => kron(&tick, &second),
                7 => full_id,
                8 => kron(&tick, &sys_id),
                9 => kron(&tick, &sys_id),
                _ => return None,
            };
            Some(step)
        }
    }
}

/// Control-qubit superposition of the two orderings of two agents acting on
/// a shared target.
pub struct SwitchScenario {
    u_a: ComplexMatrix,
    u_b: ComplexMatrix,
    target_dim: usize,
}

/// Builds the order-superposition scenario; both agent operators act on the
/// target factor and must share its dimension.
pub fn build_switch(
    u_a: ComplexMatrix,
    u_b: ComplexMatrix,
) -> Result<SwitchScenario, ScenarioError> {
    let target_dim = u_a.rows();
    require_dim("first agent operator", &u_a, target_dim)?;
    require_dim("second agent operator", &u_b, target_dim)?;
    Ok(SwitchScenario { u_a, u_b, target_dim })
}

impl SwitchScenario {
    const FINAL: usize = 7;

    fn control_projector(&self, value: usize) -> ComplexMatrix {
        let mut p = ComplexMatrix::zeros(2, 2);
        p.set(value, value, ONE);
        kron(&p, &ComplexMatrix::identity(self.target_dim))
    }

    fn branch_table(&self, ops: &[ComplexMatrix]) -> Vec<(ClockTuple, ComplexMatrix)> {
        let p0 = self.control_projector(0);
        let p1 = self.control_projector(1);
        let ua = kron(&ComplexMatrix::identity(2), &ops[0]);
        let ub = kron(&ComplexMatrix::identity(2), &ops[1]);
        let id = ComplexMatrix::identity(2 * self.target_dim);
        let process = ub.mul(&ua).mul(&p0).add(&ua.mul(&ub).mul(&p1));
        let rows = [
            (vec![0, 0], id.clone()),
            (vec![1, 1], id.clone()),
            (vec![2, 2], id),
            (vec![3, 2], p0.clone()),
            (vec![2, 3], p1.clone()),
            (vec![4, 3], ua.mul(&p0)),
            (vec![3, 4], ub.mul(&p1)),
            (vec![5, 4], ub.mul(&ua).mul(&p0)),
            (vec![4, 5], ua.mul(&ub).mul(&p1)),
            (vec![5, 5], process.clone()),
            (vec![6, 6], process.clone()),
            (vec![7, 7], process),
        ];
        rows.into_iter().map(|(t, m)| (ClockTuple::new(t), m)).collect()
    }
}

impl ScenarioBuilder for SwitchScenario {
    fn name(&self) -> &str {
        "switch"
    }

    fn agent_count(&self) -> usize {
        2
    }

    fn final_times(&self) -> Vec<usize> {
        vec![Self::FINAL, Self::FINAL]
    }

    fn system_layout(&self) -> DimLayout {
        DimLayout::new(&[("Sc", 2), ("St", self.target_dim)]).expect("distinct labels")
    }

    fn system_factor_labels(&self) -> Vec<String> {
        vec!["Sc".to_string(), "St".to_string()]
    }

    fn slot_labels(&self, _agent: usize) -> Vec<String> {
        vec!["St".to_string()]
    }

    fn ancilla_label(&self, _agent: usize) -> Option<String> {
        None
    }

    fn time_of_action(&self, _agent: usize) -> usize {
        4
    }

    fn default_ops(&self) -> Vec<ComplexMatrix> {
        vec![self.u_a.clone(), self.u_b.clone()]
    }

    fn construct(
        &self,
        input: &[Complex64],
        ops: &[ComplexMatrix],
    ) -> Result<HistoryState, HistoryError> {
        check_op_dims(ops, &[self.target_dim, self.target_dim])?;
        let layout = DimLayout::new(&[
            ("cA", Self::FINAL + 1),
            ("cB", Self::FINAL + 1),
            ("Sc", 2),
            ("St", self.target_dim),
        ])
        .expect("distinct labels");
        let mut hs = HistoryState::new(layout, self.final_times())?;
        for (tuple, op) in self.branch_table(ops) {
            hs.add_branch(tuple, op.apply(input))?;
        }
        hs.prune_zero_branches();
        Ok(hs)
    }

    fn normalization(&self, agent: usize, time: usize) -> NormalizationOperator {
        let inv_sqrt2 = Complex64::new(1.0 / libm::sqrt(2.0), 0.0);
        let weighted = |halved: usize| {
            let mut c = ComplexMatrix::identity(2);
            c.set(halved, halved, inv_sqrt2);
            kron(&c, &ComplexMatrix::identity(self.target_dim))
        };
        // The agent's own path doubles where the other agent is mid-action:
        // sector 1 for the first agent at time 2 (and mirrored afterwards).
        let halved_sector = match (agent, time) {
            (0, 2) | (1, 5) => Some(1),
            (0, 5) | (1, 2) => Some(0),
            _ => None,
        };
        match halved_sector {
            Some(s) => NormalizationOperator::uniform(agent, time, weighted(s)),
            None => NormalizationOperator::identity(agent, time, 2 * self.target_dim),
        }
    }

    fn candidate_step(
        &self,
        agent: usize,
        time: usize,
        ops: &[ComplexMatrix],
    ) -> Option<ComplexMatrix> {
        if ops.len() != 2 {
            return None;
        }
        let dim_clock = Self::FINAL + 1;
        let tick = clock_tick(dim_clock).expect("clock dimension above 1");
        let spread2 = clock_spread(2, dim_clock).expect("valid spread");
        let spread4 = clock_spread(4, dim_clock).expect("valid spread");
        let clock_id = ComplexMatrix::identity(dim_clock);
        let sys_id = ComplexMatrix::identity(2 * self.target_dim);
        // `own` projects on the control value routing this agent first.
        let (own, other) = match agent {
            0 => (self.control_projector(0), self.control_projector(1)),
            _ => (self.control_projector(1), self.control_projector(0)),
        };
        let own_op = kron(&ComplexMatrix::identity(2), &ops[agent]);
        let other_op = kron(&ComplexMatrix::identity(2), &ops[1 - agent]);
        let step = match time {
            1 | 7 => kron(&tick, &sys_id),
            2 => kron(&tick, &own).add(&kron(&spread2, &other)),
            3 => kron(&clock_id, &own).add(&kron(&spread2, &other_op.mul(&other))),
            4 => kron(&tick, &own_op),
            5 => kron(&spread4, &other_op.mul(&own)).add(&kron(&clock_id, &other)),
            6 => kron(&spread4, &own).add(&kron(&tick, &other)),
            _ => return None,
        };
        Some(step)
    }
}

/// Staggered ticking schedule that walks N synchronized clocks apart until
/// consecutive agents (in comb order) lag two readings behind each other.
/// Position 1 always ticks; position m ≥ 2 freezes once, at reading
/// 2(m−2)N+2, for 2(m−1) steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DesyncSchedule {
    agents: usize,
    order: Vec<usize>,
    t0: usize,
    t1: usize,
}

/// Builds the staggered schedule for one agent ordering. `order[m−1]` is the
/// agent at comb position m.
pub fn desync_schedule(agents: usize, order: &[usize]) -> Result<DesyncSchedule, ScenarioError> {
    if agents < 2 {
        return Err(ScenarioError::InvalidPermutation {
            detail: format!("need at least two agents, got {agents}"),
        });
    }
    if order.len() != agents {
        return Err(ScenarioError::InvalidPermutation {
            detail: format!("ordering lists {} agents, expected {agents}", order.len()),
        });
    }
    let mut seen = vec![false; agents];
    for &a in order {
        if a >= agents {
            return Err(ScenarioError::InvalidPermutation {
                detail: format!("agent index {a} out of range"),
            });
        }
        if seen[a] {
            return Err(ScenarioError::InvalidPermutation {
                detail: format!("agent index {a} repeated"),
            });
        }
        seen[a] = true;
    }
    let t0 = 2 * agents * agents + 4;
    Ok(DesyncSchedule { agents, order: order.to_vec(), t0, t1: t0 + 2 * agents + 1 })
}

impl DesyncSchedule {
    /// Number of agents.
    pub fn agents(&self) -> usize {
        self.agents
    }

    /// The agent ordering; entry m−1 is the agent at position m.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Number of staggering ticks T₀.
    pub fn t0(&self) -> usize {
        self.t0
    }

    /// First reading of the re-synchronization block, T₁ = T₀ + 2N + 1.
    pub fn t1(&self) -> usize {
        self.t1
    }

    /// Comb position (1-based) of one agent.
    pub fn position(&self, agent: usize) -> usize {
        1 + self.order.iter().position(|&a| a == agent).expect("agent in ordering")
    }

    /// Reading of the clock at comb position `m` (1-based) after `j` ticks.
    pub fn reading_at_position(&self, m: usize, j: usize) -> usize {
        if m == 1 {
            return j;
        }
        let freeze_start = 2 * (m - 2) * self.agents + 2;
        let freeze_len = 2 * (m - 1);
        if j <= freeze_start {
            j
        } else if j <= freeze_start + freeze_len {
            freeze_start
        } else {
            j - freeze_len
        }
    }

    /// Reading of one agent's clock after `j` ticks.
    pub fn reading(&self, agent: usize, j: usize) -> usize {
        self.reading_at_position(self.position(agent), j)
    }

    /// Clock tuple (agent order) after `j` ticks.
    pub fn tuple(&self, j: usize) -> ClockTuple {
        ClockTuple::new((0..self.agents).map(|a| self.reading(a, j)).collect())
    }
}

/// One coherently controlled comb: an agent ordering plus the N+1 chain
/// unitaries acting between agent slots on the system wire and the memory.
#[derive(Debug, Clone)]
pub struct CombSpec {
    /// Agent at comb position m is `order[m−1]`.
    pub order: Vec<usize>,
    /// Chain unitaries V₀ … V_N, each on wire ⊗ memory.
    pub chain: Vec<ComplexMatrix>,
}

/// Control-in-superposition combination of M combs over the same N agents:
/// the clocks drift apart along per-comb staggered schedules, each comb runs
/// with synchronized ticking (every agent acting at t* = T₀+2 on the wire
/// and its own ancilla), and the staggering is undone in reverse order until
/// every clock reads the common final time.
#[derive(Debug)]
pub struct CombsScenario {
    combs: Vec<CombSpec>,
    schedules: Vec<DesyncSchedule>,
    agents: usize,
    wire_dim: usize,
    memory_dim: usize,
    ancilla_dims: Vec<usize>,
}

/// Builds the controlled-combs scenario. All combs must agree on the number
/// of agents and on the wire ⊗ memory dimension; `ancilla_dims[j]` sizes
/// agent j's private ancilla (1 = none).
pub fn build_controlled_combs(
    combs: Vec<CombSpec>,
    wire_dim: usize,
    memory_dim: usize,
    ancilla_dims: Vec<usize>,
) -> Result<CombsScenario, ScenarioError> {
    let first = combs.first().ok_or(ScenarioError::InvalidPermutation {
        detail: String::from("need at least one comb"),
    })?;
    let agents = first.order.len();
    if ancilla_dims.len() != agents {
        return Err(ScenarioError::DimensionMismatch {
            context: "ancilla dimensions",
            expected: agents,
            found: ancilla_dims.len(),
        });
    }
    if ancilla_dims.iter().any(|&d| d == 0) || wire_dim == 0 || memory_dim == 0 {
        return Err(ScenarioError::DimensionMismatch {
            context: "factor dimensions must be positive",
            expected: 1,
            found: 0,
        });
    }
    let chain_dim = wire_dim * memory_dim;
    let mut schedules = Vec::with_capacity(combs.len());
    for (k, comb) in combs.iter().enumerate() {
        if comb.order.len() != agents {
            return Err(ScenarioError::CombIncompatible {
                field: "agent count",
                comb: k,
                expected: agents,
                found: comb.order.len(),
            });
        }
        if comb.chain.len() != agents + 1 {
            return Err(ScenarioError::CombIncompatible {
                field: "chain length",
                comb: k,
                expected: agents + 1,
                found: comb.chain.len(),
            });
        }
        for v in &comb.chain {
            if !v.is_square() || v.rows() != chain_dim {
                return Err(ScenarioError::CombIncompatible {
                    field: "chain dimension",
                    comb: k,
                    expected: chain_dim,
                    found: v.rows(),
                });
            }
            let residual = v.unitarity_residual().expect("square chain operator");
            if residual > 1e-10 {
                return Err(ScenarioError::NotUnitary {
                    context: "comb chain operator",
                    residual_times_1e12: (residual * 1e12) as u64,
                });
            }
        }
        schedules.push(desync_schedule(agents, &comb.order)?);
    }
    Ok(CombsScenario { combs, schedules, agents, wire_dim, memory_dim, ancilla_dims })
}

impl CombsScenario {
    /// Number of staggering ticks T₀ (shared by every comb).
    pub fn t0(&self) -> usize {
        self.schedules[0].t0()
    }

    /// First resynchronization reading T₁.
    pub fn t1(&self) -> usize {
        self.schedules[0].t1()
    }

    /// Common final reading of every clock.
    pub fn final_reading(&self) -> usize {
        self.t1() + self.t0() + 6
    }

    /// Control dimension (number of combs).
    pub fn control_dim(&self) -> usize {
        self.combs.len()
    }

    fn ancilla_factor_label(&self, agent: usize) -> String {
        format!("anc{}", agent + 1)
    }

    fn branch_layout(&self) -> DimLayout {
        let mut factors: Vec<(String, usize)> = vec![
            ("Sc".to_string(), self.combs.len()),
            ("Sp".to_string(), self.wire_dim),
            ("E".to_string(), self.memory_dim),
        ];
        for (j, &d) in self.ancilla_dims.iter().enumerate() {
            factors.push((self.ancilla_factor_label(j), d));
        }
        let refs: Vec<(&str, usize)> = factors.iter().map(|(l, d)| (l.as_str(), *d)).collect();
        DimLayout::new(&refs).expect("distinct labels")
    }

    /// Every clock tuple occupied by sector `k`, phase by phase. Within one
    /// sector all tuples are distinct; sectors may share tuples.
    fn sector_tuples(&self, k: usize) -> Vec<ClockTuple> {
        let sched = &self.schedules[k];
        let n = self.agents;
        let t0 = self.t0();
        let t1 = self.t1();
        let pos = |agent: usize| sched.position(agent);
        let mut tuples = Vec::new();
        tuples.push(ClockTuple::new(vec![0; n]));
        tuples.push(ClockTuple::new(vec![1; n]));
        for j in 2..=t0 {
            tuples.push(sched.tuple(j));
        }
        let offset_tuple = |base: usize| {
            ClockTuple::new((0..n).map(|a| base - 2 * (pos(a) - 1)).collect())
        };
        tuples.push(offset_tuple(t0 + 1));
        for y in 1..=n {
            tuples.push(offset_tuple(t0 + 2 * y));
            tuples.push(offset_tuple(t0 + 1 + 2 * y));
        }
        for j in 0..=2 * (n + 1) {
            tuples.push(offset_tuple(t1 + 1 + j));
        }
        for j in 0..=t0 {
            let readings = (0..n)
                .map(|a| {
                    let m = pos(a);
                    t1 + 2 * n + 4 - 2 * (m - 1) + sched.reading_at_position(n + 1 - m, j)
                })
                .collect();
            tuples.push(ClockTuple::new(readings));
        }
        tuples
    }

    fn sector_projector(&self, layout: &DimLayout, k: usize) -> ComplexMatrix {
        let m = self.combs.len();
        let mut p = ComplexMatrix::zeros(m, m);
        p.set(k, k, ONE);
        layout.embed(&p, &["Sc"]).expect("control factor present")
    }
}

impl ScenarioBuilder for CombsScenario {
    fn name(&self) -> &str {
        "combs"
    }

    fn agent_count(&self) -> usize {
        self.agents
    }

    fn final_times(&self) -> Vec<usize> {
        vec![self.final_reading(); self.agents]
    }

    fn system_layout(&self) -> DimLayout {
        self.branch_layout()
    }

    fn system_factor_labels(&self) -> Vec<String> {
        vec!["Sc".to_string(), "Sp".to_string(), "E".to_string()]
    }

    fn slot_labels(&self, agent: usize) -> Vec<String> {
        vec!["Sp".to_string(), self.ancilla_factor_label(agent)]
    }

    fn ancilla_label(&self, agent: usize) -> Option<String> {
        Some(self.ancilla_factor_label(agent))
    }

    fn time_of_action(&self, _agent: usize) -> usize {
        self.t0() + 2
    }

    fn default_ops(&self) -> Vec<ComplexMatrix> {
        (0..self.agents)
            .map(|j| ComplexMatrix::identity(self.wire_dim * self.ancilla_dims[j]))
            .collect()
    }

    fn construct(
        &self,
        input: &[Complex64],
        ops: &[ComplexMatrix],
    ) -> Result<HistoryState, HistoryError> {
        let slot_dims: Vec<usize> =
            (0..self.agents).map(|j| self.wire_dim * self.ancilla_dims[j]).collect();
        check_op_dims(ops, &slot_dims)?;
        let branch_layout = self.branch_layout();
        let clock_dim = self.final_reading() + 1;
        let mut factors: Vec<(String, usize)> = (0..self.agents)
            .map(|a| (format!("c{}", a + 1), clock_dim))
            .collect();
        for f in branch_layout.factors() {
            factors.push((f.label().to_string(), f.dim()));
        }
        let refs: Vec<(&str, usize)> = factors.iter().map(|(l, d)| (l.as_str(), *d)).collect();
        let layout = DimLayout::new(&refs).expect("distinct labels");
        let mut hs = HistoryState::new(layout, self.final_times())?;

        hs.add_branch(ClockTuple::new(vec![0; self.agents]), input.to_vec())?;
        hs.add_branch(ClockTuple::new(vec![1; self.agents]), input.to_vec())?;

        let embedded_ops: Vec<ComplexMatrix> = (0..self.agents)
            .map(|j| {
                let labels = self.slot_labels(j);
                let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
                branch_layout.embed(&ops[j], &refs).expect("slot labels in layout")
            })
            .collect();

        for (k, comb) in self.combs.iter().enumerate() {
            let tuples = self.sector_tuples(k);
            let projector = self.sector_projector(&branch_layout, k);
            let projected = projector.apply(input);
            let chain: Vec<ComplexMatrix> = comb
                .chain
                .iter()
                .map(|v| branch_layout.embed(v, &["Sp", "E"]).expect("wire and memory present"))
                .collect();

            // Tuple list order: 2 synchronized, T₀−1 staggering, then the
            // comb alternation, then the resynchronization tail.
            let desync_end = 2 + (self.t0() - 1);
            for tuple in &tuples[2..desync_end] {
                hs.add_branch(tuple.clone(), projected.clone())?;
            }
            let mut vector = chain[0].apply(&projected);
            hs.add_branch(tuples[desync_end].clone(), vector.clone())?;
            for y in 1..=self.agents {
                vector = embedded_ops[comb.order[y - 1]].apply(&vector);
                hs.add_branch(tuples[desync_end + 2 * y - 1].clone(), vector.clone())?;
                vector = chain[y].apply(&vector);
                hs.add_branch(tuples[desync_end + 2 * y].clone(), vector.clone())?;
            }
            for tuple in &tuples[desync_end + 2 * self.agents + 1..] {
                hs.add_branch(tuple.clone(), vector.clone())?;
            }
        }
        hs.prune_zero_branches();
        Ok(hs)
    }

    fn normalization(&self, agent: usize, time: usize) -> NormalizationOperator {
        let m = self.combs.len();
        let mut control_block = ComplexMatrix::zeros(m, m);
        let mut nontrivial = false;
        for k in 0..m {
            let count = self
                .sector_tuples(k)
                .iter()
                .filter(|t| t.reading(agent) == time)
                .count();
            let weight = if count == 0 { 1.0 } else { 1.0 / libm::sqrt(count as f64) };
            if count > 1 {
                nontrivial = true;
            }
            control_block.set(k, k, Complex64::new(weight, 0.0));
        }
        let system_dim = m * self.wire_dim * self.memory_dim;
        if !nontrivial {
            return NormalizationOperator::identity(agent, time, system_dim);
        }
        let rest = ComplexMatrix::identity(self.wire_dim * self.memory_dim);
        NormalizationOperator::uniform(agent, time, kron(&control_block, &rest))
    }
}

/// Pauli X on a qubit.
pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).expect("2x2 entries")
}

fn three_qubit_projectors() -> [ComplexMatrix; 4] {
    let mut p_perp = ComplexMatrix::zeros(8, 8);
    let mut p_a = ComplexMatrix::zeros(8, 8);
    let mut p_b = ComplexMatrix::zeros(8, 8);
    let mut p_c = ComplexMatrix::zeros(8, 8);
    for j in 0..2usize {
        let idx = |a: usize, b: usize, c: usize| (a << 2) | (b << 1) | c;
        let jjj = idx(j, j, j);
        p_perp.set(jjj, jjj, ONE);
        let j01 = idx(j, 0, 1);
        p_a.set(j01, j01, ONE);
        let oj0 = idx(1, j, 0);
        p_b.set(oj0, oj0, ONE);
        let zj = idx(0, 1, j);
        p_c.set(zj, zj, ONE);
    }
    [p_perp, p_a, p_b, p_c]
}

/// The three-party process that applies each agent's unitary and flips one
/// agent's qubit conditioned on the others' computational-basis pattern:
/// (U_A⊗U_B⊗U_C)P_⊥ + (XU_A⊗U_B⊗U_C)P_A + (U_A⊗XU_B⊗U_C)P_B +
/// (U_A⊗U_B⊗XU_C)P_C, where the four projector patterns partition the
/// identity.
pub fn lugano_process(
    u_a: &ComplexMatrix,
    u_b: &ComplexMatrix,
    u_c: &ComplexMatrix,
) -> Result<ComplexMatrix, ScenarioError> {
    for (op, context) in
        [(u_a, "first slot"), (u_b, "second slot"), (u_c, "third slot")]
    {
        if !op.is_square() || op.rows() != 2 {
            return Err(ScenarioError::DimensionMismatch {
                context,
                expected: 2,
                found: op.rows(),
            });
        }
    }
    let [p_perp, p_a, p_b, p_c] = three_qubit_projectors();
    let x = pauli_x();
    let uuu = kron(&kron(u_a, u_b), u_c);
    let flip_a = kron(&kron(&x.mul(u_a), u_b), u_c);
    let flip_b = kron(&kron(u_a, &x.mul(u_b)), u_c);
    let flip_c = kron(&kron(u_a, u_b), &x.mul(u_c));
    Ok(uuu
        .mul(&p_perp)
        .add(&flip_a.mul(&p_a))
        .add(&flip_b.mul(&p_b))
        .add(&flip_c.mul(&p_c)))
}

/// Frame-conjugated flip U†XU: a gate that is unitary in U but not
/// affine-linear in U, used as the negative input for linearity checks.
pub fn lugano_frame_gate(u: &ComplexMatrix) -> ComplexMatrix {
    u.dagger().mul(&pauli_x()).mul(u)
}

/// A desynchronize-act-resynchronize attempt at realizing the three-party
/// flip process as a history state. The construction satisfies the
/// synchronization and normalization requirements and acts at t* = 5 for
/// every agent, but its late-time views cannot be related by
/// input-independent isometries: after the conditional flips, straggler
/// branches carry sector markers rotated by the sample unitaries, so the
/// step from reading 6 to reading 7 changes the view's norm. Verifiers are
/// expected to flag a failure strictly after the time of action.
pub struct LuganoAttemptScenario {
    u_a: ComplexMatrix,
    u_b: ComplexMatrix,
    u_c: ComplexMatrix,
}

/// Builds the failing synchronization attempt for the three-party flip
/// process.
pub fn build_lugano_attempt(
    u_a: ComplexMatrix,
    u_b: ComplexMatrix,
    u_c: ComplexMatrix,
) -> Result<LuganoAttemptScenario, ScenarioError> {
    for (op, context) in [
        (&u_a, "first agent operator"),
        (&u_b, "second agent operator"),
        (&u_c, "third agent operator"),
    ] {
        if !op.is_square() || op.rows() != 2 {
            return Err(ScenarioError::DimensionMismatch {
                context,
                expected: 2,
                found: op.rows(),
            });
        }
    }
    Ok(LuganoAttemptScenario { u_a, u_b, u_c })
}

impl LuganoAttemptScenario {
    const FINAL: usize = 9;

    fn branch_table(&self, ops: &[ComplexMatrix]) -> Vec<(ClockTuple, ComplexMatrix)> {
        let [p_perp, p_a, p_b, p_c] = three_qubit_projectors();
        let id2 = ComplexMatrix::identity(2);
        let x = pauli_x();
        let emb = |a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix| kron(&kron(a, b), c);
        let ua = emb(&ops[0], &id2, &id2);
        let ub = emb(&id2, &ops[1], &id2);
        let uc = emb(&id2, &id2, &ops[2]);
        let xa = emb(&x, &id2, &id2);
        let xb = emb(&id2, &x, &id2);
        let xc = emb(&id2, &id2, &x);
        let uuu = ua.mul(&ub).mul(&uc);
        let id = ComplexMatrix::identity(8);

        let mut rows: Vec<(Vec<usize>, ComplexMatrix)> = vec![
            (vec![0, 0, 0], id.clone()),
            (vec![1, 1, 1], id.clone()),
            (vec![2, 2, 2], id),
            (vec![2, 2, 3], p_perp.clone()),
            (vec![2, 3, 3], p_a.clone()),
            (vec![3, 2, 3], p_b.clone()),
            (vec![3, 3, 2], p_c.clone()),
            (vec![3, 3, 4], p_perp.clone()),
            (vec![3, 4, 4], p_a.clone()),
            (vec![4, 3, 4], p_b.clone()),
            (vec![4, 4, 3], p_c.clone()),
            (vec![4, 4, 5], uc.mul(&p_perp)),
            (vec![4, 5, 5], ub.mul(&uc).mul(&p_a)),
            (vec![5, 4, 5], ua.mul(&uc).mul(&p_b)),
            (vec![5, 5, 4], ua.mul(&ub).mul(&p_c)),
            (vec![5, 5, 6], uuu.mul(&p_perp)),
            (vec![5, 6, 6], uuu.mul(&p_a)),
            (vec![6, 5, 6], uuu.mul(&p_b)),
            (vec![6, 6, 5], uuu.mul(&p_c)),
            (vec![6, 6, 7], uuu.mul(&p_perp)),
            (vec![6, 7, 7], xa.mul(&uuu).mul(&p_a)),
            (vec![7, 6, 7], xb.mul(&uuu).mul(&p_b)),
            (vec![7, 7, 6], xc.mul(&uuu).mul(&p_c)),
        ];
        let merged = uuu
            .mul(&p_perp)
            .add(&xa.mul(&uuu).mul(&p_a))
            .add(&xb.mul(&uuu).mul(&p_b))
            .add(&xc.mul(&uuu).mul(&p_c));
        rows.push((vec![7, 7, 7], merged.clone()));
        rows.push((vec![8, 8, 8], merged.clone()));
        rows.push((vec![9, 9, 9], merged));
        rows.into_iter().map(|(t, m)| (ClockTuple::new(t), m)).collect()
    }
}

impl ScenarioBuilder for LuganoAttemptScenario {
    fn name(&self) -> &str {
        "lugano-attempt"
    }

    fn agent_count(&self) -> usize {
        3
    }

    fn final_times(&self) -> Vec<usize> {
        vec![Self::FINAL; 3]
    }

    fn system_layout(&self) -> DimLayout {
        DimLayout::new(&[("QA", 2), ("QB", 2), ("QC", 2)]).expect("distinct labels")
    }

    fn system_factor_labels(&self) -> Vec<String> {
        vec!["QA".to_string(), "QB".to_string(), "QC".to_string()]
    }

    fn slot_labels(&self, agent: usize) -> Vec<String> {
        vec![["QA", "QB", "QC"][agent].to_string()]
    }

    fn ancilla_label(&self, _agent: usize) -> Option<String> {
        None
    }

    fn time_of_action(&self, _agent: usize) -> usize {
        5
    }

    fn default_ops(&self) -> Vec<ComplexMatrix> {
        vec![self.u_a.clone(), self.u_b.clone(), self.u_c.clone()]
    }

    fn construct(
        &self,
        input: &[Complex64],
        ops: &[ComplexMatrix],
    ) -> Result<HistoryState, HistoryError> {
        check_op_dims(ops, &[2, 2, 2])?;
        let dim = Self::FINAL + 1;
        let layout = DimLayout::new(&[
            ("cA", dim),
            ("cB", dim),
            ("cC", dim),
            ("QA", 2),
            ("QB", 2),
            ("QC", 2),
        ])
        .expect("distinct labels");
        let mut hs = HistoryState::new(layout, self.final_times())?;
        for (tuple, op) in self.branch_table(ops) {
            hs.add_branch(tuple, op.apply(input))?;
        }
        hs.prune_zero_branches();
        Ok(hs)
    }

    fn normalization(&self, agent: usize, time: usize) -> NormalizationOperator {
        if time != 2 {
            return NormalizationOperator::identity(agent, time, 8);
        }
        // At reading 2 the shared synchronized branch still carries every
        // sector while this agent's slow sectors have already split off, so
        // those sectors appear twice and get weight 1/√2.
        let [p_perp, p_a, p_b, p_c] = three_qubit_projectors();
        let own = match agent {
            0 => p_perp.add(&p_a),
            1 => p_perp.add(&p_b),
            _ => p_c,
        };
        let rest = ComplexMatrix::identity(8).sub(&own);
        let block = rest.add(&own.scale(Complex64::new(1.0 / libm::sqrt(2.0), 0.0)));
        NormalizationOperator::uniform(agent, time, block)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::evolution_matrix;
    use crate::linalg::{haar_unitary, seeded_rng, InnerProduct};
    use crate::norm::validate;
    use crate::tensor::basis_vector;
    use crate::DEFAULT_TOL;

    fn hadamard() -> ComplexMatrix {
        let h = 1.0 / libm::sqrt(2.0);
        ComplexMatrix::from_real(2, 2, &[h, h, h, -h]).expect("2x2 entries")
    }

    #[test]
    fn clock_tick_shifts_and_wraps() {
        let t = clock_tick(10).unwrap();
        assert_eq!(t.apply(&basis_vector(10, 4)), basis_vector(10, 5));
        let t3 = clock_tick(3).unwrap();
        assert_eq!(t3.apply(&basis_vector(3, 2)), basis_vector(3, 0));
        assert_eq!(clock_tick(1).unwrap_err(), ScenarioError::ClockDimTooSmall { dim: 1 });
        for dim in [2usize, 3, 7, 10] {
            assert!(clock_tick(dim).unwrap().is_unitary(1e-12).unwrap());
        }
    }

    #[test]
    fn clock_spread_acts_on_the_three_special_states() {
        let dim = 10;
        let s = clock_spread(2, dim).unwrap();
        let inv_sqrt2 = 1.0 / libm::sqrt(2.0);

        let from_before = s.apply(&basis_vector(dim, 1));
        assert!((from_before[2].re - inv_sqrt2).abs() < 1e-15);
        assert!((from_before[3].re - inv_sqrt2).abs() < 1e-15);

        let mut plus = vec![ZERO; dim];
        plus[2] = Complex64::new(inv_sqrt2, 0.0);
        plus[3] = Complex64::new(inv_sqrt2, 0.0);
        let advanced = s.apply(&plus);
        assert!((advanced[4].re - 1.0).abs() < 1e-12);
        assert!(advanced.iter().enumerate().all(|(i, z)| i == 4 || z.norm() < 1e-12));

        let mut minus = vec![ZERO; dim];
        minus[2] = Complex64::new(inv_sqrt2, 0.0);
        minus[3] = Complex64::new(-inv_sqrt2, 0.0);
        let fixed = s.apply(&minus);
        let mut diff = fixed.clone();
        diff.axpy(-ONE, &minus);
        assert!(diff.norm() < 1e-12);

        let spread4 = clock_spread(4, dim).unwrap();
        assert_eq!(spread4.apply(&basis_vector(dim, 0)), basis_vector(dim, 1));

        for i in [1usize, 2, 4, 6, 8] {
            assert!(clock_spread(i, dim).unwrap().is_unitary(1e-12).unwrap());
        }
        assert!(matches!(
            clock_spread(0, dim).unwrap_err(),
            ScenarioError::SpreadIndexOutOfRange { .. }
        ));
        assert!(matches!(
            clock_spread(9, dim).unwrap_err(),
            ScenarioError::SpreadIndexOutOfRange { .. }
        ));
    }

    fn random_twin(seed: u64) -> (TwinScenario, Vec<ComplexMatrix>) {
        let mut rng = seeded_rng(seed);
        let u_a = haar_unitary(2, &mut rng);
        let u_b = haar_unitary(2, &mut rng);
        let v = haar_unitary(4, &mut rng);
        let ops = vec![u_a.clone(), u_b.clone()];
        (build_twin(u_a, u_b, v).unwrap(), ops)
    }

    #[test]
    fn twin_branch_after_interaction_is_v_after_first_agent() {
        let (twin, ops) = random_twin(41);
        let mut rng = seeded_rng(42);
        let phi: Vec<Complex64> =
            (0..4).map(|_| crate::linalg::complex_gaussian(&mut rng)).collect();
        let hs = twin.construct(&phi, &ops).unwrap();

        let expected = twin
            .v
            .mul(&kron(&ops[0], &ComplexMatrix::identity(2)))
            .apply(&phi);
        let found = hs.branch(&ClockTuple::new(vec![3, 4])).unwrap();
        let mut diff = found.clone();
        diff.axpy(-ONE, &expected);
        assert!(diff.norm() < 1e-12);

        assert_eq!(hs.final_times(), &[6, 9]);
        assert_eq!(hs.branches().len(), 10);
        assert!(hs.validate_boundary_branches().is_ok());
        let ip = hs.inner(&hs).unwrap();
        assert!((ip.re - 10.0 * phi.inner(&phi).re).abs() < 1e-9 * ip.re.abs());
    }

    #[test]
    fn twin_with_identity_operations_repeats_the_input() {
        let id2 = ComplexMatrix::identity(2);
        let twin = build_twin(id2.clone(), id2.clone(), ComplexMatrix::identity(4)).unwrap();
        let phi = basis_vector(4, 2);
        let hs = twin.construct(&phi, &[id2.clone(), id2]).unwrap();
        for (_, v) in hs.branches() {
            assert_eq!(v, &phi);
        }
    }

    #[test]
    fn twin_final_branch_is_the_composed_process() {
        let (twin, ops) = random_twin(43);
        let m = evolution_matrix(&twin, &ops, &ClockTuple::new(vec![6, 9])).unwrap();
        let expected = kron(&ComplexMatrix::identity(2), &ops[1])
            .mul(&twin.v)
            .mul(&kron(&ops[0], &ComplexMatrix::identity(2)));
        assert!(m.max_diff(&expected) < 1e-12);
        assert!(m.is_unitary(DEFAULT_TOL).unwrap());

        let at_origin = evolution_matrix(&twin, &ops, &ClockTuple::new(vec![0, 0])).unwrap();
        assert!(at_origin.max_diff(&ComplexMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn twin_candidate_steps_advance_the_perspectival_states() {
        let (twin, ops) = random_twin(44);
        let mut rng = seeded_rng(45);
        let phi: Vec<Complex64> =
            (0..4).map(|_| crate::linalg::complex_gaussian(&mut rng)).collect();
        let hs = twin.construct(&phi, &ops).unwrap();
        for agent in 0..2 {
            let final_t = hs.final_times()[agent];
            for t in 1..=final_t {
                let step = twin.candidate_step(agent, t, &ops).unwrap();
                assert!(step.is_unitary(1e-12).unwrap(), "agent {agent} step {t}");
                let before = crate::history::perspectival_state(
                    &hs,
                    agent,
                    t - 1,
                    &twin.normalization(agent, t - 1),
                )
                .unwrap();
                let after = crate::history::perspectival_state(
                    &hs,
                    agent,
                    t,
                    &twin.normalization(agent, t),
                )
                .unwrap();
                let advanced = step.apply(&before.to_dense());
                let mut diff = advanced.clone();
                diff.axpy(-ONE, &after.to_dense());
                assert!(
                    diff.norm() < 1e-10,
                    "agent {agent} step {t} mismatch: {}",
                    diff.norm()
                );
            }
        }
    }

    #[test]
    fn twin_normalizations_validate_cleanly() {
        let (twin, _) = random_twin(46);
        for agent in 0..2 {
            for t in 0..=twin.final_times()[agent] {
                let report = validate(&twin.normalization(agent, t), twin.final_times()[agent]);
                assert!(report.is_clean(), "agent {agent} t={t}: {:?}", report.issues);
            }
        }
    }

    fn random_switch(seed: u64) -> (SwitchScenario, Vec<ComplexMatrix>) {
        let mut rng = seeded_rng(seed);
        let u_a = haar_unitary(2, &mut rng);
        let u_b = haar_unitary(2, &mut rng);
        let ops = vec![u_a.clone(), u_b.clone()];
        (build_switch(u_a, u_b).unwrap(), ops)
    }

    #[test]
    fn switch_branches_match_the_printed_table() {
        let (switch, ops) = random_switch(51);
        let mut rng = seeded_rng(52);
        let phi: Vec<Complex64> =
            (0..4).map(|_| crate::linalg::complex_gaussian(&mut rng)).collect();
        let hs = switch.construct(&phi, &ops).unwrap();
        assert_eq!(hs.branches().len(), 12);

        let p0 = switch.control_projector(0);
        let found = hs.branch(&ClockTuple::new(vec![3, 2])).unwrap();
        let expected = p0.apply(&phi);
        let mut diff = found.clone();
        diff.axpy(-ONE, &expected);
        assert!(diff.norm() < 1e-12);

        let process = evolution_matrix(&switch, &ops, &ClockTuple::new(vec![7, 7])).unwrap();
        let ua = kron(&ComplexMatrix::identity(2), &ops[0]);
        let ub = kron(&ComplexMatrix::identity(2), &ops[1]);
        let expected = ub
            .mul(&ua)
            .mul(&switch.control_projector(0))
            .add(&ua.mul(&ub).mul(&switch.control_projector(1)));
        assert!(process.max_diff(&expected) < 1e-12);
        assert!(process.is_unitary(DEFAULT_TOL).unwrap());
    }

    #[test]
    fn switch_routes_control_zero_through_first_agent_first() {
        let (switch, ops) = random_switch(53);
        let tau = basis_vector(2, 0);
        let mut input = vec![ZERO; 4];
        input[0] = tau[0];
        input[1] = tau[1];
        let hs = switch.construct(&input, &ops).unwrap();
        let final_branch = hs.branch(&ClockTuple::new(vec![7, 7])).unwrap();
        let expected = ops[1].mul(&ops[0]).apply(&tau);
        assert!((final_branch[0] - expected[0]).norm() < 1e-12);
        assert!((final_branch[1] - expected[1]).norm() < 1e-12);
        assert!(final_branch[2].norm() < 1e-12);
        assert!(final_branch[3].norm() < 1e-12);
    }

    #[test]
    fn switch_candidate_steps_advance_the_perspectival_states() {
        let (switch, ops) = random_switch(54);
        let mut rng = seeded_rng(55);
        let phi: Vec<Complex64> =
            (0..4).map(|_| crate::linalg::complex_gaussian(&mut rng)).collect();
        let hs = switch.construct(&phi, &ops).unwrap();
        for agent in 0..2 {
            for t in 1..=7 {
                let step = switch.candidate_step(agent, t, &ops).unwrap();
                assert!(step.is_unitary(1e-12).unwrap(), "agent {agent} step {t}");
                let before = crate::history::perspectival_state(
                    &hs,
                    agent,
                    t - 1,
                    &switch.normalization(agent, t - 1),
                )
                .unwrap();
                let after = crate::history::perspectival_state(
                    &hs,
                    agent,
                    t,
                    &switch.normalization(agent, t),
                )
                .unwrap();
                let advanced = step.apply(&before.to_dense());
                let mut diff = advanced.clone();
                diff.axpy(-ONE, &after.to_dense());
                assert!(
                    diff.norm() < 1e-10,
                    "agent {agent} step {t} mismatch: {}",
                    diff.norm()
                );
            }
        }
    }

    #[test]
    fn three_party_projectors_partition_the_identity() {
        let [p_perp, p_a, p_b, p_c] = three_qubit_projectors();
        let sum = p_perp.add(&p_a).add(&p_b).add(&p_c);
        assert_eq!(sum.max_diff(&ComplexMatrix::identity(8)), 0.0);
        for p in [&p_perp, &p_a, &p_b, &p_c] {
            assert_eq!(p.mul(p).max_diff(p), 0.0);
        }
    }

    #[test]
    fn three_party_process_matches_its_defining_cases() {
        let mut rng = seeded_rng(61);
        let u_a = haar_unitary(2, &mut rng);
        let u_b = haar_unitary(2, &mut rng);
        let u_c = haar_unitary(2, &mut rng);
        let g = lugano_process(&u_a, &u_b, &u_c).unwrap();

        let uuu = kron(&kron(&u_a, &u_b), &u_c);
        let on_000 = g.apply(&basis_vector(8, 0));
        let expected = uuu.apply(&basis_vector(8, 0));
        let mut diff = on_000.clone();
        diff.axpy(-ONE, &expected);
        assert!(diff.norm() < 1e-12);

        let flip_first = kron(&kron(&pauli_x().mul(&u_a), &u_b), &u_c);
        let on_101 = g.apply(&basis_vector(8, 0b101));
        let expected = flip_first.apply(&basis_vector(8, 0b101));
        let mut diff = on_101.clone();
        diff.axpy(-ONE, &expected);
        assert!(diff.norm() < 1e-12);

        assert!(g.is_unitary(1e-12).unwrap());
    }

    #[test]
    fn frame_gate_conjugates_the_flip() {
        let x = pauli_x();
        assert!(lugano_frame_gate(&ComplexMatrix::identity(2)).max_diff(&x) < 1e-15);
        let z = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(lugano_frame_gate(&hadamard()).max_diff(&z) < 1e-12);
    }

    #[test]
    fn attempt_merges_into_the_three_party_process() {
        let mut rng = seeded_rng(62);
        let u_a = haar_unitary(2, &mut rng);
        let u_b = haar_unitary(2, &mut rng);
        let u_c = haar_unitary(2, &mut rng);
        let ops = vec![u_a.clone(), u_b.clone(), u_c.clone()];
        let attempt = build_lugano_attempt(u_a.clone(), u_b.clone(), u_c.clone()).unwrap();

        let final_tuple = ClockTuple::new(vec![9, 9, 9]);
        let m = evolution_matrix(&attempt, &ops, &final_tuple).unwrap();
        let g = lugano_process(&u_a, &u_b, &u_c).unwrap();
        assert!(m.max_diff(&g) < 1e-12);

        let phi = basis_vector(8, 3);
        let hs = attempt.construct(&phi, &ops).unwrap();
        assert!(hs.validate_boundary_branches().is_ok());
        assert_eq!(
            hs.branch(&ClockTuple::new(vec![8, 8, 8])),
            hs.branch(&ClockTuple::new(vec![9, 9, 9]))
        );
        assert_eq!(
            hs.branch(&ClockTuple::new(vec![0, 0, 0])),
            hs.branch(&ClockTuple::new(vec![1, 1, 1]))
        );
    }

    #[test]
    fn attempt_views_are_unit_until_the_merge_and_overshoot_afterwards() {
        let mut rng = seeded_rng(63);
        let u_a = haar_unitary(2, &mut rng);
        let u_b = haar_unitary(2, &mut rng);
        let u_c = haar_unitary(2, &mut rng);
        let ops = vec![u_a.clone(), u_b.clone(), u_c.clone()];
        let attempt = build_lugano_attempt(u_a, u_b, u_c).unwrap();
        // Support in all four projector patterns: |000⟩, |101⟩, |110⟩, |011⟩.
        let mut phi = vec![ZERO; 8];
        for idx in [0usize, 5, 6, 3] {
            phi[idx] = Complex64::new(0.5, 0.0);
        }
        let hs = attempt.construct(&phi, &ops).unwrap();

        for agent in 0..3 {
            for t in 0..=6 {
                let view = crate::history::perspectival_state(
                    &hs,
                    agent,
                    t,
                    &attempt.normalization(agent, t),
                )
                .unwrap();
                assert!(
                    (view.norm() - 1.0).abs() < 1e-12,
                    "agent {agent} t={t} norm {}",
                    view.norm()
                );
            }
            let late = hs.condition(agent, 7).unwrap();
            assert!(late.norm() > 1.0 + 1e-6, "agent {agent} overshoot missing");
        }
    }

    #[test]
    fn attempt_normalizations_validate_cleanly() {
        let id2 = ComplexMatrix::identity(2);
        let attempt = build_lugano_attempt(id2.clone(), id2.clone(), id2).unwrap();
        for agent in 0..3 {
            for t in 0..=9 {
                let report = validate(&attempt.normalization(agent, t), 9);
                assert!(report.is_clean(), "agent {agent} t={t}: {:?}", report.issues);
            }
        }
    }

    #[test]
    fn desync_schedule_matches_the_two_agent_example() {
        let sched = desync_schedule(2, &[0, 1]).unwrap();
        assert_eq!(sched.t0(), 12);
        assert_eq!(sched.t1(), 17);
        assert_eq!(sched.position(0), 1);
        assert_eq!(sched.position(1), 2);
        for j in [2usize, 3, 4] {
            assert_eq!(sched.reading(1, j), 2);
        }
        assert_eq!(sched.reading(1, 5), 3);
        assert_eq!(sched.tuple(12), ClockTuple::new(vec![12, 10]));
    }

    #[test]
    fn desync_schedules_tick_without_skips_and_end_two_apart() {
        for n in [2usize, 3, 4] {
            let order: Vec<usize> = (0..n).collect();
            let sched = desync_schedule(n, &order).unwrap();
            let t0 = sched.t0();
            for j in 1..=t0 {
                let mut ticked = 0usize;
                for a in 0..n {
                    let delta = sched.reading(a, j) - sched.reading(a, j - 1);
                    assert!(delta <= 1, "n={n} agent {a} skipped at j={j}");
                    ticked += delta;
                }
                assert!(
                    ticked == n || ticked == n - 1,
                    "n={n} j={j}: {ticked} clocks ticked"
                );
            }
            for m in 1..=n {
                assert_eq!(sched.reading_at_position(m, t0), t0 - 2 * (m - 1));
            }
        }
    }

    #[test]
    fn desync_schedule_rejects_bad_orderings() {
        let invalid = |r: Result<DesyncSchedule, ScenarioError>| {
            matches!(r.unwrap_err(), ScenarioError::InvalidPermutation { .. })
        };
        assert!(invalid(desync_schedule(1, &[0])));
        assert!(invalid(desync_schedule(3, &[0, 1])));
        assert!(invalid(desync_schedule(2, &[0, 2])));
        assert!(invalid(desync_schedule(2, &[1, 1])));
    }

    fn trivial_switch_combs() -> Vec<CombSpec> {
        let id2 = ComplexMatrix::identity(2);
        vec![
            CombSpec { order: vec![0, 1], chain: vec![id2.clone(); 3] },
            CombSpec { order: vec![1, 0], chain: vec![id2; 3] },
        ]
    }

    #[test]
    fn combs_validation_rejects_incompatible_specs() {
        let id2 = ComplexMatrix::identity(2);
        assert!(matches!(
            build_controlled_combs(vec![], 2, 1, vec![]).unwrap_err(),
            ScenarioError::InvalidPermutation { .. }
        ));
        assert!(matches!(
            build_controlled_combs(trivial_switch_combs(), 2, 1, vec![1]).unwrap_err(),
            ScenarioError::DimensionMismatch { context: "ancilla dimensions", .. }
        ));
        let short_chain =
            vec![CombSpec { order: vec![0, 1], chain: vec![id2.clone(); 2] }];
        assert!(matches!(
            build_controlled_combs(short_chain, 2, 1, vec![1, 1]).unwrap_err(),
            ScenarioError::CombIncompatible { field: "chain length", .. }
        ));
        let wrong_dim =
            vec![CombSpec { order: vec![0, 1], chain: vec![ComplexMatrix::identity(3); 3] }];
        assert!(matches!(
            build_controlled_combs(wrong_dim, 2, 1, vec![1, 1]).unwrap_err(),
            ScenarioError::CombIncompatible { field: "chain dimension", .. }
        ));
        let stretched = ComplexMatrix::from_real(2, 2, &[2.0, 0.0, 0.0, 2.0]).unwrap();
        let not_unitary = vec![CombSpec { order: vec![0, 1], chain: vec![stretched; 3] }];
        assert!(matches!(
            build_controlled_combs(not_unitary, 2, 1, vec![1, 1]).unwrap_err(),
            ScenarioError::NotUnitary { .. }
        ));
        let repeated = vec![CombSpec { order: vec![0, 0], chain: vec![id2; 3] }];
        assert!(matches!(
            build_controlled_combs(repeated, 2, 1, vec![1, 1]).unwrap_err(),
            ScenarioError::InvalidPermutation { .. }
        ));
    }

    #[test]
    fn two_trivial_combs_reproduce_the_switch_process() {
        let combs = build_controlled_combs(trivial_switch_combs(), 2, 1, vec![1, 1]).unwrap();
        assert_eq!(combs.t0(), 12);
        assert_eq!(combs.final_reading(), 35);
        assert_eq!(combs.time_of_action(0), 14);
        assert_eq!(combs.time_of_action(1), 14);
        assert_eq!(combs.final_times(), vec![35, 35]);

        let mut rng = seeded_rng(71);
        let u_a = haar_unitary(2, &mut rng);
        let u_b = haar_unitary(2, &mut rng);
        let ops = vec![u_a.clone(), u_b.clone()];

        let final_tuple = ClockTuple::new(vec![35, 35]);
        let m = evolution_matrix(&combs, &ops, &final_tuple).unwrap();

        let mut p0 = ComplexMatrix::zeros(2, 2);
        p0.set(0, 0, ONE);
        let mut p1 = ComplexMatrix::zeros(2, 2);
        p1.set(1, 1, ONE);
        let oracle = kron(&p0, &u_b.mul(&u_a)).add(&kron(&p1, &u_a.mul(&u_b)));
        assert!(m.max_diff(&oracle) < 1e-12);
        assert!(m.is_unitary(1e-10).unwrap());
    }

    #[test]
    fn three_agent_combs_match_the_direct_chain_product() {
        let mut rng = seeded_rng(72);
        let orders = [vec![0usize, 1, 2], vec![2usize, 0, 1]];
        let combs_spec: Vec<CombSpec> = orders
            .iter()
            .map(|order| CombSpec {
                order: order.clone(),
                chain: (0..4).map(|_| haar_unitary(4, &mut rng)).collect(),
            })
            .collect();
        let ops: Vec<ComplexMatrix> = (0..3).map(|_| haar_unitary(2, &mut rng)).collect();
        let combs =
            build_controlled_combs(combs_spec.clone(), 2, 2, vec![1, 1, 1]).unwrap();
        assert_eq!(combs.final_reading(), 57);

        let final_tuple = ClockTuple::new(vec![57; 3]);
        let m = evolution_matrix(&combs, &ops, &final_tuple).unwrap();

        let id_mem = ComplexMatrix::identity(2);
        let mut oracle = ComplexMatrix::zeros(8, 8);
        for (k, spec) in combs_spec.iter().enumerate() {
            let mut sector = spec.chain[0].clone();
            for y in 1..=3 {
                sector = kron(&ops[spec.order[y - 1]], &id_mem).mul(&sector);
                sector = spec.chain[y].mul(&sector);
            }
            let mut p = ComplexMatrix::zeros(2, 2);
            p.set(k, k, ONE);
            oracle = oracle.add(&kron(&p, &sector));
        }
        assert!(m.max_diff(&oracle) < 1e-12);
        assert!(m.is_unitary(1e-10).unwrap());
    }

    fn ancilla_combs() -> (CombsScenario, Vec<ComplexMatrix>) {
        let mut rng = seeded_rng(73);
        let specs: Vec<CombSpec> = [vec![0usize, 1], vec![1usize, 0]]
            .into_iter()
            .map(|order| CombSpec {
                order,
                chain: (0..3).map(|_| haar_unitary(2, &mut rng)).collect(),
            })
            .collect();
        let ops = vec![haar_unitary(4, &mut rng), haar_unitary(2, &mut rng)];
        (build_controlled_combs(specs, 2, 1, vec![2, 1]).unwrap(), ops)
    }

    #[test]
    fn comb_views_are_unit_norm_at_every_reading() {
        let (combs, ops) = ancilla_combs();
        let mut rng = seeded_rng(74);
        let mut input: Vec<Complex64> =
            (0..combs.branch_dim()).map(|_| crate::linalg::complex_gaussian(&mut rng)).collect();
        let scale = 1.0 / input.norm();
        input.scale_in_place(Complex64::new(scale, 0.0));

        let hs = combs.construct(&input, &ops).unwrap();
        assert!(hs.validate_boundary_branches().is_ok());
        let final_reading = combs.final_reading();
        assert_eq!(
            hs.branch(&ClockTuple::new(vec![final_reading - 1; 2])),
            hs.branch(&ClockTuple::new(vec![final_reading; 2]))
        );

        for agent in 0..2 {
            for t in 0..=final_reading {
                let view = crate::history::perspectival_state(
                    &hs,
                    agent,
                    t,
                    &combs.normalization(agent, t),
                )
                .unwrap();
                assert!(
                    (view.norm() - 1.0).abs() < 1e-10,
                    "agent {agent} t={t} norm {}",
                    view.norm()
                );
            }
        }
    }

    #[test]
    fn comb_normalizations_validate_cleanly() {
        let (combs, _) = ancilla_combs();
        let final_reading = combs.final_reading();
        for agent in 0..2 {
            for t in 0..=final_reading {
                let report = validate(&combs.normalization(agent, t), final_reading);
                assert!(report.is_clean(), "agent {agent} t={t}: {:?}", report.issues);
            }
        }
    }
}
