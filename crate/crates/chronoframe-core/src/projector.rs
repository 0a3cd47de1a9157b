//! The physical subspace spanned by a scenario's history states, its
//! orthogonal projector P̂_H and constraint Ĉ = 1 − P̂_H, the discrete
//! exponential-sum identity for P̂_H, single-clock circuit histories with
//! their Hamiltonian constraint terms and projector blocks, and the
//! two-agent two-time consistency counterexample.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::history::{ClockTuple, HistoryError, HistoryState, ScenarioBuilder};
use crate::linalg::{hermitian_eig, orthonormalize};
use crate::norm::NormalizationOperator;
use crate::scenarios::{build_switch, ScenarioError};
use crate::tensor::{kron, ComplexMatrix, DimLayout};
use crate::{Complex64, ONE, ZERO};

/// Failure while assembling projectors or constraint operators.
#[derive(Debug, Clone, PartialEq)]
pub enum ProjectorError {
    /// Underlying history construction failed.
    History(HistoryError),
    /// The supplied matrix is not idempotent.
    NotIdempotent { residual: f64 },
    /// The supplied matrix is not Hermitian.
    NotHermitian { residual: f64 },
    /// A clock reading exceeds the circuit length.
    TimeOutOfRange { time: usize, max: usize },
    /// Dimensions are inconsistent.
    DimMismatch { context: &'static str, expected: usize, found: usize },
    /// Linear-algebra failure.
    Numeric { context: String },
}

impl fmt::Display for ProjectorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjectorError::History(e) => write!(f, "{e}"),
            ProjectorError::NotIdempotent { residual } => {
                write!(f, "matrix is not idempotent (residual {residual:.3e})")
            }
            ProjectorError::NotHermitian { residual } => {
                write!(f, "matrix is not Hermitian (residual {residual:.3e})")
            }
            ProjectorError::TimeOutOfRange { time, max } => {
                write!(f, "clock reading {time} exceeds {max}")
            }
            ProjectorError::DimMismatch { context, expected, found } => {
                write!(f, "{context}: expected dimension {expected}, found {found}")
            }
            ProjectorError::Numeric { context } => write!(f, "{context}"),
        }
    }
}

impl core::error::Error for ProjectorError {}

impl From<HistoryError> for ProjectorError {
    fn from(e: HistoryError) -> Self {
        ProjectorError::History(e)
    }
}

/// Flattens a history state to a dense vector on clocks ⊗ system ⊗ ancillas,
/// clock factors first in agent order.
pub fn flatten_history(hs: &HistoryState) -> Vec<Complex64> {
    let agents = hs.agent_count();
    let branch_dim = hs.branch_dim();
    let clock_dims: Vec<usize> = (0..agents).map(|a| hs.clock_dim(a)).collect();
    let total: usize = clock_dims.iter().product::<usize>() * branch_dim;
    let mut out = vec![ZERO; total];
    for (tuple, vector) in hs.branches() {
        let mut base = 0usize;
        for (i, &r) in tuple.readings().iter().enumerate() {
            base = base * clock_dims[i] + r;
        }
        let offset = base * branch_dim;
        for (i, &z) in vector.iter().enumerate() {
            out[offset + i] += z;
        }
    }
    out
}

/// Orthonormal span of the history states a builder produces over all
/// computational basis inputs, on the full clocks ⊗ system ⊗ ancillas space.
pub struct PhysicalSubspace {
    scenario: String,
    ops: Vec<ComplexMatrix>,
    ambient_dim: usize,
    expected_rank: usize,
    vectors: Vec<Vec<Complex64>>,
}

impl PhysicalSubspace {
    /// Name of the originating scenario.
    pub fn scenario(&self) -> &str {
        &self.scenario
    }

    /// The agents' operators the histories were built with.
    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    /// Dimension of the ambient clocks ⊗ system ⊗ ancillas space.
    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Orthonormal spanning vectors.
    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    /// Dimension of the span.
    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    /// Number of basis inputs whose histories were linearly dependent on
    /// earlier ones; nonzero values flag rank deficiency.
    pub fn dropped(&self) -> usize {
        self.expected_rank - self.rank()
    }

    /// The orthogonal projector P̂_H onto the span, as a dense matrix.
    pub fn projector(&self) -> ComplexMatrix {
        let mut p = ComplexMatrix::zeros(self.ambient_dim, self.ambient_dim);
        for q in &self.vectors {
            for (r, &qr) in q.iter().enumerate() {
                if qr.norm_sqr() == 0.0 {
                    continue;
                }
                for (c, &qc) in q.iter().enumerate() {
                    p.add_to(r, c, qr * qc.conj());
                }
            }
        }
        p
    }
}

/// Builds the physical subspace of a builder at fixed operators by
/// orthonormalizing the history states of all computational basis inputs.
pub fn physical_subspace(
    builder: &dyn ScenarioBuilder,
    ops: &[ComplexMatrix],
) -> Result<PhysicalSubspace, HistoryError> {
    let dim = builder.branch_dim();
    let mut histories: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut input = vec![ZERO; dim];
        input[i] = ONE;
        let hs = builder.construct(&input, ops)?;
        histories.push(flatten_history(&hs));
    }
    let ambient_dim = histories[0].len();
    let basis = orthonormalize(&histories, 1e-9);
    Ok(PhysicalSubspace {
        scenario: builder.name().to_string(),
        ops: ops.to_vec(),
        ambient_dim,
        expected_rank: dim,
        vectors: basis.basis,
    })
}

/// The orthogonal projector P̂_H onto the span of a builder's history states.
pub fn physical_projector(
    builder: &dyn ScenarioBuilder,
    ops: &[ComplexMatrix],
) -> Result<ComplexMatrix, HistoryError> {
    Ok(physical_subspace(builder, ops)?.projector())
}

/// The constraint Ĉ = 1 − P̂_H; the input must be a Hermitian projector.
pub fn constraint(p_h: &ComplexMatrix) -> Result<ComplexMatrix, ProjectorError> {
    if !p_h.is_square() {
        return Err(ProjectorError::DimMismatch {
            context: "projector",
            expected: p_h.rows(),
            found: p_h.cols(),
        });
    }
    let herm = p_h.hermiticity_residual().expect("projector is square");
    if herm > 1e-9 {
        return Err(ProjectorError::NotHermitian { residual: herm });
    }
    let idem = p_h.mul(p_h).sub(p_h).max_abs();
    if idem > 1e-9 {
        return Err(ProjectorError::NotIdempotent { residual: idem });
    }
    Ok(ComplexMatrix::identity(p_h.rows()).sub(p_h))
}

fn root_of_unity(k: usize, t: usize) -> Complex64 {
    let angle = -2.0 * core::f64::consts::PI * (k as f64) / (t as f64);
    Complex64::new(libm::cos(angle), libm::sin(angle))
}

/// Evaluates (1/T) Σ_{k=0}^{T−1} exp(−2πi Ĉ k/T) through the
/// eigendecomposition of Ĉ (each exponential is diagonal in the shared
/// eigenbasis) and returns the max-norm residual against 1 − Ĉ.
pub fn exponential_identity_check(
    c: &ComplexMatrix,
    t: usize,
) -> Result<f64, ProjectorError> {
    if t == 0 {
        return Err(ProjectorError::TimeOutOfRange { time: 0, max: usize::MAX });
    }
    let eig = hermitian_eig(c)
        .map_err(|e| ProjectorError::Numeric { context: format!("eigendecomposition: {e}") })?;
    let mut phases = vec![ZERO; eig.values.len()];
    for k in 0..t {
        for (phase, &lambda) in phases.iter_mut().zip(&eig.values) {
            let angle = -2.0 * core::f64::consts::PI * lambda * (k as f64) / (t as f64);
            *phase += Complex64::new(libm::cos(angle), libm::sin(angle));
        }
    }
    let inv_t = Complex64::new(1.0 / t as f64, 0.0);
    for phase in phases.iter_mut() {
        *phase *= inv_t;
    }
    let rhs = eig.vectors.mul(&ComplexMatrix::diagonal(&phases)).mul(&eig.vectors.dagger());
    let target = ComplexMatrix::identity(c.rows()).sub(c);
    Ok(rhs.sub(&target).max_abs())
}

/// Evaluates the same exponential sum in the rank-r representation
/// P̂_H = Σ_q |q⟩⟨q|, where exp(θP̂_H) = 1 + (e^θ − 1)P̂_H, and returns an
/// upper bound on the max-norm residual against P̂_H. Usable when the
/// ambient space is too large for dense matrices.
pub fn exponential_identity_bound(subspace: &PhysicalSubspace, t: usize) -> f64 {
    let mut identity_coeff = ZERO;
    let mut projector_coeff = ZERO;
    for k in 0..t.max(1) {
        let phase = root_of_unity(k, t.max(1));
        identity_coeff += phase;
        projector_coeff += ONE - phase;
    }
    let inv_t = Complex64::new(1.0 / t.max(1) as f64, 0.0);
    identity_coeff *= inv_t;
    projector_coeff *= inv_t;

    let max_row_norm = (0..subspace.ambient_dim())
        .map(|r| {
            libm::sqrt(
                subspace.vectors().iter().map(|q| q[r].norm_sqr()).sum::<f64>(),
            )
        })
        .fold(0.0_f64, f64::max);
    identity_coeff.norm() + (projector_coeff - ONE).norm() * max_row_norm * max_row_norm
}

/// Builds the single-clock history state of a circuit: branch t carries
/// (1/√(T+1)) U_t ⋯ U_1 |φ⟩, with the step before the first gate included
/// as the identity.
pub fn feynman_history(
    gates: &[ComplexMatrix],
    input: &[Complex64],
) -> Result<HistoryState, ProjectorError> {
    let dim = input.len();
    for gate in gates {
        if !gate.is_square() || gate.rows() != dim {
            return Err(ProjectorError::DimMismatch {
                context: "circuit gate",
                expected: dim,
                found: gate.rows(),
            });
        }
    }
    let big_t = gates.len();
    let layout = DimLayout::new(&[("t", big_t + 1), ("S", dim)]).expect("distinct labels");
    let mut hs = HistoryState::new(layout, vec![big_t])?;
    let scale = Complex64::new(1.0 / libm::sqrt((big_t + 1) as f64), 0.0);
    let mut current: Vec<Complex64> = input.iter().map(|&z| z * scale).collect();
    for t in 0..=big_t {
        hs.add_branch(ClockTuple::new(vec![t]), current.clone())?;
        if t < big_t {
            current = gates[t].apply(&current);
        }
    }
    Ok(hs)
}

/// The orthogonal projector onto the span of a circuit's history states over
/// all computational basis inputs.
pub fn feynman_projector(gates: &[ComplexMatrix], dim: usize) -> Result<ComplexMatrix, ProjectorError> {
    let mut histories = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut input = vec![ZERO; dim];
        input[i] = ONE;
        histories.push(flatten_history(&feynman_history(gates, &input)?));
    }
    let basis = orthonormalize(&histories, 1e-9);
    let ambient = histories[0].len();
    let mut p = ComplexMatrix::zeros(ambient, ambient);
    for q in &basis.basis {
        for (r, &qr) in q.iter().enumerate() {
            if qr.norm_sqr() == 0.0 {
                continue;
            }
            for (c, &qc) in q.iter().enumerate() {
                p.add_to(r, c, qr * qc.conj());
            }
        }
    }
    Ok(p)
}

/// The T Hamiltonian constraint terms of a circuit, each
/// ½(|t−1⟩⟨t−1| + |t⟩⟨t|) ⊗ 1 − ½(|t⟩⟨t−1| ⊗ U_t + |t−1⟩⟨t| ⊗ U_t†);
/// their sum annihilates the circuit's history states.
pub fn feynman_constraint_terms(
    gates: &[ComplexMatrix],
) -> Result<Vec<ComplexMatrix>, ProjectorError> {
    let dim = match gates.first() {
        Some(g) => g.rows(),
        None => return Ok(Vec::new()),
    };
    for gate in gates {
        if !gate.is_square() || gate.rows() != dim {
            return Err(ProjectorError::DimMismatch {
                context: "circuit gate",
                expected: dim,
                found: gate.rows(),
            });
        }
    }
    let big_t = gates.len();
    let clock_dim = big_t + 1;
    let half = Complex64::new(0.5, 0.0);
    let identity = ComplexMatrix::identity(dim);
    let unit = |r: usize, c: usize| {
        let mut m = ComplexMatrix::zeros(clock_dim, clock_dim);
        m.set(r, c, ONE);
        m
    };
    Ok((1..=big_t)
        .map(|t| {
            let diag = kron(&unit(t - 1, t - 1), &identity).add(&kron(&unit(t, t), &identity));
            let hop = kron(&unit(t, t - 1), &gates[t - 1])
                .add(&kron(&unit(t - 1, t), &gates[t - 1].dagger()));
            diag.sub(&hop).scale(half)
        })
        .collect())
}

/// The ⟨t₂|P̂|t₁⟩ clock block of a single-clock operator on clock ⊗ system;
/// for circuit projectors this equals (1/(T+1)) U_{t₂} ⋯ U_{t₁+1}.
pub fn projector_block(
    p: &ComplexMatrix,
    t1: usize,
    t2: usize,
    big_t: usize,
) -> Result<ComplexMatrix, ProjectorError> {
    let clock_dim = big_t + 1;
    if p.rows() % clock_dim != 0 || !p.is_square() {
        return Err(ProjectorError::DimMismatch {
            context: "clock blocks",
            expected: clock_dim,
            found: p.rows(),
        });
    }
    for time in [t1, t2] {
        if time > big_t {
            return Err(ProjectorError::TimeOutOfRange { time, max: big_t });
        }
    }
    let dim = p.rows() / clock_dim;
    Ok(ComplexMatrix::from_fn(dim, dim, |r, c| p.get(t2 * dim + r, t1 * dim + c)))
}

/// The (t⃗₂, t⃗₁) clock block of a multi-clock operator on clocks ⊗ branch.
/// Raw extraction only: no identity relating it to perspectival unitaries is
/// asserted, and the consistency counterexample below shows the natural
/// candidate fails.
pub fn multi_clock_block(
    p: &ComplexMatrix,
    clock_dims: &[usize],
    branch_dim: usize,
    t2: &ClockTuple,
    t1: &ClockTuple,
) -> Result<ComplexMatrix, ProjectorError> {
    let total: usize = clock_dims.iter().product::<usize>() * branch_dim;
    if !p.is_square() || p.rows() != total {
        return Err(ProjectorError::DimMismatch {
            context: "multi-clock blocks",
            expected: total,
            found: p.rows(),
        });
    }
    let offset = |tuple: &ClockTuple| -> Result<usize, ProjectorError> {
        if tuple.len() != clock_dims.len() {
            return Err(ProjectorError::DimMismatch {
                context: "clock tuple length",
                expected: clock_dims.len(),
                found: tuple.len(),
            });
        }
        let mut base = 0usize;
        for (i, &r) in tuple.readings().iter().enumerate() {
            if r >= clock_dims[i] {
                return Err(ProjectorError::TimeOutOfRange { time: r, max: clock_dims[i] - 1 });
            }
            base = base * clock_dims[i] + r;
        }
        Ok(base * branch_dim)
    };
    let row = offset(t2)?;
    let col = offset(t1)?;
    Ok(ComplexMatrix::from_fn(branch_dim, branch_dim, |r, c| p.get(row + r, col + c)))
}

fn embed_system_block(block: &ComplexMatrix, clock_dim: usize) -> ComplexMatrix {
    kron(&ComplexMatrix::identity(clock_dim), block)
}

fn inverse_block(op: &NormalizationOperator) -> ComplexMatrix {
    let inv = op.inverse().expect("normalization blocks are invertible");
    inv.block_at(&ClockTuple::new(Vec::new()))
}

/// Evaluates both sides of the two-agent two-time consistency relation
/// ⟨t_B′| N_A⁻¹(t_A′) 𝒰_A(t_A′, t_A) N_A(t_A) |t_B⟩ =
/// ⟨t_A′| N_B⁻¹(t_B′) 𝒰_B(t_B′, t_B) N_B(t_B) |t_A⟩
/// for the order-superposition scenario at t_B′ = 3, t_B = 2, t_A′ = 5,
/// t_A = 4, with the declared candidate steps. The two sides come out as
/// √2 |0⟩⟨0| ⊗ U_B and (1/√2) |0⟩⟨0| ⊗ U_A, so no operator can satisfy both
/// block decompositions at once.
pub fn switch_consistency_counterexample(
    u_a: &ComplexMatrix,
    u_b: &ComplexMatrix,
) -> Result<(ComplexMatrix, ComplexMatrix), ScenarioError> {
    let builder = build_switch(u_a.clone(), u_b.clone())?;
    let ops = builder.default_ops();
    let system_dim = 2 * u_a.rows();
    let clock_dim = builder.final_times()[0] + 1;
    let origin = ClockTuple::new(Vec::new());

    let step_a = builder.candidate_step(0, 5, &ops).expect("declared step");
    let n_a4 = builder.normalization(0, 4).block_at(&origin);
    let n_a5_inv = inverse_block(&builder.normalization(0, 5));
    let two_time_a = embed_system_block(&n_a5_inv, clock_dim)
        .mul(&step_a)
        .mul(&embed_system_block(&n_a4, clock_dim));
    let lhs = ComplexMatrix::from_fn(system_dim, system_dim, |r, c| {
        two_time_a.get(3 * system_dim + r, 2 * system_dim + c)
    });

    let step_b = builder.candidate_step(1, 3, &ops).expect("declared step");
    let n_b2 = builder.normalization(1, 2).block_at(&origin);
    let n_b3_inv = inverse_block(&builder.normalization(1, 3));
    let two_time_b = embed_system_block(&n_b3_inv, clock_dim)
        .mul(&step_b)
        .mul(&embed_system_block(&n_b2, clock_dim));
    let rhs = ComplexMatrix::from_fn(system_dim, system_dim, |r, c| {
        two_time_b.get(5 * system_dim + r, 4 * system_dim + c)
    });

    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_gaussian, haar_unitary, seeded_rng, InnerProduct};
    use crate::scenarios::{
        build_controlled_combs, build_lugano_attempt, build_twin, pauli_x, CombSpec,
    };
    use crate::tensor::basis_vector;
    use crate::DEFAULT_TOL;

    fn switch_builder() -> impl ScenarioBuilder {
        let mut rng = seeded_rng(71);
        build_switch(haar_unitary(2, &mut rng), haar_unitary(2, &mut rng))
            .expect("qubit operators")
    }

    #[test]
    fn switch_projector_is_hermitian_idempotent_with_full_rank() {
        let builder = switch_builder();
        let subspace =
            physical_subspace(&builder, &builder.default_ops()).expect("construction");
        assert_eq!(subspace.rank(), 4);
        assert_eq!(subspace.dropped(), 0);
        let p = subspace.projector();
        assert!(p.hermiticity_residual().expect("square") < 1e-10);
        assert!(p.mul(&p).sub(&p).max_abs() < 1e-10);
        let trace = p.trace().expect("square");
        assert!((trace - Complex64::new(4.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn constraint_annihilates_history_states() {
        let builder = switch_builder();
        let ops = builder.default_ops();
        let p = physical_projector(&builder, &ops).expect("construction");
        let c = constraint(&p).expect("valid projector");

        let mut rng = seeded_rng(72);
        let mut input: Vec<Complex64> = (0..4).map(|_| complex_gaussian(&mut rng)).collect();
        let scale = Complex64::new(1.0 / input.norm(), 0.0);
        input.scale_in_place(scale);
        let hs = builder.construct(&input, &ops).expect("construction");
        let flat = flatten_history(&hs);
        assert!(c.apply(&flat).norm() < DEFAULT_TOL);

        let mut probe: Vec<Complex64> =
            (0..p.rows()).map(|_| complex_gaussian(&mut rng)).collect();
        let projected = p.apply(&probe);
        for (x, y) in probe.iter_mut().zip(&projected) {
            *x -= y;
        }
        let mut kept = c.apply(&probe);
        kept.axpy(-ONE, &probe);
        assert!(kept.norm() < 1e-9);
    }

    #[test]
    fn constraint_rejects_a_non_projector() {
        let shear = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]).expect("2x2 entries");
        assert!(matches!(constraint(&shear).unwrap_err(), ProjectorError::NotHermitian { .. }));
        let half = ComplexMatrix::identity(2).scale(Complex64::new(0.5, 0.0));
        assert!(matches!(constraint(&half).unwrap_err(), ProjectorError::NotIdempotent { .. }));
    }

    #[test]
    fn constraint_spectrum_is_boolean_for_circuits() {
        let mut rng = seeded_rng(73);
        let gates = vec![haar_unitary(2, &mut rng), haar_unitary(2, &mut rng)];
        let p = feynman_projector(&gates, 2).expect("construction");
        let c = constraint(&p).expect("valid projector");
        let eig = hermitian_eig(&c).expect("Hermitian");
        for value in eig.values {
            assert!(value.abs() < 1e-9 || (value - 1.0).abs() < 1e-9, "eigenvalue {value}");
        }
    }

    #[test]
    fn exponential_identity_holds_for_the_switch() {
        let builder = switch_builder();
        let p = physical_projector(&builder, &builder.default_ops()).expect("construction");
        let c = constraint(&p).expect("valid projector");
        let residual = exponential_identity_check(&c, 7).expect("eigensolve");
        assert!(residual < 1e-9, "residual {residual:.3e}");
    }

    #[test]
    fn exponential_identity_small_cases() {
        let zero = ComplexMatrix::zeros(4, 4);
        let residual = exponential_identity_check(&zero, 5).expect("eigensolve");
        assert!(residual < 1e-12);

        let c = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]).expect("2x2 entries");
        let residual = exponential_identity_check(&c, 2).expect("eigensolve");
        assert!(residual < 1e-12);
    }

    #[test]
    fn low_rank_exponential_identity_covers_large_builders() {
        let id2 = ComplexMatrix::identity(2);
        let combs = vec![
            CombSpec { order: vec![0, 1], chain: vec![id2.clone(); 3] },
            CombSpec { order: vec![1, 0], chain: vec![id2; 3] },
        ];
        let comb_builder =
            build_controlled_combs(combs, 2, 1, vec![1, 1]).expect("compatible combs");
        let subspace = physical_subspace(&comb_builder, &comb_builder.default_ops())
            .expect("construction");
        assert_eq!(subspace.rank(), 4);
        let bound = exponential_identity_bound(&subspace, 35);
        assert!(bound < 1e-9, "bound {bound:.3e}");

        let mut rng = seeded_rng(74);
        let attempt = build_lugano_attempt(
            haar_unitary(2, &mut rng),
            haar_unitary(2, &mut rng),
            haar_unitary(2, &mut rng),
        )
        .expect("qubit operators");
        let subspace = physical_subspace(&attempt, &attempt.default_ops()).expect("construction");
        let bound = exponential_identity_bound(&subspace, 9);
        assert!(bound < 1e-9, "bound {bound:.3e}");
    }

    #[test]
    fn feynman_history_matches_the_hand_expansion() {
        let x = pauli_x();
        let hs = feynman_history(&[x.clone(), x.clone()], &basis_vector(2, 0))
            .expect("matching dimensions");
        let inv_sqrt3 = 1.0 / libm::sqrt(3.0);
        let expect = |t: usize, s: usize| {
            let v = hs.branch(&ClockTuple::new(vec![t])).expect("branch present");
            assert!((v[s] - Complex64::new(inv_sqrt3, 0.0)).norm() < 1e-12);
            assert!(v[1 - s].norm() < 1e-12);
        };
        expect(0, 0);
        expect(1, 1);
        expect(2, 0);

        let trivial = feynman_history(&[], &basis_vector(2, 1)).expect("matching dimensions");
        assert_eq!(trivial.branches().len(), 1);
        assert!(
            (trivial.branch(&ClockTuple::new(vec![0])).expect("branch present")[1] - ONE).norm()
                < 1e-12
        );

        let mut rng = seeded_rng(75);
        let gates = vec![haar_unitary(3, &mut rng), haar_unitary(3, &mut rng)];
        let mut input: Vec<Complex64> = (0..3).map(|_| complex_gaussian(&mut rng)).collect();
        let scale = Complex64::new(1.0 / input.norm(), 0.0);
        input.scale_in_place(scale);
        let hs = feynman_history(&gates, &input).expect("matching dimensions");
        let conditioned = hs.condition(0, 2).expect("valid reading");
        let mut dense = conditioned.to_dense();
        let norm = dense.norm();
        let renorm = Complex64::new(1.0 / norm, 0.0);
        dense.scale_in_place(renorm);
        let expected = gates[1].apply(&gates[0].apply(&input));
        let defect = dense
            .iter()
            .zip(&expected)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0_f64, f64::max);
        assert!(defect < 1e-12);
    }

    #[test]
    fn constraint_terms_annihilate_the_history() {
        let mut rng = seeded_rng(76);
        for dim in [2usize, 3] {
            let gates = vec![haar_unitary(dim, &mut rng), haar_unitary(dim, &mut rng)];
            let terms = feynman_constraint_terms(&gates).expect("matching dimensions");
            assert_eq!(terms.len(), 2);
            let mut input: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(&mut rng)).collect();
            let scale = Complex64::new(1.0 / input.norm(), 0.0);
            input.scale_in_place(scale);
            let flat = flatten_history(&feynman_history(&gates, &input).expect("dims"));
            let mut total = vec![ZERO; flat.len()];
            for term in &terms {
                assert!(term.hermiticity_residual().expect("square") < 1e-12);
                let eig = hermitian_eig(term).expect("Hermitian");
                assert!(eig.values[0] > -1e-10, "negative eigenvalue {}", eig.values[0]);
                total.axpy(ONE, &term.apply(&flat));
            }
            assert!(total.norm() < DEFAULT_TOL, "constraint residual {}", total.norm());
        }

        let symmetric = feynman_constraint_terms(&[ComplexMatrix::identity(2)])
            .expect("matching dimensions");
        let mut vector = vec![ZERO; 4];
        vector[0] = ONE;
        vector[2] = ONE;
        assert!(symmetric[0].apply(&vector).norm() < 1e-12);
    }

    #[test]
    fn single_clock_projector_blocks_give_partial_products() {
        let mut rng = seeded_rng(77);
        let gates: Vec<ComplexMatrix> = (0..3).map(|_| haar_unitary(2, &mut rng)).collect();
        let p = feynman_projector(&gates, 2).expect("construction");
        let scale = Complex64::new(1.0 / 4.0, 0.0);
        for t1 in 0..=3usize {
            for t2 in t1..=3usize {
                let block = projector_block(&p, t1, t2, 3).expect("in range");
                let mut product = ComplexMatrix::identity(2);
                for gate in &gates[t1..t2] {
                    product = gate.mul(&product);
                }
                assert!(block.sub(&product.scale(scale)).max_abs() < 1e-10);
                let reverse = projector_block(&p, t2, t1, 3).expect("in range");
                assert!(reverse.sub(&block.dagger()).max_abs() < 1e-10);
            }
        }
        assert!(matches!(
            projector_block(&p, 0, 4, 3).unwrap_err(),
            ProjectorError::TimeOutOfRange { .. }
        ));

        let hx = [pauli_x(), hadamard()];
        let p = feynman_projector(&hx, 2).expect("construction");
        let block = projector_block(&p, 0, 2, 2).expect("in range");
        let expected = hadamard().mul(&pauli_x()).scale(Complex64::new(1.0 / 3.0, 0.0));
        assert!(block.sub(&expected).max_abs() < 1e-10);
    }

    fn hadamard() -> ComplexMatrix {
        let h = 1.0 / libm::sqrt(2.0);
        ComplexMatrix::from_real(2, 2, &[h, h, h, -h]).expect("2x2 entries")
    }

    #[test]
    fn multi_clock_blocks_extract_raw_submatrices() {
        let mut rng = seeded_rng(78);
        let twin = build_twin(
            haar_unitary(2, &mut rng),
            haar_unitary(2, &mut rng),
            haar_unitary(4, &mut rng),
        )
        .expect("compatible dimensions");
        let p = physical_projector(&twin, &twin.default_ops()).expect("construction");
        let zeros = ClockTuple::new(vec![0, 0]);
        let finals = ClockTuple::new(vec![6, 9]);
        let block = multi_clock_block(&p, &[7, 10], 4, &finals, &zeros).expect("in range");
        let row = (6 * 10 + 9) * 4;
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(block.get(r, c), p.get(row + r, c));
            }
        }
        assert!(matches!(
            multi_clock_block(&p, &[7, 10], 4, &ClockTuple::new(vec![7, 0]), &zeros).unwrap_err(),
            ProjectorError::TimeOutOfRange { .. }
        ));
    }

    #[test]
    fn consistency_counterexample_reproduces_both_sides() {
        let mut rng = seeded_rng(79);
        let u_a = haar_unitary(2, &mut rng);
        let u_b = haar_unitary(2, &mut rng);
        let (lhs, rhs) = switch_consistency_counterexample(&u_a, &u_b).expect("qubit operators");
        let mut p0 = ComplexMatrix::zeros(2, 2);
        p0.set(0, 0, ONE);
        let sqrt2 = libm::sqrt(2.0);
        let expected_lhs = kron(&p0, &u_b).scale(Complex64::new(sqrt2, 0.0));
        let expected_rhs = kron(&p0, &u_a).scale(Complex64::new(1.0 / sqrt2, 0.0));
        assert!(lhs.sub(&expected_lhs).max_abs() < 1e-10);
        assert!(rhs.sub(&expected_rhs).max_abs() < 1e-10);

        let id = ComplexMatrix::identity(2);
        let (lhs, rhs) = switch_consistency_counterexample(&id, &id).expect("qubit operators");
        assert!(lhs.sub(&rhs).max_abs() > 0.5);
    }
}
