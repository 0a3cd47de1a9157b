//! Induced processes: the multilinear map from the agents' operators to the
//! global past → global future evolution, purity verification, Choi
//! representations, distances between processes, and the causal reference
//! frame decomposition through one agent's perspective.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::axioms::{builder_normalizations, extract_step_unitaries, AxiomCheck, ExtractionError};
use crate::history::{evolution_matrix, ClockTuple, HistoryError, ScenarioBuilder};
use crate::linalg::{
    complex_gaussian, gaussian_matrix, haar_unitary, hermitian_eig, operator_two_norm, seeded_rng,
    InnerProduct,
};
use crate::tensor::{kron, ComplexMatrix};
use crate::{Complex64, DEFAULT_TOL, ONE};

/// Failure while evaluating or analyzing a process.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessError {
    /// Underlying history construction failed.
    History(HistoryError),
    /// Wrong number of slot operators.
    Arity { expected: usize, found: usize },
    /// A slot operator has the wrong dimension.
    SlotDim { slot: usize, expected: usize, found: usize },
    /// The evaluated process output has an unexpected shape.
    OutputShape { expected: usize, rows: usize, cols: usize },
    /// The probed channel is not linear, so no Choi matrix represents it.
    NonlinearChannel { residual: f64 },
    /// Two processes cannot be compared.
    Incomparable { context: String },
    /// Linear-algebra failure while analyzing the process.
    Numeric { context: String },
}

impl fmt::Display for ProcessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessError::History(e) => write!(f, "{e}"),
            ProcessError::Arity { expected, found } => {
                write!(f, "process takes {expected} slot operators, got {found}")
            }
            ProcessError::SlotDim { slot, expected, found } => {
                write!(f, "slot {slot} takes a {expected}-dimensional operator, got {found}")
            }
            ProcessError::OutputShape { expected, rows, cols } => {
                write!(f, "process output is {rows}×{cols}, expected {expected}×{expected}")
            }
            ProcessError::NonlinearChannel { residual } => {
                write!(f, "channel deviates from linearity by {residual:.3e}")
            }
            ProcessError::Incomparable { context } => write!(f, "{context}"),
            ProcessError::Numeric { context } => write!(f, "{context}"),
        }
    }
}

impl core::error::Error for ProcessError {}

impl From<HistoryError> for ProcessError {
    fn from(e: HistoryError) -> Self {
        ProcessError::History(e)
    }
}

/// Factorization of one slot into system ⊗ ancilla, with the embedding of an
/// ancilla operator into the process output space.
pub struct SlotAncilla<'a> {
    system_dim: usize,
    ancilla_dim: usize,
    out_embed: Box<dyn Fn(&ComplexMatrix) -> ComplexMatrix + 'a>,
}

impl SlotAncilla<'_> {
    /// Dimension of the system part the agent acts on.
    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    /// Dimension of the agent's private ancilla.
    pub fn ancilla_dim(&self) -> usize {
        self.ancilla_dim
    }

    /// Embeds an ancilla operator into the output space.
    pub fn embed_out(&self, w: &ComplexMatrix) -> ComplexMatrix {
        (self.out_embed)(w)
    }
}

impl fmt::Debug for SlotAncilla<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SlotAncilla")
            .field("system_dim", &self.system_dim)
            .field("ancilla_dim", &self.ancilla_dim)
            .finish()
    }
}

/// A process as a function: slot operators in, the induced global past →
/// global future operator out. Multilinear for the shipped scenarios.
pub struct ProcessFunction<'a> {
    name: String,
    slot_dims: Vec<usize>,
    out_dim: usize,
    ancillas: Vec<Option<SlotAncilla<'a>>>,
    eval: Box<dyn Fn(&[ComplexMatrix]) -> Result<ComplexMatrix, ProcessError> + 'a>,
}

impl fmt::Debug for ProcessFunction<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProcessFunction")
            .field("name", &self.name)
            .field("slot_dims", &self.slot_dims)
            .field("out_dim", &self.out_dim)
            .field("ancillas", &self.ancillas)
            .finish()
    }
}

impl<'a> ProcessFunction<'a> {
    /// The process induced by a scenario builder: the branch at the all-final
    /// clock tuple as a function of the agents' operators.
    pub fn from_builder(builder: &'a dyn ScenarioBuilder) -> Self {
        let agents = builder.agent_count();
        let slot_dims: Vec<usize> = (0..agents).map(|a| builder.op_slot_dim(a)).collect();
        let finals = ClockTuple::new(builder.final_times());
        let layout = builder.system_layout();
        let ancillas = (0..agents)
            .map(|agent| {
                let label = builder.ancilla_label(agent)?;
                if builder.slot_labels(agent).last() != Some(&label) {
                    return None;
                }
                let ancilla_dim = layout.dim_of(&label).expect("ancilla label in layout");
                let embed_layout = layout.clone();
                Some(SlotAncilla {
                    system_dim: slot_dims[agent] / ancilla_dim,
                    ancilla_dim,
                    out_embed: Box::new(move |w: &ComplexMatrix| {
                        embed_layout.embed(w, &[&label]).expect("ancilla embeds into layout")
                    }),
                })
            })
            .collect();
        ProcessFunction {
            name: builder.name().to_string(),
            slot_dims,
            out_dim: builder.branch_dim(),
            ancillas,
            eval: Box::new(move |ops| Ok(evolution_matrix(builder, ops, &finals)?)),
        }
    }

    /// A process given by a closed formula, with no declared ancillas.
    pub fn from_formula(
        name: &str,
        slot_dims: Vec<usize>,
        out_dim: usize,
        f: impl Fn(&[ComplexMatrix]) -> ComplexMatrix + 'a,
    ) -> Self {
        let ancillas = (0..slot_dims.len()).map(|_| None).collect();
        ProcessFunction {
            name: name.to_string(),
            slot_dims,
            out_dim,
            ancillas,
            eval: Box::new(move |ops| Ok(f(ops))),
        }
    }

    /// Name of the originating scenario or formula.
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of operator slots.
    pub fn arity(&self) -> usize {
        self.slot_dims.len()
    }

    /// Dimension of each slot operator.
    pub fn slot_dims(&self) -> &[usize] {
        &self.slot_dims
    }

    /// Dimension of the output operator.
    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// The declared system ⊗ ancilla split of one slot, if any.
    pub fn ancilla(&self, slot: usize) -> Option<&SlotAncilla<'a>> {
        self.ancillas.get(slot).and_then(Option::as_ref)
    }

    /// Evaluates the process on one tuple of slot operators.
    pub fn eval(&self, ops: &[ComplexMatrix]) -> Result<ComplexMatrix, ProcessError> {
        if ops.len() != self.arity() {
            return Err(ProcessError::Arity { expected: self.arity(), found: ops.len() });
        }
        for (slot, (op, &dim)) in ops.iter().zip(&self.slot_dims).enumerate() {
            if !op.is_square() || op.rows() != dim {
                return Err(ProcessError::SlotDim { slot, expected: dim, found: op.rows() });
            }
        }
        let out = (self.eval)(ops)?;
        if !out.is_square() || out.rows() != self.out_dim {
            return Err(ProcessError::OutputShape {
                expected: self.out_dim,
                rows: out.rows(),
                cols: out.cols(),
            });
        }
        Ok(out)
    }
}

/// The process induced by a scenario builder at its all-final clock tuple.
pub fn extract_process(builder: &dyn ScenarioBuilder) -> ProcessFunction<'_> {
    ProcessFunction::from_builder(builder)
}

/// Residuals certifying that a process is pure: unitary outputs on unitary
/// inputs, linear in every slot, and acting on each declared ancilla only
/// through the agent's operator.
#[derive(Debug, Clone, PartialEq)]
pub struct PureProcessReport {
    /// Worst unitarity defect of the evaluated process over the samples.
    pub unitarity_residual: f64,
    /// Worst per-slot linearity defect over the samples.
    pub linearity_residual: f64,
    /// Worst ancilla-locality defect, absent when no slot declares one.
    pub ancilla_locality_residual: Option<f64>,
    /// Number of sampled operator tuples.
    pub samples: usize,
}

impl PureProcessReport {
    /// True when every residual is within the default tolerance.
    pub fn passed(&self) -> bool {
        self.unitarity_residual <= DEFAULT_TOL
            && self.linearity_residual <= DEFAULT_TOL
            && self.ancilla_locality_residual.map_or(true, |r| r <= DEFAULT_TOL)
    }
}

impl fmt::Display for PureProcessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unitarity {:.3e}, linearity {:.3e}, ancilla locality {} ({} samples): {}",
            self.unitarity_residual,
            self.linearity_residual,
            match self.ancilla_locality_residual {
                Some(r) => format!("{r:.3e}"),
                None => "n/a".to_string(),
            },
            self.samples,
            if self.passed() { "pure" } else { "NOT pure" }
        )
    }
}

/// Verifies purity of a process over `samples` random operator tuples.
pub fn verify_pure_process(
    process: &ProcessFunction<'_>,
    samples: usize,
    seed: u64,
) -> Result<PureProcessReport, ProcessError> {
    let samples = samples.max(2);
    let mut rng = seeded_rng(seed);
    let mut unitarity = 0.0_f64;
    let mut linearity = 0.0_f64;
    let mut ancilla: Option<f64> = None;

    for _ in 0..samples {
        let ops: Vec<ComplexMatrix> =
            process.slot_dims().iter().map(|&d| haar_unitary(d, &mut rng)).collect();
        let g = process.eval(&ops)?;
        unitarity = unitarity.max(g.unitarity_residual().expect("process output is square"));

        for slot in 0..process.arity() {
            let dim = process.slot_dims()[slot];
            let a = gaussian_matrix(dim, dim, &mut rng);
            let b = gaussian_matrix(dim, dim, &mut rng);
            let alpha = complex_gaussian(&mut rng);
            let beta = complex_gaussian(&mut rng);
            let mut probe = ops.clone();
            probe[slot] = a.scale(alpha).add(&b.scale(beta));
            let combined = process.eval(&probe)?;
            probe[slot] = a.clone();
            let g_a = process.eval(&probe)?;
            probe[slot] = b.clone();
            let g_b = process.eval(&probe)?;
            let expected = g_a.scale(alpha).add(&g_b.scale(beta));
            linearity = linearity.max(combined.sub(&expected).max_abs());
        }

        for slot in 0..process.arity() {
            let Some(split) = process.ancilla(slot) else { continue };
            let u = haar_unitary(split.system_dim(), &mut rng);
            let w = haar_unitary(split.ancilla_dim(), &mut rng);
            let mut probe = ops.clone();
            probe[slot] = kron(&u, &w);
            let g_w = process.eval(&probe)?;
            probe[slot] = kron(&u, &ComplexMatrix::identity(split.ancilla_dim()));
            let g_1 = process.eval(&probe)?;
            let residual = g_w.sub(&split.embed_out(&w).mul(&g_1)).max_abs();
            ancilla = Some(ancilla.unwrap_or(0.0).max(residual));
        }
    }

    Ok(PureProcessReport {
        unitarity_residual: unitarity,
        linearity_residual: linearity,
        ancilla_locality_residual: ancilla,
        samples,
    })
}

/// Choi matrix of a linear channel: C = Σ_{ij} |i⟩⟨j| ⊗ Λ(|i⟩⟨j|), with the
/// doubled index (i, k) = i·out_dim + k.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    matrix: ComplexMatrix,
    in_dim: usize,
    out_dim: usize,
}

impl ChoiMatrix {
    /// The assembled matrix on input ⊗ output.
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Input dimension of the channel.
    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    /// Output dimension of the channel.
    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// Trace of the Choi matrix; in_dim for trace-preserving channels.
    pub fn trace(&self) -> Complex64 {
        self.matrix.trace().expect("Choi matrix is square")
    }

    /// Deviation from Hermiticity.
    pub fn hermiticity_residual(&self) -> f64 {
        self.matrix.hermiticity_residual().expect("Choi matrix is square")
    }

    /// Number of eigenvalues above `tol`; 1 for unitary channels.
    pub fn numerical_rank(&self, tol: f64) -> Result<usize, ProcessError> {
        let herm = self.matrix.add(&self.matrix.dagger()).scale(Complex64::new(0.5, 0.0));
        let eig = hermitian_eig(&herm)
            .map_err(|e| ProcessError::Numeric { context: format!("Choi eigensolve: {e}") })?;
        Ok(eig.values.iter().filter(|&&v| v.abs() > tol).count())
    }
}

/// Assembles the Choi matrix of `channel` by probing matrix units, and
/// verifies linearity on one random input; channels that fail the probe are
/// rejected as [`ProcessError::NonlinearChannel`].
pub fn choi(
    channel: impl Fn(&ComplexMatrix) -> Result<ComplexMatrix, ProcessError>,
    in_dim: usize,
) -> Result<ChoiMatrix, ProcessError> {
    let first = channel(&matrix_unit(in_dim, 0, 0))?;
    if !first.is_square() {
        return Err(ProcessError::OutputShape {
            expected: first.rows(),
            rows: first.rows(),
            cols: first.cols(),
        });
    }
    let out_dim = first.rows();
    let mut blocks: Vec<Vec<ComplexMatrix>> = Vec::with_capacity(in_dim);
    for i in 0..in_dim {
        let mut row = Vec::with_capacity(in_dim);
        for j in 0..in_dim {
            let out = if i == 0 && j == 0 {
                first.clone()
            } else {
                channel(&matrix_unit(in_dim, i, j))?
            };
            if !out.is_square() || out.rows() != out_dim {
                return Err(ProcessError::OutputShape {
                    expected: out_dim,
                    rows: out.rows(),
                    cols: out.cols(),
                });
            }
            row.push(out);
        }
        blocks.push(row);
    }

    let mut rng = seeded_rng(0x6368_6f69);
    let probe = gaussian_matrix(in_dim, in_dim, &mut rng);
    let mut expected = ComplexMatrix::zeros(out_dim, out_dim);
    for i in 0..in_dim {
        for j in 0..in_dim {
            expected = expected.add(&blocks[i][j].scale(probe.get(i, j)));
        }
    }
    let residual = channel(&probe)?.sub(&expected).max_abs();
    if residual > DEFAULT_TOL {
        return Err(ProcessError::NonlinearChannel { residual });
    }

    let dim = in_dim * out_dim;
    let mut matrix = ComplexMatrix::zeros(dim, dim);
    for i in 0..in_dim {
        for j in 0..in_dim {
            for k in 0..out_dim {
                for l in 0..out_dim {
                    matrix.set(i * out_dim + k, j * out_dim + l, blocks[i][j].get(k, l));
                }
            }
        }
    }
    Ok(ChoiMatrix { matrix, in_dim, out_dim })
}

/// Choi matrix of the conjugation channel ρ ↦ GρG†.
pub fn unitary_channel_choi(g: &ComplexMatrix) -> Result<ChoiMatrix, ProcessError> {
    if !g.is_square() {
        return Err(ProcessError::OutputShape { expected: g.rows(), rows: g.rows(), cols: g.cols() });
    }
    let dagger = g.dagger();
    choi(|rho| Ok(g.mul(rho).mul(&dagger)), g.rows())
}

fn matrix_unit(dim: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim, dim);
    m.set(i, j, ONE);
    m
}

/// Worst-case two-norm distance between two processes over sampled unitary
/// operator tuples, after aligning the global phase on the largest output
/// entry.
pub fn process_distance(
    p1: &ProcessFunction<'_>,
    p2: &ProcessFunction<'_>,
    samples: usize,
    seed: u64,
) -> Result<f64, ProcessError> {
    if p1.slot_dims() != p2.slot_dims() {
        return Err(ProcessError::Incomparable {
            context: format!(
                "slot dimensions differ: {:?} vs {:?}",
                p1.slot_dims(),
                p2.slot_dims()
            ),
        });
    }
    if p1.out_dim() != p2.out_dim() {
        return Err(ProcessError::Incomparable {
            context: format!("output dimensions differ: {} vs {}", p1.out_dim(), p2.out_dim()),
        });
    }
    let samples = samples.max(1);
    let mut rng = seeded_rng(seed);
    let mut distance = 0.0_f64;
    for _ in 0..samples {
        let ops: Vec<ComplexMatrix> =
            p1.slot_dims().iter().map(|&d| haar_unitary(d, &mut rng)).collect();
        let g1 = p1.eval(&ops)?;
        let g2 = p2.eval(&ops)?;
        let aligned = g2.scale(phase_alignment(&g1, &g2));
        let diff = g1.sub(&aligned);
        let norm = operator_two_norm(&diff)
            .map_err(|e| ProcessError::Numeric { context: format!("two-norm: {e}") })?;
        distance = distance.max(norm);
    }
    Ok(distance)
}

/// Unit-modulus scalar aligning `g2` to `g1` at the largest-magnitude entry
/// of `g2` (first such entry in row-major order).
fn phase_alignment(g1: &ComplexMatrix, g2: &ComplexMatrix) -> Complex64 {
    let mut best = (0usize, 0usize);
    let mut best_mag = -1.0_f64;
    for r in 0..g2.rows() {
        for c in 0..g2.cols() {
            let mag = g2.get(r, c).norm();
            if mag > best_mag + 1e-15 {
                best_mag = mag;
                best = (r, c);
            }
        }
    }
    let z1 = g1.get(best.0, best.1);
    let z2 = g2.get(best.0, best.1);
    let product = z1 * z2.conj();
    let mag = product.norm();
    if mag <= 1e-300 {
        ONE
    } else {
        product / Complex64::new(mag, 0.0)
    }
}

/// Checks the causal reference frame decomposition through one agent's
/// perspective: the extracted steps split into past Π (before t*), the
/// agent's action at t*, and future Φ (after t*), and chaining them maps
/// the initial perspectival state to the final one, whose branch reproduces
/// the induced process output.
pub fn causal_frame_decomposition_check(
    builder: &dyn ScenarioBuilder,
    agent: usize,
    samples: usize,
    seed: u64,
) -> Result<AxiomCheck, HistoryError> {
    const LABEL: &str = "causal frame";
    let final_time = builder.final_times()[agent];
    let t_star = builder.time_of_action(agent);
    let finals = ClockTuple::new(builder.final_times());
    let others_final = ClockTuple::new(
        builder
            .final_times()
            .iter()
            .enumerate()
            .filter(|&(a, _)| a != agent)
            .map(|(_, &t)| t)
            .collect(),
    );
    let n_ops = builder_normalizations(builder, agent);
    let mut rng = seeded_rng(seed);
    let samples = samples.max(2);

    for sample in 0..samples {
        let ops: Vec<ComplexMatrix> = (0..builder.agent_count())
            .map(|a| haar_unitary(builder.op_slot_dim(a), &mut rng))
            .collect();
        let trajectory = match extract_step_unitaries(builder, &ops, agent, &n_ops) {
            Ok(t) => t,
            Err(ExtractionError::History(e)) => return Err(e),
            Err(e) => {
                return Ok(AxiomCheck {
                    axiom: LABEL.to_string(),
                    passed: false,
                    detail: format!("agent {agent}: no step decomposition exists: {e}"),
                })
            }
        };
        let process = evolution_matrix(builder, &ops, &finals)?;
        for (i, start) in trajectory.states(0).iter().enumerate() {
            let mut current = start.clone();
            for t in 1..t_star {
                current = trajectory.step(t).apply(&current);
            }
            current = trajectory.step(t_star).apply(&current);
            for t in (t_star + 1)..=final_time {
                current = trajectory.step(t).apply(&current);
            }
            let mut diff = current.clone();
            diff.axpy(-ONE, &trajectory.states(final_time)[i]);
            let drift = diff.norm();
            if drift > DEFAULT_TOL {
                return Ok(AxiomCheck {
                    axiom: LABEL.to_string(),
                    passed: false,
                    detail: format!(
                        "agent {agent} sample {sample} input {i}: Φ ∘ action ∘ Π misses the final perspectival state by {drift:.3e}"
                    ),
                });
            }
            let stray = libm::sqrt(
                current
                    .terms()
                    .iter()
                    .filter(|(tuple, _)| **tuple != others_final)
                    .map(|(_, v)| v.iter().map(|z| z.norm_sqr()).sum::<f64>())
                    .sum::<f64>(),
            );
            if stray > DEFAULT_TOL {
                return Ok(AxiomCheck {
                    axiom: LABEL.to_string(),
                    passed: false,
                    detail: format!(
                        "agent {agent} sample {sample} input {i}: final perspectival state leaks {stray:.3e} outside the all-final tuple"
                    ),
                });
            }
            let defect = match current.terms().get(&others_final) {
                Some(vector) => vector
                    .iter()
                    .enumerate()
                    .map(|(r, z)| (z - process.get(r, i)).norm())
                    .fold(0.0_f64, f64::max),
                None => (0..process.rows())
                    .map(|r| process.get(r, i).norm())
                    .fold(0.0_f64, f64::max),
            };
            if defect > DEFAULT_TOL {
                return Ok(AxiomCheck {
                    axiom: LABEL.to_string(),
                    passed: false,
                    detail: format!(
                        "agent {agent} sample {sample} input {i}: decomposed evolution differs from the induced process by {defect:.3e}"
                    ),
                });
            }
        }
    }
    Ok(AxiomCheck {
        axiom: LABEL.to_string(),
        passed: true,
        detail: format!(
            "agent {agent}: Π(1..{}) ∘ action(t*={t_star}) ∘ Φ({}..{final_time}) reproduces the process over {samples} samples",
            t_star - 1,
            t_star + 1
        ),
    })
}

/// Worst defect of the ancilla-locality identity 𝒢(…, u⊗w, …) =
/// Ŵ · 𝒢(…, u⊗1, …) over sampled u, w for every slot with a declared
/// ancilla; `None` when no slot declares one.
pub fn ancilla_extension_residual(
    builder: &dyn ScenarioBuilder,
    base_ops: &[ComplexMatrix],
    samples: usize,
    seed: u64,
) -> Result<Option<f64>, HistoryError> {
    let layout = builder.system_layout();
    let finals = ClockTuple::new(builder.final_times());
    let mut rng = seeded_rng(seed);
    let samples = samples.max(2);
    let mut worst: Option<f64> = None;
    for agent in 0..builder.agent_count() {
        let Some(label) = builder.ancilla_label(agent) else { continue };
        if builder.slot_labels(agent).last() != Some(&label) {
            continue;
        }
        let ancilla_dim = layout.dim_of(&label).expect("ancilla label in layout");
        let system_dim = builder.op_slot_dim(agent) / ancilla_dim;
        for _ in 0..samples {
            let u = haar_unitary(system_dim, &mut rng);
            let w = haar_unitary(ancilla_dim, &mut rng);
            let mut ops = base_ops.to_vec();
            ops[agent] = kron(&u, &w);
            let g_w = evolution_matrix(builder, &ops, &finals)?;
            ops[agent] = kron(&u, &ComplexMatrix::identity(ancilla_dim));
            let g_1 = evolution_matrix(builder, &ops, &finals)?;
            let w_out = layout.embed(&w, &[&label]).expect("ancilla embeds into layout");
            let residual = g_w.sub(&w_out.mul(&g_1)).max_abs();
            worst = Some(worst.unwrap_or(0.0).max(residual));
        }
    }
    Ok(worst)
}
