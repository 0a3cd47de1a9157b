//! Scenario configuration: structured text configs naming a scenario kind,
//! agent operators (dense matrices or named gates), sampling controls, and
//! referenced input files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use chronoframe_core::history::ScenarioBuilder;
use chronoframe_core::linalg::{haar_unitary, seeded_rng};
use chronoframe_core::scenarios::{
    build_controlled_combs, build_lugano_attempt, build_switch, build_twin, CombSpec,
};
use chronoframe_core::tensor::ComplexMatrix;
use chronoframe_core::Complex64;

/// Number literal that accepts both integer and float forms.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
}

impl Num {
    fn value(self) -> f64 {
        match self {
            Num::Int(i) => i as f64,
            Num::Float(f) => f,
        }
    }
}

/// Complex number written as a `[re, im]` pair.
pub type ComplexPair = [Num; 2];

fn to_complex(pair: &ComplexPair) -> Complex64 {
    Complex64::new(pair[0].value(), pair[1].value())
}

/// One operator: either a named gate or a dense row-major matrix.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    /// identity | pauli-x | pauli-y | pauli-z | hadamard | random
    pub gate: Option<String>,
    /// Dimension for identity/random gates (default 2).
    pub dim: Option<usize>,
    /// Seed for the random gate; required whenever randomness is requested.
    pub seed: Option<u64>,
    /// Dense matrix, row-major, complex entries as [re, im] pairs.
    pub matrix: Option<Vec<Vec<ComplexPair>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombSection {
    pub order: Vec<usize>,
    pub chain: Vec<GateSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombsSection {
    pub wire_dim: usize,
    pub memory_dim: usize,
    pub ancilla_dims: Vec<usize>,
    pub comb: Vec<CombSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeynmanSection {
    pub gates: Vec<GateSpec>,
    pub input: Vec<ComplexPair>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    /// twin | switch | combs | lugano | feynman | custom-history
    pub scenario: String,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub agents: Vec<GateSpec>,
    /// Interaction unitary V for the twin scenario.
    pub interaction: Option<GateSpec>,
    /// Input vector on system ⊗ ancillas, complex [re, im] pairs.
    pub input: Option<Vec<ComplexPair>>,
    pub combs: Option<CombsSection>,
    pub feynman: Option<FeynmanSection>,
    /// Path to a history dump for the custom-history scenario, relative to
    /// the config file.
    pub history: Option<String>,
}

/// Command-line overrides for config-level controls.
#[derive(Debug, Default, Clone, Copy)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
}

/// A fully resolved scenario.
pub enum LoadedScenario {
    Builder(Box<dyn ScenarioBuilder>),
    Feynman { gates: Vec<ComplexMatrix>, input: Vec<Complex64> },
    Custom { history_path: PathBuf },
}

/// A parsed config with operators resolved and controls merged.
pub struct Loaded {
    pub kind: String,
    pub scenario: LoadedScenario,
    /// Agent operators for builder scenarios, one per slot.
    pub ops: Vec<ComplexMatrix>,
    /// Optional input vector on system ⊗ ancillas.
    pub input: Option<Vec<Complex64>>,
    pub seed: u64,
    pub samples: usize,
    pub tolerance: f64,
    pub config_sha256: String,
}

fn pauli(kind: &str) -> ComplexMatrix {
    let i = Complex64::new(0.0, 1.0);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let entries: [Complex64; 4] = match kind {
        "pauli-x" => [zero, one, one, zero],
        "pauli-y" => [zero, -i, i, zero],
        "pauli-z" => [one, zero, zero, -one],
        _ => unreachable!("checked by caller"),
    };
    ComplexMatrix::from_fn(2, 2, |r, c| entries[2 * r + c])
}

fn hadamard() -> ComplexMatrix {
    let h = 1.0 / 2.0_f64.sqrt();
    ComplexMatrix::from_real(2, 2, &[h, h, h, -h]).expect("2x2 entries")
}

/// Resolves one operator spec to a dense matrix. `what` names the operator
/// in error messages.
pub fn resolve_gate(spec: &GateSpec, what: &str) -> Result<ComplexMatrix> {
    match (&spec.gate, &spec.matrix) {
        (Some(_), Some(_)) => bail!("{what}: give either `gate` or `matrix`, not both"),
        (None, None) => bail!("{what}: give a `gate` name or a `matrix`"),
        (None, Some(rows)) => {
            let n = rows.len();
            if n == 0 {
                bail!("{what}: matrix is empty");
            }
            for (r, row) in rows.iter().enumerate() {
                if row.len() != n {
                    bail!("{what}: row {r} has {} entries, expected {n} (square)", row.len());
                }
            }
            Ok(ComplexMatrix::from_fn(n, n, |r, c| to_complex(&rows[r][c])))
        }
        (Some(name), None) => match name.as_str() {
            "identity" => Ok(ComplexMatrix::identity(spec.dim.unwrap_or(2))),
            "pauli-x" | "pauli-y" | "pauli-z" => {
                if spec.dim.unwrap_or(2) != 2 {
                    bail!("{what}: {name} is a qubit gate (dim 2)");
                }
                Ok(pauli(name))
            }
            "hadamard" => {
                if spec.dim.unwrap_or(2) != 2 {
                    bail!("{what}: hadamard is a qubit gate (dim 2)");
                }
                Ok(hadamard())
            }
            "random" => {
                let seed = spec
                    .seed
                    .with_context(|| format!("{what}: random gate needs an explicit seed"))?;
                let mut rng = seeded_rng(seed);
                Ok(haar_unitary(spec.dim.unwrap_or(2), &mut rng))
            }
            other => bail!("{what}: unknown gate name {other:?}"),
        },
    }
}

fn resolve_agents(specs: &[GateSpec]) -> Result<Vec<ComplexMatrix>> {
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| resolve_gate(s, &format!("agents[{i}]")))
        .collect()
}

/// Reads, parses, and resolves a config file.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<Loaded> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let config_sha256 = hex_digest(&bytes);
    let text = String::from_utf8(bytes).context("config is not UTF-8")?;
    let raw: RawConfig =
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;

    let seed = overrides.seed.or(raw.seed).unwrap_or(0);
    let samples = overrides.samples.or(raw.samples).unwrap_or(3);
    let tolerance = overrides.tol.or(raw.tolerance).unwrap_or(1e-10);
    let input = raw.input.as_ref().map(|v| v.iter().map(to_complex).collect());
    let agent_ops = resolve_agents(&raw.agents)?;

    let (scenario, ops) = match raw.scenario.as_str() {
        "twin" => {
            let [u_a, u_b] = two_ops(agent_ops, "twin")?;
            let v_spec =
                raw.interaction.as_ref().context("twin needs an [interaction] operator")?;
            let v = resolve_gate(v_spec, "interaction")?;
            let builder = build_twin(u_a, u_b, v).context("building the twin scenario")?;
            let ops = builder.default_ops();
            (LoadedScenario::Builder(Box::new(builder)), ops)
        }
        "switch" => {
            let [u_a, u_b] = two_ops(agent_ops, "switch")?;
            let builder = build_switch(u_a, u_b).context("building the switch scenario")?;
            let ops = builder.default_ops();
            (LoadedScenario::Builder(Box::new(builder)), ops)
        }
        "lugano" => {
            if agent_ops.len() != 3 {
                bail!("lugano needs exactly 3 agent operators, found {}", agent_ops.len());
            }
            let mut it = agent_ops.into_iter();
            let (u_a, u_b, u_c) =
                (it.next().expect("3 ops"), it.next().expect("3 ops"), it.next().expect("3 ops"));
            let builder = build_lugano_attempt(u_a, u_b, u_c)
                .context("building the lugano resync attempt")?;
            let ops = builder.default_ops();
            (LoadedScenario::Builder(Box::new(builder)), ops)
        }
        "combs" => {
            let section = raw.combs.as_ref().context("combs needs a [combs] section")?;
            let mut combs = Vec::with_capacity(section.comb.len());
            for (k, comb) in section.comb.iter().enumerate() {
                let chain = comb
                    .chain
                    .iter()
                    .enumerate()
                    .map(|(j, s)| resolve_gate(s, &format!("combs.comb[{k}].chain[{j}]")))
                    .collect::<Result<Vec<_>>>()?;
                combs.push(CombSpec { order: comb.order.clone(), chain });
            }
            let builder = build_controlled_combs(
                combs,
                section.wire_dim,
                section.memory_dim,
                section.ancilla_dims.clone(),
            )
            .context("building the controlled-combs scenario")?;
            let ops = if agent_ops.is_empty() { builder.default_ops() } else { agent_ops };
            if ops.len() != builder.agent_count() {
                bail!(
                    "combs declares {} agents but {} operators were given",
                    builder.agent_count(),
                    ops.len()
                );
            }
            (LoadedScenario::Builder(Box::new(builder)), ops)
        }
        "feynman" => {
            let section = raw.feynman.as_ref().context("feynman needs a [feynman] section")?;
            let gates = section
                .gates
                .iter()
                .enumerate()
                .map(|(j, s)| resolve_gate(s, &format!("feynman.gates[{j}]")))
                .collect::<Result<Vec<_>>>()?;
            let input: Vec<Complex64> = section.input.iter().map(to_complex).collect();
            (LoadedScenario::Feynman { gates, input }, Vec::new())
        }
        "custom-history" => {
            let rel = raw.history.as_ref().context("custom-history needs a `history` path")?;
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            (LoadedScenario::Custom { history_path: base.join(rel) }, Vec::new())
        }
        other => bail!(
            "unknown scenario {other:?} (expected twin, switch, combs, lugano, feynman, \
             or custom-history)"
        ),
    };

    Ok(Loaded {
        kind: raw.scenario,
        scenario,
        ops,
        input,
        seed,
        samples,
        tolerance,
        config_sha256,
    })
}

fn two_ops(ops: Vec<ComplexMatrix>, kind: &str) -> Result<[ComplexMatrix; 2]> {
    let count = ops.len();
    <[ComplexMatrix; 2]>::try_from(ops)
        .map_err(|_| anyhow::anyhow!("{kind} needs exactly 2 agent operators, found {count}"))
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}
