//! Verification pipeline: axiom suite, pure-process residuals, and projector
//! identities for builder scenarios; constraint and block identities for
//! single-clock circuits; structural checks for reloaded history dumps.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use chronoframe_core::axioms::full_report;
use chronoframe_core::history::{ClockTuple, HistoryState, ScenarioBuilder};
use chronoframe_core::linalg::InnerProduct;
use chronoframe_core::process::{extract_process, verify_pure_process};
use chronoframe_core::projector::{
    constraint, exponential_identity_bound, exponential_identity_check, feynman_constraint_terms,
    feynman_history, feynman_projector, flatten_history, physical_subspace, projector_block,
};
use chronoframe_core::tensor::ComplexMatrix;
use chronoframe_core::Complex64;

use crate::config::{Loaded, LoadedScenario};
use crate::dump::{parse_history, DumpMeta, REPORT_HEADER};

/// Pinned bound for the discrete exponential-sum identity.
const EXP_TOL: f64 = 1e-9;
/// Largest ambient dimension handled with dense projector matrices; larger
/// spaces use the rank-r representation.
const DENSE_LIMIT: usize = 1024;

/// One verdict line of a verification report.
pub struct ReportLine {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

impl ReportLine {
    fn new(label: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        ReportLine { label: label.into(), passed, detail: detail.into() }
    }
}

/// A rendered verification run.
pub struct VerifyReport {
    pub scenario: String,
    pub lines: Vec<ReportLine>,
    pub samples: usize,
    pub tolerance: f64,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }

    pub fn render(&self, meta: &DumpMeta) -> String {
        let mut out = String::new();
        out.push_str(REPORT_HEADER);
        out.push('\n');
        out.push_str(&format!("tool: chronoframe {}\n", env!("CARGO_PKG_VERSION")));
        out.push_str(&format!("config-sha256: {}\n", meta.config_sha256));
        out.push_str(&format!("seed: {}\n", meta.seed));
        out.push_str(&format!("samples: {}\n", self.samples));
        out.push_str(&format!("tolerance: {:e}\n", self.tolerance));
        out.push_str(&format!("scenario: {}\n", self.scenario));
        for line in &self.lines {
            let verdict = if line.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{:<22} {verdict}  {}\n", line.label, line.detail));
        }
        out.push_str(&format!(
            "verdict: {}\n",
            if self.all_passed() { "PASS" } else { "FAIL" }
        ));
        out
    }
}

/// Builds the history state a config describes, for dump output.
pub fn build_history(loaded: &Loaded) -> Result<HistoryState> {
    match &loaded.scenario {
        LoadedScenario::Builder(builder) => {
            let input = resolve_input(loaded, builder.as_ref())?;
            builder
                .construct(&input, &loaded.ops)
                .with_context(|| format!("constructing the {} history state", loaded.kind))
        }
        LoadedScenario::Feynman { gates, input } => {
            feynman_history(gates, input).context("constructing the circuit history state")
        }
        LoadedScenario::Custom { history_path } => Ok(load_custom(history_path)?.0),
    }
}

fn resolve_input(loaded: &Loaded, builder: &dyn ScenarioBuilder) -> Result<Vec<Complex64>> {
    let dim = builder.branch_dim();
    match &loaded.input {
        Some(v) => {
            if v.len() != dim {
                anyhow::bail!("input has {} amplitudes, expected {dim}", v.len());
            }
            Ok(v.clone())
        }
        None => {
            let mut v = vec![Complex64::new(0.0, 0.0); dim];
            v[0] = Complex64::new(1.0, 0.0);
            Ok(v)
        }
    }
}

fn load_custom(path: &Path) -> Result<(HistoryState, crate::dump::DumpFields)> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_history(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Runs the verification suite for a loaded config.
pub fn verify(loaded: &Loaded) -> Result<VerifyReport> {
    let lines = match &loaded.scenario {
        LoadedScenario::Builder(builder) => verify_builder(loaded, builder.as_ref())?,
        LoadedScenario::Feynman { gates, input } => verify_feynman(loaded, gates, input)?,
        LoadedScenario::Custom { history_path } => verify_custom(history_path)?,
    };
    Ok(VerifyReport {
        scenario: loaded.kind.clone(),
        lines,
        samples: loaded.samples,
        tolerance: loaded.tolerance,
    })
}

fn verify_builder(loaded: &Loaded, builder: &dyn ScenarioBuilder) -> Result<Vec<ReportLine>> {
    let tol = loaded.tolerance;
    let mut lines = Vec::new();

    let report = full_report(builder, &loaded.ops, loaded.samples, loaded.seed)
        .context("running the axiom suite")?;
    for check in report.checks() {
        lines.push(ReportLine::new(check.axiom.clone(), check.passed, check.detail.clone()));
    }

    let process = extract_process(builder);
    match verify_pure_process(&process, loaded.samples, loaded.seed) {
        Ok(pure) => {
            lines.push(ReportLine::new(
                "process unitarity",
                pure.unitarity_residual <= tol,
                format!("residual {:.3e}", pure.unitarity_residual),
            ));
            lines.push(ReportLine::new(
                "process linearity",
                pure.linearity_residual <= tol,
                format!("residual {:.3e}", pure.linearity_residual),
            ));
            match pure.ancilla_locality_residual {
                Some(residual) => lines.push(ReportLine::new(
                    "ancilla locality",
                    residual <= tol,
                    format!("residual {residual:.3e}"),
                )),
                None => lines.push(ReportLine::new(
                    "ancilla locality",
                    true,
                    "no ancilla factors declared",
                )),
            }
        }
        Err(e) => lines.push(ReportLine::new("process purity", false, format!("{e}"))),
    }

    let clock_dims: usize = builder.final_times().iter().map(|t| t + 1).product();
    let ambient = clock_dims * builder.branch_dim();
    let t_max = builder.final_times().into_iter().max().expect("at least one agent");
    let subspace =
        physical_subspace(builder, &loaded.ops).context("building the physical subspace")?;
    lines.push(ReportLine::new(
        "projector rank",
        subspace.dropped() == 0,
        format!("rank {} of expected {}", subspace.rank(), builder.branch_dim()),
    ));
    if ambient <= DENSE_LIMIT {
        let p = subspace.projector();
        let herm = p.hermiticity_residual().expect("projector is square");
        lines.push(ReportLine::new(
            "projector hermitian",
            herm <= tol,
            format!("residual {herm:.3e}"),
        ));
        let idem = p.mul(&p).sub(&p).max_abs();
        lines.push(ReportLine::new(
            "projector idempotent",
            idem <= tol,
            format!("residual {idem:.3e}"),
        ));
        match constraint(&p) {
            Ok(c) => {
                let residual = exponential_identity_check(&c, t_max)
                    .context("evaluating the exponential identity")?;
                lines.push(ReportLine::new(
                    "exponential identity",
                    residual <= EXP_TOL,
                    format!("residual {residual:.3e} (T={t_max})"),
                ));
            }
            Err(e) => lines.push(ReportLine::new("exponential identity", false, format!("{e}"))),
        }
    } else {
        lines.push(ReportLine::new(
            "projector hermitian",
            true,
            "exact in the rank-r representation",
        ));
        let gram = gram_residual(subspace.vectors());
        lines.push(ReportLine::new(
            "projector idempotent",
            gram <= tol,
            format!("orthonormality residual {gram:.3e} (rank form, dim {ambient})"),
        ));
        let bound = exponential_identity_bound(&subspace, t_max);
        lines.push(ReportLine::new(
            "exponential identity",
            bound <= EXP_TOL,
            format!("residual bound {bound:.3e} (T={t_max}, rank form)"),
        ));
    }

    Ok(lines)
}

fn gram_residual(vectors: &[Vec<Complex64>]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, vi) in vectors.iter().enumerate() {
        for (j, vj) in vectors.iter().enumerate() {
            let expected = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((vi.inner(vj) - Complex64::new(expected, 0.0)).norm());
        }
    }
    worst
}

fn verify_feynman(
    loaded: &Loaded,
    gates: &[ComplexMatrix],
    input: &[Complex64],
) -> Result<Vec<ReportLine>> {
    let tol = loaded.tolerance;
    let mut lines = Vec::new();
    let norm = input.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    lines.push(ReportLine::new("input", norm > tol, format!("norm {norm:.6}")));

    let hs = feynman_history(gates, input).context("constructing the circuit history state")?;
    let flat = flatten_history(&hs);
    let terms = feynman_constraint_terms(gates).context("assembling constraint terms")?;
    let mut total = vec![Complex64::new(0.0, 0.0); flat.len()];
    let mut worst_herm = 0.0_f64;
    for term in &terms {
        worst_herm = worst_herm.max(term.hermiticity_residual().expect("square term"));
        total.axpy(Complex64::new(1.0, 0.0), &term.apply(&flat));
    }
    let residual = total.norm();
    lines.push(ReportLine::new(
        "constraint terms",
        residual <= tol,
        format!("‖ΣĤ_t|Ψ⟩⟩‖ = {residual:.3e} over {} terms", terms.len()),
    ));
    lines.push(ReportLine::new(
        "terms hermitian",
        worst_herm <= tol,
        format!("worst residual {worst_herm:.3e}"),
    ));

    let dim = input.len();
    let big_t = gates.len();
    let p = feynman_projector(gates, dim).context("building the circuit projector")?;
    let scale = Complex64::new(1.0 / (big_t + 1) as f64, 0.0);
    let mut worst_block = 0.0_f64;
    for t1 in 0..=big_t {
        for t2 in t1..=big_t {
            let block = projector_block(&p, t1, t2, big_t).context("extracting a block")?;
            let mut product = ComplexMatrix::identity(dim);
            for gate in &gates[t1..t2] {
                product = gate.mul(&product);
            }
            worst_block = worst_block.max(block.sub(&product.scale(scale)).max_abs());
        }
    }
    lines.push(ReportLine::new(
        "projector blocks",
        worst_block <= tol,
        format!("worst deviation {worst_block:.3e} from partial products"),
    ));

    match constraint(&p) {
        Ok(c) => {
            let t_exp = big_t.max(1);
            let residual = exponential_identity_check(&c, t_exp)
                .context("evaluating the exponential identity")?;
            lines.push(ReportLine::new(
                "exponential identity",
                residual <= EXP_TOL,
                format!("residual {residual:.3e} (T={t_exp})"),
            ));
        }
        Err(e) => lines.push(ReportLine::new("exponential identity", false, format!("{e}"))),
    }

    Ok(lines)
}

fn verify_custom(path: &Path) -> Result<Vec<ReportLine>> {
    let (hs, fields) = load_custom(path)?;
    let mut lines = Vec::new();
    lines.push(ReportLine::new("dump version", true, "chronoframe-history v1"));
    let layout: Vec<String> =
        hs.layout().factors().iter().map(|f| format!("{}={}", f.label(), f.dim())).collect();
    lines.push(ReportLine::new("layout", true, layout.join(" ")));
    lines.push(ReportLine::new(
        "branches",
        !hs.branches().is_empty(),
        format!("{} clock tuples, branch dim {}", hs.branches().len(), hs.branch_dim()),
    ));
    let norm_sq: f64 = hs.branches().values().map(|v| v.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum();
    let norm = norm_sq.sqrt();
    lines.push(ReportLine::new("state norm", norm > 0.0, format!("{norm:.12}")));

    let zeros = ClockTuple::new(vec![0; hs.agent_count()]);
    let finals = ClockTuple::new(hs.final_times().to_vec());
    let has_start = hs.branch(&zeros).is_some();
    let has_end = hs.branch(&finals).is_some();
    lines.push(ReportLine::new(
        "boundary branches",
        has_start && has_end,
        format!(
            "synchronized start {} final {}",
            if has_start { "present" } else { "missing" },
            if has_end { "present" } else { "missing" }
        ),
    ));
    if let Some(scenario) = fields.get("scenario") {
        lines.push(ReportLine::new("origin", true, format!("scenario {scenario}")));
    }
    Ok(lines)
}
