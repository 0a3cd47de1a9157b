//! Versioned plain-text dumps: history states, process matrices with their
//! Choi matrices, and atomic file writes. Every dump carries a header with
//! tool version, config hash, and seed.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

use chronoframe_core::history::{ClockTuple, HistoryState};
use chronoframe_core::process::ChoiMatrix;
use chronoframe_core::tensor::{ComplexMatrix, DimLayout};
use chronoframe_core::Complex64;

pub const HISTORY_HEADER: &str = "chronoframe-history v1";
pub const PROCESS_HEADER: &str = "chronoframe-process v1";
pub const REPORT_HEADER: &str = "chronoframe-report v1";

/// Reproducibility header shared by every dump.
pub struct DumpMeta {
    pub config_sha256: String,
    pub seed: u64,
    pub scenario: String,
}

impl DumpMeta {
    fn header_lines(&self, out: &mut String) {
        out.push_str(&format!("tool: chronoframe {}\n", env!("CARGO_PKG_VERSION")));
        out.push_str(&format!("config-sha256: {}\n", self.config_sha256));
        out.push_str(&format!("seed: {}\n", self.seed));
        out.push_str(&format!("scenario: {}\n", self.scenario));
    }
}

fn fmt_complex(z: Complex64) -> String {
    format!("[{},{}]", z.re, z.im)
}

fn parse_complex(token: &str) -> Result<Complex64> {
    let inner = token
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .with_context(|| format!("amplitude {token:?} is not a [re,im] pair"))?;
    let (re, im) =
        inner.split_once(',').with_context(|| format!("amplitude {token:?} lacks a comma"))?;
    Ok(Complex64::new(
        re.trim().parse::<f64>().with_context(|| format!("real part {re:?}"))?,
        im.trim().parse::<f64>().with_context(|| format!("imaginary part {im:?}"))?,
    ))
}

/// Renders a history state: header, layout block, then one branch record
/// `t=(t1,…,tN): [re,im] …` per occupied clock tuple.
pub fn render_history(hs: &HistoryState, meta: &DumpMeta) -> String {
    let mut out = String::new();
    out.push_str(HISTORY_HEADER);
    out.push('\n');
    meta.header_lines(&mut out);
    let layout_line: Vec<String> =
        hs.layout().factors().iter().map(|f| format!("{}={}", f.label(), f.dim())).collect();
    out.push_str(&format!("layout: {}\n", layout_line.join(" ")));
    out.push_str(&format!("clocks: {}\n", hs.agent_count()));
    let finals: Vec<String> = hs.final_times().iter().map(|t| t.to_string()).collect();
    out.push_str(&format!("finals: {}\n", finals.join(" ")));
    out.push_str(&format!("branches: {}\n", hs.branches().len()));
    for (tuple, vector) in hs.branches() {
        let readings: Vec<String> = tuple.readings().iter().map(|r| r.to_string()).collect();
        let amplitudes: Vec<String> = vector.iter().map(|&z| fmt_complex(z)).collect();
        out.push_str(&format!("t=({}): {}\n", readings.join(","), amplitudes.join(" ")));
    }
    out
}

/// Header fields of a parsed dump, keyed by name.
pub type DumpFields = BTreeMap<String, String>;

/// Parses a history dump back into a history state plus its header fields.
pub fn parse_history(text: &str) -> Result<(HistoryState, DumpFields)> {
    let mut lines = text.lines();
    let first = lines.next().context("dump is empty")?;
    if first.trim() != HISTORY_HEADER {
        bail!("unsupported dump header {first:?}, expected {HISTORY_HEADER:?}");
    }
    let mut fields = DumpFields::new();
    let mut branch_lines: Vec<&str> = Vec::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with("t=(") {
            branch_lines.push(line);
        } else if let Some((key, value)) = line.split_once(':') {
            fields.insert(key.trim().to_string(), value.trim().to_string());
        } else {
            bail!("unrecognized dump line {line:?}");
        }
    }

    let layout_field = fields.get("layout").context("dump lacks a layout line")?;
    let mut factors: Vec<(String, usize)> = Vec::new();
    for part in layout_field.split_whitespace() {
        let (label, dim) =
            part.split_once('=').with_context(|| format!("layout entry {part:?}"))?;
        factors.push((label.to_string(), dim.parse().with_context(|| format!("dim {dim:?}"))?));
    }
    let factor_refs: Vec<(&str, usize)> =
        factors.iter().map(|(l, d)| (l.as_str(), *d)).collect();
    let layout = DimLayout::new(&factor_refs).context("rebuilding the layout")?;

    let finals_field = fields.get("finals").context("dump lacks a finals line")?;
    let finals: Vec<usize> = finals_field
        .split_whitespace()
        .map(|t| t.parse().with_context(|| format!("final time {t:?}")))
        .collect::<Result<_>>()?;
    if let Some(clocks) = fields.get("clocks") {
        let clocks: usize = clocks.parse().with_context(|| format!("clock count {clocks:?}"))?;
        if clocks != finals.len() {
            bail!("dump declares {clocks} clocks but {} final times", finals.len());
        }
    }

    let mut hs = HistoryState::new(layout, finals).context("rebuilding the history state")?;
    let branch_dim = hs.branch_dim();
    for line in branch_lines {
        let rest = line.strip_prefix("t=(").expect("branch line prefix");
        let (readings_part, amplitudes_part) =
            rest.split_once("):").with_context(|| format!("branch record {line:?}"))?;
        let readings: Vec<usize> = readings_part
            .split(',')
            .map(|r| r.trim().parse().with_context(|| format!("clock reading {r:?}")))
            .collect::<Result<_>>()?;
        let amplitudes: Vec<Complex64> = amplitudes_part
            .split_whitespace()
            .map(parse_complex)
            .collect::<Result<_>>()?;
        if amplitudes.len() != branch_dim {
            bail!(
                "branch record {readings:?} has {} amplitudes, expected {branch_dim}",
                amplitudes.len()
            );
        }
        hs.add_branch(ClockTuple::new(readings), amplitudes)
            .with_context(|| format!("branch record {line:?}"))?;
    }
    Ok((hs, fields))
}

fn render_matrix(out: &mut String, name: &str, m: &ComplexMatrix) {
    out.push_str(&format!("matrix {name} {} {}\n", m.rows(), m.cols()));
    for r in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|c| fmt_complex(m.get(r, c))).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

/// Renders an extracted process matrix together with its Choi matrix.
pub fn render_process(
    g: &ComplexMatrix,
    choi: &ChoiMatrix,
    slot_dims: &[usize],
    meta: &DumpMeta,
) -> String {
    let mut out = String::new();
    out.push_str(PROCESS_HEADER);
    out.push('\n');
    meta.header_lines(&mut out);
    let dims: Vec<String> = slot_dims.iter().map(|d| d.to_string()).collect();
    out.push_str(&format!("slot-dims: {}\n", dims.join(" ")));
    render_matrix(&mut out, "process", g);
    out.push_str(&format!("choi-in: {}\nchoi-out: {}\n", choi.in_dim(), choi.out_dim()));
    render_matrix(&mut out, "choi", choi.matrix());
    out
}

/// Writes a file atomically: the content lands under a temporary name in the
/// target directory and is renamed into place.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = parent {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp~");
    let tmp_path = std::path::PathBuf::from(tmp);
    fs::write(&tmp_path, content).with_context(|| format!("writing {}", tmp_path.display()))?;
    fs::rename(&tmp_path, path)
        .with_context(|| format!("moving the dump into {}", path.display()))?;
    Ok(())
}
