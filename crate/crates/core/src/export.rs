//! CSV and JSON artifacts, written atomically.
//!
//! CSV headers are fixed:
//! - sweeps: `beta,r,q,n,theta_hat,ci_lo,ci_hi`
//! - component histograms: `component_size,count`
//! - points: `m,l,x0,…,x{d-1},mark`

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::complex::Complex;
use crate::error::Result;
use crate::estimation::SweepResult;
use crate::graphs::Components;
use crate::sampler::Realization;

pub const SWEEP_HEADER: &str = "beta,r,q,n,theta_hat,ci_lo,ci_hi";
pub const HISTOGRAM_HEADER: &str = "component_size,count";

pub const TOOL: &str = "rcm";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Replay information attached to every artifact.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub master_seed: u64,
    pub config_hash: String,
}

impl Metadata {
    pub fn new(master_seed: u64, config_hash: String) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            master_seed,
            config_hash,
        }
    }
}

/// JSON document `{ "meta": …, <payload fields> }`.
#[derive(Serialize)]
pub struct Document<'a, T: Serialize> {
    pub meta: &'a Metadata,
    #[serde(flatten)]
    pub payload: &'a T,
}

pub fn to_json<T: Serialize>(meta: &Metadata, payload: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Document { meta, payload })?;
    s.push('\n');
    Ok(s)
}

/// Writes to a temporary file in the target directory, then renames it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for c in &sweep.cells {
        let e = &c.estimate;
        let _ = writeln!(out, "{},{},{},{},{},{},{}", c.beta, c.r, c.q, e.n, e.p_hat, e.ci_lo, e.ci_hi);
    }
    out
}

pub fn histogram_csv(components: &Components) -> String {
    let mut out = String::from(HISTOGRAM_HEADER);
    out.push('\n');
    for &(size, count) in &components.histogram {
        let _ = writeln!(out, "{size},{count}");
    }
    out
}

pub fn points_csv(realization: &Realization) -> String {
    let dim = realization.grid().dim;
    let mut out = String::from("m,l");
    for i in 0..dim {
        let _ = write!(out, ",x{i}");
    }
    out.push_str(",mark\n");
    for p in &realization.points {
        let _ = write!(out, "{},{}", p.id.cube, p.id.rank);
        for x in &p.position {
            let _ = write!(out, ",{x}");
        }
        match p.mark.value() {
            Some(v) => {
                let _ = writeln!(out, ",{v}");
            }
            None => out.push_str(",\n"),
        }
    }
    out
}

#[derive(Serialize)]
struct VertexRow<'a> {
    m: u64,
    l: u32,
    position: &'a [f64],
    mark: Option<f64>,
    origin: bool,
}

#[derive(Serialize)]
struct ComplexExport<'a> {
    alpha: usize,
    cutoff: f64,
    edge_truncated: bool,
    window: Vec<u64>,
    face_counts: Vec<usize>,
    vertices: Vec<VertexRow<'a>>,
    /// Keyed by dimension; entries index into `vertices`.
    simplices: BTreeMap<usize, Vec<&'a [u32]>>,
}

/// Vertex table plus per-dimension simplex lists, in canonical order.
pub fn complex_json(complex: &Complex) -> Result<String> {
    let export = complex_value(complex);
    let mut s = serde_json::to_string_pretty(&export)?;
    s.push('\n');
    Ok(s)
}

fn complex_value(complex: &Complex) -> ComplexExport<'_> {
    ComplexExport {
        alpha: complex.alpha,
        cutoff: complex.cutoff,
        edge_truncated: complex.edge_truncated,
        window: complex.window.cubes().iter().copied().collect(),
        face_counts: complex.face_counts(),
        vertices: complex
            .vertices
            .iter()
            .map(|p| VertexRow {
                m: p.id.cube,
                l: p.id.rank,
                position: &p.position,
                mark: p.mark.value(),
                origin: p.is_origin,
            })
            .collect(),
        simplices: (1..=complex.alpha)
            .map(|j| (j, complex.simplices(j).iter().map(|s| s.as_slice()).collect()))
            .collect(),
    }
}

/// Complex export wrapped with run metadata.
pub fn complex_document(meta: &Metadata, complex: &Complex) -> Result<String> {
    to_json(meta, &complex_value(complex))
}
