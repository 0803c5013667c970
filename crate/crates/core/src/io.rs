//! File formats: CSV signals, graphs and point clouds, and versioned JSON
//! artifacts for flow traces and decompositions.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::LabeledPointSet;
use crate::error::{Error, Result};
use crate::flow::{ExtinctionProfile, FlowParams, FlowTrace};
use crate::functional::Domain;
use crate::graph::{GraphRecord, WeightedGraph};
use crate::scheme::{Decomposition, SchemeParams};
use crate::signal::Signal;

pub const SCHEMA_VERSION: u32 = 1;

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(r)
}

/// Parses numeric CSV rows of exactly `width` fields. A first row that does
/// not parse is taken as a header.
fn numeric_rows<R: Read>(r: R, width: &[usize]) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (line, rec) in csv_reader(r).records().enumerate() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) if width.contains(&v.len()) => rows.push(v),
            Ok(v) => {
                return Err(Error::Parse(format!(
                    "line {}: expected {} fields, found {}",
                    line + 1,
                    width.iter().map(ToString::to_string).collect::<Vec<_>>().join(" or "),
                    v.len()
                )))
            }
            Err(_) if line == 0 && rows.is_empty() => {}
            Err(e) => {
                return Err(Error::Parse(format!(
                    "line {}: {e} in {:?}",
                    line + 1,
                    rec.iter().collect::<Vec<_>>()
                )))
            }
        }
    }
    Ok(rows)
}

pub fn parse_signal_csv<R: Read>(r: R) -> Result<Signal> {
    let values: Vec<f64> = numeric_rows(r, &[1])?.into_iter().map(|v| v[0]).collect();
    Signal::new(values)
}

pub fn read_signal_csv(path: &Path) -> Result<Signal> {
    parse_signal_csv(File::open(path)?)
}

pub fn write_signal_csv(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "value")?;
    for v in values {
        writeln!(w, "{v:e}")?;
    }
    w.flush()?;
    Ok(())
}

/// Edge-list CSV `i,j,w` (weight optional, default 1). The vertex count is
/// `n` when given, else one more than the largest index.
pub fn parse_graph_csv<R: Read>(r: R, n: Option<usize>) -> Result<WeightedGraph> {
    let mut edges = Vec::new();
    for row in numeric_rows(r, &[2, 3])? {
        let idx = |x: f64| {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(Error::Parse(format!("vertex index {x} is not a nonnegative integer")))
            }
        };
        edges.push((idx(row[0])?, idx(row[1])?, row.get(2).copied().unwrap_or(1.0)));
    }
    let n = n.unwrap_or_else(|| edges.iter().map(|e| e.0.max(e.1) + 1).max().unwrap_or(0));
    WeightedGraph::new(n, edges)
}

/// Reads `.json` (`{"n": .., "edges": [[i, j, w], ..]}`) or edge-list CSV.
pub fn read_graph(path: &Path) -> Result<WeightedGraph> {
    if path.extension().is_some_and(|e| e == "json") {
        let rec: GraphRecord = serde_json::from_reader(File::open(path)?)?;
        WeightedGraph::try_from(rec)
    } else {
        parse_graph_csv(File::open(path)?, None)
    }
}

pub fn write_graph_json(path: &Path, g: &WeightedGraph) -> Result<()> {
    write_json(path, g)
}

/// Points CSV `x,y[,label]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<[f64; 2]>,
    pub labels: Option<Vec<usize>>,
}

pub fn parse_points_csv<R: Read>(r: R) -> Result<PointCloud> {
    let rows = numeric_rows(r, &[2, 3])?;
    if rows.is_empty() {
        return Err(Error::EmptySignal);
    }
    let labeled = rows[0].len() == 3;
    if rows.iter().any(|row| (row.len() == 3) != labeled) {
        return Err(Error::Parse("mixed labeled and unlabeled rows".into()));
    }
    let points = rows.iter().map(|row| [row[0], row[1]]).collect();
    let labels = if labeled {
        Some(
            rows.iter()
                .map(|row| {
                    let l = row[2];
                    if l >= 0.0 && l.fract() == 0.0 {
                        Ok(l as usize)
                    } else {
                        Err(Error::Parse(format!("label {l} is not a nonnegative integer")))
                    }
                })
                .collect::<Result<_>>()?,
        )
    } else {
        None
    };
    Ok(PointCloud { points, labels })
}

pub fn read_points_csv(path: &Path) -> Result<PointCloud> {
    parse_points_csv(File::open(path)?)
}

pub fn write_points_csv(path: &Path, ps: &LabeledPointSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "label"])?;
    for (p, l) in ps.points.iter().zip(&ps.labels) {
        w.write_record([p[0].to_string(), p[1].to_string(), l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-point clustering output `x,y,true_label,pred_label,eigenfunction_value`;
/// `true_label` is empty when unknown.
pub fn write_cluster_csv(
    path: &Path,
    points: &[[f64; 2]],
    truth: Option<&[usize]>,
    pred: &[usize],
    values: &[f64],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "true_label", "pred_label", "eigenfunction_value"])?;
    for (i, p) in points.iter().enumerate() {
        let t = truth.map_or(String::new(), |t| t[i].to_string());
        w.write_record([
            p[0].to_string(),
            p[1].to_string(),
            t,
            pred[i].to_string(),
            values[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceArtifact {
    pub domain: Domain,
    pub params: FlowParams,
    pub trace: FlowTrace,
    pub profile: Option<ExtinctionProfile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionArtifact {
    pub domain: Domain,
    pub params: SchemeParams,
    pub decomposition: Decomposition,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Artifact {
    FlowTrace(TraceArtifact),
    Decomposition(DecompositionArtifact),
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    schema: u32,
    #[serde(flatten)]
    artifact: Artifact,
}

pub fn artifact_to_string(a: &Artifact) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Envelope {
        schema: SCHEMA_VERSION,
        artifact: a.clone(),
    })?)
}

pub fn artifact_from_str(s: &str) -> Result<Artifact> {
    let value: serde_json::Value = serde_json::from_str(s)?;
    match value.get("schema").and_then(serde_json::Value::as_u64) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        Some(v) => return Err(Error::Parse(format!("unsupported schema version {v}"))),
        None => return Err(Error::Parse("missing \"schema\" field".into())),
    }
    let env: Envelope = serde_json::from_value(value)?;
    Ok(env.artifact)
}

pub fn write_artifact(path: &Path, a: &Artifact) -> Result<()> {
    std::fs::write(path, artifact_to_string(a)?)?;
    Ok(())
}

pub fn read_artifact(path: &Path) -> Result<Artifact> {
    artifact_from_str(&std::fs::read_to_string(path)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.flush()?;
    Ok(())
}
