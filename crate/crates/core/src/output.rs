//! Serialized forms of reports and emitted data. Reals are written as
//! decimal strings at the working precision so files round-trip exactly.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identities::{IdentityKind, IdentityReport, Term};
use crate::precision::Real;
use crate::traces::MarkoffTriple;

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 9] =
    ["curve_p", "curve_q", "sector", "height", "trace", "length", "value", "aux1", "aux2"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// One line of tabular output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub curve_p: i64,
    pub curve_q: i64,
    /// Sector label, or "base" for a, b and c.
    pub sector: String,
    pub height: u64,
    pub trace: String,
    pub length: String,
    pub value: String,
    pub aux1: Option<String>,
    pub aux2: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleRecord {
    pub a: String,
    pub b: String,
    pub c: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub schema: u32,
    pub kind: IdentityKind,
    pub base: TripleRecord,
    pub max_height: u64,
    pub terms_used: usize,
    pub partial: String,
    pub target: String,
    pub residual: String,
    pub tail_bound: Option<String>,
    pub threshold: String,
    pub precision_bits: usize,
    pub monotone: bool,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub terms: Option<Vec<Row>>,
}

/// Data emitted for plotting (F, f or unit-ball points).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRecord {
    pub schema: u32,
    pub kind: String,
    pub base: TripleRecord,
    pub precision_bits: usize,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkoffRecord {
    pub schema: u32,
    pub max_z: String,
    pub triples: Vec<[String; 3]>,
}

/// Decimal string with every significant digit the precision carries.
pub fn real_string(x: &Real) -> String {
    x.to_decimal_string()
}

pub fn triple_record(a: &Real, b: &Real, c: &Real) -> TripleRecord {
    TripleRecord { a: real_string(a), b: real_string(b), c: real_string(c) }
}

/// Per-term rows: aux1 carries the running total after the term.
pub fn term_rows(terms: &[Term], lengths: &[Real], running: &[Real]) -> Vec<Row> {
    terms
        .iter()
        .zip(lengths)
        .zip(running)
        .map(|((t, l), acc)| Row {
            curve_p: t.curve.projective.0,
            curve_q: t.curve.projective.1,
            sector: sector_label(t.curve.sector),
            height: t.curve.height,
            trace: real_string(&t.curve.trace),
            length: real_string(l),
            value: real_string(&t.value),
            aux1: Some(real_string(acc)),
            aux2: None,
        })
        .collect()
}

pub fn sector_label(sector: Option<crate::traces::Sector>) -> String {
    sector.map_or("base".to_string(), |s| s.label().to_string())
}

pub fn report_record(
    report: &IdentityReport,
    tail_bound: Option<&Real>,
    threshold: &str,
    passed: bool,
    terms: Option<Vec<Row>>,
) -> ReportRecord {
    ReportRecord {
        schema: SCHEMA_VERSION,
        kind: report.kind,
        base: triple_record(report.base.a(), report.base.b(), report.base.c()),
        max_height: report.max_height,
        terms_used: report.terms_used,
        partial: real_string(&report.partial),
        target: real_string(&report.target),
        residual: report.residual.to_sci(12),
        tail_bound: tail_bound.map(|b| b.to_sci(12)),
        threshold: threshold.to_string(),
        precision_bits: report.precision_bits,
        monotone: report.monotone,
        passed,
        terms,
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Assembly(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new())
}

pub fn rows_to_csv(rows: &[Row]) -> Result<String> {
    let mut w = csv_writer();
    w.write_record(CSV_COLUMNS).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    finish_csv(w)
}

pub fn markoff_to_csv(triples: &[MarkoffTriple]) -> Result<String> {
    let mut w = csv_writer();
    w.write_record(["x", "y", "z"]).map_err(csv_error)?;
    for m in triples {
        w.write_record([m.x.to_string(), m.y.to_string(), m.z.to_string()]).map_err(csv_error)?;
    }
    finish_csv(w)
}

pub fn markoff_record(max_z: &str, triples: &[MarkoffTriple]) -> MarkoffRecord {
    MarkoffRecord {
        schema: SCHEMA_VERSION,
        max_z: max_z.to_string(),
        triples: triples.iter().map(|m| [m.x.to_string(), m.y.to_string(), m.z.to_string()]).collect(),
    }
}

fn finish_csv(mut w: csv::Writer<Vec<u8>>) -> Result<String> {
    w.flush()?;
    let bytes = w.into_inner().map_err(|e| Error::Assembly(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Assembly(e.to_string()))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Assembly(format!("csv: {e}"))
}

/// Writes to the given path, or stdout when none.
pub fn write_output(path: Option<&std::path::Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, content)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}
