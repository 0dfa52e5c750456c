//! Text formats: long-format curve CSV, coefficient CSV, keyed tables and
//! JSON result envelopes.
//!
//! Every file written here starts with provenance. CSV files carry it in a
//! leading `# provenance: {json}` comment line, JSON files in a top-level
//! `provenance` object.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSystem;
use crate::error::{FdaError, Result};
use crate::smoothing::{FunctionalDataSet, RawCurve};

pub const TOOL_NAME: &str = "fdakit";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const PROVENANCE_PREFIX: &str = "# provenance: ";
const BASIS_PREFIX: &str = "# basis: ";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(command: impl Into<String>, parameters: serde_json::Value, seed: Option<u64>) -> Self {
        Provenance {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            command: command.into(),
            parameters,
            seed,
        }
    }

    pub fn comment_line(&self) -> String {
        format!(
            "{PROVENANCE_PREFIX}{}",
            serde_json::to_string(self).expect("provenance serializes")
        )
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| FdaError::io(path.display().to_string(), e))
}

fn create(path: &Path) -> Result<std::io::BufWriter<File>> {
    File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| FdaError::io(path.display().to_string(), e))
}

fn parse_error(source: &str, line: u64, message: impl Into<String>) -> FdaError {
    FdaError::Parse {
        path: source.to_string(),
        line,
        message: message.into(),
    }
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader)
}

fn parse_f64(field: &str, source: &str, line: u64, what: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_error(source, line, format!("invalid {what} `{field}`")))
}

/// Reads long-format curves (`id,t,value`). Curves come back sorted by id,
/// each with ascending times, so row order in the file does not matter.
pub fn parse_curves<R: Read>(reader: R, source: &str) -> Result<Vec<RawCurve>> {
    let mut rdr = csv_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_error(source, 1, e.to_string()))?
        .clone();
    let expected = ["id", "t", "value"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(parse_error(
            source,
            1,
            format!("expected header `id,t,value`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut groups: BTreeMap<String, Vec<(f64, f64, u64)>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(source, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(parse_error(source, line, format!("expected 3 fields, found {}", record.len())));
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(parse_error(source, line, "empty curve id"));
        }
        let t = parse_f64(&record[1], source, line, "time")?;
        let v = parse_f64(&record[2], source, line, "value")?;
        groups.entry(id).or_default().push((t, v, line));
    }
    if groups.is_empty() {
        return Err(parse_error(source, 1, "no observations"));
    }
    groups
        .into_iter()
        .map(|(id, mut obs)| {
            obs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
            if let Some(pair) = obs.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(parse_error(
                    source,
                    pair[1].2,
                    format!("duplicate time {} for curve `{id}` (first seen on line {})", pair[1].0, pair[0].2),
                ));
            }
            Ok(RawCurve {
                id,
                times: obs.iter().map(|o| o.0).collect(),
                values: obs.iter().map(|o| o.1).collect(),
            })
        })
        .collect()
}

pub fn read_curves(path: &Path) -> Result<Vec<RawCurve>> {
    parse_curves(open(path)?, &path.display().to_string())
}

pub fn write_curves<W: Write>(mut out: W, curves: &[RawCurve], prov: &Provenance) -> Result<()> {
    let io = |e| FdaError::io("curves output", e);
    writeln!(out, "{}", prov.comment_line()).map_err(io)?;
    writeln!(out, "id,t,value").map_err(io)?;
    for c in curves {
        for (t, v) in c.times.iter().zip(&c.values) {
            writeln!(out, "{},{},{}", c.id, t, v).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

pub fn save_curves(path: &Path, curves: &[RawCurve], prov: &Provenance) -> Result<()> {
    write_curves(create(path)?, curves, prov)
}

/// Coefficient table: provenance and basis comment lines, then `id,c1..cK`.
pub fn write_coefficients<W: Write>(mut out: W, ds: &FunctionalDataSet, prov: &Provenance) -> Result<()> {
    let io = |e| FdaError::io("coefficients output", e);
    writeln!(out, "{}", prov.comment_line()).map_err(io)?;
    let basis = serde_json::to_string(ds.basis()).expect("basis serializes");
    writeln!(out, "{BASIS_PREFIX}{basis}").map_err(io)?;
    let header: Vec<String> = (1..=ds.basis().n_basis()).map(|k| format!("c{k}")).collect();
    writeln!(out, "id,{}", header.join(",")).map_err(io)?;
    for (i, id) in ds.ids().iter().enumerate() {
        let row: Vec<String> = ds.coefficients().row(i).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{id},{}", row.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn save_coefficients(path: &Path, ds: &FunctionalDataSet, prov: &Provenance) -> Result<()> {
    write_coefficients(create(path)?, ds, prov)
}

/// Leading `#` comment lines of a text file.
fn leading_comments<R: BufRead>(reader: R) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| FdaError::io("comment header", e))?;
        if !line.starts_with('#') {
            break;
        }
        out.push(line);
    }
    Ok(out)
}

pub fn parse_coefficients(text: &str, source: &str) -> Result<FunctionalDataSet> {
    let comments = leading_comments(text.as_bytes())?;
    let basis_json = comments
        .iter()
        .find_map(|l| l.strip_prefix(BASIS_PREFIX))
        .ok_or_else(|| parse_error(source, 1, "missing `# basis:` header line"))?;
    let basis: BasisSystem = serde_json::from_str(basis_json)
        .map_err(|e| parse_error(source, 1, format!("invalid basis description: {e}")))?;
    let k = basis.n_basis();
    let mut rdr = csv_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| parse_error(source, 1, e.to_string()))?;
    if headers.len() != k + 1 {
        return Err(parse_error(
            source,
            1,
            format!("expected {} columns for a basis of size {k}, found {}", k + 1, headers.len()),
        ));
    }
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| parse_error(source, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        ids.push(record[0].to_string());
        for field in record.iter().skip(1) {
            values.push(parse_f64(field, source, line, "coefficient")?);
        }
    }
    let n = ids.len();
    let coefficients = DMatrix::from_row_slice(n, k, &values);
    FunctionalDataSet::new(basis, coefficients, ids)
}

pub fn read_coefficients(path: &Path) -> Result<FunctionalDataSet> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|e| FdaError::io(path.display().to_string(), e))?;
    parse_coefficients(&text, &path.display().to_string())
}

/// Whether a CSV file holds a coefficient table (as opposed to raw curves).
pub fn is_coefficient_file(path: &Path) -> Result<bool> {
    let comments = leading_comments(open(path)?)?;
    Ok(comments.iter().any(|l| l.starts_with(BASIS_PREFIX)))
}

/// Provenance recorded in a CSV comment line or a JSON envelope.
pub fn read_provenance(path: &Path) -> Result<Provenance> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|e| FdaError::io(path.display().to_string(), e))?;
    let source = path.display().to_string();
    if let Some(json) = text.lines().find_map(|l| l.strip_prefix(PROVENANCE_PREFIX)) {
        return serde_json::from_str(json).map_err(|e| parse_error(&source, 1, e.to_string()));
    }
    if let Some(start) = text.find("<!-- provenance: ") {
        let rest = &text[start + "<!-- provenance: ".len()..];
        let end = rest.find(" -->").unwrap_or(rest.len());
        return serde_json::from_str(&rest[..end]).map_err(|e| parse_error(&source, 1, e.to_string()));
    }
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| parse_error(&source, 1, e.to_string()))?;
    serde_json::from_value(value["provenance"].clone())
        .map_err(|e| parse_error(&source, 1, format!("missing provenance: {e}")))
}

/// Rows of a keyed numeric table such as `id,y` or `id,x,y`; returns the
/// column names (without `id`) and the rows in file order.
pub fn parse_keyed_table<R: Read>(reader: R, source: &str) -> Result<(Vec<String>, Vec<(String, Vec<f64>)>)> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_error(source, 1, e.to_string()))?.clone();
    if headers.is_empty() || &headers[0] != "id" || headers.len() < 2 {
        return Err(parse_error(source, 1, "expected a header starting with `id` and at least one value column"));
    }
    let columns: Vec<String> = headers.iter().skip(1).map(String::from).collect();
    let mut rows = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for record in rdr.records() {
        let record = record.map_err(|e| parse_error(source, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let id = record[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(parse_error(source, line, format!("duplicate id `{id}`")));
        }
        let vals = record
            .iter()
            .skip(1)
            .map(|f| parse_f64(f, source, line, "value"))
            .collect::<Result<Vec<_>>>()?;
        rows.push((id, vals));
    }
    if rows.is_empty() {
        return Err(parse_error(source, 1, "table has no rows"));
    }
    Ok((columns, rows))
}

pub fn read_keyed_table(path: &Path) -> Result<(Vec<String>, Vec<(String, Vec<f64>)>)> {
    parse_keyed_table(open(path)?, &path.display().to_string())
}

/// Reorders keyed rows to follow `ids`; every id must be present.
pub fn align_rows(ids: &[String], rows: &[(String, Vec<f64>)], source: &str) -> Result<Vec<Vec<f64>>> {
    let map: BTreeMap<&str, &Vec<f64>> = rows.iter().map(|(k, v)| (k.as_str(), v)).collect();
    ids.iter()
        .map(|id| {
            map.get(id.as_str())
                .map(|v| (*v).clone())
                .ok_or_else(|| parse_error(source, 0, format!("no row for curve `{id}`")))
        })
        .collect()
}

/// `{"provenance": …, "result": …}` as pretty JSON.
pub fn write_json<W: Write, T: Serialize>(mut out: W, prov: &Provenance, result: &T) -> Result<()> {
    let doc = serde_json::json!({ "provenance": prov, "result": result });
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| FdaError::Numerical(e.to_string()))?;
    writeln!(out).map_err(|e| FdaError::io("json output", e))
}

pub fn save_json<T: Serialize>(path: &Path, prov: &Provenance, result: &T) -> Result<()> {
    write_json(create(path)?, prov, result)
}
