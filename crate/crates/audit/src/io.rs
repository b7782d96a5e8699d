//! CSV formats: predictions, mixed predictions, raw datasets and oracle
//! point sets.
//!
//! All files are comma separated with a header row, LF line endings and no
//! quoting. Reals are written in Rust's shortest round-trip form. Parse
//! errors carry the 1-based line number of the offending row.

use std::fs;
use std::io::Write;
use std::path::Path;

use cpm_audit_core::lab::RawDataset;
use cpm_audit_core::scores::MixedPrediction;
use cpm_audit_core::{Error as CoreError, PredictionRecord, Split};

use crate::error::{AuditError, Result};

/// Version of the prediction CSV layout.
pub const PREDICTION_CSV_VERSION: u32 = 1;
/// Version of the mixed-prediction CSV layout.
pub const MIXED_CSV_VERSION: u32 = 1;

/// Parsed prediction file.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionFile {
    pub num_classes: usize,
    pub records: Vec<PredictionRecord>,
}

struct Table {
    source: String,
    header: Vec<String>,
    rows: Vec<(u64, Vec<String>)>,
}

// Hand-split rather than a CSV reader: the format has no quoting, and
// error lines must count blank lines too.
fn read_table(text: &str, source: &str) -> Result<Table> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i as u64 + 1, l.trim_end()))
        .filter(|(_, l)| !l.is_empty());
    let split = |l: &str| l.split(',').map(|c| c.trim().to_owned()).collect::<Vec<String>>();
    let (_, head) = lines.next().ok_or_else(|| AuditError::parse(source, 1, "missing header"))?;
    Ok(Table {
        source: source.to_owned(),
        header: split(head),
        rows: lines.map(|(n, l)| (n, split(l))).collect(),
    })
}

impl Table {
    fn err(&self, line: u64, message: impl Into<String>) -> AuditError {
        AuditError::parse(self.source.clone(), line, message)
    }

    /// Checks `fixed` leading columns followed by `prefix_0, prefix_1, ...`;
    /// returns the number of indexed columns.
    fn expect_header(&self, fixed: &[&str], prefix: &str) -> Result<usize> {
        let h = &self.header;
        let ok_fixed = h.len() > fixed.len() && h.iter().zip(fixed).all(|(a, b)| a == b);
        let ok_indexed = h[fixed.len().min(h.len())..]
            .iter()
            .enumerate()
            .all(|(i, name)| *name == format!("{prefix}{i}"));
        if !(ok_fixed && ok_indexed) {
            let expected = format!("{},{prefix}0,...", fixed.join(","));
            return Err(self.err(1, format!("malformed header `{}` (expected `{expected}`)", h.join(","))));
        }
        Ok(h.len() - fixed.len())
    }

    fn check_width(&self, line: u64, cells: &[String]) -> Result<()> {
        if cells.len() != self.header.len() {
            return Err(self.err(
                line,
                format!("expected {} cells, found {}", self.header.len(), cells.len()),
            ));
        }
        Ok(())
    }

    fn real(&self, line: u64, cell: &str, what: &str) -> Result<f64> {
        cell.trim()
            .parse::<f64>()
            .map_err(|_| self.err(line, format!("non-numeric {what} `{cell}`")))
    }

    fn index(&self, line: u64, cell: &str, what: &str) -> Result<usize> {
        cell.trim()
            .parse::<usize>()
            .map_err(|_| self.err(line, format!("invalid {what} `{cell}`")))
    }

    fn split(&self, line: u64, cell: &str) -> Result<Split> {
        Split::parse(cell.trim()).ok_or_else(|| self.err(line, format!("invalid split `{cell}` (expected member or nonmember)")))
    }
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| AuditError::io(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| AuditError::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| AuditError::io(path, e))
}

fn record_error_message(err: &CoreError) -> String {
    match err {
        CoreError::ProbabilitySum { sum } => format!("probability-sum violation (sum {sum})"),
        CoreError::LabelOutOfRange { label, classes } => {
            format!("label out of range ({label} with {classes} classes)")
        }
        CoreError::InvalidProbability { class, value } => format!("invalid probability p_{class} = {value}"),
        other => other.to_string(),
    }
}

pub fn parse_predictions(text: &str, source: &str) -> Result<PredictionFile> {
    let table = read_table(text, source)?;
    let num_classes = table.expect_header(&["split", "label"], "p_")?;
    let mut records = Vec::with_capacity(table.rows.len());
    for (line, cells) in &table.rows {
        let line = *line;
        table.check_width(line, cells)?;
        let split = table.split(line, &cells[0])?;
        let label = table.index(line, &cells[1], "label")?;
        let probs = cells[2..]
            .iter()
            .map(|c| table.real(line, c, "probability"))
            .collect::<Result<Vec<f64>>>()?;
        let record = PredictionRecord::new(probs, label, split).map_err(|e| table.err(line, record_error_message(&e)))?;
        records.push(record);
    }
    Ok(PredictionFile { num_classes, records })
}

pub fn load_predictions(path: &Path) -> Result<PredictionFile> {
    parse_predictions(&read_file(path)?, &path.display().to_string())
}

pub fn format_predictions(records: &[PredictionRecord]) -> String {
    let c = records.first().map_or(0, PredictionRecord::num_classes);
    let mut out = String::from("split,label");
    for i in 0..c {
        out.push_str(&format!(",p_{i}"));
    }
    out.push('\n');
    for r in records {
        out.push_str(r.split().as_str());
        out.push_str(&format!(",{}", r.label()));
        for p in r.probs() {
            out.push_str(&format!(",{p}"));
        }
        out.push('\n');
    }
    out
}

pub fn save_predictions(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    write_file(path, &format_predictions(records))
}

pub fn parse_mixed_predictions(text: &str, source: &str) -> Result<Vec<MixedPrediction>> {
    let table = read_table(text, source)?;
    table.expect_header(&["query_id", "r", "aux_id", "lambda"], "p_")?;
    let mut rows = Vec::with_capacity(table.rows.len());
    for (line, cells) in &table.rows {
        let line = *line;
        table.check_width(line, cells)?;
        let lambda = table.real(line, &cells[3], "lambda")?;
        if !(0.0..=1.0).contains(&lambda) {
            return Err(table.err(line, format!("lambda {lambda} outside [0, 1]")));
        }
        let probs = cells[4..]
            .iter()
            .map(|c| table.real(line, c, "probability"))
            .collect::<Result<Vec<f64>>>()?;
        // Validate like a prediction row; the label is checked later.
        let probs = PredictionRecord::new(probs, 0, Split::Member)
            .map_err(|e| table.err(line, record_error_message(&e)))?
            .probs()
            .to_vec();
        rows.push(MixedPrediction {
            query_id: table.index(line, &cells[0], "query_id")?,
            draw: table.index(line, &cells[1], "r")?,
            aux_id: table.index(line, &cells[2], "aux_id")?,
            lambda,
            probs,
        });
    }
    Ok(rows)
}

pub fn load_mixed_predictions(path: &Path) -> Result<Vec<MixedPrediction>> {
    parse_mixed_predictions(&read_file(path)?, &path.display().to_string())
}

pub fn format_mixed_predictions(rows: &[MixedPrediction]) -> String {
    let c = rows.first().map_or(0, |r| r.probs.len());
    let mut out = String::from("query_id,r,aux_id,lambda");
    for i in 0..c {
        out.push_str(&format!(",p_{i}"));
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{},{}", r.query_id, r.draw, r.aux_id, r.lambda));
        for p in &r.probs {
            out.push_str(&format!(",{p}"));
        }
        out.push('\n');
    }
    out
}

pub fn save_mixed_predictions(path: &Path, rows: &[MixedPrediction]) -> Result<()> {
    write_file(path, &format_mixed_predictions(rows))
}

/// Raw dataset CSV `split,label,x_0,...`. The class count is taken as
/// `max(label) + 1`, and at least 2.
pub fn parse_raw_dataset(text: &str, source: &str) -> Result<RawDataset> {
    let table = read_table(text, source)?;
    table.expect_header(&["split", "label"], "x_")?;
    let (mut features, mut labels, mut splits) = (Vec::new(), Vec::new(), Vec::new());
    for (line, cells) in &table.rows {
        let line = *line;
        table.check_width(line, cells)?;
        splits.push(table.split(line, &cells[0])?);
        labels.push(table.index(line, &cells[1], "label")?);
        let x = cells[2..]
            .iter()
            .map(|c| table.real(line, c, "feature"))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(table.err(line, format!("non-finite feature {v}")));
        }
        features.push(x);
    }
    if features.is_empty() {
        return Err(table.err(2, "dataset has no rows"));
    }
    let classes = labels.iter().copied().max().unwrap_or(0).max(1) + 1;
    Ok(RawDataset::new(classes, features, labels, splits)?)
}

pub fn load_raw_dataset(path: &Path) -> Result<RawDataset> {
    parse_raw_dataset(&read_file(path)?, &path.display().to_string())
}

pub fn format_raw_dataset(data: &RawDataset) -> String {
    let mut out = String::from("split,label");
    for k in 0..data.dim() {
        out.push_str(&format!(",x_{k}"));
    }
    out.push('\n');
    for ((x, y), s) in data.features().iter().zip(data.labels()).zip(data.splits()) {
        out.push_str(&format!("{},{y}", s.as_str()));
        for v in x {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn save_raw_dataset(path: &Path, data: &RawDataset) -> Result<()> {
    write_file(path, &format_raw_dataset(data))
}

/// Member and nonmember coordinates, in file order.
pub type PointLists = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Oracle point CSV `split,x_0,...`: returns (members, nonmembers).
pub fn parse_points(text: &str, source: &str) -> Result<PointLists> {
    let table = read_table(text, source)?;
    table.expect_header(&["split"], "x_")?;
    let (mut members, mut nonmembers) = (Vec::new(), Vec::new());
    for (line, cells) in &table.rows {
        let line = *line;
        table.check_width(line, cells)?;
        let split = table.split(line, &cells[0])?;
        let x = cells[1..]
            .iter()
            .map(|c| table.real(line, c, "coordinate"))
            .collect::<Result<Vec<f64>>>()?;
        match split {
            Split::Member => members.push(x),
            Split::Nonmember => nonmembers.push(x),
        }
    }
    Ok((members, nonmembers))
}

pub fn load_points(path: &Path) -> Result<PointLists> {
    parse_points(&read_file(path)?, &path.display().to_string())
}

pub(crate) fn write_text(path: &Path, contents: &str) -> Result<()> {
    write_file(path, contents)
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    read_file(path)
}
