//! JSON artifacts (models, polytopes, reports) and report rendering.

use std::path::Path;
use std::str::FromStr;

use cpm_audit_core::lab::{MlpModel, TrainConfig};
use cpm_audit_core::polytope::{Orientation, Polytope};
use cpm_audit_core::report::{render_csv, render_markdown, AuditReport};
use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::io::{read_text, write_text};

pub const MODEL_JSON_VERSION: u32 = 1;
pub const POLYTOPE_JSON_VERSION: u32 = 1;
pub const REPORT_JSON_VERSION: u32 = 1;

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact types serialize infallibly");
    s.push('\n');
    s
}

fn from_json<T: for<'de> Deserialize<'de>>(text: &str, source: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| AuditError::Json {
        path: source.to_owned(),
        source: e,
    })
}

/// Model file: layer sizes, one row-major matrix per layer (one row per
/// output unit), biases and the training configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    #[serde(default)]
    pub train_config: Option<TrainConfig>,
}

impl ModelFile {
    pub fn new(model: &MlpModel, train_config: Option<TrainConfig>) -> Self {
        let dims = model.layer_dims();
        let weights = model
            .weights()
            .iter()
            .enumerate()
            .map(|(l, w)| w.chunks(dims[l]).map(<[f64]>::to_vec).collect())
            .collect();
        Self {
            format_version: MODEL_JSON_VERSION,
            layer_dims: dims.to_vec(),
            weights,
            biases: model.biases().to_vec(),
            train_config,
        }
    }

    pub fn to_model(&self) -> Result<MlpModel> {
        if self.format_version != MODEL_JSON_VERSION {
            return Err(AuditError::Usage(format!(
                "unsupported model format version {} (expected {MODEL_JSON_VERSION})",
                self.format_version
            )));
        }
        let dims = &self.layer_dims;
        let mut flat = Vec::with_capacity(self.weights.len());
        for (l, rows) in self.weights.iter().enumerate() {
            let fan_in = dims.get(l).copied().unwrap_or(0);
            if rows.iter().any(|r| r.len() != fan_in) {
                return Err(cpm_audit_core::Error::DimensionMismatch {
                    expected: fan_in,
                    found: rows.iter().map(Vec::len).find(|&n| n != fan_in).unwrap_or(0),
                }
                .into());
            }
            flat.push(rows.concat());
        }
        Ok(MlpModel::from_parts(dims.clone(), flat, self.biases.clone())?)
    }
}

pub fn save_model(path: &Path, model: &MlpModel, train_config: Option<TrainConfig>) -> Result<()> {
    write_text(path, &to_json(&ModelFile::new(model, train_config)))
}

pub fn load_model(path: &Path) -> Result<(MlpModel, Option<TrainConfig>)> {
    let file: ModelFile = from_json(&read_text(path)?, &path.display().to_string())?;
    Ok((file.to_model()?, file.train_config))
}

/// Polytope file `{K, s, weights, biases}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeFile {
    #[serde(rename = "K")]
    pub k: usize,
    pub s: i64,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl PolytopeFile {
    pub fn new(p: &Polytope) -> Self {
        Self {
            k: p.facets(),
            s: p.orientation().as_sign(),
            weights: (0..p.facets()).map(|i| p.facet_weights(i).to_vec()).collect(),
            biases: p.biases().to_vec(),
        }
    }

    pub fn to_polytope(&self) -> Result<Polytope> {
        let orientation = Orientation::from_sign(self.s)
            .ok_or_else(|| AuditError::Usage(format!("polytope orientation must be 1 or -1, got {}", self.s)))?;
        if self.weights.len() != self.k {
            return Err(cpm_audit_core::Error::DimensionMismatch {
                expected: self.k,
                found: self.weights.len(),
            }
            .into());
        }
        Ok(Polytope::new(self.weights.clone(), self.biases.clone(), orientation)?)
    }
}

pub fn polytope_json(p: &Polytope) -> String {
    to_json(&PolytopeFile::new(p))
}

pub fn save_polytope(path: &Path, p: &Polytope) -> Result<()> {
    write_text(path, &polytope_json(p))
}

pub fn load_polytope(path: &Path) -> Result<Polytope> {
    let file: PolytopeFile = from_json(&read_text(path)?, &path.display().to_string())?;
    file.to_polytope()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
    Json,
}

impl FromStr for ReportFormat {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            other => Err(AuditError::Usage(format!(
                "unknown report format `{other}` (expected csv, markdown or json)"
            ))),
        }
    }
}

pub fn report_json(report: &AuditReport) -> String {
    to_json(report)
}

pub fn parse_report(text: &str, source: &str) -> Result<AuditReport> {
    from_json(text, source)
}

pub fn render(report: &AuditReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Markdown => render_markdown(report),
        ReportFormat::Json => report_json(report),
    }
}

pub fn save_report(path: &Path, report: &AuditReport) -> Result<()> {
    write_text(path, &report_json(report))
}

pub fn load_report(path: &Path) -> Result<AuditReport> {
    parse_report(&read_text(path)?, &path.display().to_string())
}

/// JSON text for any serializable value, pretty-printed with a final
/// newline.
pub fn pretty_json<T: Serialize>(value: &T) -> String {
    to_json(value)
}
