//! Report serialization and file formats.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, RfpError};
use crate::model::{ComparisonSpec, Deployment, DEFAULT_EPSILON_M, DEFAULT_FX_OFFSET_M};
use crate::scenario::{ComparisonReport, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

pub const REPORT_CSV_HEADER: [&str; 12] = [
    "scenario",
    "policy",
    "n_i",
    "method",
    "fixed_ratio",
    "cell_ratio",
    "pe1_w",
    "pe2_w",
    "cell1_w",
    "cell2_w",
    "fx1_w",
    "fx2_w",
];

pub fn render_reports(reports: &[ComparisonReport], format: ReportFormat) -> Result<String> {
    if reports.is_empty() {
        return Err(RfpError::Config("no reports to write".into()));
    }
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(reports)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let fail = |e: csv::Error| RfpError::Config(format!("CSV encoding failed: {e}"));
            w.write_record(REPORT_CSV_HEADER).map_err(fail)?;
            for r in reports {
                w.write_record([
                    r.scenario.clone(),
                    r.policy.to_string(),
                    r.n_i.to_string(),
                    r.method.to_string(),
                    r.fixed_ratio.to_string(),
                    r.cell_ratio.to_string(),
                    r.pe1_w.to_string(),
                    r.pe2_w.to_string(),
                    r.cell1_w.to_string(),
                    r.cell2_w.to_string(),
                    r.fx1_w.to_string(),
                    r.fx2_w.to_string(),
                ])
                .map_err(fail)?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| RfpError::Config(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("CSV of ASCII fields"))
        }
    }
}

/// Writes `reports` to `path`. Nothing is created when `reports` is empty.
pub fn emit_report(reports: &[ComparisonReport], format: ReportFormat, path: &Path) -> Result<()> {
    let text = render_reports(reports, format)?;
    fs::write(path, text).map_err(|e| RfpError::io(path, e))
}

pub fn read_reports_json(path: &Path) -> Result<Vec<ComparisonReport>> {
    let text = fs::read_to_string(path).map_err(|e| RfpError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Run metadata kept next to a data file as `<file>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub data_file: String,
    pub format: String,
    pub elapsed_s: Vec<f64>,
}

pub fn sidecar_path(data: &Path) -> PathBuf {
    let mut name = data
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".meta.json");
    data.with_file_name(name)
}

pub fn write_sidecar(
    data: &Path,
    command: &str,
    format: &str,
    elapsed_s: Vec<f64>,
) -> Result<PathBuf> {
    let meta = RunMetadata {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        data_file: data
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        format: format.to_string(),
        elapsed_s,
    };
    let path = sidecar_path(data);
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| RfpError::io(&path, e))?;
    Ok(path)
}

/// Deployment-pair file for arbitrary comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairFile {
    #[serde(default)]
    pub schema_version: Option<u32>,
    #[serde(default)]
    pub label: Option<String>,
    pub dep1: Deployment,
    pub dep2: Deployment,
    #[serde(default)]
    pub d_fx1_m: Option<f64>,
    #[serde(default)]
    pub d_fx2_m: Option<f64>,
    #[serde(default)]
    pub epsilon_m: Option<f64>,
}

impl PairFile {
    pub fn spec(&self) -> Result<ComparisonSpec> {
        if self.dep1.n_i() != self.dep2.n_i() {
            return Err(RfpError::Config(format!(
                "both deployments need the same n_i, got {} and {}",
                self.dep1.n_i(),
                self.dep2.n_i()
            )));
        }
        ComparisonSpec::new(
            self.dep1,
            self.dep2,
            self.d_fx1_m
                .unwrap_or(self.dep1.d_min() + DEFAULT_FX_OFFSET_M),
            self.d_fx2_m
                .unwrap_or(self.dep2.d_min() + DEFAULT_FX_OFFSET_M),
            self.epsilon_m.unwrap_or(DEFAULT_EPSILON_M),
        )
    }
}

pub fn read_json_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| RfpError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| RfpError::Format {
        path: path.to_path_buf(),
        message: format!("malformed JSON: {e}"),
    })
}
