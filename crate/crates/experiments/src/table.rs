use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// `json` for a `.json` extension, otherwise `csv`.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub artifact: String,
    pub version: String,
    /// Fully resolved configuration; running it again reproduces the table.
    pub config: ExperimentConfig,
}

impl Metadata {
    pub fn new(config: ExperimentConfig) -> Self {
        Metadata {
            artifact: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub meta: Metadata,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ResultTable {
    pub fn new(meta: Metadata, columns: &[&str]) -> Self {
        ResultTable {
            meta,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width must match the header"
        );
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write<W: Write>(&self, format: Format, out: W) -> Result<(), RunError> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => self.write_json(out),
        }
    }

    fn write_csv<W: Write>(&self, mut out: W) -> Result<(), RunError> {
        let io = |e: std::io::Error| RunError::Output(e.to_string());
        writeln!(
            out,
            "# artifact: {} {}",
            self.meta.artifact, self.meta.version
        )
        .map_err(io)?;
        let config = serde_json::to_string(&self.meta.config)
            .map_err(|e| RunError::Output(e.to_string()))?;
        writeln!(out, "# config: {config}").map_err(io)?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let csv_err = |e: csv::Error| RunError::Output(e.to_string());
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))
                .map_err(csv_err)?;
        }
        w.flush().map_err(io)
    }

    fn write_json<W: Write>(&self, mut out: W) -> Result<(), RunError> {
        serde_json::to_writer_pretty(&mut out, self)
            .map_err(|e| RunError::Output(e.to_string()))?;
        writeln!(out).map_err(|e| RunError::Output(e.to_string()))
    }

    pub fn to_string(&self, format: Format) -> Result<String, RunError> {
        let mut buf = Vec::new();
        self.write(format, &mut buf)?;
        Ok(String::from_utf8(buf).expect("tables are UTF-8"))
    }

    /// Writes the whole table at once to `path`.
    pub fn emit(&self, format: Format, path: &Path) -> Result<(), RunError> {
        let text = self.to_string(format)?;
        fs::write(path, text).map_err(|e| RunError::Output(format!("{}: {e}", path.display())))
    }
}
