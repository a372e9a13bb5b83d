//! Result bundles: CSV tables, a JSON summary and a plot script.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::plot::PlotSpec;

#[derive(Clone, Debug, PartialEq)]
pub enum Column {
    Real(String, Vec<f64>),
    Int(String, Vec<i64>),
    /// Written as `re_<name>` and `im_<name>`.
    Complex(String, Vec<C64>),
    Text(String, Vec<String>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Self::Real(_, v) => v.len(),
            Self::Int(_, v) => v.len(),
            Self::Complex(_, v) => v.len(),
            Self::Text(_, v) => v.len(),
        }
    }

    fn headers(&self) -> Vec<String> {
        match self {
            Self::Complex(n, _) => vec![format!("re_{n}"), format!("im_{n}")],
            Self::Real(n, _) | Self::Int(n, _) | Self::Text(n, _) => vec![n.clone()],
        }
    }

    fn push_cells(&self, row: usize, out: &mut Vec<String>) {
        match self {
            Self::Real(_, v) => out.push(real_cell(v[row])),
            Self::Int(_, v) => out.push(v[row].to_string()),
            Self::Complex(_, v) => {
                out.push(real_cell(v[row].re));
                out.push(real_cell(v[row].im));
            }
            Self::Text(_, v) => out.push(v[row].clone()),
        }
    }
}

/// 17 significant digits, enough to round-trip an `f64`.
pub fn real_cell(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub plot: Option<PlotSpec>,
}

impl Table {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), columns: Vec::new(), plot: None }
    }

    pub fn real(mut self, name: &str, values: Vec<f64>) -> Self {
        self.columns.push(Column::Real(name.into(), values));
        self
    }

    pub fn int(mut self, name: &str, values: Vec<i64>) -> Self {
        self.columns.push(Column::Int(name.into(), values));
        self
    }

    pub fn complex(mut self, name: &str, values: Vec<C64>) -> Self {
        self.columns.push(Column::Complex(name.into(), values));
        self
    }

    pub fn text(mut self, name: &str, values: Vec<String>) -> Self {
        self.columns.push(Column::Text(name.into(), values));
        self
    }

    pub fn with_plot(mut self, plot: PlotSpec) -> Self {
        self.plot = Some(plot);
        self
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Column::len)
    }

    pub fn headers(&self) -> Vec<String> {
        self.columns.iter().flat_map(Column::headers).collect()
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let n = self.rows();
        if let Some(c) = self.columns.iter().find(|c| c.len() != n) {
            return Err(CliError::Config(format!("table {}: column {:?} has {} rows, expected {n}", self.name, c.headers(), c.len())));
        }
        let mut out = self.headers().join(",");
        out.push('\n');
        let mut cells = Vec::new();
        for row in 0..n {
            cells.clear();
            for c in &self.columns {
                c.push_cells(row, &mut cells);
            }
            let _ = writeln!(out, "{}", cells.join(","));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metadata {
    pub experiment: String,
    pub config_hash: String,
    pub timestamp: String,
    pub version: String,
    pub threads: usize,
    /// Effective configuration, defaults included.
    pub config: BTreeMap<String, String>,
}

/// SHA-256 over the experiment name and the sorted effective configuration.
pub fn config_hash(experiment: &str, config: &BTreeMap<String, String>) -> String {
    let mut h = Sha256::new();
    h.update(experiment.as_bytes());
    h.update(b"\n");
    for (k, v) in config {
        h.update(k.as_bytes());
        h.update(b"=");
        h.update(v.as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Output of one experiment before metadata is attached.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub results: Map<String, Value>,
    pub invariants: BTreeMap<String, bool>,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn result(&mut self, key: &str, value: impl Serialize) {
        self.results.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    /// Records an invariant; a name seen twice keeps the conjunction.
    pub fn invariant(&mut self, name: &str, ok: bool) {
        let e = self.invariants.entry(name.to_string()).or_insert(true);
        *e &= ok;
    }

    pub fn failed_invariants(&self) -> Vec<String> {
        self.invariants.iter().filter(|(_, ok)| !**ok).map(|(k, _)| k.clone()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct ResultBundle {
    pub metadata: Metadata,
    pub outcome: Outcome,
}

impl ResultBundle {
    pub fn summary(&self) -> Value {
        let mut m = Map::new();
        m.insert("metadata".into(), serde_json::to_value(&self.metadata).unwrap_or(Value::Null));
        m.insert("results".into(), Value::Object(self.outcome.results.clone()));
        m.insert("invariants".into(), serde_json::to_value(&self.outcome.invariants).unwrap_or(Value::Null));
        m.insert("tables".into(), self.outcome.tables.iter().map(|t| Value::String(t.file_name())).collect());
        m.insert("warnings".into(), serde_json::to_value(&self.outcome.warnings).unwrap_or(Value::Null));
        Value::Object(m)
    }

    /// Writes every table, `summary.json` and `plot.gp` into `dir`.
    pub fn write(&self, dir: &Path) -> CliResult<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut written = Vec::new();
        let mut put = |name: &str, body: &str| -> CliResult<()> {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
            written.push(path);
            Ok(())
        };
        for t in &self.outcome.tables {
            put(&t.file_name(), &t.to_csv()?)?;
        }
        let summary = serde_json::to_string_pretty(&self.summary()).map_err(|e| CliError::Config(e.to_string()))?;
        put("summary.json", &(summary + "\n"))?;
        match crate::plot::emit_plot_script(self) {
            Ok(script) => put("plot.gp", &script)?,
            Err(CliError::UnsupportedTable) => {}
            Err(e) => return Err(e),
        }
        Ok(written)
    }
}
