//! Emitted artifacts. Each file opens with the schema id and the resolved config, and is
//! written through a temporary file in the same directory and renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::error::{CliError, Result};

/// Version tag shared by every schema id.
pub const SCHEMA_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Json(Value),
    /// Column names with their types, then the rows.
    Csv {
        columns: Vec<(&'static str, &'static str)>,
        rows: Vec<Vec<String>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    /// File stem; the extension follows from the body.
    pub name: String,
    pub body: Body,
}

impl Artifact {
    pub fn json(name: impl Into<String>, result: Value) -> Self {
        Artifact { name: name.into(), body: Body::Json(result) }
    }

    pub fn csv(name: impl Into<String>, columns: Vec<(&'static str, &'static str)>, rows: Vec<Vec<String>>) -> Self {
        Artifact { name: name.into(), body: Body::Csv { columns, rows } }
    }

    pub fn file_name(&self) -> String {
        match self.body {
            Body::Json(_) => format!("{}.json", self.name),
            Body::Csv { .. } => format!("{}.csv", self.name),
        }
    }

    pub fn schema_id(&self) -> String {
        let ext = match self.body {
            Body::Json(_) => "json",
            Body::Csv { .. } => "csv",
        };
        format!("latspec/{}-{ext}/{SCHEMA_VERSION}", self.name)
    }

    /// The full file contents.
    pub fn render(&self, config: &Value) -> Vec<u8> {
        match &self.body {
            Body::Json(result) => {
                let mut m = Map::new();
                m.insert("schema".into(), Value::from(self.schema_id()));
                m.insert("config".into(), config.clone());
                m.insert("result".into(), result.clone());
                let mut out = serde_json::to_vec_pretty(&Value::Object(m)).expect("json renders");
                out.push(b'\n');
                out
            }
            Body::Csv { columns, rows } => {
                let typed: Vec<String> = columns.iter().map(|(n, t)| format!("{n}:{t}")).collect();
                let mut out = format!(
                    "# schema: {} {}\n# config: {}\n",
                    self.schema_id(),
                    typed.join(","),
                    serde_json::to_string(config).expect("json renders")
                )
                .into_bytes();
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(columns.iter().map(|c| c.0)).expect("in-memory csv");
                for r in rows {
                    w.write_record(r).expect("in-memory csv");
                }
                out.extend(w.into_inner().expect("in-memory csv"));
                out
            }
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

/// Writes `bytes` to `path` so that readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

/// Writes all artifacts into `dir`, creating it if needed.
pub fn emit(dir: &Path, config: &Value, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(a.file_name());
            write_atomic(&path, &a.render(config))?;
            Ok(path)
        })
        .collect()
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}
