//! Artifact writing: the JSON envelope, CSV tables and plot manifests, all
//! written through a temporary file in the target directory and renamed.

use std::io::Write;
use std::path::{Path, PathBuf};

use attractorkit::config::Fixture;
use attractorkit::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// `SOURCE_DATE_EPOCH` when set, the current time otherwise, as RFC 3339.
pub fn timestamp() -> Result<String> {
    let secs = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v
            .trim()
            .parse::<i64>()
            .map_err(|_| Error::InvalidInput(format!("SOURCE_DATE_EPOCH must be an integer, got {v:?}")))?,
        Err(_) => chrono::Utc::now().timestamp(),
    };
    let t = chrono::DateTime::from_timestamp(secs, 0)
        .ok_or_else(|| Error::InvalidInput(format!("SOURCE_DATE_EPOCH out of range: {secs}")))?;
    Ok(t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
}

pub struct Sink {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write_with<F>(&mut self, name: &str, fill: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> Result<()>,
    {
        let path = self.dir.join(name);
        let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io)?;
        {
            let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
            fill(&mut buf)?;
            buf.flush().map_err(io)?;
        }
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&path).map_err(|e| io(e.error))?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(w)?;
            Ok(())
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// Fields shared by every JSON artifact.
pub struct Envelope<'a> {
    pub command: &'a str,
    pub seed: Option<u64>,
    pub fixture: Option<&'a Fixture>,
}

impl Envelope<'_> {
    pub fn wrap<T: Serialize>(&self, result: &T) -> Result<Value> {
        let result = serde_json::to_value(result).map_err(|e| Error::Io(e.to_string()))?;
        Ok(json!({
            "schema_version": SCHEMA_VERSION,
            "tool": "attractorkit",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "timestamp": timestamp()?,
            "seed": self.seed,
            "config": self.fixture,
            "result": result,
        }))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Axis {
    pub column: String,
    pub label: String,
    pub log: bool,
}

impl Axis {
    pub fn new(column: impl Into<String>, label: impl Into<String>, log: bool) -> Self {
        Self {
            column: column.into(),
            label: label.into(),
            log,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PlotManifest {
    pub schema_version: u32,
    pub title: String,
    pub data: String,
    pub kind: &'static str,
    pub x: Axis,
    pub series: Vec<Axis>,
}

impl PlotManifest {
    pub fn new(title: impl Into<String>, data: &str, kind: &'static str, x: Axis, series: Vec<Axis>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            title: title.into(),
            data: data.to_string(),
            kind,
            x,
            series,
        }
    }
}
