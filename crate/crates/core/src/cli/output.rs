//! Output files: CSV tables behind a `#` manifest header, and JSON.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::Result;

/// Provenance header embedded in every output file.
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub arguments: Vec<String>,
    pub instance_digest: Option<String>,
    pub seed: u64,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str, arguments: &[String], instance_digest: Option<String>, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            arguments: arguments.to_vec(),
            instance_digest,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        }
    }

    pub fn lines(&self) -> Vec<String> {
        vec![
            format!("command: {}", self.command),
            format!("arguments: {}", self.arguments.join(" ")),
            format!("instance_digest: {}", self.instance_digest.as_deref().unwrap_or("none")),
            format!("seed: {}", self.seed),
            format!("tool_version: {}", self.tool_version),
            format!("timestamp: {}", self.timestamp),
        ]
    }
}

/// A CSV table with its `#` comment lines (without the `# ` prefix).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// 15 significant digits in scientific notation; parses back to the same
/// text.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.14e}")
}

pub fn fmt_flag(b: bool) -> String {
    (b as u8).to_string()
}

impl Table {
    pub fn new(manifest: &RunManifest, header: &[&str]) -> Self {
        Table { comments: manifest.lines(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        out.push_str(&String::from_utf8_lossy(&bytes));
        Ok(out)
    }

    /// The table without its comment lines.
    pub fn body(&self) -> Result<String> {
        Table { comments: Vec::new(), ..self.clone() }.to_csv_string()
    }

    pub fn parse(text: &str) -> Result<Table> {
        let mut comments = Vec::new();
        let mut body = String::new();
        for line in text.lines() {
            if let Some(c) = line.strip_prefix('#') {
                comments.push(c.strip_prefix(' ').unwrap_or(c).to_string());
            } else {
                body.push_str(line);
                body.push('\n');
            }
        }
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r.records().map(|rec| rec.map(|x| x.iter().map(str::to_string).collect())).collect::<std::result::Result<_, _>>()?;
        Ok(Table { comments, header, rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Table> {
        Table::parse(&fs::read_to_string(path)?)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].parse().unwrap_or(f64::NAN)).collect())
    }
}

/// JSON value with the manifest under `"manifest"`.
pub fn write_json(path: &Path, manifest: &RunManifest, payload: serde_json::Value) -> Result<()> {
    let doc = serde_json::json!({ "manifest": manifest.lines(), "result": payload });
    fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(())
}
