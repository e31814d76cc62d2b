//! Run configuration, config hashing and the JSON/CSV writers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::args::Command;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Everything needed to reproduce a run. The hash covers `command`,
/// `potential` and `seeds`; output location and thread count are excluded.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub command: Command,
    pub potential: PotentialRecord,
    pub seeds: Option<SeedRecord>,
    pub out: PathBuf,
    pub threads: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PotentialRecord {
    /// "builtin" or the path it was read from.
    pub source: String,
    pub text: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedRecord {
    pub source: String,
    pub seeds: Vec<(f64, f64)>,
}

impl RunConfig {
    pub fn hash(&self) -> String {
        let canonical = json!({
            "schema_version": self.schema_version,
            "command": self.command,
            "potential": self.potential.text,
            "seeds": self.seeds.as_ref().map(|s| &s.seeds),
        });
        let digest = Sha256::digest(canonical.to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

pub struct Writer {
    pub dir: PathBuf,
    pub hash: String,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl Writer {
    pub fn new(config: &RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(&config.out).map_err(|e| io_err(&config.out, e))?;
        let w = Writer {
            dir: config.out.clone(),
            hash: config.hash(),
        };
        let text = serde_json::to_string_pretty(config).map_err(|e| CliError::Io(e.to_string()))?;
        w.write_text("run_config.json", &(text + "\n"))?;
        Ok(w)
    }

    fn path(&self, rel: &str) -> Result<PathBuf, CliError> {
        let p = self.dir.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        Ok(p)
    }

    fn write_text(&self, rel: &str, text: &str) -> Result<(), CliError> {
        let p = self.path(rel)?;
        fs::write(&p, text).map_err(|e| io_err(&p, e))
    }

    /// Writes `payload` (an object) with the schema version and config hash
    /// prepended.
    pub fn json(&self, rel: &str, payload: Value) -> Result<(), CliError> {
        let mut obj = Map::new();
        obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
        obj.insert("config_hash".into(), json!(self.hash));
        match payload {
            Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("data".into(), other);
            }
        }
        let text = serde_json::to_string_pretty(&Value::Object(obj)).map_err(|e| CliError::Io(e.to_string()))?;
        self.write_text(rel, &(text + "\n"))
    }

    /// CSV with a `# schema_version=.. config_hash=..` first line.
    pub fn csv<R>(&self, rel: &str, header: &[&str], rows: R) -> Result<(), CliError>
    where
        R: IntoIterator<Item = Vec<String>>,
    {
        let p = self.path(rel)?;
        let mut f = fs::File::create(&p).map_err(|e| io_err(&p, e))?;
        writeln!(f, "# schema_version={SCHEMA_VERSION} config_hash={}", self.hash).map_err(|e| io_err(&p, e))?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(header).map_err(|e| io_err(&p, e))?;
        for row in rows {
            w.write_record(&row).map_err(|e| io_err(&p, e))?;
        }
        w.flush().map_err(|e| io_err(&p, e))
    }
}

/// Shortest round-trip representation (exponent form for tiny and huge
/// magnitudes), used for file names and CSV cells.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Reads seeds: one `z pz` or `z,pz` pair per line; blank lines and
/// `#` comments are skipped.
pub fn read_seeds(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut seeds = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parse = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
        match parts.as_slice() {
            [a, b] => match (parse(a), parse(b)) {
                (Some(z), Some(pz)) => seeds.push((z, pz)),
                _ => {
                    return Err(CliError::Config(format!(
                        "{}:{}: expected two numbers, got {line:?}",
                        path.display(),
                        n + 1
                    )))
                }
            },
            _ => {
                return Err(CliError::Config(format!(
                    "{}:{}: expected `z pz`, got {line:?}",
                    path.display(),
                    n + 1
                )))
            }
        }
    }
    Ok(seeds)
}
