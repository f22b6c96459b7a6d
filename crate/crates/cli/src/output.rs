//! Output directory bookkeeping, content hashes and the run manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Command;

/// A failed command, reported as one JSON line on stderr.
#[derive(Debug)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Failure {
        Failure { kind, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Failure {
        Failure::new("usage", message)
    }

    pub fn io(path: &Path, err: std::io::Error) -> Failure {
        Failure::new("io", format!("{}: {err}", path.display()))
    }

    pub fn json_line(&self) -> String {
        serde_json::json!({ "error": self.kind, "message": self.message }).to_string()
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl From<riskwave::Error> for Failure {
    fn from(e: riskwave::Error) -> Failure {
        Failure::new(e.kind(), e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Failure {
        Failure::new("serialization", e.to_string())
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to repeat a run and check that it reproduced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub seed: Option<u64>,
    /// Fully resolved configuration the command ran with.
    pub config: serde_json::Value,
    pub inputs: Vec<InputFile>,
    /// File name to sha256, for every file written except the manifest itself.
    pub outputs: BTreeMap<String, String>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Writes files into one directory and remembers their hashes.
pub struct OutDir {
    root: PathBuf,
    written: BTreeMap<String, String>,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<OutDir> {
        if root.as_os_str().is_empty() {
            return Err(Failure::usage("--out must name a directory"));
        }
        fs::create_dir_all(root).map_err(|e| Failure::io(root, e))?;
        Ok(OutDir { root: root.to_path_buf(), written: BTreeMap::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let mut parts = Path::new(name).components();
        let plain = matches!((parts.next(), parts.next()), (Some(Component::Normal(_)), None));
        if !plain || name == MANIFEST_NAME {
            return Err(Failure::new("internal", format!("refusing to write {name:?}")));
        }
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| Failure::io(&path, e))?;
        self.written.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn write_csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| Failure::new("io", format!("{name}: {e}"));
        w.write_record(header).map_err(fail)?;
        for row in rows {
            w.write_record(&row).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::new("io", format!("{name}: {e}")))?;
        self.write(name, &bytes)
    }

    pub fn finish(self, mut manifest: Manifest) -> CliResult<Manifest> {
        manifest.outputs = self.written;
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.root.join(MANIFEST_NAME);
        fs::write(&path, text).map_err(|e| Failure::io(&path, e))?;
        Ok(manifest)
    }
}

/// Shortest round-trip decimal form, so CSV output is exact and stable.
pub fn num(v: f64) -> String {
    v.to_string()
}
