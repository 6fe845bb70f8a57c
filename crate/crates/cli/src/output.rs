//! Result persistence: atomic file writes, schema-tagged CSV, JSON and the
//! run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedEntry {
    pub label: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub status: String,
    pub error: Option<String>,
    pub kind: String,
    pub config_sha256: String,
    pub code_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub seeds: Vec<SeedEntry>,
    pub files: Vec<FileEntry>,
}

/// Output directory that remembers every file written through it.
pub struct OutputDir {
    pub dir: PathBuf,
    pub files: Vec<FileEntry>,
    pub seeds: Vec<SeedEntry>,
    pub warnings: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutputDir { dir: dir.to_path_buf(), files: Vec::new(), seeds: Vec::new(), warnings: Vec::new() })
    }

    /// Writes `name` through a temporary file and a rename.
    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let tmp = self.dir.join(format!(".{name}.tmp"));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, self.dir.join(name))?;
        self.files.retain(|e| e.name != name);
        self.files.push(FileEntry { name: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(std::io::Error::other)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// CSV whose first line is `# schema: acg.<schema>.v1`.
    pub fn write_csv(&mut self, name: &str, schema: &str, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
        let mut bytes = format!("# schema: acg.{schema}.v1\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut bytes);
            w.write_record(header).map_err(std::io::Error::other)?;
            for r in rows {
                w.write_record(r).map_err(std::io::Error::other)?;
            }
            w.flush()?;
        }
        self.write_bytes(name, &bytes)
    }

    pub fn seed(&mut self, label: impl Into<String>, seed: u64) {
        self.seeds.push(SeedEntry { label: label.into(), seed });
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }

    /// Writes the manifest last; it lists every other file.
    pub fn finish(&mut self, kind: &str, config_text: &str, started: u64, error: Option<String>) -> std::io::Result<()> {
        let manifest = RunManifest {
            status: if error.is_none() { "ok".into() } else { "FAILED".into() },
            error,
            kind: kind.to_string(),
            config_sha256: sha256_hex(config_text.as_bytes()),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: started,
            finished_unix: unix_now(),
            seeds: self.seeds.clone(),
            files: self.files.clone(),
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(std::io::Error::other)?;
        bytes.push(b'\n');
        let tmp = self.dir.join(format!(".{MANIFEST}.tmp"));
        fs::write(&tmp, &bytes)?;
        fs::rename(tmp, self.dir.join(MANIFEST))
    }
}

/// Shortest round-trip decimal form, so equal values give equal bytes.
pub fn num(x: f64) -> String {
    format!("{x}")
}
