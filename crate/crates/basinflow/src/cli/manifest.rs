//! Run manifests: a flat `key = value` record of what ran, with what
//! configuration, and a SHA-256 inventory of every artifact in the output
//! directory. Identical configs must yield identical artifact hashes; the
//! manifest is how that claim gets audited.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub wall_clock_seconds: f64,
    pub exit_code: i32,
    /// Stage name → "ok" or "error: ...", in execution order.
    pub stages: Vec<(String, String)>,
    /// Resolved config echo (`config.*` keys).
    pub config: BTreeMap<String, String>,
    /// Headline numbers a reader wants without opening the CSVs.
    pub results: BTreeMap<String, String>,
    /// file name → SHA-256 hex digest, for every file in the output dir.
    pub inventory: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: BTreeMap<String, String>) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: 0.0,
            exit_code: 0,
            stages: Vec::new(),
            config,
            results: BTreeMap::new(),
            inventory: BTreeMap::new(),
        }
    }

    pub fn stage_ok(&mut self, name: &str) {
        self.stages.push((name.to_string(), "ok".to_string()));
    }

    pub fn stage_error(&mut self, name: &str, msg: &str) {
        // Keep the manifest single-line-per-key: flatten any newlines.
        let flat = msg.replace('\n', " | ");
        self.stages.push((name.to_string(), format!("error: {flat}")));
    }

    pub fn record(&mut self, key: &str, value: impl std::fmt::Display) {
        self.results.insert(key.to_string(), value.to_string());
    }

    /// Hash every regular file in `dir` (excluding the manifest itself,
    /// which cannot contain its own digest) into the inventory.
    pub fn take_inventory(&mut self, dir: &Path) -> std::io::Result<()> {
        self.inventory.clear();
        let mut names: Vec<PathBuf> = Vec::new();
        for entry in std::fs::read_dir(dir)? {
            let entry = entry?;
            if entry.file_type()?.is_file() {
                names.push(entry.path());
            }
        }
        names.sort();
        for path in names {
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            if name == MANIFEST_FILE {
                continue;
            }
            let bytes = std::fs::read(&path)?;
            let digest = Sha256::digest(&bytes);
            let mut hex = String::with_capacity(64);
            for b in digest {
                let _ = write!(hex, "{b:02x}");
            }
            self.inventory.insert(name, hex);
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "subcommand = {}", self.subcommand);
        let _ = writeln!(s, "version = {}", self.version);
        let _ = writeln!(s, "wall_clock_seconds = {:.3}", self.wall_clock_seconds);
        let _ = writeln!(s, "exit_code = {}", self.exit_code);
        for (name, status) in &self.stages {
            let _ = writeln!(s, "stage.{name} = {status}");
        }
        for (k, v) in &self.config {
            let _ = writeln!(s, "{k} = {v}");
        }
        for (k, v) in &self.results {
            let _ = writeln!(s, "result.{k} = {v}");
        }
        for (name, hash) in &self.inventory {
            let _ = writeln!(s, "file.{name}.sha256 = {hash}");
        }
        let _ = writeln!(s, "manifest_self = {MANIFEST_FILE} (not hashed)");
        s
    }

    /// Inventory the directory, then write `manifest.txt` into it.
    pub fn finalize(&mut self, dir: &Path) -> std::io::Result<()> {
        self.take_inventory(dir)?;
        std::fs::write(dir.join(MANIFEST_FILE), self.to_text())
    }
}
