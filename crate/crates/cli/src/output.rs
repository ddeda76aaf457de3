//! Output plumbing: run metadata, atomic file writes, and the basis catalog.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Every output embeds the tool version, the fully resolved configuration,
/// and the seed, so a run can be reproduced from the file alone.
pub fn run_meta(command: &str, seed: u64, config: Value) -> Value {
    serde_json::json!({
        "tool": "csdac",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": seed,
        "config": config,
    })
}

/// Comment header carrying the metadata in CSV outputs.
pub fn csv_header(meta: &Value) -> String {
    format!(
        "# tool=csdac version={} command={} seed={}\n# config={}\n",
        env!("CARGO_PKG_VERSION"),
        meta["command"].as_str().unwrap_or(""),
        meta["seed"],
        meta["config"]
    )
}

/// Writes through a temporary file in the target directory and renames, so
/// interrupted runs never leave partial outputs behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
    }
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
        .context("creating temporary file")?;
    tmp.write_all(bytes).context("writing output")?;
    tmp.persist(path)
        .with_context(|| format!("renaming into place: {}", path.display()))?;
    Ok(())
}

pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).context("serializing output")?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

// ---------------------------------------------------------------------------
// Basis catalog
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub id: String,
    pub bit_depth: u32,
    pub basis_len: usize,
    pub seed: u64,
    pub weights: Vec<u32>,
    pub objective: f64,
}

/// JSON list of optimized bases keyed by `(N, L, seed)`. Re-running the same
/// configuration replaces its entry, keeping the file deterministic.
pub struct Catalog {
    path: PathBuf,
    entries: Vec<CatalogEntry>,
}

impl Catalog {
    pub fn default_path() -> PathBuf {
        std::env::var_os("CSDAC_CATALOG")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("csdac-catalog.json"))
    }

    pub fn open(path: PathBuf) -> Result<Self> {
        let entries = match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .with_context(|| format!("parsing catalog {}", path.display()))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e).with_context(|| format!("reading {}", path.display())),
        };
        Ok(Catalog { path, entries })
    }

    pub fn entry_id(bit_depth: u32, basis_len: usize, seed: u64) -> String {
        format!("n{bit_depth}-l{basis_len}-seed{seed}")
    }

    pub fn find(&self, id: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn upsert(&mut self, entry: CatalogEntry) {
        match self.entries.iter_mut().find(|e| e.id == entry.id) {
            Some(slot) => *slot = entry,
            None => self.entries.push(entry),
        }
        self.entries.sort_by(|a, b| a.id.cmp(&b.id));
    }

    pub fn save(&self) -> Result<()> {
        write_json_atomic(&self.path, &self.entries)
    }
}
