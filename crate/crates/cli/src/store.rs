//! Append-only campaign store: `<store>/campaigns.jsonl` plus
//! `<store>/artifacts/<campaign_id>/`.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

pub const LEDGER: &str = "campaigns.jsonl";
const LOCK: &str = ".lock";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Complete,
    Partial,
    Failed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Complete => 0,
            Status::Partial => 2,
            Status::Failed => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub name: String,
    /// Relative to the store root.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignRecord {
    pub campaign_id: String,
    pub command: String,
    pub subcommand: String,
    pub config: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub status: Status,
    pub started: String,
    pub finished: String,
    pub artifacts: Vec<Artifact>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = parent_dir(path);
    let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("cannot write {}", path.display()))?;
    tmp.write_all(bytes).with_context(|| format!("cannot write {}", path.display()))?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| anyhow!("cannot write {}: {}", path.display(), e.error))?;
    Ok(())
}

/// Fails early when nothing can be created next to `path`.
pub fn ensure_writable(path: &Path) -> Result<()> {
    let dir = parent_dir(path);
    NamedTempFile::new_in(dir).map(drop).with_context(|| format!("output path {} is not writable", path.display()))
}

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// An open store; holds an exclusive lock on the directory until dropped.
pub struct Store {
    root: PathBuf,
    _lock: File,
}

impl Store {
    pub fn open(root: &Path) -> Result<Store> {
        fs::create_dir_all(root.join("artifacts"))
            .with_context(|| format!("cannot create store at {}", root.display()))?;
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(root.join(LOCK))
            .with_context(|| format!("cannot open lock file in {}", root.display()))?;
        if lock.try_lock().is_err() {
            bail!("store {} is locked by another spanlab process", root.display());
        }
        Ok(Store { root: root.to_path_buf(), _lock: lock })
    }

    pub fn campaigns(&self) -> Result<Vec<CampaignRecord>> {
        let path = self.root.join(LEDGER);
        if !path.exists() {
            return Ok(Vec::new());
        }
        let f = File::open(&path)?;
        let mut out = Vec::new();
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(
                serde_json::from_str(&line)
                    .with_context(|| format!("{} line {} is not a campaign record", path.display(), i + 1))?,
            );
        }
        Ok(out)
    }

    pub fn next_id(&self, subcommand: &str) -> Result<String> {
        let n = self.campaigns()?.len() + 1;
        let mut id = format!("c{n:04}-{subcommand}");
        let mut k = 1;
        while self.root.join("artifacts").join(&id).exists() {
            k += 1;
            id = format!("c{n:04}-{subcommand}-{k}");
        }
        Ok(id)
    }

    pub fn artifact_path(&self, id: &str, name: &str) -> PathBuf {
        self.root.join("artifacts").join(id).join(name)
    }

    pub fn write_artifact(&self, id: &str, name: &str, bytes: &[u8]) -> Result<Artifact> {
        let path = self.artifact_path(id, name);
        fs::create_dir_all(path.parent().unwrap())?;
        write_atomic(&path, bytes)?;
        Ok(Artifact {
            name: name.to_string(),
            path: format!("artifacts/{id}/{name}"),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        })
    }

    pub fn append(&self, rec: &CampaignRecord) -> Result<()> {
        let mut f = OpenOptions::new().create(true).append(true).open(self.root.join(LEDGER))?;
        let mut line = serde_json::to_string(rec)?;
        line.push('\n');
        f.write_all(line.as_bytes())?;
        f.sync_all()?;
        Ok(())
    }

    pub fn find(&self, id: &str) -> Result<CampaignRecord> {
        self.campaigns()?
            .into_iter()
            .find(|r| r.campaign_id == id)
            .ok_or_else(|| anyhow!("no campaign {id:?} in {}", self.root.display()))
    }

    /// Reads an artifact back and checks it against its recorded checksum.
    pub fn read_verified(&self, a: &Artifact) -> Result<Vec<u8>> {
        let path = self.root.join(&a.path);
        let bytes = fs::read(&path).with_context(|| format!("cannot read artifact {}", path.display()))?;
        let got = sha256_hex(&bytes);
        if got != a.sha256 {
            bail!("artifact {} fails its checksum (recorded {}, found {got})", path.display(), a.sha256);
        }
        Ok(bytes)
    }
}
