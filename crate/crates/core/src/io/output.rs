use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::hash::sha256_hex;
use crate::error::{structural, Error, Result};

pub const OUTPUT_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";
pub const CONFIG_SNAPSHOT: &str = "config.json";

/// JSON output envelope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub format_version: u32,
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub payload: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub config_hash: String,
    pub seed: u64,
    /// File name to SHA-256 of its bytes.
    pub files: BTreeMap<String, String>,
}

/// Output directory bound to one configuration.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    manifest: Manifest,
}

fn stamp_line(hash: &str, seed: u64) -> String {
    format!("# format_version={OUTPUT_VERSION} config_hash={hash} seed={seed}\n")
}

impl OutputDir {
    /// Opens `root` for `config`, writing the config snapshot. An existing
    /// manifest must belong to the same configuration.
    pub fn create(root: &Path, config: &RunConfig) -> Result<Self> {
        fs::create_dir_all(root)?;
        let hash = config.hash()?;
        let mut manifest = Manifest { format_version: OUTPUT_VERSION, config_hash: hash.clone(), seed: config.seed, files: BTreeMap::new() };
        let path = root.join(MANIFEST);
        if path.exists() {
            let old: Manifest = serde_json::from_str(&fs::read_to_string(&path)?)?;
            if old.config_hash != hash {
                return Err(Error::HashMismatch { expected: hash, found: old.config_hash });
            }
            manifest.files = old.files;
        }
        let mut dir = Self { root: root.to_path_buf(), manifest };
        let snapshot = serde_json::to_string_pretty(&config.canonical())? + "\n";
        dir.write_bytes(CONFIG_SNAPSHOT, snapshot.as_bytes())?;
        Ok(dir)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config_hash(&self) -> &str {
        &self.manifest.config_hash
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, bytes)?;
        self.manifest.files.insert(name.to_string(), sha256_hex(bytes));
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, kind: &str, payload: &T) -> Result<PathBuf> {
        let doc = Document {
            format_version: OUTPUT_VERSION,
            kind: kind.to_string(),
            config_hash: self.manifest.config_hash.clone(),
            seed: self.manifest.seed,
            payload,
        };
        let text = serde_json::to_string_pretty(&doc)? + "\n";
        self.write_bytes(name, text.as_bytes())
    }

    /// CSV file whose first line is a `#` stamp.
    pub fn write_csv(&mut self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<PathBuf> {
        let mut buf = stamp_line(&self.manifest.config_hash, self.manifest.seed).into_bytes();
        body(&mut buf)?;
        self.write_bytes(name, &buf)
    }

    pub fn finish(self) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.manifest)? + "\n";
        fs::write(self.root.join(MANIFEST), text)?;
        Ok(())
    }
}

pub fn read_document<T: DeserializeOwned>(path: &Path) -> Result<Document<T>> {
    let doc: Document<T> = serde_json::from_str(&fs::read_to_string(path)?)?;
    if doc.format_version != OUTPUT_VERSION {
        return Err(structural(format!("unsupported output version {} in {}", doc.format_version, path.display())));
    }
    Ok(doc)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checked: usize,
    pub problems: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Re-derives the config hash from the snapshot and every file digest from
/// the bytes on disk, and checks the stamp embedded in each file.
pub fn verify_outputs(root: &Path) -> Result<VerifyReport> {
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(root.join(MANIFEST))?)?;
    let mut report = VerifyReport::default();
    match fs::read_to_string(root.join(CONFIG_SNAPSHOT)).map_err(Error::from).and_then(|s| {
        serde_json::from_str::<RunConfig>(&s).map_err(Error::from)
    }) {
        Ok(cfg) => {
            let h = cfg.hash()?;
            if h != manifest.config_hash {
                report.problems.push(format!("{CONFIG_SNAPSHOT}: config hash {h} differs from manifest {}", manifest.config_hash));
            }
        }
        Err(e) => report.problems.push(format!("{CONFIG_SNAPSHOT}: {e}")),
    }
    for (name, digest) in &manifest.files {
        report.checked += 1;
        let bytes = match fs::read(root.join(name)) {
            Ok(b) => b,
            Err(e) => {
                report.problems.push(format!("{name}: {e}"));
                continue;
            }
        };
        let found = sha256_hex(&bytes);
        if &found != digest {
            report.problems.push(format!("{name}: digest {found} differs from manifest {digest}"));
            continue;
        }
        if name == CONFIG_SNAPSHOT {
            continue;
        }
        let text = String::from_utf8_lossy(&bytes);
        let stamped = if name.ends_with(".csv") {
            text.lines().next() == Some(stamp_line(&manifest.config_hash, manifest.seed).trim_end())
        } else {
            serde_json::from_str::<Document<serde_json::Value>>(&text)
                .is_ok_and(|d| d.config_hash == manifest.config_hash && d.seed == manifest.seed && d.format_version == OUTPUT_VERSION)
        };
        if !stamped {
            report.problems.push(format!("{name}: missing or foreign stamp"));
        }
    }
    Ok(report)
}
