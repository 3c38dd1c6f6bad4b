//! Run manifest: resolved config, phases, and a hashed inventory of every
//! file in the output directory.

use crate::config::ScenarioConfig;
use crate::error::CliError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMINGS_FILE: &str = "timings.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// Config with paths reduced to file names.
    pub config: ScenarioConfig,
    pub buildings_sha256: String,
    pub seed: u64,
    pub mesh_hash: Option<String>,
    /// Phases run into this directory, in order.
    pub phases: Vec<String>,
    /// Wall-clock seconds per phase live in this file. Its inventory hash
    /// covers the phase names only, so reruns compare equal.
    pub timings_file: String,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| CliError::io(dir, err)))
        .collect::<Result<_, _>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            walk(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

fn relative(root: &Path, p: &Path) -> String {
    let rel = p.strip_prefix(root).unwrap_or(p);
    rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

pub fn read_timings(dir: &Path) -> BTreeMap<String, f64> {
    std::fs::read(dir.join(TIMINGS_FILE))
        .ok()
        .and_then(|b| serde_json::from_slice(&b).ok())
        .unwrap_or_default()
}

pub fn read_manifest(dir: &Path) -> Option<RunManifest> {
    let bytes = std::fs::read(dir.join(MANIFEST_FILE)).ok()?;
    serde_json::from_slice(&bytes).ok()
}

/// Writes the timings file and then the manifest listing every file
/// currently under `dir`. `attributes` are merged into those kept from a
/// previous manifest for files that still exist.
pub fn write_manifest(
    dir: &Path,
    mut manifest: RunManifest,
    timings: &BTreeMap<String, f64>,
    attributes: &BTreeMap<String, BTreeMap<String, String>>,
) -> Result<RunManifest, CliError> {
    let previous = read_manifest(dir);
    let mut all_timings = read_timings(dir);
    all_timings.extend(timings.iter().map(|(k, v)| (k.clone(), *v)));
    let tpath = dir.join(TIMINGS_FILE);
    let text = serde_json::to_string_pretty(&all_timings).map_err(|e| CliError::Internal(e.to_string()))?;
    std::fs::write(&tpath, text).map_err(|e| CliError::io(&tpath, e))?;

    let mut kept: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    if let Some(prev) = &previous {
        for f in &prev.files {
            if !f.attributes.is_empty() {
                kept.insert(f.path.clone(), f.attributes.clone());
            }
        }
        let mut phases = prev.phases.clone();
        for p in manifest.phases.drain(..) {
            if !phases.contains(&p) {
                phases.push(p);
            }
        }
        manifest.phases = phases;
        if manifest.mesh_hash.is_none() {
            manifest.mesh_hash = prev.mesh_hash.clone();
        }
    }
    for (k, v) in attributes {
        kept.entry(k.clone()).or_default().extend(v.iter().map(|(a, b)| (a.clone(), b.clone())));
    }

    let mut paths = vec![];
    walk(dir, &mut paths)?;
    manifest.files = paths
        .iter()
        .filter(|p| relative(dir, p) != MANIFEST_FILE)
        .map(|p| {
            let path = relative(dir, p);
            let bytes = std::fs::read(p).map_err(|e| CliError::io(p, e))?;
            let mut attrs = kept.get(&path).cloned().unwrap_or_default();
            let sha256 = if path == TIMINGS_FILE {
                attrs.insert("volatile".into(), "wall-clock".into());
                let names: Vec<&String> = all_timings.keys().collect();
                sha256_hex(serde_json::to_string(&names).unwrap_or_default().as_bytes())
            } else {
                sha256_hex(&bytes)
            };
            Ok(FileEntry {
                path,
                sha256,
                bytes: if attrs.contains_key("volatile") { 0 } else { bytes.len() as u64 },
                attributes: attrs,
            })
        })
        .collect::<Result<_, CliError>>()?;
    let mpath = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Internal(e.to_string()))?;
    std::fs::write(&mpath, text).map_err(|e| CliError::io(&mpath, e))?;
    Ok(manifest)
}
