//! Campaign manifest: crash-safe output directories.
//!
//! A campaign writes `manifest.json` with status "running" before any
//! output, then flips it to "complete" last. On startup, any manifest that
//! is absent, still "running", or carries a different config digest means
//! the listed outputs are stale; they are removed before the run starts.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use proctensor_core::haar::PRNG_ALGORITHM;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct Manifest {
    pub schema_version: u32,
    pub campaign: String,
    /// "running" while outputs are being written, "complete" afterwards.
    pub status: String,
    /// Digest of the resolved config; a mismatch invalidates old outputs.
    pub config_digest: String,
    pub prng_algorithm: String,
    /// Output files this campaign owns inside its directory.
    pub outputs: Vec<String>,
}

impl Manifest {
    fn new(campaign: &str, config_digest: &str, outputs: &[String]) -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            campaign: campaign.to_string(),
            status: "running".to_string(),
            config_digest: config_digest.to_string(),
            prng_algorithm: PRNG_ALGORITHM.to_string(),
            outputs: outputs.to_vec(),
        }
    }
}

fn read_manifest(dir: &Path) -> Option<Manifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE)).ok()?;
    serde_json::from_str(&text).ok()
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).context("serialize manifest")?;
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, text).with_context(|| format!("write {}", path.display()))?;
    Ok(())
}

/// Clears stale outputs and stamps the directory as "running".
///
/// A prior manifest marked "complete" with the same digest leaves old files
/// in place only long enough for this run to overwrite them; anything else
/// (missing manifest, crashed run, changed config) removes every file the
/// old manifest listed plus the files this run is about to produce.
pub fn prepare(dir: &Path, campaign: &str, config_digest: &str, outputs: &[String]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("create {}", dir.display()))?;

    let prior = read_manifest(dir);
    let clean = matches!(
        &prior,
        Some(m) if m.status == "complete" && m.config_digest == config_digest
    );
    if !clean {
        let mut stale: Vec<String> = outputs.to_vec();
        if let Some(m) = &prior {
            stale.extend(m.outputs.iter().cloned());
        }
        stale.sort();
        stale.dedup();
        for name in stale {
            let path = dir.join(&name);
            if path.is_file() {
                fs::remove_file(&path).with_context(|| format!("remove {}", path.display()))?;
            }
        }
    }

    write_manifest(dir, &Manifest::new(campaign, config_digest, outputs))
}

/// Marks the directory's outputs as complete.
pub fn finalize(dir: &Path, campaign: &str, config_digest: &str, outputs: &[String]) -> Result<()> {
    let mut manifest = Manifest::new(campaign, config_digest, outputs);
    manifest.status = "complete".to_string();
    write_manifest(dir, &manifest)
}
