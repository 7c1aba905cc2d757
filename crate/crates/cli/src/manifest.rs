//! Per-stage provenance records written next to every artifact directory.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliResult;

/// Bumped whenever an artifact schema changes.
pub const ARTIFACT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub tool_version: String,
    pub artifact_version: u32,
    pub config_hash: String,
    pub seed: u64,
    /// Every file in the stage directory except the manifest, sorted.
    pub files: Vec<FileDigest>,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

impl Manifest {
    /// Digest the current contents of `dir`.
    pub fn collect(stage: &str, dir: &Path, config_hash: &str, seed: u64) -> CliResult<Self> {
        let mut names: Vec<String> = fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_file())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| n != MANIFEST_FILE)
            .collect();
        names.sort();
        let files = names
            .into_iter()
            .map(|n| {
                Ok(FileDigest {
                    sha256: sha256_file(&dir.join(&n))?,
                    path: n,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Self {
            stage: stage.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            artifact_version: ARTIFACT_VERSION,
            config_hash: config_hash.to_string(),
            seed,
            files,
        })
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digests_are_sorted_and_skip_manifest() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b.json"), "{}").unwrap();
        fs::write(dir.path().join("a.txt"), "abc").unwrap();
        let m = Manifest::collect("test", dir.path(), "h", 9).unwrap();
        m.write(dir.path()).unwrap();
        let again = Manifest::collect("test", dir.path(), "h", 9).unwrap();
        assert_eq!(m, again);
        assert_eq!(m.files[0].path, "a.txt");
        assert_eq!(
            m.files[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(m.files.len(), 2);
    }
}
