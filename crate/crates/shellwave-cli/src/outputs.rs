//! Artifact plumbing: atomic writes, content hashing, and the run
//! manifest that makes every run reconstructible after the fact.

use crate::config::RunConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};
use shellwave::{Result, ShellwaveError};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// One file recorded in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    /// Path relative to the output directory (artifacts) or as given
    /// in the config (inputs).
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Tool identification block of the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
    pub profile: &'static str,
    pub lp_basis_default: &'static str,
}

impl ToolInfo {
    pub fn current() -> ToolInfo {
        ToolInfo {
            name: "shellwave",
            version: env!("CARGO_PKG_VERSION"),
            profile: if cfg!(debug_assertions) {
                "debug"
            } else {
                "release"
            },
            lp_basis_default: "smooth",
        }
    }
}

/// Manifest of one run: the tool, the normalized config snapshot, the
/// defaults that were filled in, the inputs read, and every artifact
/// written, each with its content hash.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: ToolInfo,
    pub command: String,
    pub config: RunConfig,
    pub defaulted: Vec<String>,
    pub threads: String,
    pub inputs: Vec<Artifact>,
    pub artifacts: Vec<Artifact>,
}

/// Collects artifacts while a command runs and writes the manifest
/// last, so the manifest never lists a file that is not fully on disk.
pub struct OutputDir {
    root: PathBuf,
    inputs: Vec<Artifact>,
    artifacts: Vec<Artifact>,
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        write!(s, "{b:02x}").unwrap();
    }
    s
}

/// Writes bytes via a temporary sibling file and a rename, so a crash
/// mid-write never leaves a partial file under the final name.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| ShellwaveError::Io(format!("{} has no file name", path.display())))?;
    let mut tmp_name = file_name.to_owned();
    tmp_name.push(".part");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

impl OutputDir {
    /// Creates the directory if needed.
    pub fn create(root: &Path) -> Result<OutputDir> {
        fs::create_dir_all(root)?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            inputs: Vec::new(),
            artifacts: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes one artifact atomically and records its hash.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        write_atomic(&path, bytes)?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            bytes: bytes.len(),
            sha256: hex_digest(bytes),
        });
        Ok(path)
    }

    /// Records a file written by a helper that manages its own bytes
    /// (for example the field writer), hashing it from disk.
    pub fn record_written(&mut self, name: &str) -> Result<()> {
        let bytes = fs::read(self.root.join(name))?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            bytes: bytes.len(),
            sha256: hex_digest(&bytes),
        });
        Ok(())
    }

    /// Records an input file by path as given in the config.
    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path)?;
        self.inputs.push(Artifact {
            path: path.display().to_string(),
            bytes: bytes.len(),
            sha256: hex_digest(&bytes),
        });
        Ok(())
    }

    /// Writes `manifest.json` and consumes the collector.
    pub fn finish(
        self,
        config: &RunConfig,
        defaulted: &[String],
        threads: Option<usize>,
    ) -> Result<()> {
        let manifest = Manifest {
            tool: ToolInfo::current(),
            command: config.command.to_string(),
            config: config.clone(),
            defaulted: defaulted.to_vec(),
            threads: threads.map_or_else(|| "auto".to_string(), |t| t.to_string()),
            inputs: self.inputs,
            artifacts: self.artifacts,
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        write_atomic(&self.root.join("manifest.json"), text.as_bytes())
    }
}

/// Fixed-precision scientific float used in every CSV cell, so equal
/// runs produce byte-identical files.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.17e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CommandKind;

    #[test]
    fn manifest_lists_hashes_for_every_artifact() {
        let root = std::env::temp_dir().join("shellwave-cli-outputs");
        let _ = fs::remove_dir_all(&root);
        let mut out = OutputDir::create(&root).unwrap();
        out.write("a.csv", b"x,y\n1,2\n").unwrap();
        out.write("nested/b.json", b"{}").unwrap();
        let config = RunConfig::bare(CommandKind::GridInfo);
        out.finish(&config, &["seed = 0".into()], Some(2)).unwrap();

        let text = fs::read_to_string(root.join("manifest.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["command"], "grid-info");
        assert_eq!(v["threads"], "2");
        assert_eq!(v["artifacts"].as_array().unwrap().len(), 2);
        assert_eq!(v["artifacts"][0]["path"], "a.csv");
        assert_eq!(
            v["artifacts"][0]["sha256"].as_str().unwrap().len(),
            64,
            "hash must be hex sha256"
        );
        assert_eq!(v["defaulted"][0], "seed = 0");
        assert_eq!(v["tool"]["lp_basis_default"], "smooth");
        fs::remove_dir_all(&root).unwrap();
    }

    #[test]
    fn atomic_writes_leave_no_partial_files() {
        let root = std::env::temp_dir().join("shellwave-cli-atomic");
        let _ = fs::remove_dir_all(&root);
        let mut out = OutputDir::create(&root).unwrap();
        out.write("data.csv", b"payload").unwrap();
        let names: Vec<String> = fs::read_dir(&root)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        assert_eq!(names, vec!["data.csv"]);
        fs::remove_dir_all(&root).unwrap();
    }

    #[test]
    fn float_format_is_stable() {
        assert_eq!(fmt_f64(1.5), "1.50000000000000000e0");
        assert_eq!(fmt_f64(-0.25), "-2.50000000000000000e-1");
        assert_eq!(fmt_f64(0.0), "0.00000000000000000e0");
    }
}
