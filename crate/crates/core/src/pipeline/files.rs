use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::EncodedTracing;
use crate::dataset::Split;
use crate::error::{Error, Result};
use crate::pipeline::RunConfig;

pub const TOOL_NAME: &str = "hwstyle";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One preprocessed sample: content codes without the EOS frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodedRecord {
    pub id: String,
    pub writer_id: String,
    pub letter: String,
    pub split: Split,
    pub directions: Vec<u8>,
    pub speeds: Vec<u8>,
}

impl EncodedRecord {
    pub fn tracing(&self) -> Result<EncodedTracing> {
        EncodedTracing::from_codes(&self.directions, &self.speeds)
    }
}

/// One generated tracing and what produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratedRecord {
    /// Sample the tracing is compared against.
    pub reference: String,
    pub bias_kind: String,
    pub bias_key: String,
    pub letter: String,
    pub writer_id: String,
    /// Seed of the sampling stream: `SeededRng::new(seed)` replays it.
    pub seed: u64,
    pub temperature: f64,
    pub directions: Vec<u8>,
    pub speeds: Vec<u8>,
}

impl GeneratedRecord {
    pub fn tracing(&self) -> Result<EncodedTracing> {
        EncodedTracing::from_codes(&self.directions, &self.speeds)
    }
}

/// Written next to every stage's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunProvenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// Resolved configuration as TOML.
    pub config: String,
    /// Paths relative to the run directory, with sha256 digests.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| Error::io(path, e))?))
}

pub fn read_jsonl<R: DeserializeOwned>(path: &Path) -> Result<Vec<R>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

pub fn to_jsonl<R: Serialize>(records: &[R]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("record serializes");
        out.push(b'\n');
    }
    out
}

pub fn to_json_pretty<R: Serialize>(value: &R) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("value serializes");
    v.push(b'\n');
    v
}

fn relative(root: &Path, path: &Path) -> String {
    path.strip_prefix(root).unwrap_or(path).to_string_lossy().replace('\\', "/")
}

/// Location of a stage's provenance file: `<dir>/<name>.provenance.json`.
fn provenance_path(root: &Path, dir: &str, name: &str) -> PathBuf {
    root.join(dir).join(format!("{name}.provenance.json"))
}

/// Collects the outputs of one command. Files written through it are
/// removed again unless [`StageOutput::commit`] runs, so a failed command
/// leaves no partial results behind.
pub struct StageOutput {
    root: PathBuf,
    dir: String,
    name: String,
    command: String,
    config: RunConfig,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    written: Vec<PathBuf>,
    committed: bool,
}

impl StageOutput {
    pub fn begin(config: &RunConfig, command: &str, dir: &str, name: &str) -> Result<Self> {
        let root = config.out_dir.clone();
        let stage_dir = root.join(dir);
        fs::create_dir_all(&stage_dir).map_err(|e| Error::io(&stage_dir, e))?;
        // an interrupted rerun must not leave the old seal on new files
        let seal = provenance_path(&root, dir, name);
        if seal.exists() {
            fs::remove_file(&seal).map_err(|e| Error::io(&seal, e))?;
        }
        let resolved = root.join("config.toml");
        write_atomic(&resolved, config.to_toml().as_bytes())?;
        Ok(Self {
            root,
            dir: dir.into(),
            name: name.into(),
            command: command.into(),
            config: config.clone(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            written: Vec::new(),
            committed: false,
        })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.root.join(&self.dir).join(file)
    }

    /// Checks the provenance of an upstream stage and records its outputs
    /// as inputs of this one.
    pub fn require(&mut self, dir: &str, name: &str) -> Result<RunProvenance> {
        let prov = verify_stage(&self.config, dir, name)?;
        self.inputs.extend(prov.outputs.iter().map(|(k, v)| (k.clone(), v.clone())));
        Ok(prov)
    }

    /// Records a file outside the run directory as an input.
    pub fn external_input(&mut self, path: &Path) -> Result<()> {
        let digest = file_digest(path)?;
        self.inputs.insert(path.to_string_lossy().into_owned(), digest);
        Ok(())
    }

    pub fn write(&mut self, file: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(file);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        self.written.push(path.clone());
        write_atomic(&path, bytes)?;
        self.outputs.insert(relative(&self.root, &path), sha256_hex(bytes));
        Ok(path)
    }

    pub fn commit(mut self) -> Result<RunProvenance> {
        let prov = RunProvenance {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            command: self.command.clone(),
            seed: self.config.seed,
            config: self.config.to_toml(),
            inputs: std::mem::take(&mut self.inputs),
            outputs: std::mem::take(&mut self.outputs),
        };
        write_atomic(&provenance_path(&self.root, &self.dir, &self.name), &to_json_pretty(&prov))?;
        self.committed = true;
        Ok(prov)
    }
}

impl Drop for StageOutput {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for path in &self.written {
            if fs::remove_file(path).is_ok() {
                log::warn!("removed partial output {}", path.display());
            }
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Loads a stage's provenance and checks tool version, seed and the
/// digests of its outputs.
pub fn verify_stage(config: &RunConfig, dir: &str, name: &str) -> Result<RunProvenance> {
    let path = provenance_path(&config.out_dir, dir, name);
    if !path.exists() {
        return Err(Error::Config(format!(
            "missing input stage {dir}/{name} (no {}); run the earlier command first",
            path.display()
        )));
    }
    let text = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let prov: RunProvenance =
        serde_json::from_slice(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if prov.tool != TOOL_NAME || prov.version != TOOL_VERSION {
        return Err(Error::Config(format!(
            "{dir}/{name} was produced by {} {}, this is {TOOL_NAME} {TOOL_VERSION}",
            prov.tool, prov.version
        )));
    }
    if prov.seed != config.seed {
        return Err(Error::Config(format!(
            "{dir}/{name} was produced with seed {}, the run uses seed {}",
            prov.seed, config.seed
        )));
    }
    for (file, digest) in &prov.outputs {
        let actual = file_digest(&config.out_dir.join(file))?;
        if &actual != digest {
            return Err(Error::Config(format!("{file} changed since {dir}/{name} wrote it")));
        }
    }
    Ok(prov)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dir: &Path) -> RunConfig {
        RunConfig {
            out_dir: dir.to_path_buf(),
            ..RunConfig::default()
        }
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn uncommitted_outputs_are_removed() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = config(tmp.path());
        let path = {
            let mut s = StageOutput::begin(&cfg, "test", "x", "x").unwrap();
            s.write("a.txt", b"hello").unwrap()
        };
        assert!(!path.exists());
        assert!(verify_stage(&cfg, "x", "x").is_err());
    }

    #[test]
    fn committed_stage_verifies_and_detects_edits() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = config(tmp.path());
        let mut s = StageOutput::begin(&cfg, "test", "x", "x").unwrap();
        let path = s.write("a.txt", b"hello").unwrap();
        s.commit().unwrap();
        let prov = verify_stage(&cfg, "x", "x").unwrap();
        assert_eq!(prov.outputs["x/a.txt"], sha256_hex(b"hello"));
        let other_seed = RunConfig { seed: 99, ..cfg.clone() };
        assert!(verify_stage(&other_seed, "x", "x").is_err());
        fs::write(&path, b"edited").unwrap();
        assert!(verify_stage(&cfg, "x", "x").is_err());
    }
}
