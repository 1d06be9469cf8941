//! Run manifest: config snapshot, seeds, file digests and stage timings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fracflow_core::table::SCHEMA_VERSION;

use crate::config::RunConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub config: RunConfig,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<FileDigest>,
    /// Paths relative to the output directory, sorted.
    pub outputs: Vec<FileDigest>,
    /// Wall-clock seconds per stage. The only field that varies between
    /// identical runs.
    pub timings: BTreeMap<String, f64>,
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    for e in std::fs::read_dir(dir)? {
        let p = e?.path();
        if p.is_dir() {
            walk(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

pub struct ManifestBuilder {
    manifest: RunManifest,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        ManifestBuilder {
            manifest: RunManifest {
                schema_version: SCHEMA_VERSION,
                command: command.to_string(),
                config: config.clone(),
                seeds: BTreeMap::new(),
                inputs: Vec::new(),
                outputs: Vec::new(),
                timings: BTreeMap::new(),
            },
            started: Instant::now(),
        }
    }

    pub fn seed(&mut self, stage: &str, seed: u64) {
        self.manifest.seeds.insert(stage.to_string(), seed);
    }

    pub fn input(&mut self, path: &Path) -> anyhow::Result<()> {
        let files = if path.is_dir() {
            let mut v = Vec::new();
            walk(path, &mut v)?;
            v.sort();
            v
        } else {
            vec![path.to_path_buf()]
        };
        for f in files {
            let sha256 = sha256_file(&f)?;
            self.manifest.inputs.push(FileDigest { path: f.display().to_string(), sha256 });
        }
        Ok(())
    }

    /// Time a stage and record it under `name`.
    pub fn timed<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.manifest.timings.insert(name.to_string(), t0.elapsed().as_secs_f64());
        out
    }

    /// Digest every file under `out_dir` (except an old manifest) and write
    /// the manifest there. Inputs produced inside `out_dir` by an earlier
    /// stage of the same run are listed as outputs only.
    pub fn finish(mut self, out_dir: &Path) -> anyhow::Result<RunManifest> {
        self.manifest.inputs.retain(|d| !Path::new(&d.path).starts_with(out_dir));
        self.manifest.inputs.sort_by(|a, b| a.path.cmp(&b.path));
        self.manifest.inputs.dedup();
        let mut files = Vec::new();
        walk(out_dir, &mut files)?;
        let manifest_path = out_dir.join(MANIFEST_FILE);
        let mut outputs = Vec::new();
        for f in files.into_iter().filter(|f| f != &manifest_path) {
            let rel = f.strip_prefix(out_dir).unwrap_or(&f);
            let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            outputs.push(FileDigest { path: rel, sha256: sha256_file(&f)? });
        }
        outputs.sort_by(|a, b| a.path.cmp(&b.path));
        self.manifest.outputs = outputs;
        self.manifest.timings.insert("total".into(), self.started.elapsed().as_secs_f64());
        std::fs::write(&manifest_path, serde_json::to_string_pretty(&self.manifest)? + "\n")?;
        Ok(self.manifest)
    }
}
