//! Content-addressed stage cache.
//!
//! A stage run lives in `<cache>/<stage>/<scope>/<key>/`. The key hashes the
//! stage version, its parameters and the checksums of its upstream runs.
//! `artifacts.json` is written last and lists every file with its SHA-256;
//! a directory without it is an interrupted run and gets recomputed.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const INDEX_FILE: &str = "artifacts.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageIndex {
    pub stage: String,
    pub scope: String,
    pub key: String,
    pub version: u32,
    pub params: serde_json::Value,
    pub upstream: Vec<String>,
    pub artifacts: Vec<Artifact>,
}

/// A completed stage run.
#[derive(Debug, Clone)]
pub struct StageRun {
    pub dir: PathBuf,
    pub index: StageIndex,
    /// Checksum of the index file, fed to downstream keys.
    pub checksum: String,
    pub cache_hit: bool,
}

impl StageRun {
    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    pub fn read(&self, file: &str) -> anyhow::Result<String> {
        let p = self.path(file);
        fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))
    }

    pub fn read_json<T: serde::de::DeserializeOwned>(&self, file: &str) -> anyhow::Result<T> {
        let text = self.read(file)?;
        serde_json::from_str(&text).with_context(|| format!("parsing {file}"))
    }
}

#[derive(Debug, Clone)]
pub struct Cache {
    pub root: PathBuf,
}

/// Specification of one stage invocation.
pub struct StageKey<'a> {
    pub stage: &'static str,
    pub scope: &'a str,
    pub version: u32,
    pub params: serde_json::Value,
    pub upstream: Vec<String>,
}

impl StageKey<'_> {
    pub fn key(&self) -> String {
        let blob = serde_json::json!({
            "stage": self.stage,
            "version": self.version,
            "params": self.params,
            "upstream": self.upstream,
        });
        sha256_hex(blob.to_string().as_bytes())[..20].to_owned()
    }
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Cache { root: root.into() }
    }

    fn dir_of(&self, k: &StageKey) -> PathBuf {
        self.root.join(k.stage).join(k.scope).join(k.key())
    }

    /// The completed run for `k`, if any.
    pub fn lookup(&self, k: &StageKey) -> anyhow::Result<Option<StageRun>> {
        let dir = self.dir_of(k);
        let index_path = dir.join(INDEX_FILE);
        if !index_path.is_file() {
            return Ok(None);
        }
        let bytes = fs::read(&index_path)?;
        let index: StageIndex = serde_json::from_slice(&bytes).context("corrupt stage index")?;
        for a in &index.artifacts {
            let p = dir.join(&a.file);
            if !p.is_file() || file_sha256(&p)? != a.sha256 {
                log::warn!("{}/{}: artifact {} changed on disk, recomputing", k.stage, k.scope, a.file);
                return Ok(None);
            }
        }
        Ok(Some(StageRun {
            dir,
            checksum: sha256_hex(&bytes),
            index,
            cache_hit: true,
        }))
    }

    /// Runs `compute` in a fresh directory unless a completed run exists.
    /// `compute` returns the names of the files it wrote.
    pub fn run<F>(&self, k: &StageKey, compute: F) -> anyhow::Result<StageRun>
    where
        F: FnOnce(&Path) -> anyhow::Result<Vec<String>>,
    {
        if let Some(hit) = self.lookup(k)? {
            log::info!("{} [{}]: cache hit {}", k.stage, k.scope, hit.index.key);
            return Ok(hit);
        }
        let dir = self.dir_of(k);
        if dir.exists() {
            fs::remove_dir_all(&dir).with_context(|| format!("clearing {}", dir.display()))?;
        }
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        log::info!("{} [{}]: computing", k.stage, k.scope);
        let mut files = compute(&dir)?;
        files.sort();
        files.dedup();
        let artifacts = files
            .iter()
            .map(|f| {
                let p = dir.join(f);
                Ok(Artifact {
                    file: f.clone(),
                    sha256: file_sha256(&p)?,
                    bytes: fs::metadata(&p)?.len(),
                })
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        let index = StageIndex {
            stage: k.stage.to_owned(),
            scope: k.scope.to_owned(),
            key: k.key(),
            version: k.version,
            params: k.params.clone(),
            upstream: k.upstream.clone(),
            artifacts,
        };
        let bytes = serde_json::to_vec_pretty(&index)?;
        fs::write(dir.join(INDEX_FILE), &bytes)?;
        Ok(StageRun {
            dir,
            checksum: sha256_hex(&bytes),
            index,
            cache_hit: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(v: u32) -> StageKey<'static> {
        StageKey {
            stage: "demo",
            scope: "net",
            version: v,
            params: serde_json::json!({"a": 1}),
            upstream: vec![],
        }
    }

    #[test]
    fn second_run_is_a_hit() {
        let tmp = tempfile::tempdir().unwrap();
        let cache = Cache::new(tmp.path());
        let write = |dir: &Path| {
            fs::write(dir.join("x.txt"), "hello")?;
            Ok(vec!["x.txt".to_owned()])
        };
        let a = cache.run(&key(1), write).unwrap();
        assert!(!a.cache_hit);
        let b = cache.run(&key(1), |_| panic!("should not recompute")).unwrap();
        assert!(b.cache_hit);
        assert_eq!(a.checksum, b.checksum);
        assert_ne!(key(1).key(), key(2).key());
    }

    #[test]
    fn tampered_artifact_is_recomputed() {
        let tmp = tempfile::tempdir().unwrap();
        let cache = Cache::new(tmp.path());
        let run = cache
            .run(&key(1), |dir| {
                fs::write(dir.join("x.txt"), "a")?;
                Ok(vec!["x.txt".into()])
            })
            .unwrap();
        fs::write(run.path("x.txt"), "b").unwrap();
        assert!(cache.lookup(&key(1)).unwrap().is_none());
    }
}
