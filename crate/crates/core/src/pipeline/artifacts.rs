use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.txt";

/// Writes run outputs into one directory and records their checksums.
#[derive(Debug)]
pub struct RunDir {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl RunDir {
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir,
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Writes `bytes` to `name` (which may contain `/`) inside the run directory.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.files.retain(|(n, _)| n != name);
        self.files
            .push((name.to_string(), hex::encode(Sha256::digest(bytes))));
        Ok(path)
    }

    /// Writes `manifest.txt`: the config hash, then `sha256  name` per artifact
    /// in name order.
    pub fn finish(mut self, config_hash: &str) -> Result<PathBuf> {
        self.files.sort();
        let mut text = format!("config_sha256 {config_hash}\n");
        for (name, sum) in &self.files {
            text.push_str(&format!("{sum}  {name}\n"));
        }
        let path = self.dir.join(MANIFEST);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// Parses a manifest into `(config hash, [(name, sha256)])`.
pub fn read_manifest(path: &Path) -> Result<(String, Vec<(String, String)>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let bad = |l: usize| Error::MalformedRow {
        line: l,
        reason: "not a manifest line".into(),
    };
    let hash = lines
        .next()
        .and_then(|l| l.strip_prefix("config_sha256 "))
        .ok_or_else(|| bad(1))?
        .to_string();
    let files = lines
        .enumerate()
        .map(|(i, l)| {
            l.split_once("  ")
                .map(|(s, n)| (n.to_string(), s.to_string()))
                .ok_or_else(|| bad(i + 2))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((hash, files))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let mut rd = RunDir::create(tmp.path().join("run")).unwrap();
        rd.write("b.csv", b"x\n").unwrap();
        rd.write("models/a.json", b"{}").unwrap();
        let m = rd.finish("abc").unwrap();
        let (hash, files) = read_manifest(&m).unwrap();
        assert_eq!(hash, "abc");
        assert_eq!(files.len(), 2);
        assert_eq!(files[0].0, "b.csv");
        assert_eq!(files[0].1, hex::encode(Sha256::digest(b"x\n")));
    }
}
