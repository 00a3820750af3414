//! Content-addressed stage cache.
//!
//! A cache entry is a directory named by the stage key (a digest over the
//! stage name, tool version, relevant config, and input digests) holding
//! the stage's output files plus a `CHECKSUMS` manifest. Lookup verifies
//! every checksum; a corrupted entry is discarded and rebuilt.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::corpus::hex_str;
use crate::error::Result;

pub struct Cache {
    dir: PathBuf,
}

const CHECKSUMS: &str = "CHECKSUMS";

impl Cache {
    pub fn open(dir: &Path) -> Result<Cache> {
        fs::create_dir_all(dir)?;
        Ok(Cache {
            dir: dir.to_path_buf(),
        })
    }

    /// Stage key from its identifying parts.
    pub fn key(parts: &[&str]) -> String {
        let mut hasher = Sha256::new();
        for part in parts {
            hasher.update((part.len() as u64).to_le_bytes());
            hasher.update(part.as_bytes());
        }
        hex_str(&hasher.finalize())
    }

    fn entry_dir(&self, key: &str) -> PathBuf {
        self.dir.join(key)
    }

    /// Verified entry directory, or None when absent or corrupted.
    pub fn lookup(&self, key: &str) -> Option<PathBuf> {
        let entry = self.entry_dir(key);
        let manifest = entry.join(CHECKSUMS);
        let listing = fs::read_to_string(&manifest).ok()?;
        for line in listing.lines() {
            let (digest, rel) = line.split_once("  ")?;
            let payload = fs::read(entry.join(rel)).ok()?;
            if hex_str(&Sha256::digest(&payload)) != digest {
                log::warn!(
                    "cache entry {key} corrupted at {rel}; recomputing stage"
                );
                return None;
            }
        }
        Some(entry)
    }

    /// Get-or-build: returns the entry directory and whether it was a hit.
    pub fn get_or_build<F>(&self, key: &str, build: F) -> Result<(PathBuf, bool)>
    where
        F: FnOnce(&Path) -> Result<()>,
    {
        if let Some(entry) = self.lookup(key) {
            return Ok((entry, true));
        }
        let staging = self.dir.join(format!("tmp-{}-{}", key, std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir_all(&staging)?;
        build(&staging)?;
        write_checksums(&staging)?;

        let entry = self.entry_dir(key);
        if entry.exists() {
            fs::remove_dir_all(&entry)?;
        }
        fs::rename(&staging, &entry)?;
        Ok((entry, false))
    }
}

fn write_checksums(dir: &Path) -> Result<()> {
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    files.sort();
    let mut out = String::new();
    for rel in files {
        let payload = fs::read(dir.join(&rel))?;
        out.push_str(&format!("{}  {rel}\n", hex_str(&Sha256::digest(&payload))));
    }
    fs::write(dir.join(CHECKSUMS), out)?;
    Ok(())
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path
                .strip_prefix(root)
                .expect("path under root")
                .to_string_lossy()
                .replace('\\', "/");
            if rel != CHECKSUMS {
                out.push(rel);
            }
        }
    }
    Ok(())
}

/// Copy an entry's files (without the checksum manifest) into `dest`.
pub fn materialize(entry: &Path, dest: &Path) -> Result<()> {
    let mut files = Vec::new();
    collect_files(entry, entry, &mut files)?;
    for rel in files {
        let target = dest.join(&rel);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::copy(entry.join(&rel), target)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_then_hits() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::open(dir.path()).unwrap();
        let key = Cache::key(&["stage", "v1", "input-digest"]);

        let mut built = 0;
        let (entry, hit) = cache
            .get_or_build(&key, |staging| {
                built += 1;
                fs::create_dir_all(staging.join("sub")).unwrap();
                fs::write(staging.join("sub/file.txt"), b"payload").unwrap();
                Ok(())
            })
            .unwrap();
        assert!(!hit);
        assert_eq!(built, 1);
        assert!(entry.join("sub/file.txt").exists());

        let (_, hit) = cache
            .get_or_build(&key, |_| {
                panic!("must not rebuild on hit");
            })
            .unwrap();
        assert!(hit);
    }

    #[test]
    fn corrupted_entry_is_rebuilt() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::open(dir.path()).unwrap();
        let key = Cache::key(&["stage"]);
        let (entry, _) = cache
            .get_or_build(&key, |staging| {
                fs::write(staging.join("data"), b"good").unwrap();
                Ok(())
            })
            .unwrap();
        fs::write(entry.join("data"), b"tampered").unwrap();
        assert!(cache.lookup(&key).is_none());

        let (entry, hit) = cache
            .get_or_build(&key, |staging| {
                fs::write(staging.join("data"), b"good").unwrap();
                Ok(())
            })
            .unwrap();
        assert!(!hit);
        assert_eq!(fs::read(entry.join("data")).unwrap(), b"good");
    }

    #[test]
    fn materialize_copies_tree() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::open(dir.path()).unwrap();
        let key = Cache::key(&["m"]);
        let (entry, _) = cache
            .get_or_build(&key, |staging| {
                fs::create_dir_all(staging.join("a/b")).unwrap();
                fs::write(staging.join("a/b/c.txt"), b"x").unwrap();
                Ok(())
            })
            .unwrap();
        let out = tempfile::tempdir().unwrap();
        materialize(&entry, out.path()).unwrap();
        assert!(out.path().join("a/b/c.txt").exists());
        assert!(!out.path().join(CHECKSUMS).exists());
    }

    #[test]
    fn distinct_keys_for_distinct_parts() {
        assert_ne!(Cache::key(&["a", "bc"]), Cache::key(&["ab", "c"]));
        assert_eq!(Cache::key(&["a", "b"]), Cache::key(&["a", "b"]));
    }
}
