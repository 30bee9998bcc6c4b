use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::detect::ThresholdSet;
use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.sha256";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes files into one output directory and lists each with its SHA-256
/// in `manifest.sha256` (`sha256sum` format) on [`ArtifactWriter::finish`].
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    entries: Vec<(String, String)>,
}

impl ArtifactWriter {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, entries: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Paths written so far, in order.
    pub fn written(&self) -> Vec<PathBuf> {
        self.entries.iter().map(|(n, _)| self.dir.join(n)).collect()
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        let hash = sha256_hex(bytes);
        match self.entries.iter_mut().find(|(n, _)| n == name) {
            Some(e) => e.1 = hash,
            None => self.entries.push((name.to_string(), hash)),
        }
        Ok(path)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        self.write(name, text.as_bytes())
    }

    /// Writes the manifest, merging entries already listed in an existing
    /// one so successive commands can share a directory.
    pub fn finish(self) -> Result<PathBuf> {
        let path = self.dir.join(MANIFEST);
        let mut entries: Vec<(String, String)> = Vec::new();
        if let Ok(old) = fs::read_to_string(&path) {
            for line in old.lines() {
                if let Some((hash, name)) = line.split_once("  ") {
                    entries.push((name.to_string(), hash.to_string()));
                }
            }
        }
        for (name, hash) in self.entries {
            match entries.iter_mut().find(|(n, _)| *n == name) {
                Some(e) => e.1 = hash,
                None => entries.push((name, hash)),
            }
        }
        entries.sort();
        let mut s = String::new();
        for (name, hash) in &entries {
            let _ = writeln!(s, "{hash}  {name}");
        }
        fs::write(&path, s)?;
        Ok(path)
    }
}

/// `channel,threshold` rows: `alpha`, then `clf_j` per output and `rec`.
pub fn thresholds_csv(t: &ThresholdSet) -> String {
    let mut s = String::from("channel,threshold\n");
    let _ = writeln!(s, "alpha,{:.17e}", t.alpha);
    if let Some(c) = &t.clf {
        for (j, v) in c.iter().enumerate() {
            let _ = writeln!(s, "clf_{j},{v:.17e}");
        }
    }
    if let Some(r) = t.rec {
        let _ = writeln!(s, "rec,{r:.17e}");
    }
    s
}

pub fn read_thresholds(text: &str) -> Result<ThresholdSet> {
    let bad = |m: String| Error::Config(format!("thresholds file: {m}"));
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("channel,threshold") {
        return Err(bad("missing `channel,threshold` header".into()));
    }
    let mut alpha = None;
    let mut clf = Vec::new();
    let mut rec = None;
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let (k, v) = line.split_once(',').ok_or_else(|| bad(format!("malformed row {line:?}")))?;
        let v: f64 = v.trim().parse().map_err(|_| bad(format!("bad value in {line:?}")))?;
        match k {
            "alpha" => alpha = Some(v),
            "rec" => rec = Some(v),
            _ => {
                let j: usize = k
                    .strip_prefix("clf_")
                    .and_then(|j| j.parse().ok())
                    .ok_or_else(|| bad(format!("unknown channel {k:?}")))?;
                if j != clf.len() {
                    return Err(bad(format!("channel {k} out of order")));
                }
                clf.push(v);
            }
        }
    }
    Ok(ThresholdSet {
        clf: (!clf.is_empty()).then_some(clf),
        rec,
        alpha: alpha.ok_or_else(|| bad("no alpha row".into()))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_round_trip() {
        let t = ThresholdSet {
            clf: Some(vec![0.1 + 0.2, 1.0 / 3.0]),
            rec: Some(2.5e-7),
            alpha: 0.05,
        };
        assert_eq!(read_thresholds(&thresholds_csv(&t)).unwrap(), t);
        let r = ThresholdSet { clf: None, rec: Some(1.0), alpha: 0.1 };
        assert_eq!(read_thresholds(&thresholds_csv(&r)).unwrap(), r);
        assert!(read_thresholds("x,y\n").is_err());
        assert!(read_thresholds("channel,threshold\nclf_1,0.5\nalpha,0.1\n").is_err());
    }

    #[test]
    fn manifest_hashes_and_merges() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ArtifactWriter::new(dir.path()).unwrap();
        w.write_text("a.csv", "abc").unwrap();
        w.finish().unwrap();
        let mut w = ArtifactWriter::new(dir.path()).unwrap();
        w.write_text("b.csv", "").unwrap();
        let m = fs::read_to_string(w.finish().unwrap()).unwrap();
        assert_eq!(
            m,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad  a.csv\n\
             e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855  b.csv\n"
        );
    }
}
