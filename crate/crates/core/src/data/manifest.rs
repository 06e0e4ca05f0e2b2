//! JSON dataset index.
//!
//! ```json
//! { "entries": [ { "id": "img1", "embedding_path": "emb/img1.speb",
//!                  "mask_path": "masks/img1.png",
//!                  "original_height": 480, "original_width": 640 } ] }
//! ```
//!
//! Relative paths are resolved against the manifest's directory. An exporter
//! may additionally record `resized_height` / `resized_width`; when present
//! they must agree with [`GeometryInfo`] recomputed from the original size.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decoder::GeometryInfo;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub embedding_path: String,
    pub mask_path: String,
    pub original_height: usize,
    pub original_width: usize,
}

impl ManifestEntry {
    pub fn geometry(&self) -> Result<GeometryInfo> {
        GeometryInfo::new(self.original_height, self.original_width)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SampleManifest {
    pub entries: Vec<ManifestEntry>,
    base_dir: PathBuf,
}

#[derive(Deserialize, Serialize)]
struct RawManifest {
    entries: Vec<RawEntry>,
}

#[derive(Deserialize, Serialize)]
struct RawEntry {
    id: String,
    embedding_path: String,
    mask_path: String,
    original_height: i64,
    original_width: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    resized_height: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    resized_width: Option<i64>,
}

impl SampleManifest {
    /// Validates `entries`; relative paths will resolve against `base_dir`.
    pub fn new(entries: Vec<ManifestEntry>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (index, e) in entries.iter().enumerate() {
            let bad = |message: &str| Error::ManifestEntry {
                index,
                id: e.id.clone(),
                message: message.to_string(),
            };
            if e.id.is_empty() {
                return Err(bad("empty id"));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(bad("duplicate id"));
            }
            if e.embedding_path.is_empty() || e.mask_path.is_empty() {
                return Err(bad("empty path"));
            }
            if e.original_height == 0 || e.original_width == 0 {
                return Err(bad("original dimensions must be positive"));
            }
        }
        Ok(Self {
            entries,
            base_dir: base_dir.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn entry(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.id.clone()).collect()
    }

    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn embedding_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.resolve(&entry.embedding_path)
    }

    pub fn mask_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.resolve(&entry.mask_path)
    }

    /// Serializes entries (paths as stored, not resolved).
    pub fn to_json(&self) -> String {
        let raw = RawManifest {
            entries: self
                .entries
                .iter()
                .map(|e| RawEntry {
                    id: e.id.clone(),
                    embedding_path: e.embedding_path.clone(),
                    mask_path: e.mask_path.clone(),
                    original_height: e.original_height as i64,
                    original_width: e.original_width as i64,
                    resized_height: None,
                    resized_width: None,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("manifest serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<SampleManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: RawManifest = serde_json::from_str(&text).map_err(|e| Error::ManifestParse {
        path: path.into(),
        message: e.to_string(),
    })?;
    let mut entries = Vec::with_capacity(raw.entries.len());
    for (index, r) in raw.entries.into_iter().enumerate() {
        let bad = |message: String| Error::ManifestEntry {
            index,
            id: r.id.clone(),
            message,
        };
        if r.original_height <= 0 || r.original_width <= 0 {
            return Err(bad(format!(
                "original dimensions must be positive, found {}x{}",
                r.original_height, r.original_width
            )));
        }
        let entry = ManifestEntry {
            id: r.id.clone(),
            embedding_path: r.embedding_path.clone(),
            mask_path: r.mask_path.clone(),
            original_height: r.original_height as usize,
            original_width: r.original_width as usize,
        };
        if r.resized_height.is_some() || r.resized_width.is_some() {
            let g = entry.geometry()?;
            let want = (g.resized_height as i64, g.resized_width as i64);
            let found = (
                r.resized_height.unwrap_or(want.0),
                r.resized_width.unwrap_or(want.1),
            );
            if found != want {
                return Err(bad(format!(
                    "recorded resized geometry {}x{} disagrees with recomputed {}x{}",
                    found.0, found.1, want.0, want.1
                )));
            }
        }
        entries.push(entry);
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    SampleManifest::new(entries, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, body: &str) -> PathBuf {
        let p = dir.join("manifest.json");
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn parses_two_entries_and_resolves_paths() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            r#"{"entries":[
              {"id":"a","embedding_path":"e/a.speb","mask_path":"m/a.png","original_height":480,"original_width":640},
              {"id":"b","embedding_path":"/abs/b.speb","mask_path":"m/b.png","original_height":10,"original_width":10,
               "resized_height":1024,"resized_width":1024}
            ]}"#,
        );
        let m = load_manifest(&p).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.embedding_path(&m.entries[0]), dir.path().join("e/a.speb"));
        assert_eq!(m.embedding_path(&m.entries[1]), PathBuf::from("/abs/b.speb"));
    }

    #[test]
    fn duplicate_id_is_reported_with_entry() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            r#"{"entries":[
              {"id":"img1","embedding_path":"a","mask_path":"a","original_height":1,"original_width":1},
              {"id":"img1","embedding_path":"b","mask_path":"b","original_height":1,"original_width":1}
            ]}"#,
        );
        match load_manifest(&p) {
            Err(Error::ManifestEntry { index, id, message }) => {
                assert_eq!((index, id.as_str()), (1, "img1"));
                assert!(message.contains("duplicate"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_entries_is_valid() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), r#"{"entries":[]}"#);
        assert!(load_manifest(&p).unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_input() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            r#"{"entries":[{"id":"x","embedding_path":"a","mask_path":"a","original_height":0,"original_width":5}]}"#,
        );
        assert!(matches!(load_manifest(&p), Err(Error::ManifestEntry { index: 0, .. })));

        let p = write(
            dir.path(),
            r#"{"entries":[{"id":"x","embedding_path":"a","mask_path":"a","original_height":-3,"original_width":5}]}"#,
        );
        assert!(matches!(load_manifest(&p), Err(Error::ManifestEntry { .. })));

        let p = write(
            dir.path(),
            r#"{"entries":[{"id":"x","embedding_path":"","mask_path":"a","original_height":3,"original_width":5}]}"#,
        );
        assert!(matches!(load_manifest(&p), Err(Error::ManifestEntry { .. })));

        let p = write(
            dir.path(),
            r#"{"entries":[{"id":"x","embedding_path":"a","mask_path":"a","original_height":300,"original_width":400,
                "resized_height":767,"resized_width":1024}]}"#,
        );
        assert!(matches!(load_manifest(&p), Err(Error::ManifestEntry { .. })));

        let p = write(dir.path(), "{not json");
        assert!(matches!(load_manifest(&p), Err(Error::ManifestParse { .. })));

        assert!(matches!(
            load_manifest(dir.path().join("nope.json")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn save_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let m = SampleManifest::new(
            vec![ManifestEntry {
                id: "s0".into(),
                embedding_path: "s0.speb".into(),
                mask_path: "s0.png".into(),
                original_height: 12,
                original_width: 7,
            }],
            dir.path(),
        )
        .unwrap();
        let p = dir.path().join("out.json");
        m.save(&p).unwrap();
        assert_eq!(load_manifest(&p).unwrap(), m);
    }
}
