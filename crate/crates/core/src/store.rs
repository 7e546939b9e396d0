//! File-backed store for documents and annotations.
//!
//! Layout under the root:
//!
//! ```text
//! index.json
//! docs/<outlet>/<doc_id>.json
//! annotations/<outlet>/<doc_id>.json
//! ```
//!
//! The index records a SHA-256 checksum for every file, and for annotations
//! the configuration hash and document checksum they were produced from.
//! Writers hold an exclusive lock on `.lock` while they touch files and the
//! index; readers rely on atomic renames.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::annotate::{parse_annotation, serialize_annotation, ArticleAnnotation};
use crate::doc_model::{parse_document, serialize_document, AnnotatedDocument};
use crate::stats::Window;

pub const STORE_ENV: &str = "QP_STORE";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no {kind} stored for {doc_id:?}")]
    NotFound { kind: &'static str, doc_id: String },
    #[error("checksum mismatch for {}", path.display())]
    Integrity { path: PathBuf },
    #[error("corrupt record {}: {message}", path.display())]
    Corrupt { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocEntry {
    pub outlet: String,
    pub published_at: NaiveDate,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationEntry {
    pub path: String,
    pub sha256: String,
    pub config_hash: String,
    pub doc_sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct Index {
    documents: BTreeMap<String, DocEntry>,
    annotations: BTreeMap<String, AnnotationEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Put {
    Stored,
    Unchanged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationStatus {
    Fresh,
    /// Produced under another configuration or an older document version.
    Stale,
    Missing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Listing {
    pub doc_id: String,
    pub outlet: String,
    pub published_at: NaiveDate,
    pub annotation: AnnotationStatus,
}

pub struct Store {
    root: PathBuf,
    index: Mutex<Index>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// File-name-safe form of `s`; a digest suffix keeps altered names distinct.
fn path_component(s: &str) -> String {
    let clean: String = s
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect();
    if clean == s && !s.is_empty() && !s.starts_with('.') {
        clean
    } else {
        format!("{}-{}", clean.trim_start_matches('.'), &sha256_hex(s.as_bytes())[..8])
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let tmp = path.with_extension("tmp");
    let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        let index = Self::read_index(&root)?;
        Ok(Store {
            root,
            index: Mutex::new(index),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn read_index(root: &Path) -> Result<Index, StoreError> {
        let path = root.join("index.json");
        match fs::read_to_string(&path) {
            Ok(src) => serde_json::from_str(&src).map_err(|e| StoreError::Corrupt {
                path,
                message: e.to_string(),
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Index::default()),
            Err(e) => Err(io_err(&path)(e)),
        }
    }

    /// Runs `f` on the on-disk index under the store lock and saves it.
    fn update<T>(&self, f: impl FnOnce(&Path, &mut Index) -> Result<T, StoreError>) -> Result<T, StoreError> {
        let mut mem = self.index.lock().unwrap_or_else(|e| e.into_inner());
        let lock_path = self.root.join(".lock");
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)
            .map_err(io_err(&lock_path))?;
        lock.lock().map_err(io_err(&lock_path))?;
        let mut index = Self::read_index(&self.root)?;
        let out = f(&self.root, &mut index)?;
        let path = self.root.join("index.json");
        let json = serde_json::to_vec_pretty(&index).expect("index serializes");
        write_atomic(&path, &json)?;
        *mem = index;
        lock.unlock().map_err(io_err(&lock_path))?;
        Ok(out)
    }

    fn snapshot(&self) -> Index {
        self.index.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Reloads the index written by other processes.
    pub fn refresh(&self) -> Result<(), StoreError> {
        let fresh = Self::read_index(&self.root)?;
        *self.index.lock().unwrap_or_else(|e| e.into_inner()) = fresh;
        Ok(())
    }

    pub fn put_document(&self, doc: &AnnotatedDocument) -> Result<Put, StoreError> {
        let json = serialize_document(doc);
        let sha = sha256_hex(json.as_bytes());
        if self.snapshot().documents.get(doc.doc_id()).is_some_and(|e| e.sha256 == sha) {
            return Ok(Put::Unchanged);
        }
        let rel = format!("docs/{}/{}.json", path_component(doc.outlet()), path_component(doc.doc_id()));
        self.update(|root, index| {
            if index.documents.get(doc.doc_id()).is_some_and(|e| e.sha256 == sha) {
                return Ok(Put::Unchanged);
            }
            if let Some(old) = index.documents.get(doc.doc_id()).filter(|e| e.path != rel) {
                let _ = fs::remove_file(root.join(&old.path));
            }
            write_atomic(&root.join(&rel), json.as_bytes())?;
            index.documents.insert(
                doc.doc_id().to_string(),
                DocEntry {
                    outlet: doc.outlet().to_string(),
                    published_at: doc.published_at(),
                    path: rel.clone(),
                    sha256: sha.clone(),
                },
            );
            Ok(Put::Stored)
        })
    }

    fn read_checked(&self, rel: &str, sha: &str) -> Result<String, StoreError> {
        let path = self.root.join(rel);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        if sha256_hex(&bytes) != sha {
            return Err(StoreError::Integrity { path });
        }
        String::from_utf8(bytes).map_err(|e| StoreError::Corrupt {
            path,
            message: e.to_string(),
        })
    }

    pub fn get_document(&self, doc_id: &str) -> Result<AnnotatedDocument, StoreError> {
        let entry = self.snapshot().documents.get(doc_id).cloned().ok_or_else(|| StoreError::NotFound {
            kind: "document",
            doc_id: doc_id.to_string(),
        })?;
        let src = self.read_checked(&entry.path, &entry.sha256)?;
        parse_document(&src).map_err(|e| StoreError::Corrupt {
            path: self.root.join(&entry.path),
            message: e.to_string(),
        })
    }

    /// Stores `a`, tagged with the configuration it was produced under. The
    /// document must already be stored.
    pub fn put_annotation(&self, a: &ArticleAnnotation, config_hash: &str) -> Result<Put, StoreError> {
        let json = serialize_annotation(a);
        let sha = sha256_hex(json.as_bytes());
        self.update(|root, index| {
            let doc = index.documents.get(&a.doc_id).ok_or_else(|| StoreError::NotFound {
                kind: "document",
                doc_id: a.doc_id.clone(),
            })?;
            let doc_sha = doc.sha256.clone();
            let rel = format!("annotations/{}/{}.json", path_component(&doc.outlet), path_component(&a.doc_id));
            let same = index
                .annotations
                .get(&a.doc_id)
                .is_some_and(|e| e.sha256 == sha && e.config_hash == config_hash && e.doc_sha256 == doc_sha);
            if same {
                return Ok(Put::Unchanged);
            }
            write_atomic(&root.join(&rel), json.as_bytes())?;
            index.annotations.insert(
                a.doc_id.clone(),
                AnnotationEntry {
                    path: rel,
                    sha256: sha.clone(),
                    config_hash: config_hash.to_string(),
                    doc_sha256: doc_sha,
                },
            );
            Ok(Put::Stored)
        })
    }

    pub fn get_annotation(&self, doc_id: &str) -> Result<ArticleAnnotation, StoreError> {
        let entry = self.snapshot().annotations.get(doc_id).cloned().ok_or_else(|| StoreError::NotFound {
            kind: "annotation",
            doc_id: doc_id.to_string(),
        })?;
        let src = self.read_checked(&entry.path, &entry.sha256)?;
        parse_annotation(&src).map_err(|e| StoreError::Corrupt {
            path: self.root.join(&entry.path),
            message: e.to_string(),
        })
    }

    pub fn annotation_status(&self, doc_id: &str, config_hash: &str) -> AnnotationStatus {
        let index = self.snapshot();
        match (index.documents.get(doc_id), index.annotations.get(doc_id)) {
            (Some(d), Some(a)) if a.config_hash == config_hash && a.doc_sha256 == d.sha256 => AnnotationStatus::Fresh,
            (_, Some(_)) => AnnotationStatus::Stale,
            _ => AnnotationStatus::Missing,
        }
    }

    /// Stored documents in the window and outlet, ordered by date then id.
    pub fn list(&self, window: Window, outlet: Option<&str>, config_hash: &str) -> Vec<Listing> {
        let index = self.snapshot();
        let mut out: Vec<Listing> = index
            .documents
            .iter()
            .filter(|(_, d)| window.contains(d.published_at) && outlet.is_none_or(|o| d.outlet == o))
            .map(|(id, d)| Listing {
                doc_id: id.clone(),
                outlet: d.outlet.clone(),
                published_at: d.published_at,
                annotation: self.annotation_status(id, config_hash),
            })
            .collect();
        out.sort_by(|a, b| (a.published_at, &a.doc_id).cmp(&(b.published_at, &b.doc_id)));
        out
    }

    /// Annotations of every listed document that has one, stale or not.
    pub fn annotations(&self, window: Window, outlet: Option<&str>) -> Result<Vec<ArticleAnnotation>, StoreError> {
        self.list(window, outlet, "")
            .into_iter()
            .filter(|l| l.annotation != AnnotationStatus::Missing)
            .map(|l| self.get_annotation(&l.doc_id))
            .collect()
    }
}
