//! Gender labels for unified person clusters.
//!
//! The cascade is: manual override, title, first-name table, then external
//! providers in configured order. Provider answers are cached by
//! `(provider, query)` in a sorted TSV file that can be corrected by hand.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::Lexicon;
use crate::unify::EntityCluster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
    Other,
    Unknown,
}

impl Gender {
    pub fn code(self) -> char {
        match self {
            Gender::Female => 'f',
            Gender::Male => 'm',
            Gender::Other => 'x',
            Gender::Unknown => 'u',
        }
    }

    pub fn from_code(c: &str) -> Option<Gender> {
        match c {
            "f" => Some(Gender::Female),
            "m" => Some(Gender::Male),
            "x" => Some(Gender::Other),
            "u" => Some(Gender::Unknown),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    Title,
    FirstnameLookup,
    FullnameService,
    ManualOverride,
    /// Grammatical gender of a person noun ("une infirmière").
    Grammatical,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenderLabel {
    pub value: Gender,
    pub evidence: Evidence,
    pub confidence: f64,
}

impl GenderLabel {
    pub fn new(value: Gender, evidence: Evidence, confidence: f64) -> Self {
        GenderLabel {
            value,
            evidence,
            confidence: confidence.clamp(0.0, 1.0),
        }
    }

    pub fn unknown() -> Self {
        GenderLabel::new(Gender::Unknown, Evidence::None, 0.0)
    }
}

#[derive(Debug, Error)]
pub enum GenderError {
    #[error("provider {provider} failed: {message}")]
    Provider { provider: String, message: String },
    #[error("cache {}: {source}", path.display())]
    CacheIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cache {} line {line}: {message}", path.display())]
    CacheFormat { path: PathBuf, line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderMode {
    FirstName,
    FullName,
}

pub trait GenderProvider: Send + Sync {
    fn name(&self) -> &str;
    fn mode(&self) -> ProviderMode;
    fn query(&self, input: &str) -> Result<(Gender, f64), GenderError>;
}

/// HTTP service answering `GET <endpoint>?name=<input>` with
/// `{"gender": "female"|"male"|"unknown", "probability": p}`.
pub struct HttpProvider {
    name: String,
    mode: ProviderMode,
    endpoint: String,
    agent: ureq::Agent,
}

#[derive(Deserialize)]
struct ProviderResponse {
    gender: Option<String>,
    probability: Option<f64>,
}

impl HttpProvider {
    pub fn new(name: impl Into<String>, mode: ProviderMode, endpoint: impl Into<String>, timeout: Duration) -> Self {
        HttpProvider {
            name: name.into(),
            mode,
            endpoint: endpoint.into(),
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }
}

impl GenderProvider for HttpProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn mode(&self) -> ProviderMode {
        self.mode
    }

    fn query(&self, input: &str) -> Result<(Gender, f64), GenderError> {
        let fail = |message: String| GenderError::Provider {
            provider: self.name.clone(),
            message,
        };
        let resp: ProviderResponse = self
            .agent
            .get(&self.endpoint)
            .query("name", input)
            .call()
            .map_err(|e| fail(e.to_string()))?
            .into_json()
            .map_err(|e| fail(e.to_string()))?;
        let gender = match resp.gender.as_deref() {
            Some("female") => Gender::Female,
            Some("male") => Gender::Male,
            Some("unknown") | None => Gender::Unknown,
            Some(other) => return Err(fail(format!("unexpected gender {other:?}"))),
        };
        Ok((gender, resp.probability.unwrap_or(0.0).clamp(0.0, 1.0)))
    }
}

/// Provider answers keyed by `(provider, query)`.
#[derive(Debug, Default)]
pub struct GenderCache {
    path: Option<PathBuf>,
    entries: Mutex<BTreeMap<(String, String), (Gender, f64)>>,
}

impl GenderCache {
    pub fn in_memory() -> Self {
        GenderCache::default()
    }

    /// Opens the cache at `path`, empty if the file does not exist yet.
    pub fn open(path: &Path) -> Result<Self, GenderError> {
        let mut entries = BTreeMap::new();
        match fs::read_to_string(path) {
            Ok(src) => {
                for (i, line) in src.lines().enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let bad = |message: &str| GenderError::CacheFormat {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: message.to_string(),
                    };
                    let cols: Vec<&str> = line.split('\t').collect();
                    if cols.len() != 4 {
                        return Err(bad("expected provider<TAB>query<TAB>gender<TAB>probability"));
                    }
                    let g = Gender::from_code(cols[2]).ok_or_else(|| bad("bad gender code"))?;
                    let p: f64 = cols[3].parse().map_err(|_| bad("bad probability"))?;
                    entries.insert((cols[0].to_string(), cols[1].to_string()), (g, p));
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(source) => {
                return Err(GenderError::CacheIo {
                    path: path.to_path_buf(),
                    source,
                })
            }
        }
        Ok(GenderCache {
            path: Some(path.to_path_buf()),
            entries: Mutex::new(entries),
        })
    }

    pub fn get(&self, provider: &str, query: &str) -> Option<(Gender, f64)> {
        self.lock().get(&(provider.to_string(), query.to_string())).copied()
    }

    pub fn insert(&self, provider: &str, query: &str, answer: (Gender, f64)) {
        self.lock().insert((provider.to_string(), query.to_string()), answer);
    }

    pub fn len(&self) -> usize {
        self.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, BTreeMap<(String, String), (Gender, f64)>> {
        self.entries.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Writes the cache back in key order; a no-op for in-memory caches.
    pub fn save(&self) -> Result<(), GenderError> {
        let Some(path) = &self.path else { return Ok(()) };
        let io = |source| GenderError::CacheIo {
            path: path.clone(),
            source,
        };
        let mut out = String::new();
        for ((prov, q), (g, p)) in self.lock().iter() {
            out.push_str(&format!("{prov}\t{q}\t{}\t{p}\n", g.code()));
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io)?;
        }
        let tmp = path.with_extension("tmp");
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(out.as_bytes()).map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, path).map_err(io)
    }
}

/// Gender marked by the titles carried by a cluster's members.
pub fn predict_from_title(cluster: &EntityCluster, lexicon: &Lexicon) -> Option<GenderLabel> {
    let titles = cluster
        .member_entities
        .iter()
        .filter_map(|e| e.title.as_deref())
        .chain(cluster.name_parts.titles.iter().map(String::as_str));
    let mut found: Vec<Gender> = titles.filter_map(|t| lexicon.title(t).and_then(|t| t.gender)).collect();
    found.sort();
    found.dedup();
    match found.as_slice() {
        [] => None,
        [g] => Some(GenderLabel::new(*g, Evidence::Title, 1.0)),
        _ => {
            warn!("conflicting titles for {:?}: {:?}", cluster.representative, found);
            Some(GenderLabel::new(Gender::Unknown, Evidence::Title, 1.0))
        }
    }
}

/// First-name table lookup; a hyphenated name falls back to its first part.
pub fn predict_from_first_name(first: &str, lexicon: &Lexicon) -> Option<GenderLabel> {
    let hit = lexicon
        .first_name(first)
        .or_else(|| first.split_once('-').and_then(|(head, _)| lexicon.first_name(head)))?;
    match hit {
        (Gender::Female | Gender::Male, w) => Some(GenderLabel::new(hit.0, Evidence::FirstnameLookup, w)),
        _ => None,
    }
}

pub fn predict(
    cluster: &EntityCluster,
    lexicon: &Lexicon,
    providers: &[Box<dyn GenderProvider>],
    cache: &GenderCache,
) -> GenderLabel {
    if let Some(g) = lexicon.gender_override(&cluster.representative) {
        return GenderLabel::new(g, Evidence::ManualOverride, 1.0);
    }
    if let Some(label) = predict_from_title(cluster, lexicon) {
        return label;
    }
    let first = cluster.name_parts.first.as_deref();
    if let Some(label) = first.and_then(|f| predict_from_first_name(f, lexicon)) {
        return label;
    }
    for p in providers {
        let input = match p.mode() {
            ProviderMode::FullName => cluster.representative.as_str(),
            ProviderMode::FirstName => match first {
                Some(f) => f,
                None => continue,
            },
        };
        let answer = match cache.get(p.name(), input) {
            Some(a) => a,
            None => match p.query(input) {
                Ok(a) => {
                    cache.insert(p.name(), input, a);
                    a
                }
                Err(e) => {
                    warn!("skipping gender provider: {e}");
                    continue;
                }
            },
        };
        debug!("{} answered {:?} for {input:?}", p.name(), answer);
        if matches!(answer.0, Gender::Female | Gender::Male) {
            let evidence = match p.mode() {
                ProviderMode::FullName => Evidence::FullnameService,
                ProviderMode::FirstName => Evidence::FirstnameLookup,
            };
            return GenderLabel::new(answer.0, evidence, answer.1);
        }
    }
    GenderLabel::unknown()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderPartition {
    pub women: Vec<String>,
    pub men: Vec<String>,
    pub other: Vec<String>,
}

/// Splits representatives by label; anything not female or male is other.
pub fn gender_partition(clusters: &[EntityCluster], labels: &[GenderLabel]) -> GenderPartition {
    let mut out = GenderPartition::default();
    for (c, l) in clusters.iter().zip(labels) {
        let bucket = match l.value {
            Gender::Female => &mut out.women,
            Gender::Male => &mut out.men,
            Gender::Other | Gender::Unknown => &mut out.other,
        };
        bucket.push(c.representative.clone());
    }
    out
}
