//! Pipeline configuration, read from TOML.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::gender::{GenderCache, GenderError, GenderProvider, HttpProvider, ProviderMode};
use crate::lexicon::{Lexicon, LexiconError, LexiconPaths};

pub const DEFAULT_CONFIG: &str = include_str!("../data/default_config.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Gender(#[from] GenderError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub name: String,
    pub mode: ProviderMode,
    pub endpoint: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_timeout_ms() -> u64 {
    5000
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenderConfig {
    /// Provider answer cache; in memory when unset.
    pub cache: Option<PathBuf>,
    pub providers: Vec<ProviderConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub thresholds: Vec<f64>,
    /// Minimum overlap for a speaker to count as correct.
    pub speaker_overlap: usize,
    /// References closer than this edit distance count as correct.
    pub max_reference_distance: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            thresholds: vec![0.3, 0.8],
            speaker_overlap: 1,
            max_reference_distance: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatsConfig {
    /// Count every quote of a source instead of once per article.
    pub count_occurrences: bool,
    pub top: usize,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            count_occurrences: false,
            top: 100,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub lexicon: LexiconPaths,
    pub gender: GenderConfig,
    pub eval: EvalConfig,
    pub stats: StatsConfig,
}

impl Config {
    pub fn from_toml(src: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(src)?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Reads `path`; relative table paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Config::from_toml(&src)?;
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    pub fn builtin() -> Self {
        Config::from_toml(DEFAULT_CONFIG).expect("embedded default config is valid")
    }

    fn check(&self) -> Result<(), ConfigError> {
        if let Some(t) = self.eval.thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(ConfigError::Invalid(format!("threshold {t} outside [0, 1]")));
        }
        if self.stats.top == 0 {
            return Err(ConfigError::Invalid("stats.top must be at least 1".into()));
        }
        Ok(())
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p.as_mut().filter(|p| p.is_relative()) {
                *path = base.join(&*path);
            }
        };
        let l = &mut self.lexicon;
        for p in [
            &mut l.quote_verbs,
            &mut l.verb_forms,
            &mut l.person_nouns,
            &mut l.titles,
            &mut l.particles,
            &mut l.first_names,
            &mut l.entity_overrides,
            &mut l.gender_overrides,
            &mut self.gender.cache,
        ] {
            fix(p);
        }
    }

    /// Digest of the settings that change annotation output.
    pub fn hash(&self) -> String {
        let relevant = (&self.lexicon, &self.gender.providers);
        let json = serde_json::to_string(&relevant).expect("config serializes");
        let mut h = Sha256::new();
        h.update(json.as_bytes());
        h.update(env!("CARGO_PKG_VERSION").as_bytes());
        format!("{:x}", h.finalize())
    }
}

/// Everything annotation needs, loaded once and shared across workers.
pub struct Pipeline {
    pub lexicon: Lexicon,
    pub providers: Vec<Box<dyn GenderProvider>>,
    pub cache: GenderCache,
    pub config_hash: String,
}

impl Pipeline {
    pub fn from_config(cfg: &Config) -> Result<Self, ConfigError> {
        let providers = cfg
            .gender
            .providers
            .iter()
            .map(|p| {
                Box::new(HttpProvider::new(
                    p.name.clone(),
                    p.mode,
                    p.endpoint.clone(),
                    Duration::from_millis(p.timeout_ms),
                )) as Box<dyn GenderProvider>
            })
            .collect();
        let cache = match &cfg.gender.cache {
            Some(p) => GenderCache::open(p)?,
            None => GenderCache::in_memory(),
        };
        Ok(Pipeline {
            lexicon: Lexicon::load(&cfg.lexicon)?,
            providers,
            cache,
            config_hash: cfg.hash(),
        })
    }

    pub fn builtin() -> Self {
        Pipeline {
            lexicon: Lexicon::builtin(),
            providers: Vec::new(),
            cache: GenderCache::in_memory(),
            config_hash: Config::builtin().hash(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse() {
        let c = Config::builtin();
        assert_eq!(c.eval.thresholds, vec![0.3, 0.8]);
        assert!(c.gender.providers.is_empty());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::from_toml("[eval]\nthreshold = 0.3\n").is_err());
        assert!(Config::from_toml("[eval]\nthresholds = [1.5]\n").is_err());
    }

    #[test]
    fn hash_tracks_lexicon_paths() {
        let a = Config::builtin();
        let mut b = a.clone();
        b.lexicon.titles = Some("titles.txt".into());
        assert_ne!(a.hash(), b.hash());
        let mut c = a.clone();
        c.eval.thresholds = vec![0.5];
        assert_eq!(a.hash(), c.hash());
    }
}
