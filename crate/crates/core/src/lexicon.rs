//! Word lists and lookup tables used by the rule stages.
//!
//! Every table ships in `data/` and is compiled in; [`Lexicon::builtin`]
//! needs no filesystem. Each table can be replaced by a file of the same
//! format through the pipeline configuration.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::doc_model::{EntityLabel, Token};
use crate::gender::Gender;

pub const QUOTE_VERBS: &str = include_str!("../data/quote_verbs.txt");
pub const VERB_FORMS: &str = include_str!("../data/verb_forms.tsv");
pub const PERSON_NOUNS: &str = include_str!("../data/person_nouns.txt");
pub const TITLES: &str = include_str!("../data/titles.txt");
pub const PARTICLES: &str = include_str!("../data/particles.txt");
pub const FIRST_NAMES: &str = include_str!("../data/first_names.tsv");
pub const ENTITY_OVERRIDES: &str = include_str!("../data/entity_overrides.txt");
pub const GENDER_OVERRIDES: &str = include_str!("../data/gender_overrides.tsv");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{table} line {line}: {message}")]
    Parse {
        table: String,
        line: usize,
        message: String,
    },
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Grammatical gender of a person noun.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NounGender {
    Masculine,
    Feminine,
    Epicene,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Title {
    pub form: String,
    /// `None` for titles that do not mark gender (`Dr`, `Maître`).
    pub gender: Option<Gender>,
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    quote_verbs: HashSet<String>,
    /// conjugated form → infinitive
    verb_forms: HashMap<String, String>,
    person_nouns: HashMap<String, NounGender>,
    titles: Vec<Title>,
    particles: HashSet<String>,
    first_names: HashMap<String, (Gender, f64)>,
    entity_overrides: Vec<(String, EntityLabel)>,
    gender_overrides: HashMap<String, Gender>,
}

fn lines(src: &str) -> impl Iterator<Item = (usize, &str)> {
    src.lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn parse_err(table: &str, line: usize, message: impl Into<String>) -> LexiconError {
    LexiconError::Parse {
        table: table.to_string(),
        line,
        message: message.into(),
    }
}

fn gender_code(table: &str, line: usize, code: &str) -> Result<Option<Gender>, LexiconError> {
    match code {
        "f" => Ok(Some(Gender::Female)),
        "m" => Ok(Some(Gender::Male)),
        "x" => Ok(Some(Gender::Other)),
        "u" => Ok(None),
        other => Err(parse_err(table, line, format!("unknown gender code {other:?}"))),
    }
}

pub fn parse_quote_verbs(src: &str) -> HashSet<String> {
    lines(src).map(|(_, l)| l.trim().to_lowercase()).collect()
}

pub fn parse_verb_forms(src: &str) -> Result<HashMap<String, String>, LexiconError> {
    let mut out = HashMap::new();
    for (n, l) in lines(src) {
        let (lemma, form) = l
            .split_once('\t')
            .ok_or_else(|| parse_err("verb forms", n, "expected lemma<TAB>form"))?;
        out.entry(form.trim().to_lowercase())
            .or_insert_with(|| lemma.trim().to_lowercase());
    }
    Ok(out)
}

pub fn parse_person_nouns(src: &str) -> Result<HashMap<String, NounGender>, LexiconError> {
    let mut out = HashMap::new();
    for (n, l) in lines(src) {
        let mut parts = l.split_whitespace();
        let (Some(lemma), Some(tag), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_err("person nouns", n, "expected `lemma gender`"));
        };
        let g = match tag {
            "m" => NounGender::Masculine,
            "f" => NounGender::Feminine,
            "mf" => NounGender::Epicene,
            other => return Err(parse_err("person nouns", n, format!("unknown gender tag {other:?}"))),
        };
        out.insert(lemma.to_lowercase(), g);
    }
    Ok(out)
}

pub fn parse_titles(src: &str) -> Result<Vec<Title>, LexiconError> {
    lines(src)
        .map(|(n, l)| {
            let (form, code) = l
                .trim()
                .rsplit_once(char::is_whitespace)
                .ok_or_else(|| parse_err("titles", n, "expected `title gender`"))?;
            let gender = match code {
                "x" => None,
                c => gender_code("titles", n, c)?,
            };
            Ok(Title {
                form: form.trim().to_string(),
                gender,
            })
        })
        .collect()
}

pub fn parse_first_names(src: &str) -> Result<HashMap<String, (Gender, f64)>, LexiconError> {
    let mut out = HashMap::new();
    for (n, l) in lines(src) {
        let cols: Vec<&str> = l.split('\t').collect();
        if cols.len() != 3 {
            return Err(parse_err("first names", n, "expected name<TAB>gender<TAB>weight"));
        }
        let gender = gender_code("first names", n, cols[1].trim())?.unwrap_or(Gender::Unknown);
        let weight: f64 = cols[2]
            .trim()
            .parse()
            .map_err(|_| parse_err("first names", n, format!("bad weight {:?}", cols[2])))?;
        if !(0.0..=1.0).contains(&weight) {
            return Err(parse_err("first names", n, "weight outside [0, 1]"));
        }
        out.insert(cols[0].trim().to_lowercase(), (gender, weight));
    }
    Ok(out)
}

pub fn parse_entity_overrides(src: &str) -> Result<Vec<(String, EntityLabel)>, LexiconError> {
    lines(src)
        .map(|(n, l)| {
            let l = l.trim();
            let rest = l
                .strip_prefix('"')
                .ok_or_else(|| parse_err("entity overrides", n, "surface must be double-quoted"))?;
            let (surface, label) = rest
                .rsplit_once('"')
                .ok_or_else(|| parse_err("entity overrides", n, "unterminated surface"))?;
            let label = EntityLabel::parse(label.trim())
                .ok_or_else(|| parse_err("entity overrides", n, format!("unknown label {:?}", label.trim())))?;
            Ok((surface.to_string(), label))
        })
        .collect()
}

pub fn parse_gender_overrides(src: &str) -> Result<HashMap<String, Gender>, LexiconError> {
    let mut out = HashMap::new();
    for (n, l) in lines(src) {
        let (name, code) = l
            .rsplit_once('\t')
            .ok_or_else(|| parse_err("gender overrides", n, "expected representative<TAB>gender"))?;
        let g = gender_code("gender overrides", n, code.trim())?
            .ok_or_else(|| parse_err("gender overrides", n, "override must be f, m or x"))?;
        out.insert(name.trim().to_string(), g);
    }
    Ok(out)
}

/// Paths replacing individual builtin tables.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconPaths {
    pub quote_verbs: Option<PathBuf>,
    pub verb_forms: Option<PathBuf>,
    pub person_nouns: Option<PathBuf>,
    pub titles: Option<PathBuf>,
    pub particles: Option<PathBuf>,
    pub first_names: Option<PathBuf>,
    pub entity_overrides: Option<PathBuf>,
    pub gender_overrides: Option<PathBuf>,
}

fn read_or(path: Option<&Path>, builtin: &'static str) -> Result<std::borrow::Cow<'static, str>, LexiconError> {
    match path {
        None => Ok(builtin.into()),
        Some(p) => fs::read_to_string(p)
            .map(Into::into)
            .map_err(|source| LexiconError::Io {
                path: p.to_path_buf(),
                source,
            }),
    }
}

impl Lexicon {
    pub fn builtin() -> Self {
        Self::load(&LexiconPaths::default()).expect("builtin tables are well-formed")
    }

    pub fn load(paths: &LexiconPaths) -> Result<Self, LexiconError> {
        Ok(Lexicon {
            quote_verbs: parse_quote_verbs(&read_or(paths.quote_verbs.as_deref(), QUOTE_VERBS)?),
            verb_forms: parse_verb_forms(&read_or(paths.verb_forms.as_deref(), VERB_FORMS)?)?,
            person_nouns: parse_person_nouns(&read_or(paths.person_nouns.as_deref(), PERSON_NOUNS)?)?,
            titles: parse_titles(&read_or(paths.titles.as_deref(), TITLES)?)?,
            particles: parse_quote_verbs(&read_or(paths.particles.as_deref(), PARTICLES)?),
            first_names: parse_first_names(&read_or(paths.first_names.as_deref(), FIRST_NAMES)?)?,
            entity_overrides: parse_entity_overrides(&read_or(paths.entity_overrides.as_deref(), ENTITY_OVERRIDES)?)?,
            gender_overrides: parse_gender_overrides(&read_or(paths.gender_overrides.as_deref(), GENDER_OVERRIDES)?)?,
        })
    }

    /// Allow-listed infinitive for a token, from its lemma or, failing that,
    /// from its surface form through the conjugation table.
    pub fn quote_verb(&self, token: &Token) -> Option<&str> {
        if !matches!(token.pos.as_str(), "VERB" | "AUX") {
            return None;
        }
        let lemma = token.lemma.to_lowercase();
        if let Some(v) = self.quote_verbs.get(&lemma) {
            return Some(v);
        }
        self.verb_forms
            .get(&token.text.to_lowercase())
            .filter(|l| self.quote_verbs.contains(*l))
            .map(String::as_str)
    }

    pub fn is_quote_verb_lemma(&self, lemma: &str) -> bool {
        self.quote_verbs.contains(&lemma.to_lowercase())
    }

    pub fn person_noun(&self, lemma: &str) -> Option<NounGender> {
        self.person_nouns.get(&lemma.to_lowercase()).copied()
    }

    /// Title matching `word`. Short abbreviations (`M.`, `Me`, `Dr`) must match
    /// exactly; longer titles match regardless of case.
    pub fn title(&self, word: &str) -> Option<&Title> {
        self.titles.iter().find(|t| t.form == word).or_else(|| {
            self.titles
                .iter()
                .find(|t| t.form.chars().count() > 3 && t.form.to_lowercase() == word.to_lowercase())
        })
    }

    pub fn is_title(&self, word: &str) -> bool {
        self.title(word).is_some()
    }

    /// Abbreviated title such as `M.` or `Mme`, kept apart from the name.
    pub fn is_abbreviated_title(&self, word: &str) -> bool {
        self.titles
            .iter()
            .any(|t| t.form == word && (t.form.ends_with('.') || t.form.chars().count() <= 3))
    }

    pub fn is_particle(&self, word: &str) -> bool {
        self.particles.contains(&word.to_lowercase())
    }

    pub fn first_name(&self, name: &str) -> Option<(Gender, f64)> {
        self.first_names.get(&name.to_lowercase()).copied()
    }

    pub fn entity_overrides(&self) -> &[(String, EntityLabel)] {
        &self.entity_overrides
    }

    pub fn set_entity_overrides(&mut self, overrides: Vec<(String, EntityLabel)>) {
        self.entity_overrides = overrides;
    }

    pub fn gender_override(&self, representative: &str) -> Option<Gender> {
        self.gender_overrides.get(representative).copied()
    }

    pub fn set_gender_overrides(&mut self, overrides: HashMap<String, Gender>) {
        self.gender_overrides = overrides;
    }
}
