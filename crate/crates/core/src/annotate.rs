//! Per-article pipeline and its serialized record.

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::config::Pipeline;
use crate::coref::{chain_to_cluster, resolve};
use crate::doc_model::{AnnotatedDocument, CharSpan};
use crate::gender::{gender_partition, predict, Evidence, Gender, GenderLabel};
use crate::lexicon::{Lexicon, NounGender};
use crate::mention::mention_heads;
use crate::ner::person_entities;
use crate::quotes::{extract_all, Quote};
use crate::speakers::{map_speakers, merge_stats, MergeStats, MergeStep, ResolvedQuote};
use crate::unify::{unify, EntityCluster};

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("{doc_id}: {message}")]
    Failed { doc_id: String, message: String },
    #[error("bad annotation record: {0}")]
    Record(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleAnnotation {
    pub doc_id: String,
    pub outlet: String,
    pub published_at: NaiveDate,
    pub people_mentioned: Vec<String>,
    pub women_mentioned: Vec<String>,
    pub men_mentioned: Vec<String>,
    pub other_mentioned: Vec<String>,
    pub sources: Vec<String>,
    pub women_sources: Vec<String>,
    pub men_sources: Vec<String>,
    pub other_sources: Vec<String>,
    pub quotes: Vec<Quote>,
}

/// An annotation plus what was learned on the way.
#[derive(Debug, Clone)]
pub struct AnnotationReport {
    pub annotation: ArticleAnnotation,
    pub clusters: Vec<EntityCluster>,
    pub labels: Vec<GenderLabel>,
    pub merge_stats: MergeStats,
}

/// Gender carried by a person noun ("une infirmière"), from the lexicon or
/// from the morphology of the noun and its determiner.
pub fn grammatical_gender(doc: &AnnotatedDocument, lexicon: &Lexicon, head: usize) -> Option<Gender> {
    let t = doc.token(head);
    match lexicon.person_noun(&t.lemma)? {
        NounGender::Feminine => Some(Gender::Female),
        NounGender::Masculine => Some(Gender::Male),
        NounGender::Epicene => {
            let feats = std::iter::once(t.feat("Gender"))
                .chain(doc.children_with(head, "det").map(|d| doc.token(d).feat("Gender")));
            let mut found: Vec<Gender> = feats
                .flatten()
                .filter_map(|g| match g {
                    "Fem" => Some(Gender::Female),
                    "Masc" => Some(Gender::Male),
                    _ => None,
                })
                .collect();
            found.dedup();
            (found.len() == 1).then(|| found[0])
        }
    }
}

fn push_unique(list: &mut Vec<String>, name: &str) {
    if !list.iter().any(|n| n == name) {
        list.push(name.to_string());
    }
}

pub fn annotate(doc: &AnnotatedDocument, pipeline: &Pipeline) -> Result<ArticleAnnotation, AnnotateError> {
    annotate_report(doc, pipeline).map(|r| r.annotation)
}

/// Runs every stage; a failure in any of them is reported for this article
/// only.
pub fn annotate_report(doc: &AnnotatedDocument, pipeline: &Pipeline) -> Result<AnnotationReport, AnnotateError> {
    std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(doc, pipeline))).map_err(|e| {
        let message = e
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| e.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "pipeline stage panicked".to_string());
        AnnotateError::Failed {
            doc_id: doc.doc_id().to_string(),
            message,
        }
    })
}

fn run(doc: &AnnotatedDocument, pipeline: &Pipeline) -> AnnotationReport {
    let lx = &pipeline.lexicon;
    let entities = person_entities(doc, lx);
    let mentions = mention_heads(doc);
    let chains = resolve(doc, lx, &mentions, &entities.people);
    let spans: Vec<_> = chains.iter().map(|c| chain_to_cluster(doc, c)).collect();
    let clusters = unify(&entities.people, &spans, lx);
    let resolved: Vec<ResolvedQuote> = map_speakers(doc, lx, extract_all(doc, lx), &clusters);
    let labels: Vec<GenderLabel> = clusters
        .iter()
        .map(|c| predict(c, lx, &pipeline.providers, &pipeline.cache))
        .collect();

    let mut a = ArticleAnnotation {
        doc_id: doc.doc_id().to_string(),
        outlet: doc.outlet().to_string(),
        published_at: doc.published_at(),
        ..Default::default()
    };
    let people = gender_partition(&clusters, &labels);
    for c in &clusters {
        push_unique(&mut a.people_mentioned, &c.representative);
    }
    let gender_of = |name: &str| {
        clusters
            .iter()
            .zip(&labels)
            .find(|(c, _)| c.representative == name)
            .map(|(_, l)| l.value)
            .unwrap_or(Gender::Unknown)
    };
    let mut noun_sources: Vec<(String, Gender)> = Vec::new();
    for r in &resolved {
        let Some(reference) = &r.quote.reference else { continue };
        match r.step {
            MergeStep::HeadOverlap | MergeStep::Representative => push_unique(&mut a.sources, reference),
            MergeStep::IntroducingNoun => {
                let g = r.speaker_head.and_then(|h| grammatical_gender(doc, lx, h));
                if let Some(g) = g {
                    if !noun_sources.iter().any(|(n, _)| n == reference) && !a.people_mentioned.contains(reference) {
                        noun_sources.push((reference.clone(), g));
                    }
                    push_unique(&mut a.sources, reference);
                }
            }
            MergeStep::Unresolved => {}
        }
    }
    let label_of = |name: &str| {
        noun_sources
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, g)| g)
            .unwrap_or_else(|| gender_of(name))
    };
    a.women_mentioned = people.women;
    a.men_mentioned = people.men;
    a.other_mentioned = people.other;
    for (name, g) in &noun_sources {
        push_unique(&mut a.people_mentioned, name);
        let bucket = match g {
            Gender::Female => &mut a.women_mentioned,
            Gender::Male => &mut a.men_mentioned,
            _ => &mut a.other_mentioned,
        };
        push_unique(bucket, name);
    }
    for s in a.sources.clone() {
        let bucket = match label_of(&s) {
            Gender::Female => &mut a.women_sources,
            Gender::Male => &mut a.men_sources,
            _ => &mut a.other_sources,
        };
        bucket.push(s);
    }
    let merge_stats = merge_stats(&resolved);
    a.quotes = resolved.into_iter().map(|r| r.quote).collect();
    let mut labels = labels;
    labels.extend(noun_sources.iter().map(|&(_, g)| GenderLabel::new(g, Evidence::Grammatical, 1.0)));
    AnnotationReport {
        annotation: a,
        clusters,
        labels,
        merge_stats,
    }
}

/// Quote object as written to disk: every index is a `"(start, end)"` string
/// and absent values are empty strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuoteRecord {
    speaker: String,
    speaker_index: String,
    quote: String,
    quote_index: String,
    verb: String,
    verb_index: String,
    quote_token_count: usize,
    quote_type: String,
    is_floating_quote: bool,
    reference: String,
}

fn index_string(span: Option<CharSpan>) -> String {
    span.map(|s| s.to_string()).unwrap_or_default()
}

fn parse_index(s: &str) -> Result<Option<CharSpan>, String> {
    if s.is_empty() {
        return Ok(None);
    }
    let inner = s
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| format!("index {s:?} is not \"(start, end)\""))?;
    let (a, b) = inner.split_once(',').ok_or_else(|| format!("index {s:?} lacks a comma"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad start in {s:?}"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad end in {s:?}"))?;
    if b < a {
        return Err(format!("index {s:?} ends before it starts"));
    }
    Ok(Some(CharSpan::new(a, b)))
}

impl From<&Quote> for QuoteRecord {
    fn from(q: &Quote) -> Self {
        QuoteRecord {
            speaker: q.speaker.clone(),
            speaker_index: index_string(q.speaker_span),
            quote: q.quote.clone(),
            quote_index: index_string(Some(q.quote_span)),
            verb: q.verb.clone().unwrap_or_default(),
            verb_index: index_string(q.verb_span),
            quote_token_count: q.quote_token_count,
            quote_type: q.quote_type.clone(),
            is_floating_quote: q.is_floating,
            reference: q.reference.clone().unwrap_or_default(),
        }
    }
}

impl TryFrom<QuoteRecord> for Quote {
    type Error = String;

    fn try_from(r: QuoteRecord) -> Result<Self, String> {
        let verb_span = parse_index(&r.verb_index)?;
        Ok(Quote {
            speaker: r.speaker,
            speaker_span: parse_index(&r.speaker_index)?,
            quote: r.quote,
            quote_span: parse_index(&r.quote_index)?.ok_or("quote_index is empty")?,
            verb: verb_span.map(|_| r.verb),
            verb_span,
            quote_token_count: r.quote_token_count,
            quote_type: r.quote_type,
            is_floating: r.is_floating_quote,
            reference: Some(r.reference).filter(|s| !s.is_empty()),
        })
    }
}

impl Serialize for Quote {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        QuoteRecord::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Quote {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = QuoteRecord::deserialize(d)?;
        Quote::try_from(r).map_err(serde::de::Error::custom)
    }
}

pub fn serialize_annotation(a: &ArticleAnnotation) -> String {
    serde_json::to_string(a).expect("annotation serializes")
}

pub fn serialize_annotation_pretty(a: &ArticleAnnotation) -> String {
    serde_json::to_string_pretty(a).expect("annotation serializes")
}

pub fn parse_annotation(src: &str) -> Result<ArticleAnnotation, AnnotateError> {
    serde_json::from_str(src).map_err(|e| AnnotateError::Record(e.to_string()))
}
