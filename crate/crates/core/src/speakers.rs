//! Links each quote's speaker to an entity cluster.

use serde::{Deserialize, Serialize};

use crate::doc_model::{AnnotatedDocument, CharSpan};
use crate::lexicon::Lexicon;
use crate::mention::is_introducing_noun;
use crate::quotes::Quote;
use crate::unify::{strip_titles, EntityCluster};

/// Minimum character overlap between a speaker span and a mention head.
pub const MIN_HEAD_OVERLAP: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeStep {
    HeadOverlap,
    Representative,
    IntroducingNoun,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedQuote {
    pub quote: Quote,
    pub step: MergeStep,
    /// Token heading the speaker phrase, for step-3 references.
    pub speaker_head: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeStats {
    pub resolved_step1: usize,
    pub resolved_step2: usize,
    pub resolved_step3: usize,
    pub unresolved: usize,
}

/// Cluster whose mention has every head overlapping `speaker` by at least
/// two characters. Larger total overlap wins, then the later mention.
pub fn match_by_overlap(speaker: CharSpan, clusters: &[EntityCluster]) -> Option<usize> {
    let mut best: Option<(usize, usize, usize)> = None;
    for (ci, c) in clusters.iter().enumerate() {
        for heads in &c.mentions {
            if heads.is_empty() || heads.iter().any(|h| h.overlap(&speaker) < MIN_HEAD_OVERLAP) {
                continue;
            }
            let overlap: usize = heads.iter().map(|h| h.overlap(&speaker)).sum();
            let start = heads[0].start;
            if best.is_none_or(|(o, s, _)| (overlap, start) > (o, s)) {
                best = Some((overlap, start, ci));
            }
        }
    }
    best.map(|(_, _, ci)| ci)
}

pub fn match_by_name(speaker: &str, clusters: &[EntityCluster], lexicon: &Lexicon) -> Option<usize> {
    let key = strip_titles(speaker.trim(), lexicon).to_lowercase();
    if key.is_empty() {
        return None;
    }
    clusters.iter().position(|c| c.representative.to_lowercase() == key)
}

/// Token of `span` whose governor lies outside it.
pub fn span_head(doc: &AnnotatedDocument, span: CharSpan) -> Option<usize> {
    let toks = doc.tokens_in(span);
    let inside = |t: usize| toks.contains(&t);
    toks.clone()
        .find(|&t| {
            let tok = doc.token(t);
            !tok.is_punct() && (tok.is_root() || !inside(tok.head))
        })
}

pub fn map_speaker(doc: &AnnotatedDocument, lexicon: &Lexicon, quote: Quote, clusters: &[EntityCluster]) -> ResolvedQuote {
    let mut quote = quote;
    let Some(span) = quote.speaker_span.filter(|s| !s.is_empty()) else {
        quote.reference = None;
        return ResolvedQuote {
            quote,
            step: MergeStep::Unresolved,
            speaker_head: None,
        };
    };
    let head = span_head(doc, span);
    let (step, reference) = if let Some(ci) = match_by_overlap(span, clusters) {
        (MergeStep::HeadOverlap, Some(clusters[ci].representative.clone()))
    } else if let Some(ci) = match_by_name(&quote.speaker, clusters, lexicon) {
        (MergeStep::Representative, Some(clusters[ci].representative.clone()))
    } else if head.is_some_and(|h| is_introducing_noun(doc, lexicon, h)) {
        (MergeStep::IntroducingNoun, Some(quote.speaker.clone()))
    } else {
        (MergeStep::Unresolved, None)
    };
    quote.reference = reference;
    ResolvedQuote {
        quote,
        step,
        speaker_head: head,
    }
}

pub fn map_speakers(
    doc: &AnnotatedDocument,
    lexicon: &Lexicon,
    quotes: Vec<Quote>,
    clusters: &[EntityCluster],
) -> Vec<ResolvedQuote> {
    quotes.into_iter().map(|q| map_speaker(doc, lexicon, q, clusters)).collect()
}

pub fn merge_stats(quotes: &[ResolvedQuote]) -> MergeStats {
    let mut s = MergeStats::default();
    for q in quotes {
        match q.step {
            MergeStep::HeadOverlap => s.resolved_step1 += 1,
            MergeStep::Representative => s.resolved_step2 += 1,
            MergeStep::IntroducingNoun => s.resolved_step3 += 1,
            MergeStep::Unresolved => s.unresolved += 1,
        }
    }
    s
}
