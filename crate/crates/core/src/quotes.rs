//! Quote extraction.
//!
//! Five routes produce quotes:
//!
//! - direct: text between matched quotation marks, attributed through an
//!   allow-listed verb attached to the quoted material;
//! - incise: a direct quote with an inverted `, dit-il` group inside the
//!   marks, split around that group;
//! - floating: a fully quoted sentence with no verb of its own, attributed to
//!   the most recent speaker;
//! - indirect: an allow-listed verb with a clausal complement, or an inverted
//!   verb in parataxis (`Il pleut, dit-elle.`);
//! - selon: a `selon <person>` phrase and its host clause.
//!
//! `quote_type` holds the linear order of speaker (S), verb (V) and content
//! (Q for direct quotes, C for indirect ones), or `selon`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::doc_model::{AnnotatedDocument, CharSpan, EntityLabel, Token};
use crate::lexicon::Lexicon;
use crate::mention::is_personal_pronoun;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuoteKind {
    Direct,
    Indirect,
    Selon,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quote {
    pub speaker: String,
    pub speaker_span: Option<CharSpan>,
    pub quote: String,
    pub quote_span: CharSpan,
    pub verb: Option<String>,
    pub verb_span: Option<CharSpan>,
    pub quote_token_count: usize,
    /// Structure code such as `QVS`, `SVC` or `selon`.
    pub quote_type: String,
    pub is_floating: bool,
    pub reference: Option<String>,
}

impl Quote {
    pub fn kind(&self) -> QuoteKind {
        if self.quote_type == "selon" {
            QuoteKind::Selon
        } else if self.quote_type.contains('C') {
            QuoteKind::Indirect
        } else {
            QuoteKind::Direct
        }
    }
}

/// How a quote was found; decides which of two identical spans survives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Origin {
    Floating,
    Direct,
    Incise,
    Indirect,
    Selon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mark {
    Guillemet,
    Curly,
    Straight,
}

/// A matched pair of quotation marks; `close` is the closing mark offset, or
/// the paragraph end for an unbalanced opener.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarkPair {
    pub open: usize,
    pub close: usize,
    pub balanced: bool,
}

impl MarkPair {
    /// Marks included.
    pub fn outer(&self) -> CharSpan {
        CharSpan::new(self.open, (self.close + 1).max(self.open + 1))
    }

    pub fn inner(&self) -> CharSpan {
        CharSpan::new(self.open + 1, self.close.max(self.open + 1))
    }
}

fn classify(c: char) -> Option<(Mark, Option<bool>)> {
    match c {
        '«' => Some((Mark::Guillemet, Some(true))),
        '»' => Some((Mark::Guillemet, Some(false))),
        '“' => Some((Mark::Curly, Some(true))),
        '”' => Some((Mark::Curly, Some(false))),
        '"' => Some((Mark::Straight, None)),
        _ => None,
    }
}

/// Outermost matched quotation-mark pairs, nesting respected.
pub fn mark_pairs(text: &str) -> Vec<MarkPair> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut stack: Vec<(Mark, usize)> = Vec::new();
    let close_unbalanced = |stack: &mut Vec<(Mark, usize)>, out: &mut Vec<MarkPair>, end: usize| {
        if let Some(&(_, open)) = stack.first() {
            let mut close = end;
            while close > open + 1 && chars[close - 1].is_whitespace() {
                close -= 1;
            }
            warn!("unbalanced quotation mark at offset {open}, closed at paragraph end");
            out.push(MarkPair {
                open,
                close,
                balanced: false,
            });
        }
        stack.clear();
    };
    for (i, &c) in chars.iter().enumerate() {
        if c == '\n' {
            close_unbalanced(&mut stack, &mut out, i);
            continue;
        }
        let Some((mark, opening)) = classify(c) else { continue };
        let opening = opening.unwrap_or_else(|| stack.last().is_none_or(|&(m, _)| m != Mark::Straight));
        if opening {
            stack.push((mark, i));
            continue;
        }
        let Some(depth) = stack.iter().rposition(|&(m, _)| m == mark) else { continue };
        stack.truncate(depth + 1);
        let (_, open) = stack.pop().expect("depth is in range");
        if stack.is_empty() {
            out.push(MarkPair {
                open,
                close: i,
                balanced: true,
            });
        }
    }
    close_unbalanced(&mut stack, &mut out, chars.len());
    out
}

fn trim_span(doc: &AnnotatedDocument, span: CharSpan) -> Option<CharSpan> {
    let text: Vec<char> = doc.slice(span).chars().collect();
    let s = text.iter().position(|c| !c.is_whitespace())?;
    let e = text.iter().rposition(|c| !c.is_whitespace())? + 1;
    Some(CharSpan::new(span.start + s, span.start + e))
}

fn structure(parts: &[(char, Option<CharSpan>)]) -> String {
    let mut present: Vec<(usize, char)> = parts
        .iter()
        .filter_map(|&(c, s)| s.filter(|s| !s.is_empty()).map(|s| (s.start, c)))
        .collect();
    present.sort();
    present.into_iter().map(|(_, c)| c).collect()
}

fn make_quote(
    doc: &AnnotatedDocument,
    content: CharSpan,
    content_code: char,
    speaker: Option<CharSpan>,
    verb: Option<CharSpan>,
) -> Quote {
    let quote = doc.slice(content).to_string();
    Quote {
        speaker: speaker.map(|s| doc.slice(s).to_string()).unwrap_or_default(),
        speaker_span: speaker,
        quote_token_count: quote.split_whitespace().count(),
        quote,
        quote_span: content,
        verb: verb.map(|v| doc.slice(v).to_string()),
        verb_span: verb,
        quote_type: structure(&[('S', speaker), ('V', verb), (content_code, Some(content))]),
        is_floating: false,
        reference: None,
    }
}

fn is_mark(t: &Token) -> bool {
    t.text.chars().all(|c| classify(c).is_some())
}

/// Contiguous span of `tokens` with edge punctuation dropped. Quotation
/// marks are kept unless `drop_marks`.
fn tokens_extent(doc: &AnnotatedDocument, tokens: &[usize], drop_marks: bool) -> Option<CharSpan> {
    let keep = |&&t: &&usize| {
        let tok = doc.token(t);
        !tok.is_punct() || (!drop_marks && is_mark(tok))
    };
    let first = tokens.iter().find(keep)?;
    let last = tokens.iter().rev().find(keep)?;
    let mut span = CharSpan::new(doc.token(*first).span.start, doc.token(*last).span.end);
    if !drop_marks {
        // a dangling mark at either edge is dropped again
        let inner = doc.slice(span);
        let pairs = mark_pairs(inner);
        let n = inner.chars().count();
        let first_c = inner.chars().next().and_then(classify);
        let last_c = inner.chars().last().and_then(classify);
        if first_c.is_some() && !pairs.iter().any(|p| p.open == 0 && p.balanced) {
            span.start += 1;
        }
        if last_c.is_some() && !pairs.iter().any(|p| p.close + 1 == n && p.balanced) && span.len() > 1 {
            span.end -= 1;
        }
        span = trim_span(doc, span)?;
    }
    Some(span)
}

/// Subject subtree of `verb`, minus anything inside `exclude`.
fn subject_span(doc: &AnnotatedDocument, verb: usize, exclude: Option<CharSpan>) -> Option<CharSpan> {
    let subj = doc.children_with(verb, "nsubj").next()?;
    let toks: Vec<usize> = doc
        .subtree(subj)
        .into_iter()
        .filter(|&t| exclude.is_none_or(|x| x.overlap(&doc.token(t).span) == 0))
        .collect();
    let span = tokens_extent(doc, &toks, true)?;
    Some(clitic_span(doc.token(subj)).filter(|_| toks.len() == 1).unwrap_or(span))
}

/// `-il`, `-t-elle`: the pronoun part of a hyphenated clitic.
fn clitic_span(t: &Token) -> Option<CharSpan> {
    let chars: Vec<char> = t.text.chars().collect();
    if chars.first() != Some(&'-') {
        return None;
    }
    let cut = chars.iter().rposition(|&c| c == '-')? + 1;
    (cut < chars.len()).then(|| CharSpan::new(t.span.start + cut, t.span.end))
}

fn is_inverted_clitic(t: &Token) -> bool {
    let lower = t.text.to_lowercase();
    let core = lower.strip_prefix("-t-").or_else(|| lower.strip_prefix('-'));
    matches!(core, Some("il" | "elle" | "ils" | "elles" | "on"))
}

fn inside(span: CharSpan, t: &Token) -> bool {
    span.covers(&t.span)
}

/// Allow-listed verb attached to the quoted material from outside the marks,
/// in the sentence where the quote opens or closes.
fn outer_verb(doc: &AnnotatedDocument, lexicon: &Lexicon, region: CharSpan) -> Option<usize> {
    let toks = doc.tokens_in(region);
    if toks.is_empty() {
        return None;
    }
    let sentences = [doc.token(toks.start).sentence, doc.token(toks.end - 1).sentence];
    let mut candidates = Vec::new();
    for t in toks.clone() {
        if !inside(region, doc.token(t)) {
            continue;
        }
        if let Some(&a) = doc.ancestors(t).iter().find(|&&a| !inside(region, doc.token(a))) {
            candidates.push(a);
        }
        candidates.extend(doc.children(t).iter().copied().filter(|&c| !inside(region, doc.token(c))));
    }
    candidates
        .into_iter()
        .filter(|&c| sentences.contains(&doc.token(c).sentence) && lexicon.quote_verb(doc.token(c)).is_some())
        .min_by_key(|&c| {
            let s = doc.token(c).span;
            let dist = if s.end <= region.start { region.start - s.end } else { s.start.saturating_sub(region.end) };
            (dist, c)
        })
}

#[derive(Debug, Clone, Copy)]
struct Incise {
    comma: usize,
    verb: usize,
    clitic: usize,
}

fn find_incise(doc: &AnnotatedDocument, lexicon: &Lexicon, inner: CharSpan) -> Option<Incise> {
    let toks = doc.tokens_in(inner);
    (toks.start..toks.end.saturating_sub(2)).find_map(|i| {
        let (c, v, k) = (doc.token(i), doc.token(i + 1), doc.token(i + 2));
        (c.text == "," && lexicon.quote_verb(v).is_some() && is_inverted_clitic(k) && inside(inner, k))
            .then_some(Incise {
                comma: i,
                verb: i + 1,
                clitic: i + 2,
            })
    })
}

/// Quote pair covers every word of the sentences it touches.
fn covers_sentences(doc: &AnnotatedDocument, pair: &MarkPair) -> bool {
    let region = pair.outer();
    let toks = doc.tokens_in(region);
    if toks.is_empty() {
        return false;
    }
    let (s0, s1) = (doc.token(toks.start).sentence, doc.token(toks.end - 1).sentence);
    (s0..=s1).all(|s| {
        doc.sentence_tokens(s)
            .map(|t| doc.token(t))
            .all(|t| t.is_punct() || inside(region, t))
    })
}

pub fn extract_direct(doc: &AnnotatedDocument, lexicon: &Lexicon) -> Vec<Quote> {
    let mut out = Vec::new();
    for pair in mark_pairs(doc.text()) {
        let Some(content) = trim_span(doc, pair.inner()) else { continue };
        if find_incise(doc, lexicon, content).is_some() {
            continue;
        }
        let Some(verb) = outer_verb(doc, lexicon, pair.outer()) else { continue };
        let speaker = subject_span(doc, verb, Some(pair.outer()));
        out.push(make_quote(doc, content, 'Q', speaker, Some(doc.token(verb).span)));
    }
    out
}

pub fn extract_incise(doc: &AnnotatedDocument, lexicon: &Lexicon) -> Vec<Quote> {
    let mut out = Vec::new();
    for pair in mark_pairs(doc.text()) {
        let Some(content) = trim_span(doc, pair.inner()) else { continue };
        let Some(inc) = find_incise(doc, lexicon, content) else { continue };
        let verb = doc.token(inc.verb).span;
        let clitic = doc.token(inc.clitic);
        let speaker = clitic_span(clitic).unwrap_or(clitic.span);
        let before = CharSpan::new(content.start, doc.token(inc.comma).span.start);
        if let Some(b) = trim_span(doc, before).filter(|s| !s.is_empty()) {
            out.push(make_quote(doc, b, 'Q', Some(speaker), Some(verb)));
        }
        let mut next = inc.clitic + 1;
        if next < doc.tokens().len() && matches!(doc.token(next).text.as_str(), "," | ".") {
            next += 1;
        }
        if next < doc.tokens().len() && doc.token(next).span.start < content.end {
            let after = CharSpan::new(doc.token(next).span.start, content.end);
            if let Some(a) = trim_span(doc, after) {
                out.push(make_quote(doc, a, 'Q', Some(speaker), Some(verb)));
            }
        }
    }
    out
}

/// PER-entity subjects, as `(span, text)` candidates for floating quotes.
fn named_subjects(doc: &AnnotatedDocument) -> Vec<CharSpan> {
    doc.entities()
        .iter()
        .filter(|e| e.label == EntityLabel::Per)
        .filter(|e| e.tokens().any(|t| doc.token(t).base_deprel() == "nsubj"))
        .map(|e| e.span)
        .collect()
}

pub fn extract_floating(doc: &AnnotatedDocument, lexicon: &Lexicon, prior: &[Quote]) -> Vec<Quote> {
    let subjects = named_subjects(doc);
    let mut out: Vec<Quote> = Vec::new();
    for pair in mark_pairs(doc.text()) {
        let Some(content) = trim_span(doc, pair.inner()) else { continue };
        if find_incise(doc, lexicon, content).is_some()
            || outer_verb(doc, lexicon, pair.outer()).is_some()
            || !covers_sentences(doc, &pair)
        {
            continue;
        }
        let quoted = prior
            .iter()
            .chain(out.iter())
            .filter(|q| !q.is_floating || q.speaker_span.is_some())
            .filter(|q| q.quote_span.start < pair.open)
            .filter_map(|q| q.speaker_span.map(|s| (q.quote_span.start.max(s.start), s)));
        let named = subjects.iter().filter(|s| s.end <= pair.open).map(|&s| (s.start, s));
        let speaker = quoted.chain(named).max_by_key(|&(at, s)| (at, s.start)).map(|(_, s)| s);
        let mut q = make_quote(doc, content, 'Q', speaker, None);
        q.quote_type = "Q".to_string();
        q.is_floating = true;
        out.push(q);
    }
    out
}

fn strip_complementizer(doc: &AnnotatedDocument, clause: usize) -> Vec<usize> {
    let marks: Vec<usize> = doc
        .children_with(clause, "mark")
        .filter(|&m| matches!(doc.token(m).lemma.to_lowercase().as_str(), "que" | "qu'" | "qu’"))
        .collect();
    doc.subtree(clause).into_iter().filter(|t| !marks.contains(t)).collect()
}

pub fn extract_indirect(doc: &AnnotatedDocument, lexicon: &Lexicon) -> Vec<Quote> {
    let mut out = Vec::new();
    for v in doc.tokens() {
        if lexicon.quote_verb(v).is_none() {
            continue;
        }
        let verb_span = Some(v.span);
        for c in doc.children_with(v.index, "ccomp") {
            let toks = strip_complementizer(doc, c);
            let Some(content) = tokens_extent(doc, &toks, false) else { continue };
            let speaker = subject_span(doc, v.index, Some(content));
            out.push(make_quote(doc, content, 'C', speaker, verb_span));
        }
        // inverted: "Il pleut, dit-elle."
        if v.base_deprel() == "parataxis" && !v.is_root() {
            let Some(subj) = doc.children_with(v.index, "nsubj").next() else { continue };
            if subj < v.index {
                continue;
            }
            let own = doc.subtree(v.index);
            let toks: Vec<usize> = doc
                .subtree(v.head)
                .into_iter()
                .filter(|t| *t < v.index && !own.contains(t))
                .collect();
            let Some(content) = tokens_extent(doc, &toks, false) else { continue };
            let speaker = subject_span(doc, v.index, Some(content));
            out.push(make_quote(doc, content, 'C', speaker, verb_span));
        }
    }
    out
}

/// Noun phrase that can denote a person: pronoun, person noun, title or a
/// PER entity.
fn person_compatible(doc: &AnnotatedDocument, lexicon: &Lexicon, head: usize) -> bool {
    let t = doc.token(head);
    if t.pos == "PRON" {
        return is_personal_pronoun(t);
    }
    if lexicon.is_title(&t.text) || (t.pos == "NOUN" && lexicon.person_noun(&t.lemma).is_some()) {
        return true;
    }
    let mut toks: Vec<usize> = doc.children_with(head, "flat").collect();
    toks.push(head);
    doc.entities().iter().any(|e| e.label == EntityLabel::Per && toks.iter().any(|x| e.tokens().contains(x)))
}

pub fn extract_selon(doc: &AnnotatedDocument, lexicon: &Lexicon) -> Vec<Quote> {
    let mut out = Vec::new();
    for s in doc.tokens() {
        if s.text.to_lowercase() != "selon" || s.base_deprel() != "case" || s.is_root() {
            continue;
        }
        let np = s.head;
        if !person_compatible(doc, lexicon, np) {
            continue;
        }
        let phrase = doc.subtree(np);
        let speaker_toks: Vec<usize> = phrase.iter().copied().filter(|&t| t != s.index).collect();
        let Some(speaker) = tokens_extent(doc, &speaker_toks, true) else { continue };
        let host = doc.token(np).head;
        if host == np {
            continue;
        }
        let (p0, p1) = (*phrase.first().expect("subtree has its root"), *phrase.last().expect("subtree has its root"));
        let host_toks = doc.subtree(host);
        let after: Vec<usize> = host_toks.iter().copied().filter(|&t| t > p1).collect();
        let before: Vec<usize> = host_toks.iter().copied().filter(|&t| t < p0).collect();
        let side = if s.index == p0 && after.iter().any(|&t| !doc.token(t).is_punct()) && (before.is_empty() || p0 < host) {
            after
        } else {
            before
        };
        let Some(content) = tokens_extent(doc, &side, false) else { continue };
        let mut q = make_quote(doc, content, 'C', Some(speaker), None);
        q.quote_type = "selon".to_string();
        out.push(q);
    }
    out
}

/// Drops duplicates: identical spans keep the best origin, and indirect or
/// selon quotes mostly covered by a quoted span are dropped.
pub fn deduplicate(mut found: Vec<(Origin, Quote)>) -> Vec<Quote> {
    found.sort_by_key(|(o, q)| (q.quote_span, *o));
    found.dedup_by(|b, a| a.1.quote_span == b.1.quote_span);
    let marked: Vec<CharSpan> = found
        .iter()
        .filter(|(o, _)| matches!(o, Origin::Direct | Origin::Incise | Origin::Floating))
        .map(|(_, q)| q.quote_span)
        .collect();
    let mut out: Vec<Quote> = found
        .into_iter()
        .filter(|(o, q)| {
            !matches!(o, Origin::Indirect | Origin::Selon)
                || marked.iter().all(|m| 2 * m.overlap(&q.quote_span) < q.quote_span.len())
        })
        .map(|(_, q)| q)
        .collect();
    out.sort_by_key(|q| (q.quote_span.start, q.quote_span.end));
    out
}

pub fn extract_all(doc: &AnnotatedDocument, lexicon: &Lexicon) -> Vec<Quote> {
    let mut found: Vec<(Origin, Quote)> = Vec::new();
    found.extend(extract_direct(doc, lexicon).into_iter().map(|q| (Origin::Direct, q)));
    found.extend(extract_incise(doc, lexicon).into_iter().map(|q| (Origin::Incise, q)));
    found.extend(extract_indirect(doc, lexicon).into_iter().map(|q| (Origin::Indirect, q)));
    found.extend(extract_selon(doc, lexicon).into_iter().map(|q| (Origin::Selon, q)));
    let prior: Vec<Quote> = found.iter().map(|(_, q)| q.clone()).collect();
    found.extend(extract_floating(doc, lexicon, &prior).into_iter().map(|q| (Origin::Floating, q)));
    deduplicate(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mark_matching() {
        let t = "«a “b” c» d \"e\" «f";
        let pairs = mark_pairs(t);
        assert_eq!(pairs.len(), 3);
        assert_eq!((pairs[0].open, pairs[0].close, pairs[0].balanced), (0, 8, true));
        assert_eq!((pairs[1].open, pairs[1].close), (12, 14));
        assert_eq!((pairs[2].open, pairs[2].close, pairs[2].balanced), (16, 18, false));
        assert!(mark_pairs("l'homme d'État").is_empty());
        // an unbalanced opener stops at the paragraph end
        let p = mark_pairs("«oui \nnon»");
        assert_eq!((p[0].close, p[0].balanced), (4, false));
    }

    #[test]
    fn structure_codes() {
        let s = |a, b| Some(CharSpan::new(a, b));
        assert_eq!(structure(&[('S', s(20, 25)), ('V', s(14, 19)), ('C', s(0, 12))]), "CVS");
        assert_eq!(structure(&[('S', s(0, 4)), ('V', s(5, 8)), ('C', s(9, 20))]), "SVC");
        assert_eq!(structure(&[('S', None), ('V', None), ('Q', s(1, 5))]), "Q");
    }
}
