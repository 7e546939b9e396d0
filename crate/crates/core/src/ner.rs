//! Repair of parser-provided PER entities.
//!
//! The parser's entity layer is independent of its dependency tree, so PER
//! spans often stop short of a title, miss the tail of a long or hyphenated
//! name, swallow a following prepositional phrase or run over punctuation.
//! [`person_entities`] applies, in order: label overrides, flat:name
//! boundary extension, hyphen extension, coordination, particle trimming and
//! character trimming.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::doc_model::{AnnotatedDocument, CharSpan, EntityLabel, Token};
use crate::lexicon::Lexicon;
use crate::mention::coordinated_siblings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Parser,
    Override,
    Boundary,
    Hyphen,
    Coordination,
    Particle,
    Trim,
    Title,
}

/// An entity candidate: a label over a token range, with its char span.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub label: EntityLabel,
    pub first: usize,
    pub last: usize,
    pub span: CharSpan,
    pub title: Option<String>,
    pub rules: Vec<Rule>,
}

impl Candidate {
    fn from_tokens(doc: &AnnotatedDocument, label: EntityLabel, first: usize, last: usize, rule: Rule) -> Self {
        Candidate {
            label,
            first,
            last,
            span: CharSpan::new(doc.token(first).span.start, doc.token(last).span.end),
            title: None,
            rules: vec![rule],
        }
    }

    fn set_range(&mut self, doc: &AnnotatedDocument, first: usize, last: usize, rule: Rule) {
        if (first, last) != (self.first, self.last) {
            self.first = first;
            self.last = last;
            self.span = CharSpan::new(doc.token(first).span.start, doc.token(last).span.end);
            self.rules.push(rule);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonEntity {
    pub first_token: usize,
    pub last_token: usize,
    pub span: CharSpan,
    pub text: String,
    /// Title found in or right before the name (`M.`, `Madame`, `Maître`).
    pub title: Option<String>,
    /// Rule that created the entity.
    pub source_rule: Rule,
    /// Rules that changed it afterwards, in application order.
    pub modified_by: Vec<Rule>,
    /// A coordination of several people ("X et Y").
    pub group: bool,
}

impl PersonEntity {
    pub fn tokens(&self) -> std::ops::RangeInclusive<usize> {
        self.first_token..=self.last_token
    }
}

/// Individual people plus the coordinated groups they form. Groups overlap
/// their members and never take part in clustering.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RefinedEntities {
    pub people: Vec<PersonEntity>,
    pub groups: Vec<PersonEntity>,
}

pub fn parser_candidates(doc: &AnnotatedDocument) -> Vec<Candidate> {
    doc.entities()
        .iter()
        .map(|e| Candidate {
            label: e.label,
            first: e.first_token,
            last: e.last_token,
            span: e.span,
            title: None,
            rules: vec![Rule::Parser],
        })
        .collect()
}

pub fn apply_overrides(doc: &AnnotatedDocument, candidates: Vec<Candidate>, ruleset: &[(String, EntityLabel)]) -> Vec<Candidate> {
    candidates
        .into_iter()
        .map(|mut c| {
            let surface = doc.slice(c.span);
            if let Some((_, label)) = ruleset.iter().find(|(s, _)| s == surface) {
                if *label != c.label {
                    c.label = *label;
                    c.rules.push(Rule::Override);
                }
            }
            c
        })
        .collect()
}

fn flat_linked(doc: &AnnotatedDocument, a: usize, b: usize) -> bool {
    let (ta, tb) = (doc.token(a), doc.token(b));
    (ta.head == b && ta.base_deprel() == "flat") || (tb.head == a && tb.base_deprel() == "flat")
}

/// Token `t` is joined by flat:name to some token of `first..=last`.
fn linked_to_range(doc: &AnnotatedDocument, t: usize, first: usize, last: usize) -> bool {
    (first..=last).any(|e| flat_linked(doc, t, e))
}

pub fn extend_boundaries(doc: &AnnotatedDocument, lexicon: &Lexicon, mut c: Candidate) -> Candidate {
    let (mut first, mut last) = (c.first, c.last);
    let sentence = doc.token(first).sentence;
    while first > 0 {
        let prev = first - 1;
        let t = doc.token(prev);
        if t.sentence != sentence || !lexicon.is_title(&t.text) || !linked_to_range(doc, prev, first, last) {
            break;
        }
        first = prev;
    }
    while last + 1 < doc.tokens().len() {
        let next = last + 1;
        let t = doc.token(next);
        if t.sentence != sentence || !t.is_capitalized() || !linked_to_range(doc, next, first, last) {
            break;
        }
        last = next;
    }
    c.set_range(doc, first, last, Rule::Boundary);
    c
}

fn is_hyphen(t: &Token) -> bool {
    t.text == "-" || t.text == "‐"
}

fn touches(a: &Token, b: &Token) -> bool {
    a.span.end == b.span.start
}

/// Capitalized token or a hyphen-prefixed capitalized token ("-Pellerin").
fn is_name_piece(t: &Token) -> bool {
    t.is_capitalized() || t.text.strip_prefix('-').is_some_and(|r| r.chars().next().is_some_and(char::is_uppercase))
}

pub fn extend_hyphenated(doc: &AnnotatedDocument, mut c: Candidate) -> Candidate {
    let n = doc.tokens().len();
    let sentence = doc.token(c.last).sentence;
    let same_sentence = |i: usize| i < n && doc.token(i).sentence == sentence;
    let starts_hyphen = |i: usize| {
        same_sentence(i) && {
            let t = doc.token(i);
            (is_hyphen(t) && (touches(doc.token(i - 1), t) || (i + 1 < n && touches(t, doc.token(i + 1)))))
                || (t.text.starts_with('-') && is_name_piece(t))
        }
    };
    let anchor = if starts_hyphen(c.last + 1) {
        Some(c.last + 1)
    } else if same_sentence(c.last + 1)
        && is_name_piece(doc.token(c.last + 1))
        && !doc.token(c.last + 1).is_punct()
        && starts_hyphen(c.last + 2)
    {
        Some(c.last + 2)
    } else {
        None
    };
    let Some(mut i) = anchor else { return c };
    let mut last = i - 1;
    while same_sentence(i) {
        let t = doc.token(i);
        if is_hyphen(t) {
            i += 1;
            continue;
        }
        if !is_name_piece(t) {
            break;
        }
        last = i;
        i += 1;
    }
    if last > c.last {
        let first = c.first;
        c.set_range(doc, first, last, Rule::Hyphen);
    }
    c
}

/// Token of `first..=last` whose head lies outside the range.
pub fn range_head(doc: &AnnotatedDocument, first: usize, last: usize) -> usize {
    (first..=last)
        .find(|&i| {
            let t = doc.token(i);
            t.is_root() || t.head < first || t.head > last
        })
        .unwrap_or(first)
}

/// Contiguous phrase of a coordinated sibling, without a leading coordinator
/// or punctuation.
fn sibling_phrase(doc: &AnnotatedDocument, sibling: usize) -> (usize, usize) {
    let sub = doc.subtree(sibling);
    let inside = |t: usize| sub.binary_search(&t).is_ok() && !matches!(doc.token(t).base_deprel(), "cc" | "punct" | "conj");
    let (mut first, mut last) = (sibling, sibling);
    while first > 0 && inside(first - 1) {
        first -= 1;
    }
    while inside(last + 1) {
        last += 1;
    }
    (first, last)
}

/// Group entities for PER candidates whose head has coordinated siblings.
pub fn add_coordinated(doc: &AnnotatedDocument, people: &[Candidate]) -> Vec<Candidate> {
    let mut groups: Vec<Candidate> = Vec::new();
    for c in people.iter().filter(|c| c.label == EntityLabel::Per) {
        let head = range_head(doc, c.first, c.last);
        let siblings = coordinated_siblings(doc, head);
        if siblings.is_empty() {
            continue;
        }
        let (mut first, mut last) = (c.first, c.last);
        for s in siblings {
            let (sf, sl) = match people.iter().find(|p| p.label == EntityLabel::Per && (p.first..=p.last).contains(&s)) {
                Some(p) => (p.first, p.last),
                None => sibling_phrase(doc, s),
            };
            first = first.min(sf);
            last = last.max(sl);
        }
        if !groups.iter().any(|g| g.first == first && g.last == last) {
            groups.push(Candidate::from_tokens(doc, EntityLabel::Per, first, last, Rule::Coordination));
        }
    }
    groups
}

fn is_url_or_email(s: &str) -> bool {
    s.contains('@') || s.contains("://") || s.to_lowercase().starts_with("www.")
}

/// Proper noun, capitalized, not all-caps, not an address.
pub fn is_name_token(t: &Token) -> bool {
    let letters: Vec<char> = t.text.chars().filter(|c| c.is_alphabetic()).collect();
    let all_caps = letters.len() > 1 && letters.iter().all(|c| c.is_uppercase());
    t.pos == "PROPN" && t.is_capitalized() && !all_caps && !is_url_or_email(&t.text)
}

fn is_de(t: &Token) -> bool {
    matches!(t.text.to_lowercase().as_str(), "de" | "d'" | "d’" | "du" | "des")
}

/// Cuts the entity before the first adpositional phrase that is not a
/// nobility particle introducing a name.
pub fn trim_adpositions(doc: &AnnotatedDocument, lexicon: &Lexicon, mut c: Candidate) -> Candidate {
    for i in c.first + 1..=c.last {
        let t = doc.token(i);
        if t.pos != "ADP" {
            continue;
        }
        // foreign particles (von, van, bin) are tagged ADP by some parsers
        if lexicon.is_particle(&t.text) && !is_de(t) {
            continue;
        }
        let phrase: Vec<&Token> = (i + 1..=c.last).map(|j| doc.token(j)).collect();
        let keeps = is_de(t)
            && phrase.iter().any(|p| is_name_token(p))
            && phrase.iter().all(|p| is_name_token(p) || (lexicon.is_particle(&p.text) && p.pos != "NOUN"));
        if keeps {
            continue;
        }
        if i == c.first {
            break;
        }
        let first = c.first;
        c.set_range(doc, first, i - 1, Rule::Particle);
        break;
    }
    c
}

fn valid_name_char(ch: char) -> bool {
    ch.is_alphabetic() || ch == '-' || (ch.is_whitespace() && ch != '\n' && ch != '\r' && ch != '\u{2028}')
}

/// Character-level trimming: strip invalid characters at both ends, then
/// cut at the first invalid character left inside. `None` if nothing remains.
pub fn trim_chars(text: &str, span: CharSpan) -> Option<CharSpan> {
    let chars: Vec<char> = text.chars().collect();
    let mut s = 0;
    let mut e = chars.len();
    while s < e && !chars[s].is_alphabetic() {
        s += 1;
    }
    if let Some(bad) = (s..e).find(|&i| !valid_name_char(chars[i])) {
        e = bad;
    }
    while e > s && !chars[e - 1].is_alphabetic() {
        e -= 1;
    }
    (s < e).then(|| CharSpan::new(span.start + s, span.start + e))
}

/// Moves a leading abbreviated title out of the entity, and records a title
/// token sitting right before it.
fn take_title(doc: &AnnotatedDocument, lexicon: &Lexicon, c: &mut Candidate) {
    let first = doc.token(c.first);
    if lexicon.is_abbreviated_title(&first.text) && c.first < c.last {
        c.title = Some(first.text.clone());
        let (f, l) = (c.first + 1, c.last);
        c.set_range(doc, f, l, Rule::Title);
    } else if lexicon.is_title(&first.text) && c.first < c.last {
        c.title = Some(first.text.clone());
    } else if c.first > 0 {
        let prev = doc.token(c.first - 1);
        if prev.sentence == first.sentence && lexicon.is_title(&prev.text) {
            c.title = Some(prev.text.clone());
        }
    }
}

fn finish(doc: &AnnotatedDocument, lexicon: &Lexicon, mut c: Candidate, group: bool) -> Option<PersonEntity> {
    if !group {
        take_title(doc, lexicon, &mut c);
    }
    let raw = doc.slice(c.span);
    let Some(span) = trim_chars(raw, c.span) else {
        debug!("{}: dropped entity {raw:?} (nothing left after trimming)", doc.doc_id());
        return None;
    };
    if span != c.span {
        c.rules.push(Rule::Trim);
    }
    let tokens = doc.tokens_in(span);
    if tokens.is_empty() {
        return None;
    }
    Some(PersonEntity {
        first_token: tokens.start,
        last_token: tokens.end - 1,
        span,
        text: doc.slice(span).to_string(),
        title: c.title,
        source_rule: c.rules[0],
        modified_by: c.rules[1..].to_vec(),
        group,
    })
}

/// Keeps the longest of overlapping entities; ties go to the earlier one.
fn resolve_overlaps(mut ents: Vec<PersonEntity>) -> Vec<PersonEntity> {
    ents.sort_by(|a, b| b.span.len().cmp(&a.span.len()).then(a.span.start.cmp(&b.span.start)));
    let mut kept: Vec<PersonEntity> = Vec::new();
    for e in ents {
        if kept.iter().all(|k| k.span.overlap(&e.span) == 0) {
            kept.push(e);
        } else {
            debug!("dropped overlapping entity {:?}", e.text);
        }
    }
    kept.sort_by_key(|e| e.span.start);
    kept
}

pub fn person_entities(doc: &AnnotatedDocument, lexicon: &Lexicon) -> RefinedEntities {
    let candidates = apply_overrides(doc, parser_candidates(doc), lexicon.entity_overrides());
    let per: Vec<Candidate> = candidates
        .into_iter()
        .filter(|c| c.label == EntityLabel::Per)
        .map(|c| extend_boundaries(doc, lexicon, c))
        .map(|c| extend_hyphenated(doc, c))
        .collect();
    let groups = add_coordinated(doc, &per);
    let people = per
        .into_iter()
        .map(|c| trim_adpositions(doc, lexicon, c))
        .filter_map(|c| finish(doc, lexicon, c, false))
        .collect();
    let mut groups: Vec<PersonEntity> = groups.into_iter().filter_map(|c| finish(doc, lexicon, c, true)).collect();
    groups.sort_by_key(|g| (g.span.start, g.span.end));
    groups.dedup_by_key(|g| g.span);
    RefinedEntities {
        people: resolve_overlaps(people),
        groups,
    }
}
