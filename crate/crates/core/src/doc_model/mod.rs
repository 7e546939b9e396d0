//! Annotated-document data model and its JSON interchange format.
//!
//! An [`AnnotatedDocument`] carries one article together with the output of an
//! external parsing pipeline: tokens with lemmas, universal POS tags,
//! morphology and dependency arcs, named-entity spans and, optionally,
//! coreference chains. Every downstream stage reads these types and nothing
//! else.
//!
//! All offsets count Unicode scalar values (`char`s), never bytes.

pub mod conllu;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Half-open character range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end, "span start {start} after end {end}");
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, offset: usize) -> bool {
        self.start <= offset && offset < self.end
    }

    /// True when `other` lies entirely inside `self`.
    pub fn covers(&self, other: &CharSpan) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlap(&self, other: &CharSpan) -> usize {
        span_overlap(*self, *other)
    }

    /// Smallest span covering both.
    pub fn union(&self, other: &CharSpan) -> CharSpan {
        CharSpan::new(self.start.min(other.start), self.end.max(other.end))
    }
}

impl fmt::Display for CharSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.start, self.end)
    }
}

/// Number of characters shared by two spans; touching spans share none.
pub fn span_overlap(a: CharSpan, b: CharSpan) -> usize {
    a.end.min(b.end).saturating_sub(a.start.max(b.start))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub index: usize,
    pub text: String,
    pub lemma: String,
    pub pos: String,
    pub morph: BTreeMap<String, String>,
    /// Index of the syntactic head; equal to `index` for a sentence root.
    pub head: usize,
    pub deprel: String,
    pub span: CharSpan,
    pub sentence: usize,
}

impl Token {
    pub fn feat(&self, key: &str) -> Option<&str> {
        self.morph.get(key).map(String::as_str)
    }

    pub fn is_root(&self) -> bool {
        self.head == self.index
    }

    /// Base relation without its subtype (`nsubj:pass` → `nsubj`).
    pub fn base_deprel(&self) -> &str {
        self.deprel.split(':').next().unwrap_or("")
    }

    pub fn is_punct(&self) -> bool {
        self.pos == "PUNCT" || self.pos == "SPACE" || self.text.chars().all(|c| !c.is_alphanumeric())
    }

    /// First character is an uppercase letter.
    pub fn is_capitalized(&self) -> bool {
        self.text.chars().next().is_some_and(char::is_uppercase)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityLabel {
    #[serde(rename = "PER")]
    Per,
    #[serde(rename = "ORG")]
    Org,
    #[serde(rename = "LOC")]
    Loc,
    #[serde(rename = "MISC")]
    Misc,
}

impl EntityLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            EntityLabel::Per => "PER",
            EntityLabel::Org => "ORG",
            EntityLabel::Loc => "LOC",
            EntityLabel::Misc => "MISC",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "PER" => Some(EntityLabel::Per),
            "ORG" => Some(EntityLabel::Org),
            "LOC" => Some(EntityLabel::Loc),
            "MISC" => Some(EntityLabel::Misc),
            _ => None,
        }
    }
}

impl fmt::Display for EntityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A parser-provided named entity over an inclusive token range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntitySpan {
    pub label: EntityLabel,
    pub first_token: usize,
    pub last_token: usize,
    pub span: CharSpan,
}

impl EntitySpan {
    pub fn tokens(&self) -> Range<usize> {
        self.first_token..self.last_token + 1
    }
}

/// One externally supplied chain: each inner list holds the head tokens of a mention.
pub type CorefChainInput = Vec<Vec<usize>>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DocError {
    #[error("format error at byte {byte} (line {line}, column {column}): {message}")]
    Format {
        byte: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid `{field}`{}: {message}", token_suffix(*.token))]
    Validation {
        field: &'static str,
        token: Option<usize>,
        message: String,
    },
    #[error("offset {offset} out of range for a text of {len} characters")]
    Range { offset: usize, len: usize },
    #[error("CoNLL-U line {line}: {message}")]
    Conllu { line: usize, message: String },
}

fn token_suffix(token: Option<usize>) -> String {
    token.map(|t| format!(" at token {t}")).unwrap_or_default()
}

fn invalid(field: &'static str, token: Option<usize>, message: impl Into<String>) -> DocError {
    DocError::Validation {
        field,
        token,
        message: message.into(),
    }
}

/// A validated, immutable article with its linguistic annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedDocument {
    doc_id: String,
    outlet: String,
    published_at: NaiveDate,
    text: String,
    tokens: Vec<Token>,
    entities: Vec<EntitySpan>,
    coref_chains: Option<Vec<CorefChainInput>>,
    // derived
    char_bytes: Vec<usize>,
    children: Vec<Vec<usize>>,
}

/// Owned constructor input for [`AnnotatedDocument::new`].
#[derive(Debug, Clone, Default)]
pub struct DocumentParts {
    pub doc_id: String,
    pub outlet: String,
    pub published_at: Option<NaiveDate>,
    pub text: String,
    pub tokens: Vec<Token>,
    pub entities: Vec<(EntityLabel, usize, usize)>,
    pub coref_chains: Option<Vec<CorefChainInput>>,
}

impl AnnotatedDocument {
    /// Validates `parts` and builds the document.
    pub fn new(parts: DocumentParts) -> Result<Self, DocError> {
        let DocumentParts {
            doc_id,
            outlet,
            published_at,
            text,
            tokens,
            entities,
            coref_chains,
        } = parts;
        let published_at =
            published_at.ok_or_else(|| invalid("published_at", None, "missing publication date"))?;
        let mut char_bytes: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        let char_len = char_bytes.len();
        char_bytes.push(text.len());

        let slice = |span: CharSpan| &text[char_bytes[span.start]..char_bytes[span.end]];

        for (i, tok) in tokens.iter().enumerate() {
            if tok.index != i {
                return Err(invalid("i", Some(i), format!("expected ordinal {i}, found {}", tok.index)));
            }
            if tok.span.start >= tok.span.end || tok.span.end > char_len {
                return Err(invalid(
                    "start/end",
                    Some(i),
                    format!("span {} invalid for text of {char_len} characters", tok.span),
                ));
            }
            if slice(tok.span) != tok.text {
                return Err(invalid(
                    "text",
                    Some(i),
                    format!("token text {:?} differs from article text {:?}", tok.text, slice(tok.span)),
                ));
            }
            if tok.deprel.is_empty() {
                return Err(invalid("deprel", Some(i), "empty dependency relation"));
            }
            if i > 0 {
                let prev = &tokens[i - 1];
                if prev.span.end > tok.span.start {
                    return Err(invalid("start", Some(i), "token span does not follow the previous token"));
                }
                if prev.sentence > tok.sentence {
                    return Err(invalid("sent", Some(i), "sentence ordinals decrease"));
                }
            }
        }
        for (i, tok) in tokens.iter().enumerate() {
            let head = tokens
                .get(tok.head)
                .ok_or_else(|| invalid("head", Some(i), format!("head {} out of range", tok.head)))?;
            if head.sentence != tok.sentence {
                return Err(invalid("head", Some(i), "head lies in another sentence"));
            }
        }

        let mut spans = Vec::with_capacity(entities.len());
        for (label, first, last) in entities {
            if first > last || last >= tokens.len() {
                return Err(invalid(
                    "entities",
                    Some(first),
                    format!("token range {first}..={last} invalid"),
                ));
            }
            spans.push(EntitySpan {
                label,
                first_token: first,
                last_token: last,
                span: CharSpan::new(tokens[first].span.start, tokens[last].span.end),
            });
        }

        if let Some(chains) = &coref_chains {
            for chain in chains {
                if chain.is_empty() {
                    return Err(invalid("coref_chains", None, "empty chain"));
                }
                let mut prev_first = None;
                for mention in chain {
                    let Some(&first) = mention.iter().min() else {
                        return Err(invalid("coref_chains", None, "mention without head tokens"));
                    };
                    if let Some(&bad) = mention.iter().find(|&&t| t >= tokens.len()) {
                        return Err(invalid("coref_chains", Some(bad), "token index out of range"));
                    }
                    if prev_first.is_some_and(|p| p > first) {
                        return Err(invalid("coref_chains", Some(first), "mentions not in document order"));
                    }
                    prev_first = Some(first);
                }
            }
        }

        let mut children = vec![Vec::new(); tokens.len()];
        for tok in &tokens {
            if !tok.is_root() {
                children[tok.head].push(tok.index);
            }
        }

        Ok(Self {
            doc_id,
            outlet,
            published_at,
            text,
            tokens,
            entities: spans,
            coref_chains,
            char_bytes,
            children,
        })
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn outlet(&self) -> &str {
        &self.outlet
    }

    pub fn published_at(&self) -> NaiveDate {
        self.published_at
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn token(&self, index: usize) -> &Token {
        &self.tokens[index]
    }

    pub fn entities(&self) -> &[EntitySpan] {
        &self.entities
    }

    pub fn coref_chains(&self) -> Option<&[CorefChainInput]> {
        self.coref_chains.as_deref()
    }

    /// Length of the text in characters.
    pub fn char_len(&self) -> usize {
        self.char_bytes.len() - 1
    }

    /// Text covered by `span`, clamped to the document.
    pub fn slice(&self, span: CharSpan) -> &str {
        let end = span.end.min(self.char_len());
        let start = span.start.min(end);
        &self.text[self.char_bytes[start]..self.char_bytes[end]]
    }

    /// Character at `offset`, if any.
    pub fn char_at(&self, offset: usize) -> Option<char> {
        if offset >= self.char_len() {
            return None;
        }
        self.text[self.char_bytes[offset]..].chars().next()
    }

    pub fn children(&self, index: usize) -> &[usize] {
        &self.children[index]
    }

    /// Children of `index` whose base relation is `rel`.
    pub fn children_with<'a>(&'a self, index: usize, rel: &'a str) -> impl Iterator<Item = usize> + 'a {
        self.children[index]
            .iter()
            .copied()
            .filter(move |&c| self.tokens[c].base_deprel() == rel)
    }

    /// All tokens dominated by `index` (itself included), in document order.
    /// Cycles in malformed trees are cut.
    pub fn subtree(&self, index: usize) -> Vec<usize> {
        let mut seen = vec![false; self.tokens.len()];
        let mut stack = vec![index];
        let mut out = Vec::new();
        while let Some(t) = stack.pop() {
            if std::mem::replace(&mut seen[t], true) {
                continue;
            }
            out.push(t);
            stack.extend(self.children[t].iter().copied());
        }
        out.sort_unstable();
        out
    }

    /// Head chain above `index`, nearest first, stopping at the root or a cycle.
    pub fn ancestors(&self, index: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut seen = vec![false; self.tokens.len()];
        seen[index] = true;
        let mut cur = index;
        loop {
            let head = self.tokens[cur].head;
            if head == cur || std::mem::replace(&mut seen[head], true) {
                break;
            }
            out.push(head);
            cur = head;
        }
        out
    }

    pub fn is_ancestor(&self, ancestor: usize, of: usize) -> bool {
        self.ancestors(of).contains(&ancestor)
    }

    /// Token range of sentence `sentence`.
    pub fn sentence_tokens(&self, sentence: usize) -> Range<usize> {
        let start = self.tokens.partition_point(|t| t.sentence < sentence);
        let end = self.tokens.partition_point(|t| t.sentence <= sentence);
        start..end
    }

    /// Character span from the first to the last token of a non-empty token set.
    pub fn tokens_span(&self, tokens: &[usize]) -> Option<CharSpan> {
        let first = tokens.iter().min()?;
        let last = tokens.iter().max()?;
        Some(CharSpan::new(self.tokens[*first].span.start, self.tokens[*last].span.end))
    }

    /// Tokens whose span overlaps `span`, as a range.
    pub fn tokens_in(&self, span: CharSpan) -> Range<usize> {
        let start = self.tokens.partition_point(|t| t.span.end <= span.start);
        let end = self.tokens.partition_point(|t| t.span.start < span.end);
        start..end.max(start)
    }

    /// Token whose span contains `offset`; `None` for gaps and for `offset == len`.
    pub fn token_at_char(&self, offset: usize) -> Result<Option<usize>, DocError> {
        token_at_char(self, offset)
    }
}

/// Token whose span contains `offset`; `None` inside whitespace or punctuation gaps.
pub fn token_at_char(doc: &AnnotatedDocument, offset: usize) -> Result<Option<usize>, DocError> {
    let len = doc.char_len();
    if offset > len {
        return Err(DocError::Range { offset, len });
    }
    let k = doc.tokens.partition_point(|t| t.span.end <= offset);
    Ok(doc.tokens.get(k).filter(|t| t.span.contains(offset)).map(|t| t.index))
}

// ---------------------------------------------------------------------------
// Interchange format

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireDocument {
    doc_id: String,
    outlet: String,
    published_at: String,
    text: String,
    tokens: Vec<WireToken>,
    entities: Vec<WireEntity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coref_chains: Option<Vec<CorefChainInput>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireToken {
    i: usize,
    text: String,
    lemma: String,
    pos: String,
    #[serde(default)]
    morph: BTreeMap<String, String>,
    head: usize,
    deprel: String,
    start: usize,
    end: usize,
    sent: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireEntity {
    label: String,
    first_token: usize,
    last_token: usize,
}

impl WireDocument {
    fn into_document(self) -> Result<AnnotatedDocument, DocError> {
        let published_at = NaiveDate::parse_from_str(&self.published_at, "%Y-%m-%d")
            .map_err(|e| invalid("published_at", None, format!("{:?}: {e}", self.published_at)))?;
        let tokens = self
            .tokens
            .into_iter()
            .map(|t| Token {
                index: t.i,
                text: t.text,
                lemma: t.lemma,
                pos: t.pos,
                morph: t.morph,
                head: t.head,
                deprel: t.deprel,
                span: CharSpan { start: t.start, end: t.end },
                sentence: t.sent,
            })
            .collect();
        let entities = self
            .entities
            .into_iter()
            .map(|e| {
                EntityLabel::parse(&e.label)
                    .map(|l| (l, e.first_token, e.last_token))
                    .ok_or_else(|| invalid("label", Some(e.first_token), format!("unknown label {:?}", e.label)))
            })
            .collect::<Result<_, _>>()?;
        AnnotatedDocument::new(DocumentParts {
            doc_id: self.doc_id,
            outlet: self.outlet,
            published_at: Some(published_at),
            text: self.text,
            tokens,
            entities,
            coref_chains: self.coref_chains,
        })
    }

    fn from_document(doc: &AnnotatedDocument) -> Self {
        WireDocument {
            doc_id: doc.doc_id.clone(),
            outlet: doc.outlet.clone(),
            published_at: doc.published_at.format("%Y-%m-%d").to_string(),
            text: doc.text.clone(),
            tokens: doc
                .tokens
                .iter()
                .map(|t| WireToken {
                    i: t.index,
                    text: t.text.clone(),
                    lemma: t.lemma.clone(),
                    pos: t.pos.clone(),
                    morph: t.morph.clone(),
                    head: t.head,
                    deprel: t.deprel.clone(),
                    start: t.span.start,
                    end: t.span.end,
                    sent: t.sentence,
                })
                .collect(),
            entities: doc
                .entities
                .iter()
                .map(|e| WireEntity {
                    label: e.label.as_str().to_string(),
                    first_token: e.first_token,
                    last_token: e.last_token,
                })
                .collect(),
            coref_chains: doc.coref_chains.clone(),
        }
    }
}

fn format_error(raw: &str, base: usize, err: &serde_json::Error) -> DocError {
    let (line, column) = (err.line(), err.column());
    // serde_json reports 1-based lines and byte columns
    let line_start: usize = raw[base..]
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    DocError::Format {
        byte: base + line_start + column.saturating_sub(1),
        line,
        column,
        message: err.to_string(),
    }
}

/// Parses exactly one document in the interchange format.
pub fn parse_document(raw: &str) -> Result<AnnotatedDocument, DocError> {
    let wire: WireDocument = serde_json::from_str(raw).map_err(|e| format_error(raw, 0, &e))?;
    wire.into_document()
}

/// Parses a stream of concatenated or newline-delimited documents.
///
/// Validation failures are reported per document; a syntax error ends the
/// stream since resynchronisation is not possible.
pub fn parse_documents(raw: &str) -> Vec<Result<AnnotatedDocument, DocError>> {
    let mut out = Vec::new();
    let mut stream = serde_json::Deserializer::from_str(raw).into_iter::<WireDocument>();
    loop {
        let offset = stream.byte_offset();
        match stream.next() {
            None => break,
            Some(Ok(wire)) => out.push(wire.into_document()),
            Some(Err(e)) => {
                let mut err = format_error(raw, 0, &e);
                if let DocError::Format { byte, .. } = &mut err {
                    *byte = (*byte).max(offset);
                }
                out.push(Err(err));
                break;
            }
        }
    }
    out
}

/// Compact single-line JSON, suitable for newline-delimited streams.
pub fn serialize_document(doc: &AnnotatedDocument) -> String {
    serde_json::to_string(&WireDocument::from_document(doc)).expect("document serialization cannot fail")
}

pub fn serialize_document_pretty(doc: &AnnotatedDocument) -> String {
    serde_json::to_string_pretty(&WireDocument::from_document(doc)).expect("document serialization cannot fail")
}
