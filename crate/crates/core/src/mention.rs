//! Mention heads, coordination groups and introducing nouns.
//!
//! A mention is reduced to its syntactic head tokens. Embedded noun phrases
//! ("le président de l'entreprise") therefore stay distinguishable: each has
//! its own head. A coordination ("X et Y") yields one extra mention whose
//! heads are all the coordinated siblings.

use crate::doc_model::{AnnotatedDocument, Token};
use crate::lexicon::Lexicon;

/// Personal, clitic and stressed pronoun lemmas accepted as mentions when
/// the tagger gives no `PronType`.
pub const PERSONAL_PRONOUNS: &[&str] = &[
    "je", "j'", "me", "m'", "moi", "tu", "te", "t'", "toi", "il", "elle", "ils", "elles", "lui", "eux", "le", "la",
    "l'", "les", "leur", "se", "s'", "soi", "nous", "vous", "on",
];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mention {
    /// Head tokens in document order; several only for coordination.
    pub heads: Vec<usize>,
}

impl Mention {
    pub fn single(head: usize) -> Self {
        Mention { heads: vec![head] }
    }

    pub fn root_head(&self) -> usize {
        self.heads[0]
    }

    pub fn is_group(&self) -> bool {
        self.heads.len() > 1
    }
}

pub fn is_possessive_determiner(t: &Token) -> bool {
    t.pos == "DET" && t.feat("Poss") == Some("Yes")
}

pub fn is_personal_pronoun(t: &Token) -> bool {
    if t.pos != "PRON" || t.base_deprel() == "expl" {
        return false;
    }
    match t.feat("PronType") {
        Some("Prs") => true,
        Some(_) => false,
        None => PERSONAL_PRONOUNS.contains(&t.text.to_lowercase().as_str()),
    }
}

/// A noun governed by "de" with no determiner of its own is a bare modifier
/// ("compagnie de pétrole"), not a referring expression.
fn is_bare_modifier(doc: &AnnotatedDocument, t: &Token) -> bool {
    t.pos == "NOUN"
        && t.base_deprel() == "nmod"
        && doc.children_with(t.index, "det").next().is_none()
        && doc
            .children_with(t.index, "case")
            .any(|c| matches!(doc.token(c).lemma.to_lowercase().as_str(), "de" | "d'" | "du" | "des"))
}

pub fn is_mention_head(doc: &AnnotatedDocument, index: usize) -> bool {
    let t = doc.token(index);
    match t.pos.as_str() {
        "NOUN" | "PROPN" => {
            !matches!(t.base_deprel(), "flat" | "fixed" | "compound" | "goeswith") && !is_bare_modifier(doc, t)
        }
        "PRON" => is_personal_pronoun(t),
        "DET" => is_possessive_determiner(t),
        _ => false,
    }
}

/// Root of the coordination structure `index` belongs to.
fn coordination_root(doc: &AnnotatedDocument, index: usize) -> usize {
    let mut cur = index;
    let mut steps = 0;
    while doc.token(cur).base_deprel() == "conj" && !doc.token(cur).is_root() && steps < doc.tokens().len() {
        cur = doc.token(cur).head;
        steps += 1;
    }
    cur
}

/// All mention heads joined to `root` by conj links, `root` included.
fn coordination_group(doc: &AnnotatedDocument, root: usize) -> Vec<usize> {
    let mut group = vec![root];
    let mut stack = vec![root];
    while let Some(t) = stack.pop() {
        for c in doc.children_with(t, "conj") {
            if is_mention_head(doc, c) && !group.contains(&c) {
                group.push(c);
                stack.push(c);
            }
        }
    }
    group.sort_unstable();
    group
}

fn has_coordinator(doc: &AnnotatedDocument, group: &[usize]) -> bool {
    group.iter().any(|&g| doc.children_with(g, "cc").next().is_some())
}

pub fn coordinated_siblings(doc: &AnnotatedDocument, head: usize) -> Vec<usize> {
    let root = coordination_root(doc, head);
    if !is_mention_head(doc, root) {
        return Vec::new();
    }
    let group = coordination_group(doc, root);
    if group.len() < 2 || !group.contains(&head) || !has_coordinator(doc, &group) {
        return Vec::new();
    }
    group.into_iter().filter(|&g| g != head).collect()
}

pub fn mention_heads(doc: &AnnotatedDocument) -> Vec<Mention> {
    let mut out = Vec::new();
    for t in doc.tokens() {
        if !is_mention_head(doc, t.index) {
            continue;
        }
        out.push(Mention::single(t.index));
        if t.base_deprel() != "conj" {
            let group = coordination_group(doc, t.index);
            if group.len() > 1 && has_coordinator(doc, &group) {
                out.push(Mention { heads: group });
            }
        }
    }
    out
}

/// Determiners that rule out an introducing reading.
fn is_anaphoric_determiner(t: &Token) -> bool {
    is_possessive_determiner(t)
        || t.feat("PronType") == Some("Dem")
        || matches!(t.lemma.to_lowercase().as_str(), "ce" | "cet" | "cette" | "ces")
}

/// A person noun introduced with an indefinite or definite article, or none.
pub fn is_introducing_noun(doc: &AnnotatedDocument, lexicon: &Lexicon, head: usize) -> bool {
    let t = doc.token(head);
    if t.pos != "NOUN" || lexicon.person_noun(&t.lemma).is_none() {
        return false;
    }
    !doc.children_with(head, "det").any(|d| is_anaphoric_determiner(doc.token(d)))
}
