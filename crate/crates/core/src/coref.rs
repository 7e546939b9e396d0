//! Coreference chains.
//!
//! Chains supplied with the document are converted as they are. Otherwise a
//! small agreement-and-recency resolver links mentions:
//!
//! - third-person pronouns and possessives go to the nearest person mention
//!   at most 5 sentences back that agrees in gender and number;
//! - reflexive `se` follows the subject of its verb;
//! - definite person nouns go to the nearest agreeing person mention at most
//!   3 sentences back;
//! - proper nouns join an earlier mention with the same name;
//! - an apposition joins the chain of the noun it describes.
//!
//! Everything else stays a singleton.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::doc_model::{AnnotatedDocument, CharSpan, Token};
use crate::lexicon::Lexicon;
use crate::mention::{is_possessive_determiner, Mention};
use crate::ner::PersonEntity;

pub const PRONOUN_SENTENCE_LIMIT: usize = 5;
pub const NOUN_SENTENCE_LIMIT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    External,
    Builtin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorefChain {
    pub chain_id: usize,
    pub mentions: Vec<Mention>,
    pub provenance: Provenance,
}

/// Span clusters: per mention, the spans of its heads.
pub type SpanCluster = Vec<Vec<CharSpan>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    Pronoun,
    Reflexive,
    Noun,
    Name,
    Apposition,
}

/// One antecedent decision of the builtin resolver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub mention: usize,
    pub antecedent: usize,
    pub kind: LinkKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Pronoun,
    Possessive,
    Reflexive,
    Speech,
    ProperNoun,
    PersonNoun,
    Other,
}

struct Info {
    kind: Kind,
    person: bool,
    gender: Option<char>,
    number: Option<char>,
    sentence: usize,
    definite: bool,
    name_key: Option<String>,
}

fn feat_char(t: &Token, key: &str) -> Option<char> {
    match t.feat(key) {
        Some("Masc") => Some('m'),
        Some("Fem") => Some('f'),
        Some("Sing") => Some('s'),
        Some("Plur") => Some('p'),
        _ => None,
    }
}

fn possessor_number(t: &Token) -> Option<char> {
    match t.feat("Number[psor]") {
        Some("Plur") => Some('p'),
        Some("Sing") => Some('s'),
        _ => match t.text.to_lowercase().as_str() {
            "leur" | "leurs" => Some('p'),
            "son" | "sa" | "ses" => Some('s'),
            _ => None,
        },
    }
}

fn is_reflexive(t: &Token) -> bool {
    t.pos == "PRON"
        && (t.feat("Reflex") == Some("Yes") || matches!(t.text.to_lowercase().as_str(), "se" | "s'" | "s’"))
}

/// Generic "on" never refers to a particular person.
fn is_speech_participant(t: &Token) -> bool {
    if t.text.eq_ignore_ascii_case("on") {
        return true;
    }
    match t.feat("Person") {
        Some("1") | Some("2") => true,
        Some(_) => false,
        None => matches!(
            t.text.to_lowercase().as_str(),
            "je" | "j'" | "j’" | "me" | "m'" | "m’" | "moi" | "tu" | "te" | "t'" | "t’" | "toi" | "nous" | "vous"
                | "on" | "mon" | "ma" | "mes" | "ton" | "ta" | "tes" | "notre" | "nos" | "votre" | "vos"
        ),
    }
}

/// Lowercased name of a proper-noun mention: its head and flat:name
/// dependents, titles left out.
pub fn name_key(doc: &AnnotatedDocument, lexicon: &Lexicon, head: usize) -> String {
    let mut toks: Vec<usize> = doc.children_with(head, "flat").collect();
    toks.push(head);
    toks.sort_unstable();
    toks.iter()
        .map(|&t| doc.token(t))
        .filter(|t| !lexicon.is_title(&t.text))
        .map(|t| t.text.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

fn name_span(doc: &AnnotatedDocument, head: usize) -> CharSpan {
    let mut toks: Vec<usize> = doc.children_with(head, "flat").collect();
    toks.push(head);
    doc.tokens_span(&toks).unwrap_or(doc.token(head).span)
}

fn describe(doc: &AnnotatedDocument, lexicon: &Lexicon, people: &[PersonEntity], m: &Mention) -> Info {
    let head = doc.token(m.root_head());
    let sentence = head.sentence;
    let mut info = Info {
        kind: Kind::Other,
        person: false,
        gender: feat_char(head, "Gender"),
        number: feat_char(head, "Number"),
        sentence,
        definite: false,
        name_key: None,
    };
    if m.is_group() {
        info.number = Some('p');
        info.gender = None;
        return info;
    }
    if is_possessive_determiner(head) {
        info.kind = if is_speech_participant(head) { Kind::Speech } else { Kind::Possessive };
        info.gender = None;
        info.number = possessor_number(head);
        info.person = info.kind == Kind::Possessive;
    } else if head.pos == "PRON" {
        info.kind = if is_speech_participant(head) {
            Kind::Speech
        } else if is_reflexive(head) {
            Kind::Reflexive
        } else {
            Kind::Pronoun
        };
        info.person = info.kind != Kind::Speech;
    } else if head.pos == "PROPN" || lexicon.is_title(&head.text) {
        info.kind = Kind::ProperNoun;
        let span = name_span(doc, head.index);
        info.person = lexicon.is_title(&head.text) || people.iter().any(|p| p.span.overlap(&span) > 0);
        if info.gender.is_none() {
            info.gender = title_gender(doc, lexicon, head.index);
        }
        info.name_key = Some(name_key(doc, lexicon, head.index)).filter(|k| !k.is_empty());
    } else if head.pos == "NOUN" && lexicon.person_noun(&head.lemma).is_some() {
        info.kind = Kind::PersonNoun;
        info.person = true;
        info.definite = doc.children_with(head.index, "det").any(|d| {
            let d = doc.token(d);
            d.feat("Definite") == Some("Def") && !is_possessive_determiner(d) && d.feat("PronType") != Some("Dem")
        });
    }
    info
}

fn title_gender(doc: &AnnotatedDocument, lexicon: &Lexicon, head: usize) -> Option<char> {
    let mut toks: Vec<usize> = doc.children_with(head, "flat").collect();
    toks.push(head);
    toks.iter().find_map(|&t| {
        lexicon.title(&doc.token(t).text).and_then(|ti| match ti.gender {
            Some(crate::gender::Gender::Female) => Some('f'),
            Some(crate::gender::Gender::Male) => Some('m'),
            _ => None,
        })
    })
}

struct Resolver<'a> {
    doc: &'a AnnotatedDocument,
    mentions: &'a [Mention],
    infos: Vec<Info>,
    chain_of: Vec<usize>,
    chain_genders: Vec<BTreeSet<char>>,
    chain_numbers: Vec<BTreeSet<char>>,
    links: Vec<Link>,
}

impl Resolver<'_> {
    fn agrees(&self, i: usize, chain: usize, check_gender: bool) -> bool {
        let info = &self.infos[i];
        let g_ok = !check_gender || info.gender.is_none_or(|g| self.chain_genders[chain].iter().all(|&c| c == g));
        let n_ok = info.number.is_none_or(|n| self.chain_numbers[chain].iter().all(|&c| c == n));
        g_ok && n_ok
    }

    fn join(&mut self, i: usize, antecedent: usize, kind: LinkKind) {
        let chain = self.chain_of[antecedent];
        self.chain_of[i] = chain;
        let info = &self.infos[i];
        if info.kind != Kind::Possessive {
            self.chain_genders[chain].extend(info.gender);
            self.chain_numbers[chain].extend(info.number);
        }
        self.links.push(Link {
            mention: i,
            antecedent,
            kind,
        });
    }

    fn new_chain(&mut self, i: usize) {
        let chain = self.chain_genders.len();
        self.chain_of[i] = chain;
        let info = &self.infos[i];
        let kind = info.kind;
        let (g, n) = (info.gender, info.number);
        self.chain_genders.push(if kind == Kind::Possessive { None } else { g }.into_iter().collect());
        self.chain_numbers.push(if kind == Kind::Possessive { None } else { n }.into_iter().collect());
    }

    /// Nearest agreeing person antecedent within `limit` sentences. Ties on
    /// sentence go to a subject, then to the later mention.
    fn nearest(&self, i: usize, limit: usize, check_gender: bool) -> Option<usize> {
        let info = &self.infos[i];
        let head = self.mentions[i].root_head();
        (0..self.mentions.len())
            .filter(|&j| j != i && self.mentions[j].root_head() < head && self.chain_of[j] != usize::MAX)
            .filter(|&j| {
                let a = &self.infos[j];
                a.person
                    && !self.mentions[j].is_group()
                    && info.sentence - a.sentence <= limit
                    && self.agrees(i, self.chain_of[j], check_gender)
            })
            .max_by_key(|&j| {
                let root = self.mentions[j].root_head();
                let subj = self.doc.token(root).base_deprel() == "nsubj";
                (self.infos[j].sentence, subj, root)
            })
    }

    fn run(&mut self) {
        let mut order: Vec<usize> = (0..self.mentions.len()).collect();
        order.sort_by_key(|&i| (self.mentions[i].root_head(), self.mentions[i].heads.len()));
        for i in order {
            if let Some((j, kind)) = self.antecedent(i) {
                self.join(i, j, kind);
            } else {
                self.new_chain(i);
            }
        }
    }

    fn antecedent(&self, i: usize) -> Option<(usize, LinkKind)> {
        let m = &self.mentions[i];
        if m.is_group() {
            return None;
        }
        let info = &self.infos[i];
        let head = self.doc.token(m.root_head());
        if head.base_deprel() == "appos" {
            let target = self
                .single_mention_at(head.head)
                .filter(|&j| self.chain_of[j] != usize::MAX && (self.infos[j].person || info.person));
            if let Some(j) = target {
                return Some((j, LinkKind::Apposition));
            }
        }
        match info.kind {
            Kind::Pronoun => self.nearest(i, PRONOUN_SENTENCE_LIMIT, true).map(|j| (j, LinkKind::Pronoun)),
            Kind::Possessive => self.nearest(i, PRONOUN_SENTENCE_LIMIT, false).map(|j| (j, LinkKind::Pronoun)),
            Kind::Reflexive => {
                let verb = head.head;
                self.doc
                    .children_with(verb, "nsubj")
                    .filter_map(|s| self.single_mention_at(s))
                    .find(|&j| self.infos[j].person && self.chain_of[j] != usize::MAX)
                    .map(|j| (j, LinkKind::Reflexive))
            }
            Kind::PersonNoun if info.definite => self.nearest(i, NOUN_SENTENCE_LIMIT, true).map(|j| (j, LinkKind::Noun)),
            Kind::ProperNoun => {
                let key = info.name_key.as_ref()?;
                (0..self.mentions.len())
                    .filter(|&j| self.chain_of[j] != usize::MAX && self.mentions[j].root_head() < m.root_head())
                    .find(|&j| self.infos[j].name_key.as_ref() == Some(key))
                    .map(|j| (j, LinkKind::Name))
            }
            _ => None,
        }
    }

    fn single_mention_at(&self, token: usize) -> Option<usize> {
        self.mentions.iter().position(|m| m.heads == [token])
    }
}

/// Builtin resolution with the list of antecedent decisions taken.
pub fn resolve_builtin(
    doc: &AnnotatedDocument,
    lexicon: &Lexicon,
    mentions: &[Mention],
    people: &[PersonEntity],
) -> (Vec<CorefChain>, Vec<Link>) {
    let infos = mentions.iter().map(|m| describe(doc, lexicon, people, m)).collect();
    let mut r = Resolver {
        doc,
        mentions,
        infos,
        chain_of: vec![usize::MAX; mentions.len()],
        chain_genders: Vec::new(),
        chain_numbers: Vec::new(),
        links: Vec::new(),
    };
    r.run();
    let mut chains: Vec<CorefChain> = (0..r.chain_genders.len())
        .map(|c| CorefChain {
            chain_id: c,
            mentions: Vec::new(),
            provenance: Provenance::Builtin,
        })
        .collect();
    let mut order: Vec<usize> = (0..mentions.len()).collect();
    order.sort_by_key(|&i| (mentions[i].root_head(), mentions[i].heads.len()));
    for i in order {
        chains[r.chain_of[i]].mentions.push(mentions[i].clone());
    }
    chains.sort_by_key(|c| c.mentions[0].root_head());
    for (n, c) in chains.iter_mut().enumerate() {
        c.chain_id = n;
    }
    (chains, r.links)
}

pub fn resolve(
    doc: &AnnotatedDocument,
    lexicon: &Lexicon,
    mentions: &[Mention],
    people: &[PersonEntity],
) -> Vec<CorefChain> {
    match doc.coref_chains() {
        Some(external) => external
            .iter()
            .enumerate()
            .map(|(n, chain)| CorefChain {
                chain_id: n,
                mentions: chain.iter().map(|heads| Mention { heads: heads.clone() }).collect(),
                provenance: Provenance::External,
            })
            .collect(),
        None => resolve_builtin(doc, lexicon, mentions, people).0,
    }
}

pub fn chain_to_cluster(doc: &AnnotatedDocument, chain: &CorefChain) -> SpanCluster {
    chain
        .mentions
        .iter()
        .map(|m| m.heads.iter().map(|&h| doc.token(h).span).collect())
        .collect()
}
