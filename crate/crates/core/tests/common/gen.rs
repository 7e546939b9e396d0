//! Random but well-formed articles built from sentence templates.
#![allow(dead_code)]

use std::collections::BTreeMap;

use chrono::NaiveDate;
use qp_core::doc_model::{AnnotatedDocument, CharSpan, DocumentParts, EntityLabel, Token};
use rand::seq::SliceRandom;
use rand::Rng;

const FIRST: &[(&str, &str)] = &[
    ("Marie", "Fem"),
    ("Sophie", "Fem"),
    ("Julie", "Fem"),
    ("Jean", "Masc"),
    ("Pierre", "Masc"),
    ("Luc", "Masc"),
    ("Camille", ""),
    ("Dominique", ""),
];
const LAST: &[&str] = &["Tremblay", "Gagnon", "Roy", "Côté", "Bouchard", "Lavoie", "Lévesque"];
const VERBS: &[(&str, &str)] = &[
    ("dit", "dire"),
    ("affirme", "affirmer"),
    ("explique", "expliquer"),
    ("assure", "assurer"),
    ("estime", "estimer"),
];
const WORDS: &[(&str, &str)] = &[
    ("projet", "NOUN"),
    ("ville", "NOUN"),
    ("budget", "NOUN"),
    ("important", "ADJ"),
    ("rapidement", "ADV"),
    ("gouvernement", "NOUN"),
    ("école", "NOUN"),
    ("nouveau", "ADJ"),
    ("changer", "VERB"),
];

/// Incremental document builder; heads are global token indices.
#[derive(Default)]
pub struct Builder {
    text: String,
    chars: usize,
    tokens: Vec<Token>,
    entities: Vec<(EntityLabel, usize, usize)>,
    sentence: usize,
}

impl Builder {
    pub fn word(&mut self, text: &str, lemma: &str, pos: &str, feats: &[(&str, &str)]) -> usize {
        let i = self.tokens.len();
        let start = self.chars;
        self.text.push_str(text);
        self.chars += text.chars().count();
        self.tokens.push(Token {
            index: i,
            text: text.to_string(),
            lemma: lemma.to_string(),
            pos: pos.to_string(),
            morph: feats.iter().filter(|(_, v)| !v.is_empty()).map(|(k, v)| (k.to_string(), v.to_string())).collect::<BTreeMap<_, _>>(),
            head: i,
            deprel: "root".into(),
            span: CharSpan::new(start, self.chars),
            sentence: self.sentence,
        });
        i
    }

    pub fn space(&mut self, s: &str) {
        self.text.push_str(s);
        self.chars += s.chars().count();
    }

    pub fn attach(&mut self, dep: usize, head: usize, rel: &str) {
        self.tokens[dep].head = head;
        self.tokens[dep].deprel = rel.into();
    }

    pub fn punct(&mut self, text: &str, head: usize) -> usize {
        let i = self.word(text, text, "PUNCT", &[]);
        self.attach(i, head, "punct");
        i
    }

    pub fn end_sentence(&mut self) {
        self.sentence += 1;
    }

    pub fn entity(&mut self, label: EntityLabel, first: usize, last: usize) {
        self.entities.push((label, first, last));
    }

    /// Tokens left unattached in the current sentence hang off `root`.
    fn settle(&mut self, from: usize, root: usize) {
        for i in from..self.tokens.len() {
            if i != root && self.tokens[i].head == i {
                self.attach(i, root, "dep");
            }
        }
    }

    pub fn finish(self, doc_id: &str, outlet: &str, date: NaiveDate) -> AnnotatedDocument {
        AnnotatedDocument::new(DocumentParts {
            doc_id: doc_id.into(),
            outlet: outlet.into(),
            published_at: Some(date),
            text: self.text,
            tokens: self.tokens,
            entities: self.entities,
            coref_chains: None,
        })
        .expect("generated document is valid")
    }
}

struct Name {
    first: Option<(&'static str, &'static str)>,
    last: &'static str,
    title: Option<&'static str>,
}

fn pick_name<R: Rng>(rng: &mut R) -> Name {
    let first = rng.gen_bool(0.7).then(|| *FIRST.choose(rng).unwrap());
    let title = if first.is_none() { Some(*["M.", "Mme"].choose(rng).unwrap()) } else { None };
    Name {
        first,
        last: LAST.choose(rng).unwrap(),
        title,
    }
}

/// Writes a name phrase and returns its head.
fn name_phrase(b: &mut Builder, n: &Name) -> usize {
    let mut toks = Vec::new();
    if let Some(t) = n.title {
        let g = if t == "M." { "Masc" } else { "Fem" };
        toks.push(b.word(t, t, "NOUN", &[("Gender", g)]));
        b.space(" ");
    }
    if let Some((f, g)) = n.first {
        toks.push(b.word(f, f, "PROPN", &[("Gender", g)]));
        b.space(" ");
    }
    toks.push(b.word(n.last, n.last, "PROPN", &[]));
    let head = toks[0];
    for &t in &toks[1..] {
        b.attach(t, head, "flat:name");
    }
    let first_ent = if n.title.is_some() { toks[1] } else { toks[0] };
    b.entity(EntityLabel::Per, first_ent, *toks.last().unwrap());
    head
}

/// Content words; the first is returned as the clause root.
fn clause<R: Rng>(b: &mut Builder, rng: &mut R, len: usize) -> usize {
    let from = b.tokens.len();
    let mut root = None;
    for k in 0..len {
        let (w, pos) = *WORDS.choose(rng).unwrap();
        let i = b.word(w, w, if k == 0 { "VERB" } else { pos }, &[]);
        root.get_or_insert(i);
        if k + 1 < len {
            b.space(" ");
        }
    }
    let root = root.unwrap();
    b.settle(from, root);
    root
}

fn verb<R: Rng>(b: &mut Builder, rng: &mut R) -> usize {
    let (v, l) = *VERBS.choose(rng).unwrap();
    b.word(v, l, "VERB", &[("Mood", "Ind"), ("Person", "3")])
}

/// « clause » , verb Name .
fn direct<R: Rng>(b: &mut Builder, rng: &mut R) {
    let from = b.tokens.len();
    let open = b.word("«", "«", "PUNCT", &[]);
    b.space(" ");
    let n = rng.gen_range(2..8);
    let root = clause(b, rng, n);
    b.space(" ");
    let close = b.punct("»", root);
    b.attach(open, root, "punct");
    let comma = b.punct(",", root);
    b.space(" ");
    let v = verb(b, rng);
    b.attach(v, root, "parataxis");
    b.attach(comma, v, "punct");
    b.space(" ");
    let name = pick_name(rng);
    let s = name_phrase(b, &name);
    b.attach(s, v, "nsubj");
    b.punct(".", root);
    let _ = (from, close);
}

/// « clause , verb -il . »
fn incise<R: Rng>(b: &mut Builder, rng: &mut R) {
    let open = b.word("«", "«", "PUNCT", &[]);
    let n = rng.gen_range(2..6);
    let root = clause(b, rng, n);
    b.attach(open, root, "punct");
    let comma = b.punct(",", root);
    b.space(" ");
    let v = verb(b, rng);
    b.attach(v, root, "parataxis");
    b.attach(comma, v, "punct");
    let (c, g) = *[("-il", "Masc"), ("-elle", "Fem")].choose(rng).unwrap();
    let s = b.word(c, &c[1..], "PRON", &[("Gender", g), ("Number", "Sing"), ("Person", "3"), ("PronType", "Prs")]);
    b.attach(s, v, "nsubj");
    b.space(" ");
    let m = rng.gen_range(2..6);
    let second = clause(b, rng, m);
    b.attach(second, root, "parataxis");
    b.punct(".", root);
    b.punct("»", root);
}

/// Name verb que clause .
fn indirect<R: Rng>(b: &mut Builder, rng: &mut R, pronoun: bool) {
    let s = if pronoun {
        let (p, g) = *[("Il", "Masc"), ("Elle", "Fem")].choose(rng).unwrap();
        b.word(p, &p.to_lowercase(), "PRON", &[("Gender", g), ("Number", "Sing"), ("Person", "3"), ("PronType", "Prs")])
    } else {
        let name = pick_name(rng);
        name_phrase(b, &name)
    };
    b.space(" ");
    let v = verb(b, rng);
    b.attach(s, v, "nsubj");
    b.space(" ");
    let que = b.word("que", "que", "SCONJ", &[]);
    b.space(" ");
    let n = rng.gen_range(2..8);
    let c = clause(b, rng, n);
    b.attach(c, v, "ccomp");
    b.attach(que, c, "mark");
    b.punct(".", v);
}

/// Selon Name , clause .
fn selon<R: Rng>(b: &mut Builder, rng: &mut R) {
    let case = b.word("Selon", "selon", "ADP", &[]);
    b.space(" ");
    let name = pick_name(rng);
    let s = name_phrase(b, &name);
    b.attach(case, s, "case");
    let comma = b.punct(",", s);
    b.space(" ");
    let n = rng.gen_range(2..8);
    let c = clause(b, rng, n);
    b.attach(s, c, "obl:mod");
    let _ = comma;
    b.punct(".", c);
}

/// « clause . » on its own, possibly over two sentences.
fn floating<R: Rng>(b: &mut Builder, rng: &mut R) {
    let open = b.word("«", "«", "PUNCT", &[]);
    let n = rng.gen_range(2..6);
    let root = clause(b, rng, n);
    b.attach(open, root, "punct");
    b.punct(".", root);
    if rng.gen_bool(0.5) {
        b.end_sentence();
        b.space(" ");
        let m = rng.gen_range(2..6);
        let root = clause(b, rng, m);
        b.punct(".", root);
        b.punct("»", root);
    } else {
        b.punct("»", root);
    }
}

/// Name verb clause . with no speech.
fn plain<R: Rng>(b: &mut Builder, rng: &mut R) {
    let name = pick_name(rng);
    let s = name_phrase(b, &name);
    b.space(" ");
    let v = b.word("visite", "visiter", "VERB", &[]);
    b.attach(s, v, "nsubj");
    b.space(" ");
    let n = rng.gen_range(1..4);
    let c = clause(b, rng, n);
    b.attach(c, v, "obj");
    b.punct(".", v);
}

/// A stray opening mark that is never closed.
fn stray<R: Rng>(b: &mut Builder, rng: &mut R) {
    let open = b.word("«", "«", "PUNCT", &[]);
    let n = rng.gen_range(1..4);
    let root = clause(b, rng, n);
    b.attach(open, root, "punct");
    b.punct(".", root);
}

pub fn random_document<R: Rng>(rng: &mut R, id: usize) -> AnnotatedDocument {
    let mut b = Builder::default();
    let sentences = rng.gen_range(0..9);
    for k in 0..sentences {
        if k > 0 {
            b.space(if rng.gen_bool(0.2) { "\n\n" } else { " " });
        }
        match rng.gen_range(0..9) {
            0 => direct(&mut b, rng),
            1 => incise(&mut b, rng),
            2 => indirect(&mut b, rng, false),
            3 => indirect(&mut b, rng, true),
            4 => selon(&mut b, rng),
            5 => floating(&mut b, rng),
            6 => stray(&mut b, rng),
            _ => plain(&mut b, rng),
        }
        b.end_sentence();
    }
    let outlet = *["Le Devoir", "La Presse", "Le Soleil"].choose(rng).unwrap();
    let date = NaiveDate::from_ymd_opt(2022, rng.gen_range(1..=12), rng.gen_range(1..=28)).unwrap();
    b.finish(&format!("gen-{id}"), outlet, date)
}
