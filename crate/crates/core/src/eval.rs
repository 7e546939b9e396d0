//! Scoring system annotations against hand-annotated gold files.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::ArticleAnnotation;
use crate::doc_model::{AnnotatedDocument, CharSpan};
use crate::gender::Gender;
use crate::lexicon::Lexicon;
use crate::quotes::Quote;
use crate::speakers::map_speaker;
use crate::unify::EntityCluster;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("gold span {0} is empty; alignment score is undefined")]
    EmptyGoldSpan(CharSpan),
    #[error("no annotations to compute gender ratios from")]
    EmptyCorpus,
    #[error("bad gold file: {0}")]
    Gold(String),
}

/// Spans in gold files are `[start, end]` arrays.
mod pair {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::doc_model::CharSpan;

    pub fn serialize<S: Serializer>(s: &CharSpan, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_seq([s.start, s.end])
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CharSpan, D::Error> {
        let [a, b] = <[usize; 2]>::deserialize(d)?;
        if b < a {
            return Err(D::Error::custom(format!("span [{a}, {b}] ends before it starts")));
        }
        Ok(CharSpan::new(a, b))
    }
}

mod pair_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::doc_model::CharSpan;

    pub fn serialize<S: Serializer>(s: &Option<CharSpan>, ser: S) -> Result<S::Ok, S::Error> {
        match s {
            Some(s) => super::pair::serialize(s, ser),
            None => ser.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<CharSpan>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::pair")] CharSpan);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldQuote {
    #[serde(default, with = "pair_opt")]
    pub speaker: Option<CharSpan>,
    #[serde(default, with = "pair_opt")]
    pub verb: Option<CharSpan>,
    #[serde(with = "pair")]
    pub quote: CharSpan,
    /// Most complete name of the speaker, when it is a known person.
    #[serde(default)]
    pub reference: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldPerson {
    pub name: String,
    pub gender: Gender,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldAnnotation {
    pub doc_id: String,
    #[serde(default)]
    pub quotes: Vec<GoldQuote>,
    #[serde(default)]
    pub people: Vec<GoldPerson>,
}

fn norm(name: &str) -> String {
    name.trim().to_lowercase()
}

impl GoldAnnotation {
    pub fn parse(src: &str) -> Result<Self, EvalError> {
        let g: GoldAnnotation = serde_json::from_str(src).map_err(|e| EvalError::Gold(e.to_string()))?;
        let mut seen = BTreeSet::new();
        for p in &g.people {
            if !seen.insert(norm(&p.name)) {
                return Err(EvalError::Gold(format!("{}: person {:?} listed twice", g.doc_id, p.name)));
            }
        }
        Ok(g)
    }

    /// Checks every span against the article text.
    pub fn check_against(&self, doc: &AnnotatedDocument) -> Result<(), EvalError> {
        let n = doc.char_len();
        let spans = self
            .quotes
            .iter()
            .flat_map(|q| [q.speaker, q.verb, Some(q.quote)])
            .flatten();
        for s in spans {
            if s.end > n {
                return Err(EvalError::Gold(format!("{}: span {s} past end of text ({n})", self.doc_id)));
            }
        }
        Ok(())
    }

    fn gender_of(&self, name: &str) -> Gender {
        self.people
            .iter()
            .find(|p| norm(&p.name) == norm(name))
            .map_or(Gender::Unknown, |p| p.gender)
    }

    pub fn people_of(&self, gender: Option<Gender>) -> Vec<String> {
        self.people
            .iter()
            .filter(|p| gender.is_none_or(|g| bucket(p.gender) == g))
            .map(|p| p.name.clone())
            .collect()
    }

    pub fn sources_of(&self, gender: Option<Gender>) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in self.quotes.iter().filter_map(|q| q.reference.as_deref()) {
            if gender.is_none_or(|g| bucket(self.gender_of(r)) == g) && !out.iter().any(|o| norm(o) == norm(r)) {
                out.push(r.to_string());
            }
        }
        out
    }
}

/// Female, Male, or Other for everything else.
fn bucket(g: Gender) -> Gender {
    match g {
        Gender::Female | Gender::Male => g,
        _ => Gender::Other,
    }
}

pub fn alignment_score(gold: CharSpan, sys: CharSpan) -> Result<f64, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGoldSpan(gold));
    }
    Ok(gold.overlap(&sys) as f64 / gold.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuoteMatch {
    pub gold: usize,
    pub sys: usize,
    pub score: f64,
}

/// One-to-one matching: candidate pairs at or above `threshold` are taken by
/// descending score, ties by gold then system index.
pub fn match_quotes(gold: &[CharSpan], sys: &[CharSpan], threshold: f64) -> Vec<QuoteMatch> {
    let mut cands = Vec::new();
    for (g, gs) in gold.iter().enumerate() {
        if gs.is_empty() {
            continue;
        }
        for (s, ss) in sys.iter().enumerate() {
            let score = alignment_score(*gs, *ss).unwrap_or(0.0);
            if score > 0.0 && score >= threshold {
                cands.push(QuoteMatch { gold: g, sys: s, score });
            }
        }
    }
    cands.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.gold.cmp(&b.gold)).then(a.sys.cmp(&b.sys)));
    let (mut gused, mut sused) = (vec![false; gold.len()], vec![false; sys.len()]);
    let mut out = Vec::new();
    for c in cands {
        if !gused[c.gold] && !sused[c.sys] {
            gused[c.gold] = true;
            sused[c.sys] = true;
            out.push(c);
        }
    }
    out.sort_by_key(|m| m.gold);
    out
}

/// Counts with the rates derived from them; a rate with a zero denominator
/// is `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

pub fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl Prf {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Prf {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

pub fn f1(p: Option<f64>, r: Option<f64>) -> Option<f64> {
    match (p, r) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
    pub accuracy: Option<f64>,
}

impl Accuracy {
    pub fn new(correct: usize, total: usize) -> Self {
        Accuracy {
            correct,
            total,
            accuracy: ratio(correct, total),
        }
    }
}

/// Verbs must match exactly; speakers need `min_overlap` shared characters.
/// Both sides lacking a verb or speaker counts as agreement.
pub fn verb_speaker_accuracy(
    matches: &[QuoteMatch],
    gold: &[GoldQuote],
    sys: &[Quote],
    min_overlap: usize,
) -> (Accuracy, Accuracy) {
    let (mut verbs, mut speakers) = (0, 0);
    for m in matches {
        let (g, s) = (&gold[m.gold], &sys[m.sys]);
        if g.verb == s.verb_span {
            verbs += 1;
        }
        let speaker_ok = match (g.speaker, s.speaker_span) {
            (Some(a), Some(b)) => a.overlap(&b) >= min_overlap.max(1),
            (None, None) => true,
            _ => false,
        };
        if speaker_ok {
            speakers += 1;
        }
    }
    (Accuracy::new(verbs, matches.len()), Accuracy::new(speakers, matches.len()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ReferenceReport {
    pub correct_references: usize,
    pub system_reference_count: usize,
    pub gold_reference_count: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

/// Pooled over all pairs. A pair is correct when both references exist and
/// their lowercase edit distance is below `max_distance`.
pub fn speaker_reference_eval(pairs: &[(Option<String>, Option<String>)], max_distance: usize) -> ReferenceReport {
    let present = |r: &Option<String>| r.as_deref().is_some_and(|s| !s.trim().is_empty());
    let gold_count = pairs.iter().filter(|(g, _)| present(g)).count();
    let sys_count = pairs.iter().filter(|(_, s)| present(s)).count();
    let correct = pairs
        .iter()
        .filter(|(g, s)| present(g) && present(s))
        .filter(|(g, s)| {
            let (g, s) = (norm(g.as_deref().unwrap_or("")), norm(s.as_deref().unwrap_or("")));
            strsim::levenshtein(&g, &s) < max_distance
        })
        .count();
    let precision = ratio(correct, sys_count);
    let recall = ratio(correct, gold_count);
    ReferenceReport {
        correct_references: correct,
        system_reference_count: sys_count,
        gold_reference_count: gold_count,
        precision,
        recall,
        f1: f1(precision, recall),
    }
}

/// System references for gold speakers: each gold quote's speaker span is
/// mapped onto the system clusters.
pub fn gold_speaker_references(
    doc: &AnnotatedDocument,
    lexicon: &Lexicon,
    clusters: &[EntityCluster],
    gold: &GoldAnnotation,
) -> Vec<(Option<String>, Option<String>)> {
    gold.quotes
        .iter()
        .map(|g| {
            let sys = g.speaker.and_then(|span| {
                let q = Quote {
                    speaker: doc.slice(span).to_string(),
                    speaker_span: Some(span),
                    quote: doc.slice(g.quote).to_string(),
                    quote_span: g.quote,
                    verb: None,
                    verb_span: None,
                    quote_token_count: 0,
                    quote_type: String::new(),
                    is_floating: false,
                    reference: None,
                };
                map_speaker(doc, lexicon, q, clusters).quote.reference
            });
            (g.reference.clone(), sys)
        })
        .collect()
}

/// Set comparison summed over articles; names are trimmed and lowercased.
pub fn people_set_eval(articles: &[(Vec<String>, Vec<String>)]) -> Prf {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (truth, pred) in articles {
        let t: BTreeSet<String> = truth.iter().map(|n| norm(n)).collect();
        let p: BTreeSet<String> = pred.iter().map(|n| norm(n)).collect();
        tp += t.intersection(&p).count();
        fp += p.difference(&t).count();
        fn_ += t.difference(&p).count();
    }
    Prf::from_counts(tp, fp, fn_)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub men: Option<f64>,
    pub women: Option<f64>,
    pub other: Option<f64>,
    pub total: usize,
}

impl Ratio {
    /// Percentages of `men`, `women`, `other` over their sum.
    pub fn from_counts(men: usize, women: usize, other: usize) -> Self {
        let total = men + women + other;
        let pct = |n| ratio(n, total).map(|r| 100.0 * r);
        Ratio {
            men: pct(men),
            women: pct(women),
            other: pct(other),
            total,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GenderRatio {
    pub people: Ratio,
    pub sources: Ratio,
}

pub fn gender_ratio(annotations: &[ArticleAnnotation]) -> Result<GenderRatio, EvalError> {
    if annotations.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let count = |f: fn(&ArticleAnnotation) -> &Vec<String>| annotations.iter().map(|a| f(a).len()).sum::<usize>();
    Ok(GenderRatio {
        people: Ratio::from_counts(count(|a| &a.men_mentioned), count(|a| &a.women_mentioned), count(|a| &a.other_mentioned)),
        sources: Ratio::from_counts(count(|a| &a.men_sources), count(|a| &a.women_sources), count(|a| &a.other_sources)),
    })
}

fn gold_ratio(golds: &[&GoldAnnotation]) -> GenderRatio {
    let count = |f: &dyn Fn(&GoldAnnotation) -> usize| golds.iter().map(|g| f(g)).sum::<usize>();
    GenderRatio {
        people: Ratio::from_counts(
            count(&|g| g.people_of(Some(Gender::Male)).len()),
            count(&|g| g.people_of(Some(Gender::Female)).len()),
            count(&|g| g.people_of(Some(Gender::Other)).len()),
        ),
        sources: Ratio::from_counts(
            count(&|g| g.sources_of(Some(Gender::Male)).len()),
            count(&|g| g.sources_of(Some(Gender::Female)).len()),
            count(&|g| g.sources_of(Some(Gender::Other)).len()),
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub threshold: f64,
    pub quotes: Prf,
    pub verb: Accuracy,
    pub speaker: Accuracy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeopleReport {
    pub people: Prf,
    pub women: Prf,
    pub men: Prf,
    pub sources: Prf,
    pub women_sources: Prf,
    pub men_sources: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub articles: usize,
    pub thresholds: Vec<ThresholdReport>,
    /// How system references were obtained: from gold speakers mapped onto
    /// the system clusters, or from matched system quotes.
    pub reference_protocol: String,
    pub references: ReferenceReport,
    pub people: PeopleReport,
    pub gold_ratio: GenderRatio,
    pub system_ratio: GenderRatio,
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub thresholds: Vec<f64>,
    pub speaker_overlap: usize,
    pub max_reference_distance: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            thresholds: vec![0.3, 0.8],
            speaker_overlap: 1,
            max_reference_distance: 2,
        }
    }
}

/// Scores paired gold and system annotations. `gold_references` holds the
/// gold-speaker protocol pairs when the articles were available; otherwise
/// references are compared across matched quotes at the lowest threshold.
pub fn evaluate(
    pairs: &[(&GoldAnnotation, &ArticleAnnotation)],
    gold_references: Option<&[(Option<String>, Option<String>)]>,
    opts: &EvalOptions,
) -> EvalReport {
    let gold_spans: Vec<Vec<CharSpan>> = pairs.iter().map(|(g, _)| g.quotes.iter().map(|q| q.quote).collect()).collect();
    let sys_spans: Vec<Vec<CharSpan>> = pairs.iter().map(|(_, s)| s.quotes.iter().map(|q| q.quote_span).collect()).collect();
    let mut thresholds = Vec::new();
    for &t in &opts.thresholds {
        let (mut matched, mut n_sys, mut n_gold) = (0, 0, 0);
        let (mut verb, mut speaker) = (Accuracy::default(), Accuracy::default());
        for (i, (g, s)) in pairs.iter().enumerate() {
            let m = match_quotes(&gold_spans[i], &sys_spans[i], t);
            let (v, sp) = verb_speaker_accuracy(&m, &g.quotes, &s.quotes, opts.speaker_overlap);
            verb = Accuracy::new(verb.correct + v.correct, verb.total + v.total);
            speaker = Accuracy::new(speaker.correct + sp.correct, speaker.total + sp.total);
            matched += m.len();
            n_sys += s.quotes.len();
            n_gold += g.quotes.len();
        }
        thresholds.push(ThresholdReport {
            threshold: t,
            quotes: Prf::from_counts(matched, n_sys - matched, n_gold - matched),
            verb,
            speaker,
        });
    }
    let (protocol, references) = match gold_references {
        Some(r) => ("gold_speakers", speaker_reference_eval(r, opts.max_reference_distance)),
        None => {
            let t = opts.thresholds.iter().copied().fold(f64::INFINITY, f64::min).min(1.0);
            let mut refs = Vec::new();
            for (i, (g, s)) in pairs.iter().enumerate() {
                let m = match_quotes(&gold_spans[i], &sys_spans[i], t);
                for (gi, q) in g.quotes.iter().enumerate() {
                    let sys = m.iter().find(|x| x.gold == gi).and_then(|x| s.quotes[x.sys].reference.clone());
                    refs.push((q.reference.clone(), sys));
                }
            }
            ("matched_quotes", speaker_reference_eval(&refs, opts.max_reference_distance))
        }
    };
    let family = |gold: &dyn Fn(&GoldAnnotation) -> Vec<String>, sys: &dyn Fn(&ArticleAnnotation) -> Vec<String>| {
        let sets: Vec<(Vec<String>, Vec<String>)> = pairs.iter().map(|(g, s)| (gold(g), sys(s))).collect();
        people_set_eval(&sets)
    };
    let people = PeopleReport {
        people: family(&|g| g.people_of(None), &|s| s.people_mentioned.clone()),
        women: family(&|g| g.people_of(Some(Gender::Female)), &|s| s.women_mentioned.clone()),
        men: family(&|g| g.people_of(Some(Gender::Male)), &|s| s.men_mentioned.clone()),
        sources: family(&|g| g.sources_of(None), &|s| s.sources.clone()),
        women_sources: family(&|g| g.sources_of(Some(Gender::Female)), &|s| s.women_sources.clone()),
        men_sources: family(&|g| g.sources_of(Some(Gender::Male)), &|s| s.men_sources.clone()),
    };
    let golds: Vec<&GoldAnnotation> = pairs.iter().map(|(g, _)| *g).collect();
    let systems: Vec<ArticleAnnotation> = pairs.iter().map(|(_, s)| (*s).clone()).collect();
    EvalReport {
        articles: pairs.len(),
        thresholds,
        reference_protocol: protocol.to_string(),
        references,
        people,
        gold_ratio: gold_ratio(&golds),
        system_ratio: gender_ratio(&systems).unwrap_or_default(),
    }
}

fn pct(x: Option<f64>) -> String {
    x.map_or_else(|| "N/A".to_string(), |v| format!("{:.1}", 100.0 * v))
}

fn share(x: Option<f64>) -> String {
    x.map_or_else(|| "N/A".to_string(), |v| format!("{v:.1}%"))
}

/// Plain-text rendering of a report.
pub fn render_report(r: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "articles: {}", r.articles);
    let _ = writeln!(out, "\nquotes       threshold  precision  recall  f1     verb acc  speaker acc");
    for t in &r.thresholds {
        let _ = writeln!(
            out,
            "             {:<9}  {:<9}  {:<6}  {:<5}  {:<8}  {}",
            t.threshold,
            pct(t.quotes.precision),
            pct(t.quotes.recall),
            pct(t.quotes.f1),
            pct(t.verb.accuracy),
            pct(t.speaker.accuracy)
        );
    }
    let rf = &r.references;
    let _ = writeln!(
        out,
        "\nreferences ({}): correct {} / system {} / gold {}  precision {}  recall {}  f1 {}",
        r.reference_protocol,
        rf.correct_references,
        rf.system_reference_count,
        rf.gold_reference_count,
        pct(rf.precision),
        pct(rf.recall),
        pct(rf.f1)
    );
    let _ = writeln!(out, "\nset            precision  recall  f1");
    let p = &r.people;
    for (name, m) in [
        ("people", &p.people),
        ("women", &p.women),
        ("men", &p.men),
        ("sources", &p.sources),
        ("women sources", &p.women_sources),
        ("men sources", &p.men_sources),
    ] {
        let _ = writeln!(out, "{name:<14} {:<9}  {:<6}  {}", pct(m.precision), pct(m.recall), pct(m.f1));
    }
    let _ = writeln!(out, "\ngender ratio       people (men/women/other)      sources (men/women/other)");
    for (name, g) in [("human annotation", &r.gold_ratio), ("system", &r.system_ratio)] {
        let _ = writeln!(
            out,
            "{name:<18} {:>6} / {:>6} / {:>6}      {:>6} / {:>6} / {:>6}",
            share(g.people.men),
            share(g.people.women),
            share(g.people.other),
            share(g.sources.men),
            share(g.sources.women),
            share(g.sources.other)
        );
    }
    out
}
