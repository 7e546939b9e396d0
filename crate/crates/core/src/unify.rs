//! Cluster/entity alignment and person unification.
//!
//! Coreference clusters are tied to person entities by head overlap. Entities
//! left over become singleton clusters. Clusters whose names denote the same
//! person are then merged, and each keeps its most complete name.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coref::SpanCluster;
use crate::doc_model::CharSpan;
use crate::lexicon::Lexicon;
use crate::ner::PersonEntity;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UnifyError {
    #[error("no name left in {0:?} once titles are removed")]
    Unparseable(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameParts {
    pub first: Option<String>,
    pub middles: Vec<String>,
    pub last: Option<String>,
    pub titles: Vec<String>,
}

impl NameParts {
    fn components(&self) -> usize {
        self.first.iter().count() + self.middles.len() + self.last.iter().count()
    }

    /// The only component of a one-part name.
    fn sole(&self) -> Option<&str> {
        if self.components() != 1 {
            return None;
        }
        self.first.as_deref().or(self.last.as_deref()).or(self.middles.first().map(String::as_str))
    }

    fn full(&self) -> String {
        self.first
            .iter()
            .chain(&self.middles)
            .chain(self.last.iter())
            .map(|s| s.to_lowercase())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NameMatch {
    Same,
    Different,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityCluster {
    pub representative: String,
    pub name_parts: NameParts,
    pub mentions: SpanCluster,
    pub member_entities: Vec<PersonEntity>,
}

impl EntityCluster {
    pub fn first_offset(&self) -> usize {
        let m = self.mentions.iter().flatten().map(|s| s.start).min();
        let e = self.member_entities.iter().map(|e| e.span.start).min();
        m.into_iter().chain(e).min().unwrap_or(0)
    }
}

/// Splits a name into parts. Titles are removed, particles stick to the
/// following word, and a lone word counts as a last name.
pub fn parse_name(text: &str, lexicon: &Lexicon) -> Result<NameParts, UnifyError> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let mut titles = Vec::new();
    let mut start = 0;
    while start < words.len() && lexicon.is_title(words[start]) {
        titles.push(words[start].to_string());
        start += 1;
    }
    let words = &words[start..];
    if words.is_empty() {
        return Err(UnifyError::Unparseable(text.to_string()));
    }
    let mut groups: Vec<String> = Vec::new();
    let mut pending: Vec<&str> = Vec::new();
    for (i, w) in words.iter().enumerate() {
        let leading_capital = i == 0 && w.chars().next().is_some_and(char::is_uppercase);
        if lexicon.is_particle(w) && i + 1 < words.len() && !leading_capital {
            pending.push(w);
            continue;
        }
        pending.push(w);
        groups.push(pending.join(" "));
        pending.clear();
    }
    let mut parts = NameParts {
        titles,
        ..Default::default()
    };
    match groups.len() {
        1 => parts.last = groups.pop(),
        _ => {
            parts.last = groups.pop();
            parts.first = Some(groups.remove(0));
            parts.middles = groups;
        }
    }
    Ok(parts)
}

fn eq_ci(a: &Option<String>, b: &Option<String>) -> Option<bool> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.to_lowercase() == b.to_lowercase()),
        _ => None,
    }
}

pub fn same_person(a: &NameParts, b: &NameParts) -> NameMatch {
    if a.full() == b.full() {
        return NameMatch::Same;
    }
    for (x, y) in [(a, b), (b, a)] {
        if let Some(s) = x.sole() {
            let s = Some(s.to_string());
            if eq_ci(&s, &y.first) == Some(true) || eq_ci(&s, &y.last) == Some(true) {
                return NameMatch::Same;
            }
        }
    }
    match (eq_ci(&a.first, &b.first), eq_ci(&a.last, &b.last)) {
        (Some(true), Some(true)) => NameMatch::Same,
        (Some(true), Some(false)) | (Some(false), Some(true)) => NameMatch::Different,
        _ => NameMatch::Ambiguous,
    }
}

/// A lone name used elsewhere as a first name, and nowhere as a last name,
/// is read as a first name.
fn reclassify_bare(candidates: &[NameParts]) -> Vec<NameParts> {
    candidates
        .iter()
        .map(|c| {
            let Some(sole) = c.last.as_ref().filter(|_| c.components() == 1) else {
                return c.clone();
            };
            let some_first = candidates.iter().any(|o| eq_ci(&o.first, &Some(sole.clone())) == Some(true));
            let some_last = candidates
                .iter()
                .any(|o| o.components() > 1 && eq_ci(&o.last, &Some(sole.clone())) == Some(true));
            if some_first && !some_last {
                NameParts {
                    first: Some(sole.clone()),
                    last: None,
                    ..c.clone()
                }
            } else {
                c.clone()
            }
        })
        .collect()
}

fn rank(p: &NameParts) -> (bool, bool, bool, usize) {
    (p.first.is_some() && p.last.is_some(), p.last.is_some(), p.first.is_some(), p.middles.len())
}

/// Most representative candidate; candidates are expected in document order
/// so that ties go to the earliest.
pub fn representative(candidates: &[NameParts]) -> usize {
    let parts = reclassify_bare(candidates);
    let mut best = 0;
    for i in 1..parts.len() {
        if rank(&parts[i]).cmp(&rank(&parts[best])) == Ordering::Greater {
            best = i;
        }
    }
    best
}

/// Pairs `(entity, cluster)` and the entities left unaligned. An entity goes
/// to the cluster where it covers the heads of the most mentions.
pub fn align(entities: &[PersonEntity], clusters: &[SpanCluster]) -> (Vec<(usize, usize)>, Vec<usize>) {
    let mut pairs = Vec::new();
    let mut singletons = Vec::new();
    for (e, ent) in entities.iter().enumerate() {
        let covers = |heads: &Vec<CharSpan>| !heads.is_empty() && heads.iter().all(|h| h.overlap(&ent.span) > 0);
        let best = clusters
            .iter()
            .enumerate()
            .map(|(c, cl)| (c, cl.iter().filter(|m| covers(m)).count()))
            .filter(|&(_, n)| n > 0)
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)));
        match best {
            Some((c, _)) => pairs.push((e, c)),
            None => singletons.push(e),
        }
    }
    (pairs, singletons)
}

/// Entity text with leading titles removed.
pub fn strip_titles<'a>(text: &'a str, lexicon: &Lexicon) -> &'a str {
    let mut rest = text.trim_start();
    while let Some((word, tail)) = rest.split_once(char::is_whitespace) {
        if !lexicon.is_title(word) {
            break;
        }
        rest = tail.trim_start();
    }
    rest
}

/// Builds a cluster from members, choosing its representative. `None` when
/// no member has a parseable name.
pub fn build_cluster(mentions: SpanCluster, mut members: Vec<PersonEntity>, lexicon: &Lexicon) -> Option<EntityCluster> {
    members.sort_by_key(|e| (e.span.start, e.span.end));
    members.dedup_by_key(|e| e.span);
    let parsed: Vec<(usize, NameParts)> = members
        .iter()
        .enumerate()
        .filter_map(|(i, e)| parse_name(&e.text, lexicon).ok().map(|p| (i, p)))
        .collect();
    if parsed.is_empty() {
        return None;
    }
    let parts: Vec<NameParts> = parsed.iter().map(|(_, p)| p.clone()).collect();
    let best = representative(&parts);
    let chosen = &members[parsed[best].0];
    let mut name_parts = parts[best].clone();
    if let Some(t) = &chosen.title {
        if !name_parts.titles.contains(t) {
            name_parts.titles.insert(0, t.clone());
        }
    }
    Some(EntityCluster {
        representative: strip_titles(&chosen.text, lexicon).to_string(),
        name_parts,
        mentions,
        member_entities: members,
    })
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Merges clusters whose representatives name the same person, up to
/// transitive closure. Output is ordered by first appearance.
pub fn merge(clusters: Vec<EntityCluster>, lexicon: &Lexicon) -> Vec<EntityCluster> {
    let n = clusters.len();
    let mut uf = UnionFind((0..n).collect());
    for i in 0..n {
        for j in i + 1..n {
            if same_person(&clusters[i].name_parts, &clusters[j].name_parts) == NameMatch::Same {
                uf.union(i, j);
            }
        }
    }
    let mut groups: Vec<(usize, Vec<EntityCluster>)> = Vec::new();
    for (i, c) in clusters.into_iter().enumerate() {
        let root = uf.find(i);
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, g)) => g.push(c),
            None => groups.push((root, vec![c])),
        }
    }
    let mut out: Vec<EntityCluster> = groups
        .into_iter()
        .filter_map(|(_, g)| {
            if g.len() == 1 {
                return g.into_iter().next();
            }
            let mut mentions: SpanCluster = g.iter().flat_map(|c| c.mentions.iter().cloned()).collect();
            mentions.sort();
            mentions.dedup();
            let members = g.into_iter().flat_map(|c| c.member_entities).collect();
            build_cluster(mentions, members, lexicon)
        })
        .collect();
    out.sort_by(|a, b| {
        a.first_offset()
            .cmp(&b.first_offset())
            .then_with(|| a.representative.cmp(&b.representative))
    });
    out
}

/// Alignment, singleton creation and merging in one pass.
pub fn unify(entities: &[PersonEntity], clusters: &[SpanCluster], lexicon: &Lexicon) -> Vec<EntityCluster> {
    let (pairs, singletons) = align(entities, clusters);
    let mut built = Vec::new();
    for (c, cluster) in clusters.iter().enumerate() {
        let members: Vec<PersonEntity> = pairs
            .iter()
            .filter(|&&(_, pc)| pc == c)
            .map(|&(e, _)| entities[e].clone())
            .collect();
        if !members.is_empty() {
            built.extend(build_cluster(cluster.clone(), members, lexicon));
        }
    }
    for e in singletons {
        built.extend(build_cluster(vec![vec![entities[e].span]], vec![entities[e].clone()], lexicon));
    }
    merge(built, lexicon)
}
