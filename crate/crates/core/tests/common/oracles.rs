//! Slow, obviously-correct reference implementations.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BTreeSet;

use qp_core::doc_model::CharSpan;
use qp_core::unify::{same_person, EntityCluster, NameMatch};

/// Edge between gold `g` and system `s`; greater is better.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub g: usize,
    pub s: usize,
    pub score: f64,
}

fn better(a: &Edge, b: &Edge) -> Ordering {
    a.score.total_cmp(&b.score).then(b.g.cmp(&a.g)).then(b.s.cmp(&a.s))
}

fn overlap(a: CharSpan, b: CharSpan) -> usize {
    (a.start..a.end).filter(|x| (b.start..b.end).contains(x)).count()
}

/// Every eligible edge, scored by counting shared offsets one by one.
pub fn edges(gold: &[CharSpan], sys: &[CharSpan], threshold: f64) -> Vec<Edge> {
    let mut out = Vec::new();
    for (g, gs) in gold.iter().enumerate() {
        for (s, ss) in sys.iter().enumerate() {
            let len = gs.end - gs.start;
            if len == 0 {
                continue;
            }
            let score = overlap(*gs, *ss) as f64 / len as f64;
            if score > 0.0 && score >= threshold {
                out.push(Edge { g, s, score });
            }
        }
    }
    out
}

/// Enumerates every one-to-one assignment and keeps the one whose edges,
/// best first, form the lexicographically greatest sequence.
pub fn exhaustive_matching(gold: &[CharSpan], sys: &[CharSpan], threshold: f64) -> Vec<Edge> {
    let all = edges(gold, sys, threshold);
    let mut best: Vec<Edge> = Vec::new();
    let mut current = Vec::new();
    fn key(m: &[Edge]) -> Vec<Edge> {
        let mut v = m.to_vec();
        v.sort_by(|a, b| better(b, a));
        v
    }
    fn lex_greater(a: &[Edge], b: &[Edge]) -> bool {
        for (x, y) in a.iter().zip(b) {
            match better(x, y) {
                Ordering::Greater => return true,
                Ordering::Less => return false,
                Ordering::Equal => {}
            }
        }
        a.len() > b.len()
    }
    fn walk(g: usize, ng: usize, all: &[Edge], used: &mut Vec<usize>, cur: &mut Vec<Edge>, best: &mut Vec<Edge>) {
        if g == ng {
            let k = key(cur);
            if lex_greater(&k, best) {
                *best = k;
            }
            return;
        }
        walk(g + 1, ng, all, used, cur, best);
        for e in all.iter().filter(|e| e.g == g) {
            if used.contains(&e.s) {
                continue;
            }
            used.push(e.s);
            cur.push(*e);
            walk(g + 1, ng, all, used, cur, best);
            cur.pop();
            used.pop();
        }
    }
    walk(0, gold.len(), &all, &mut Vec::new(), &mut current, &mut best);
    best.sort_by_key(|e| e.g);
    best
}

/// Textbook dynamic-programming edit distance over characters.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

/// (correct, system count, gold count) for reference pairs.
pub fn reference_counts(pairs: &[(Option<String>, Option<String>)], max_distance: usize) -> (usize, usize, usize) {
    let clean = |r: &Option<String>| r.clone().filter(|s| !s.trim().is_empty()).map(|s| s.trim().to_lowercase());
    let mut counts = (0, 0, 0);
    for (g, s) in pairs {
        let (g, s) = (clean(g), clean(s));
        counts.1 += usize::from(s.is_some());
        counts.2 += usize::from(g.is_some());
        if let (Some(g), Some(s)) = (g, s) {
            counts.0 += usize::from(levenshtein(&g, &s) < max_distance);
        }
    }
    counts
}

/// (tp, fp, fn) by nested loops over deduplicated lowercase names.
pub fn set_counts(articles: &[(Vec<String>, Vec<String>)]) -> (usize, usize, usize) {
    let mut c = (0, 0, 0);
    for (truth, pred) in articles {
        let mut t: Vec<String> = truth.iter().map(|n| n.trim().to_lowercase()).collect();
        let mut p: Vec<String> = pred.iter().map(|n| n.trim().to_lowercase()).collect();
        t.sort();
        t.dedup();
        p.sort();
        p.dedup();
        for x in &p {
            if t.contains(x) {
                c.0 += 1;
            } else {
                c.1 += 1;
            }
        }
        c.2 += t.iter().filter(|x| !p.contains(x)).count();
    }
    c
}

/// Connected components of the "same person" graph, each given as the set of
/// member entity texts with their offsets.
pub fn closure_partition(clusters: &[EntityCluster]) -> BTreeSet<BTreeSet<(usize, String)>> {
    let n = clusters.len();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
        for j in 0..n {
            if same_person(&clusters[i].name_parts, &clusters[j].name_parts) == NameMatch::Same {
                reach[i][j] = true;
                reach[j][i] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| reach[i][j])
                .flat_map(|j| members(&clusters[j]))
                .collect::<BTreeSet<_>>()
        })
        .collect()
}

pub fn members(c: &EntityCluster) -> BTreeSet<(usize, String)> {
    c.member_entities.iter().map(|e| (e.span.start, e.text.clone())).collect()
}
