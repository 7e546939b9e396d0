//! Randomized comparisons against the oracles, shared by the focused tests
//! and the acceptance run.
#![allow(dead_code)]

use std::collections::BTreeSet;

use qp_core::doc_model::CharSpan;
use qp_core::eval::{match_quotes, people_set_eval, speaker_reference_eval};
use qp_core::lexicon::Lexicon;
use qp_core::ner::{PersonEntity, Rule};
use qp_core::unify::{build_cluster, merge, EntityCluster};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracles;

fn random_spans<R: Rng>(rng: &mut R, n: usize, base: &[CharSpan]) -> Vec<CharSpan> {
    (0..n)
        .map(|_| {
            if !base.is_empty() && rng.gen_bool(0.6) {
                // a jittered copy makes partial and tied overlaps likely
                let b = base.choose(rng).unwrap();
                let s = (b.start + rng.gen_range(0..6)).saturating_sub(3);
                let e = (b.end + rng.gen_range(0..6)).saturating_sub(3).max(s);
                CharSpan::new(s, e)
            } else {
                let s = rng.gen_range(0..120);
                CharSpan::new(s, s + rng.gen_range(0..40))
            }
        })
        .collect()
}

const NAMES: &[&str] = &["Marie Côté", "Jean Roy", "Legault", "François Legault", "Chang", "Dionne", "Manuel Dionne"];

fn noisy_name<R: Rng>(rng: &mut R) -> Option<String> {
    match rng.gen_range(0..8) {
        0 => None,
        1 => Some(String::new()),
        2 => Some("  ".into()),
        _ => {
            let mut chars: Vec<char> = NAMES.choose(rng).unwrap().chars().collect();
            for _ in 0..rng.gen_range(0..3) {
                match rng.gen_range(0..3) {
                    0 if !chars.is_empty() => {
                        let i = rng.gen_range(0..chars.len());
                        chars.remove(i);
                    }
                    1 => {
                        let i = rng.gen_range(0..=chars.len());
                        chars.insert(i, *['e', 'é', 'x', ' '].choose(rng).unwrap());
                    }
                    _ => {}
                }
            }
            let s: String = chars.into_iter().collect();
            Some(if rng.gen_bool(0.3) { s.to_uppercase() } else { s })
        }
    }
}

fn name_set<R: Rng>(rng: &mut R) -> Vec<String> {
    (0..rng.gen_range(0..=6))
        .map(|_| {
            let n = NAMES.choose(rng).unwrap();
            match rng.gen_range(0..3) {
                0 => n.to_lowercase(),
                1 => format!(" {n} "),
                _ => n.to_string(),
            }
        })
        .collect()
}

/// Runs `cases` random gold/system sets through the three metrics and their
/// oracles.
pub fn metric_oracles(cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let (ng, ns) = (rng.gen_range(0..=6), rng.gen_range(0..=6));
        let gold = random_spans(&mut rng, ng, &[]);
        let sys = random_spans(&mut rng, ns, &gold);
        let t = *[0.0, 0.3, 0.5, 0.8, 1.0].choose(&mut rng).unwrap();
        let got: Vec<(usize, usize, f64)> = match_quotes(&gold, &sys, t).iter().map(|m| (m.gold, m.sys, m.score)).collect();
        let want: Vec<(usize, usize, f64)> = oracles::exhaustive_matching(&gold, &sys, t).iter().map(|e| (e.g, e.s, e.score)).collect();
        if got != want {
            return Err(format!("case {case}: match_quotes {got:?} != oracle {want:?} for {gold:?} / {sys:?} at {t}"));
        }

        let pairs: Vec<(Option<String>, Option<String>)> =
            (0..rng.gen_range(0..=6)).map(|_| (noisy_name(&mut rng), noisy_name(&mut rng))).collect();
        let d = rng.gen_range(1..4);
        let r = speaker_reference_eval(&pairs, d);
        let (c, s, g) = oracles::reference_counts(&pairs, d);
        if (r.correct_references, r.system_reference_count, r.gold_reference_count) != (c, s, g) {
            return Err(format!("case {case}: reference counts {r:?} != ({c}, {s}, {g}) for {pairs:?}"));
        }

        let articles: Vec<(Vec<String>, Vec<String>)> =
            (0..rng.gen_range(1..4)).map(|_| (name_set(&mut rng), name_set(&mut rng))).collect();
        let p = people_set_eval(&articles);
        let want = oracles::set_counts(&articles);
        if (p.tp, p.fp, p.fn_) != want {
            return Err(format!("case {case}: people counts {p:?} != {want:?}"));
        }
    }
    Ok(())
}

const CLUSTER_NAMES: &[&str] = &[
    "Justin Trudeau",
    "Justin",
    "Monsieur Trudeau",
    "Trudeau",
    "Sophie Grégoire Trudeau",
    "Sophie",
    "Pierre Trudeau",
    "Marie Côté",
    "Côté",
    "Mme Côté",
    "Marie",
    "Jean Marie Côté",
    "Legault",
    "François Legault",
    "Ursula von der Leyen",
];

pub fn cluster_of(text: &str, start: usize, lx: &Lexicon) -> EntityCluster {
    let span = CharSpan::new(start, start + text.chars().count());
    let e = PersonEntity {
        first_token: start,
        last_token: start,
        span,
        text: text.to_string(),
        title: None,
        source_rule: Rule::Parser,
        modified_by: vec![],
        group: false,
    };
    build_cluster(vec![vec![span]], vec![e], lx).expect("fixture names parse")
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

type Partition = BTreeSet<BTreeSet<(usize, String)>>;

fn partition(clusters: &[EntityCluster]) -> Partition {
    clusters.iter().map(oracles::members).collect()
}

/// Random fixtures of up to five single-name clusters, merged in every order.
pub fn merge_oracle(fixtures: usize, seed: u64) -> Result<(), String> {
    let lx = Lexicon::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for f in 0..fixtures {
        let n = rng.gen_range(1..=5);
        let clusters: Vec<EntityCluster> =
            (0..n).map(|i| cluster_of(CLUSTER_NAMES.choose(&mut rng).unwrap(), i * 100, &lx)).collect();
        let want = oracles::closure_partition(&clusters);
        let mut first: Option<Vec<String>> = None;
        for perm in permutations(n) {
            let input: Vec<EntityCluster> = perm.iter().map(|&i| clusters[i].clone()).collect();
            let merged = merge(input, &lx);
            if partition(&merged) != want {
                return Err(format!("fixture {f}, order {perm:?}: {:?} != {want:?}", partition(&merged)));
            }
            let reps: Vec<String> = merged.iter().map(|c| c.representative.clone()).collect();
            match &first {
                None => first = Some(reps),
                Some(r) if *r != reps => return Err(format!("fixture {f}: order changes representatives {r:?} vs {reps:?}")),
                _ => {}
            }
        }
    }
    Ok(())
}

pub fn planted(outlet: &str, date: &str, men: &[&str], women: &[&str], other: &[&str]) -> qp_core::annotate::ArticleAnnotation {
    let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let all: Vec<String> = v(men).into_iter().chain(v(women)).chain(v(other)).collect();
    qp_core::annotate::ArticleAnnotation {
        doc_id: format!("{outlet}/{date}/{}", all.join("+")),
        outlet: outlet.into(),
        published_at: date.parse().unwrap(),
        people_mentioned: all.clone(),
        men_mentioned: v(men),
        women_mentioned: v(women),
        other_mentioned: v(other),
        sources: all,
        men_sources: v(men),
        women_sources: v(women),
        other_sources: v(other),
        quotes: vec![],
    }
}

/// Row arithmetic on a planted corpus, then percentage sums on random ones.
pub fn ratio_arithmetic(random_corpora: usize, seed: u64) -> Result<(), String> {
    use qp_core::eval::gender_ratio;
    use qp_core::stats::{outlet_breakdown, Window};

    let corpus = vec![
        planted("Le Devoir", "2022-03-01", &["Jean Roy", "Luc Roy"], &["Marie Côté"], &[]),
        planted("Le Devoir", "2022-03-09", &["Paul Gagnon"], &[], &[]),
        planted("La Presse", "2022-03-02", &["Jean Roy"], &["Julie Lavoie", "Sophie Roy"], &["Camille Côté"]),
    ];
    let b = outlet_breakdown(&corpus, Window::default(), false);
    let fmt = |r: &qp_core::stats::OutletRow| format!("{:.1}/{:.1}/{:.1} {}", r.men_pct, r.women_pct, r.other_pct, r.articles);
    let rows: Vec<String> = b.rows.iter().map(|r| format!("{} {}", r.outlet, fmt(r))).collect();
    let want = ["La Presse 25.0/50.0/25.0 1", "Le Devoir 75.0/25.0/0.0 2"];
    if rows != want {
        return Err(format!("rows {rows:?} != {want:?}"));
    }
    let total = b.total.as_ref().ok_or("no total row")?;
    if fmt(total) != "50.0/37.5/12.5 3" {
        return Err(format!("total row {}", fmt(total)));
    }
    let g = gender_ratio(&corpus).map_err(|e| e.to_string())?;
    if (g.sources.men, g.sources.women, g.sources.other) != (Some(50.0), Some(37.5), Some(12.5)) {
        return Err(format!("corpus ratio {:?}", g.sources));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = ["A", "B", "C", "D", "E", "F", "G", "H"];
    for case in 0..random_corpora {
        let corpus: Vec<_> = (0..rng.gen_range(1..20))
            .map(|_| {
                let mut names = pool.to_vec();
                names.shuffle(&mut rng);
                let (m, rest) = names.split_at(rng.gen_range(0..4));
                let (w, rest) = rest.split_at(rng.gen_range(0..3));
                let o = &rest[..rng.gen_range(0..2)];
                let outlet = *["X", "Y", "Z"].choose(&mut rng).unwrap();
                planted(outlet, "2022-05-05", m, w, o)
            })
            .collect();
        let b = outlet_breakdown(&corpus, Window::default(), rng.gen_bool(0.5));
        for r in b.rows.iter().chain(b.total.iter()) {
            let sum = r.men_pct + r.women_pct + r.other_pct;
            let empty = r.men + r.women + r.other == 0;
            if !(empty && sum == 0.0) && (sum - 100.0).abs() > 0.1 {
                return Err(format!("case {case}: {} sums to {sum}", r.outlet));
            }
        }
    }
    Ok(())
}
