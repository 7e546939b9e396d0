mod common;

use qp_core::lexicon::Lexicon;
use qp_core::unify::merge;

use common::checks::{cluster_of, merge_oracle};

#[test]
fn merge_matches_transitive_closure() {
    merge_oracle(50, 11).unwrap();
}

#[test]
fn trudeau_variants_collapse() {
    let lx = Lexicon::builtin();
    let names = ["Justin Trudeau", "Justin", "Monsieur Trudeau", "Trudeau"];
    let clusters = names.iter().enumerate().map(|(i, n)| cluster_of(n, i * 50, &lx)).collect();
    let merged = merge(clusters, &lx);
    assert_eq!(merged.len(), 1);
    assert_eq!(merged[0].representative, "Justin Trudeau");
    assert_eq!(merged[0].member_entities.len(), 4);
}

#[test]
fn different_first_names_stay_apart() {
    let lx = Lexicon::builtin();
    let clusters = vec![cluster_of("Justin Trudeau", 0, &lx), cluster_of("Pierre Trudeau", 40, &lx)];
    assert_eq!(merge(clusters, &lx).len(), 2);
}
