mod common;

use qp_core::lexicon::Lexicon;
use qp_core::ner::{person_entities, RefinedEntities, Rule};

use common::doc_in;

fn entities(stem: &str) -> RefinedEntities {
    person_entities(&doc_in("ner_docs", stem), &Lexicon::builtin())
}

fn people(stem: &str) -> Vec<String> {
    entities(stem).people.into_iter().map(|e| e.text).collect()
}

#[test]
fn title_pulled_into_entity() {
    let e = entities("01_barnes");
    assert_eq!(e.people.len(), 1);
    assert_eq!(e.people[0].text, "Maître Robert Barnes");
    assert_eq!(e.people[0].title.as_deref(), Some("Maître"));
    assert!(e.people[0].modified_by.contains(&Rule::Boundary));
}

#[test]
fn hyphenated_surname_completed() {
    assert_eq!(people("02_lambert"), ["Cassandre Lambert-Pellerin"]);
}

#[test]
fn coordinations_become_groups() {
    let e = entities("03_dupont");
    let people: Vec<&str> = e.people.iter().map(|p| p.text.as_str()).collect();
    assert_eq!(people, ["Pierre Dupont", "Marie Jugneau", "Gérard Klein"]);
    let groups: Vec<&str> = e.groups.iter().map(|g| g.text.as_str()).collect();
    assert_eq!(groups, ["Pierre Dupont et Marie Jugneau", "Gérard Klein et sa famille"]);
    assert!(e.groups.iter().all(|g| g.group));
}

#[test]
fn institution_cut_from_name() {
    assert_eq!(people("04_jacques"), ["Anne-Marie Jacques"]);
}

#[test]
fn newline_ends_name() {
    assert_eq!(people("05_julien"), ["Julien Jean"]);
}

#[test]
fn foreign_particle_kept() {
    assert_eq!(people("06_ursula"), ["Ursula von der Leyen"]);
}
