mod common;

use proptest::prelude::*;
use qp_core::doc_model::{parse_document, parse_documents, serialize_document, DocError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::docs;
use common::gen::random_document;

#[test]
fn newline_delimited_stream() {
    let corpus = docs();
    let mut raw = String::new();
    for (i, d) in corpus.iter().enumerate() {
        raw.push_str(&serialize_document(d));
        raw.push('\n');
        if i == 2 {
            // tokens that do not match the text
            raw.push_str(r#"{"doc_id":"bad","outlet":"x","published_at":"2022-01-01","text":"ab","tokens":[{"i":0,"text":"xy","lemma":"xy","pos":"X","head":0,"deprel":"root","start":0,"end":2,"sent":0}],"entities":[]}"#);
            raw.push('\n');
        }
    }
    let parsed = parse_documents(&raw);
    assert_eq!(parsed.len(), corpus.len() + 1);
    assert!(matches!(parsed[3], Err(DocError::Validation { field: "text", .. })));
    let good: Vec<_> = parsed.into_iter().filter_map(Result::ok).collect();
    assert_eq!(good, corpus);
}

#[test]
fn missing_date_is_rejected() {
    let raw = r#"{"doc_id":"d","outlet":"x","text":"","tokens":[],"entities":[]}"#;
    assert!(matches!(parse_document(raw), Err(DocError::Format { .. })));
    let raw = r#"{"doc_id":"d","outlet":"x","published_at":"2022-13-01","text":"","tokens":[],"entities":[]}"#;
    assert!(matches!(parse_document(raw), Err(DocError::Validation { field: "published_at", .. })));
}

#[test]
fn supplied_chains_are_kept() {
    let d = &docs()[0];
    let mut v: serde_json::Value = serde_json::from_str(&serialize_document(d)).unwrap();
    let last = d.tokens().len() - 2;
    v["coref_chains"] = serde_json::json!([[[1], [last]]]);
    let with = parse_document(&v.to_string()).unwrap();
    assert_eq!(with.coref_chains(), Some(&[vec![vec![1], vec![last]]][..]));
    v["coref_chains"] = serde_json::json!([[[last], [1]]]);
    assert!(parse_document(&v.to_string()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn documents_round_trip(seed in any::<u64>()) {
        let d = random_document(&mut ChaCha8Rng::seed_from_u64(seed), 3);
        let back = parse_document(&serialize_document(&d)).unwrap();
        prop_assert_eq!(back, d);
    }
}
