#![allow(dead_code)]
pub mod checks;
pub mod gen;
pub mod oracles;


use std::path::{Path, PathBuf};

use qp_core::annotate::{annotate, ArticleAnnotation};
use qp_core::config::Pipeline;
use qp_core::doc_model::{parse_document, AnnotatedDocument};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Stems of the quote corpus sources, sorted.
pub fn stems() -> Vec<String> {
    stems_in("src", "conllu")
}

pub fn stems_in(dir: &str, ext: &str) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(fixtures().join(dir))
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == ext).then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    v.sort();
    v
}

/// A fixture article, read through the interchange format.
pub fn doc(stem: &str) -> AnnotatedDocument {
    doc_in("docs", stem)
}

pub fn doc_in(dir: &str, stem: &str) -> AnnotatedDocument {
    let path = fixtures().join(dir).join(format!("{stem}.json"));
    let raw = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_document(&raw).unwrap()
}

pub fn docs() -> Vec<AnnotatedDocument> {
    stems().iter().map(|s| doc(s)).collect()
}

pub fn annotated(stem: &str) -> ArticleAnnotation {
    annotate(&doc(stem), &Pipeline::builtin()).unwrap()
}

pub fn updating() -> bool {
    std::env::var_os("UPDATE_FIXTURES").is_some()
}

/// Compares `actual` with the file at `path`, or rewrites it when updating.
pub fn check_file(path: &Path, actual: &str) {
    if updating() {
        std::fs::write(path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e} (run with UPDATE_FIXTURES=1)", path.display()));
    assert!(expected == actual, "{} is out of date (run with UPDATE_FIXTURES=1)", path.display());
}

/// Structural checks every annotation must pass.
pub fn check_invariants(doc: &AnnotatedDocument, a: &ArticleAnnotation) -> Result<(), String> {
    use std::collections::BTreeSet;
    use qp_core::annotate::{parse_annotation, serialize_annotation};
    use qp_core::quotes::{mark_pairs, QuoteKind};

    let set = |v: &Vec<String>| v.iter().cloned().collect::<BTreeSet<_>>();
    let people = set(&a.people_mentioned);
    if people.len() != a.people_mentioned.len() {
        return Err("duplicate people".into());
    }
    for s in &a.sources {
        if !people.contains(s) {
            return Err(format!("source {s:?} not among people"));
        }
    }
    for (parent, parts) in [
        (&a.people_mentioned, [&a.women_mentioned, &a.men_mentioned, &a.other_mentioned]),
        (&a.sources, [&a.women_sources, &a.men_sources, &a.other_sources]),
    ] {
        let union: Vec<&String> = parts.iter().flat_map(|p| p.iter()).collect();
        if union.len() != parent.len() || set(parent) != union.into_iter().cloned().collect() {
            return Err(format!("gender lists do not partition {parent:?}"));
        }
    }
    let back = parse_annotation(&serialize_annotation(a)).map_err(|e| e.to_string())?;
    if &back != a {
        return Err("annotation does not round-trip".into());
    }
    let pairs = mark_pairs(doc.text());
    for q in &back.quotes {
        if doc.slice(q.quote_span) != q.quote {
            return Err(format!("quote index {} does not give {:?}", q.quote_span, q.quote));
        }
        if let Some(s) = q.speaker_span {
            if doc.slice(s) != q.speaker {
                return Err(format!("speaker index {s} does not give {:?}", q.speaker));
            }
        }
        match (q.verb_span, &q.verb) {
            (Some(v), Some(text)) if doc.slice(v) == text => {}
            (None, None) => {}
            _ => return Err(format!("verb index of {:?} is inconsistent", q.quote)),
        }
        if q.quote_token_count != q.quote.split_whitespace().count() {
            return Err(format!("token count of {:?}", q.quote));
        }
        if q.kind() == QuoteKind::Direct && !pairs.iter().any(|p| p.inner().covers(&q.quote_span)) {
            return Err(format!("direct quote {:?} is not between marks", q.quote));
        }
    }
    Ok(())
}
