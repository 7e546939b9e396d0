//! Quote extraction, speaker attribution and gender-representation
//! statistics for pre-parsed French news articles.

pub mod annotate;
pub mod config;
pub mod coref;
pub mod doc_model;
pub mod eval;
pub mod gender;
pub mod lexicon;
pub mod mention;
pub mod ner;
pub mod quotes;
pub mod speakers;
pub mod stats;
pub mod store;
pub mod unify;

pub use doc_model::{parse_document, serialize_document, span_overlap, token_at_char, AnnotatedDocument, CharSpan};
