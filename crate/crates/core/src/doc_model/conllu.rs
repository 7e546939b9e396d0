//! Import of CoNLL-U files into [`AnnotatedDocument`]s.
//!
//! The article text is rebuilt from token forms and the `SpaceAfter=No` /
//! `SpacesAfter=` MISC attributes. Document metadata and coreference chains
//! travel in comment lines:
//!
//! ```text
//! # newdoc id = lp-2022-001
//! # outlet = La Presse
//! # published_at = 2022-03-14
//! # coref_chains = [[[4],[46]],[[47],[52]]]
//! ```
//!
//! Named entities come from an `NE=B-PER` / `NE=I-PER` MISC attribute. Tokens
//! tagged `SPACE` take their surface from an escaped `Form=` attribute, which
//! keeps whitespace tokens produced by some parsers representable.

use std::collections::BTreeMap;

use chrono::NaiveDate;

use super::{AnnotatedDocument, CharSpan, CorefChainInput, DocError, DocumentParts, EntityLabel, Token};

fn err(line: usize, message: impl Into<String>) -> DocError {
    DocError::Conllu {
        line,
        message: message.into(),
    }
}

fn unescape(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('s') => out.push(' '),
            Some('p') => out.push('|'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

#[derive(Default)]
struct PendingDoc {
    id: Option<String>,
    outlet: String,
    published_at: Option<NaiveDate>,
    coref: Option<Vec<CorefChainInput>>,
    text: String,
    chars: usize,
    tokens: Vec<Token>,
    entities: Vec<(EntityLabel, usize, usize)>,
    open_entity: Option<(EntityLabel, usize)>,
    sentence: usize,
    sentence_start: usize,
    /// (token, local head) for the current sentence
    local_heads: Vec<(usize, usize)>,
    trailing_default_space: bool,
}

impl PendingDoc {
    fn close_entity(&mut self) {
        if let Some((label, first)) = self.open_entity.take() {
            self.entities.push((label, first, self.tokens.len() - 1));
        }
    }

    fn finish_sentence(&mut self, line: usize) -> Result<(), DocError> {
        if self.local_heads.is_empty() {
            return Ok(());
        }
        let count = self.local_heads.len();
        for (tok, head) in std::mem::take(&mut self.local_heads) {
            self.tokens[tok].head = match head {
                0 => tok,
                h if h <= count => self.sentence_start + h - 1,
                h => return Err(err(line, format!("head {h} outside sentence of {count} tokens"))),
            };
        }
        self.sentence += 1;
        self.sentence_start = self.tokens.len();
        Ok(())
    }

    fn finish(mut self, line: usize) -> Result<Option<AnnotatedDocument>, DocError> {
        self.close_entity();
        self.finish_sentence(line)?;
        if self.id.is_none() && self.tokens.is_empty() {
            return Ok(None);
        }
        if self.trailing_default_space {
            self.text.pop();
        }
        AnnotatedDocument::new(DocumentParts {
            doc_id: self.id.unwrap_or_default(),
            outlet: self.outlet,
            published_at: self.published_at,
            text: self.text,
            tokens: self.tokens,
            entities: self.entities,
            coref_chains: self.coref,
        })
        .map(Some)
    }
}

/// Reads every document in a CoNLL-U string.
pub fn read_conllu(input: &str) -> Result<Vec<AnnotatedDocument>, DocError> {
    let mut docs = Vec::new();
    let mut cur = PendingDoc::default();
    let mut line_no = 0;
    for (n, line) in input.lines().enumerate() {
        line_no = n + 1;
        let line = line.trim_end_matches('\r');
        if let Some(comment) = line.strip_prefix('#') {
            let Some((key, value)) = comment.split_once('=') else { continue };
            let (key, value) = (key.trim(), value.trim());
            match key {
                "newdoc id" => {
                    let done = std::mem::take(&mut cur);
                    docs.extend(done.finish(line_no)?);
                    cur.id = Some(value.to_string());
                }
                "outlet" => cur.outlet = value.to_string(),
                "published_at" => {
                    cur.published_at = Some(
                        NaiveDate::parse_from_str(value, "%Y-%m-%d")
                            .map_err(|e| err(line_no, format!("bad date {value:?}: {e}")))?,
                    )
                }
                "coref_chains" => {
                    cur.coref = Some(
                        serde_json::from_str(value).map_err(|e| err(line_no, format!("bad coref chains: {e}")))?,
                    )
                }
                _ => {}
            }
            continue;
        }
        if line.trim().is_empty() {
            cur.close_entity();
            cur.finish_sentence(line_no)?;
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(err(line_no, format!("expected 10 columns, found {}", cols.len())));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let misc: BTreeMap<&str, &str> = cols[9]
            .split('|')
            .filter_map(|kv| kv.split_once('='))
            .collect();
        let pos = cols[3].to_string();
        let form = match misc.get("Form") {
            Some(f) if pos == "SPACE" => unescape(f),
            _ => cols[1].to_string(),
        };
        let head: usize = cols[6]
            .parse()
            .map_err(|_| err(line_no, format!("bad head {:?}", cols[6])))?;
        let morph = if cols[5] == "_" {
            BTreeMap::new()
        } else {
            cols[5]
                .split('|')
                .filter_map(|kv| kv.split_once('='))
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect()
        };
        let index = cur.tokens.len();
        let len = form.chars().count();
        if len == 0 {
            return Err(err(line_no, "empty token form"));
        }
        let span = CharSpan::new(cur.chars, cur.chars + len);
        cur.text.push_str(&form);
        cur.chars += len;

        match misc.get("NE").copied() {
            Some(tag) if tag.starts_with("B-") || tag.starts_with("I-") => {
                let label = EntityLabel::parse(&tag[2..]).ok_or_else(|| err(line_no, format!("bad NE tag {tag}")))?;
                let continues = tag.starts_with("I-") && cur.open_entity.is_some_and(|(l, _)| l == label);
                if !continues {
                    if let Some((open, first)) = cur.open_entity.take() {
                        cur.entities.push((open, first, index - 1));
                    }
                    cur.open_entity = Some((label, index));
                }
            }
            _ => {
                if let Some((label, first)) = cur.open_entity.take() {
                    cur.entities.push((label, first, index - 1));
                }
            }
        }

        let sep = if misc.get("SpaceAfter") == Some(&"No") {
            String::new()
        } else if let Some(s) = misc.get("SpacesAfter") {
            unescape(s)
        } else {
            " ".to_string()
        };
        cur.trailing_default_space = sep == " " && !misc.contains_key("SpacesAfter");
        cur.chars += sep.chars().count();
        cur.text.push_str(&sep);

        cur.tokens.push(Token {
            index,
            text: form,
            lemma: cols[2].to_string(),
            pos,
            morph,
            head: 0,
            deprel: cols[7].to_string(),
            span,
            sentence: cur.sentence,
        });
        cur.local_heads.push((index, head));
    }
    docs.extend(cur.finish(line_no)?);
    Ok(docs)
}
