//! Corpus-level breakdowns of source gender per outlet, and monthly top
//! sources.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::annotate::ArticleAnnotation;
use crate::gender::Gender;

/// Inclusive date window; either end may be open.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
}

impl Window {
    pub fn contains(&self, d: NaiveDate) -> bool {
        self.from.is_none_or(|f| d >= f) && self.to.is_none_or(|t| d <= t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutletRow {
    pub outlet: String,
    pub men: usize,
    pub women: usize,
    pub other: usize,
    pub men_pct: f64,
    pub women_pct: f64,
    pub other_pct: f64,
    pub articles: usize,
}

impl OutletRow {
    fn new(outlet: &str, men: usize, women: usize, other: usize, articles: usize) -> Self {
        let total = men + women + other;
        let pct = |n: usize| if total == 0 { 0.0 } else { 100.0 * n as f64 / total as f64 };
        OutletRow {
            outlet: outlet.to_string(),
            men,
            women,
            other,
            men_pct: pct(men),
            women_pct: pct(women),
            other_pct: pct(other),
            articles,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub rows: Vec<OutletRow>,
    pub total: Option<OutletRow>,
}

impl Breakdown {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Quotes attributed to `source` in `a`.
fn quote_count(a: &ArticleAnnotation, source: &str) -> usize {
    a.quotes.iter().filter(|q| q.reference.as_deref() == Some(source)).count()
}

/// (men, women, other) source counts of one article.
fn article_counts(a: &ArticleAnnotation, occurrences: bool) -> [usize; 3] {
    let weigh = |list: &[String]| -> usize {
        if occurrences {
            list.iter().map(|s| quote_count(a, s).max(1)).sum()
        } else {
            list.len()
        }
    };
    [weigh(&a.men_sources), weigh(&a.women_sources), weigh(&a.other_sources)]
}

/// Source percentages per outlet over the articles in `window`. Each source
/// counts once per article unless `occurrences` is set.
pub fn outlet_breakdown(annotations: &[ArticleAnnotation], window: Window, occurrences: bool) -> Breakdown {
    let mut per: BTreeMap<&str, ([usize; 3], usize)> = BTreeMap::new();
    for a in annotations.iter().filter(|a| window.contains(a.published_at)) {
        let e = per.entry(a.outlet.as_str()).or_default();
        let c = article_counts(a, occurrences);
        for (total, n) in e.0.iter_mut().zip(c) {
            *total += n;
        }
        e.1 += 1;
    }
    if per.is_empty() {
        return Breakdown {
            rows: Vec::new(),
            total: None,
        };
    }
    let rows: Vec<OutletRow> = per
        .iter()
        .map(|(o, (c, n))| OutletRow::new(o, c[0], c[1], c[2], *n))
        .collect();
    let sum = |f: fn(&OutletRow) -> usize| rows.iter().map(f).sum::<usize>();
    let total = OutletRow::new("Total", sum(|r| r.men), sum(|r| r.women), sum(|r| r.other), sum(|r| r.articles));
    Breakdown {
        rows,
        total: Some(total),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedSource {
    pub name: String,
    pub quotes: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopSources {
    pub year: i32,
    pub month: u32,
    pub men: Vec<RankedSource>,
    pub women: Vec<RankedSource>,
}

/// The `k` most quoted men and women of a month. Sources are identified by
/// their lowercased representative; ties are broken alphabetically.
pub fn top_sources(annotations: &[ArticleAnnotation], year: i32, month: u32, k: usize) -> TopSources {
    let mut tally: BTreeMap<(Gender, String), (String, usize)> = BTreeMap::new();
    for a in annotations
        .iter()
        .filter(|a| a.published_at.year() == year && a.published_at.month() == month)
    {
        for (g, list) in [(Gender::Male, &a.men_sources), (Gender::Female, &a.women_sources)] {
            for s in list {
                let e = tally.entry((g, s.to_lowercase())).or_insert_with(|| (s.clone(), 0));
                e.1 += quote_count(a, s);
            }
        }
    }
    let rank = |g: Gender| {
        let mut v: Vec<(&String, &(String, usize))> = tally.iter().filter(|((tg, _), _)| *tg == g).map(|((_, key), v)| (key, v)).collect();
        v.sort_by(|a, b| b.1 .1.cmp(&a.1 .1).then_with(|| a.0.cmp(b.0)));
        v.into_iter()
            .take(k)
            .map(|(_, (name, n))| RankedSource {
                name: name.clone(),
                quotes: *n,
            })
            .collect()
    };
    TopSources {
        year,
        month,
        men: rank(Gender::Male),
        women: rank(Gender::Female),
    }
}

/// Months touched by the annotations, in order.
pub fn months(annotations: &[ArticleAnnotation]) -> Vec<(i32, u32)> {
    let mut m: Vec<(i32, u32)> = annotations
        .iter()
        .map(|a| (a.published_at.year(), a.published_at.month()))
        .collect();
    m.sort_unstable();
    m.dedup();
    m
}

pub fn breakdown_csv(b: &Breakdown) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["Outlet", "% Men", "% Women", "% Unknown/Other", "Total articles"])?;
    for r in b.rows.iter().chain(b.total.iter()) {
        w.write_record([
            r.outlet.clone(),
            format!("{:.1}", r.men_pct),
            format!("{:.1}", r.women_pct),
            format!("{:.1}", r.other_pct),
            r.articles.to_string(),
        ])?;
    }
    csv_string(w)
}

pub fn top_sources_csv(tops: &[TopSources]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["Month", "Gender", "Rank", "Source", "Quotes"])?;
    for t in tops {
        let month = format!("{:04}-{:02}", t.year, t.month);
        for (g, list) in [("men", &t.men), ("women", &t.women)] {
            for (i, s) in list.iter().enumerate() {
                w.write_record([month.clone(), g.to_string(), (i + 1).to_string(), s.name.clone(), s.quotes.to_string()])?;
            }
        }
    }
    csv_string(w)
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String, csv::Error> {
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn article(outlet: &str, date: &str, men: &[&str], women: &[&str]) -> ArticleAnnotation {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        ArticleAnnotation {
            doc_id: format!("{outlet}-{date}"),
            outlet: outlet.into(),
            published_at: date.parse().unwrap(),
            sources: v(men).into_iter().chain(v(women)).collect(),
            men_sources: v(men),
            women_sources: v(women),
            ..Default::default()
        }
    }

    #[test]
    fn two_men_one_woman() {
        let b = outlet_breakdown(&[article("A", "2022-01-01", &["X", "Y"], &["Z"])], Window::default(), false);
        let r = &b.rows[0];
        assert_eq!(format!("{:.1}/{:.1}/{:.1}", r.men_pct, r.women_pct, r.other_pct), "66.7/33.3/0.0");
        assert_eq!(b.total.as_ref().unwrap().articles, 1);
    }

    #[test]
    fn empty_window() {
        let w = Window {
            from: Some("2023-01-01".parse().unwrap()),
            to: None,
        };
        assert!(outlet_breakdown(&[article("A", "2022-01-01", &["X"], &[])], w, false).is_empty());
    }

    #[test]
    fn csv_headers() {
        let b = outlet_breakdown(&[article("A", "2022-01-01", &["X"], &[])], Window::default(), false);
        let csv = breakdown_csv(&b).unwrap();
        assert!(csv.starts_with("Outlet,% Men,% Women,% Unknown/Other,Total articles\nA,100.0,0.0,0.0,1\nTotal,"));
    }
}
