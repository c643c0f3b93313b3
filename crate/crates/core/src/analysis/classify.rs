use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{rounded_percent, AnalysisError, ComparisonRecord, WebpageKey};
use crate::network::CountryCode;
use crate::pattern::Category;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    All,
    Some,
    None,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::All => "all",
            Verdict::Some => "some",
            Verdict::None => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebpageVerdict {
    pub webpage: WebpageKey,
    pub propagated: usize,
    pub compared: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceClassification {
    pub source: CountryCode,
    pub category: Category,
    pub webpages: Vec<WebpageVerdict>,
    pub n_all: u64,
    pub n_some: u64,
    pub n_none: u64,
}

impl SourceClassification {
    pub fn counts(&self) -> (u64, u64, u64) {
        (self.n_all, self.n_some, self.n_none)
    }
}

/// Classifies every webpage published by `source` in `category`.
///
/// Records with another source or category are ignored. Each webpage must
/// carry exactly `site_count - 1` distinct target judgments.
pub fn classify_source<'a>(
    records: impl IntoIterator<Item = &'a ComparisonRecord>,
    source: &CountryCode,
    category: Category,
    site_count: usize,
) -> Result<SourceClassification, AnalysisError> {
    let mut pages: BTreeMap<WebpageKey, BTreeMap<&CountryCode, bool>> = BTreeMap::new();
    for r in records {
        if &r.source != source || r.category != category {
            continue;
        }
        pages
            .entry(r.webpage())
            .or_default()
            .insert(&r.target, r.outcome.is_propagated());
    }

    let expected = site_count.saturating_sub(1);
    let mut out = SourceClassification {
        source: source.clone(),
        category,
        webpages: Vec::with_capacity(pages.len()),
        n_all: 0,
        n_some: 0,
        n_none: 0,
    };
    for (webpage, targets) in pages {
        if targets.len() != expected {
            return Err(AnalysisError::IncompleteRecords {
                webpage_id: webpage.webpage_id,
                site: source.clone(),
                found: targets.len(),
                expected,
            });
        }
        let propagated = targets.values().filter(|p| **p).count();
        let verdict = if propagated == expected {
            out.n_all += 1;
            Verdict::All
        } else if propagated == 0 {
            out.n_none += 1;
            Verdict::None
        } else {
            out.n_some += 1;
            Verdict::Some
        };
        out.webpages.push(WebpageVerdict {
            webpage,
            propagated,
            compared: expected,
            verdict,
        });
    }
    Ok(out)
}

/// All/Some/None counts with their integer percentages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub n_all: u64,
    pub n_some: u64,
    pub n_none: u64,
    pub total: u64,
    pub pct_all: u32,
    pub pct_some: u32,
    pub pct_none: u32,
}

impl Tally {
    pub fn from_counts(n_all: u64, n_some: u64, n_none: u64) -> Self {
        let total = n_all + n_some + n_none;
        Self {
            n_all,
            n_some,
            n_none,
            total,
            pct_all: rounded_percent(n_all, total),
            pct_some: rounded_percent(n_some, total),
            pct_none: rounded_percent(n_none, total),
        }
    }

    pub fn percentages(&self) -> (u32, u32, u32) {
        (self.pct_all, self.pct_some, self.pct_none)
    }

    pub fn counts(&self) -> (u64, u64, u64) {
        (self.n_all, self.n_some, self.n_none)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategorySummary {
    pub category: Category,
    pub sources: usize,
    pub tally: Tally,
}

/// Sums the classifications of `category`. Others are ignored. A source that
/// appears twice is counted twice.
pub fn summarize_category<'a>(
    classifications: impl IntoIterator<Item = &'a SourceClassification>,
    category: Category,
) -> CategorySummary {
    let mut sources = BTreeSet::new();
    let (mut a, mut s, mut n) = (0, 0, 0);
    let mut count = 0;
    for c in classifications
        .into_iter()
        .filter(|c| c.category == category)
    {
        sources.insert(&c.source);
        count += 1;
        a += c.n_all;
        s += c.n_some;
        n += c.n_none;
    }
    debug_assert!(sources.len() == count, "one classification per source");
    CategorySummary {
        category,
        sources: count,
        tally: Tally::from_counts(a, s, n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Outcome;

    fn rec(page: &str, source: &str, target: &str, yes: bool) -> ComparisonRecord {
        ComparisonRecord {
            brand: "acme".into(),
            category: Category::CorporateInformation,
            webpage_id: page.into(),
            source: CountryCode::new(source).unwrap(),
            target: CountryCode::new(target).unwrap(),
            outcome: if yes {
                Outcome::Propagated
            } else {
                Outcome::NotPropagated
            },
        }
    }

    #[test]
    fn verdicts_follow_target_counts() {
        let records = vec![
            rec("p1", "IN", "AU", true),
            rec("p1", "IN", "UK", true),
            rec("p2", "IN", "AU", true),
            rec("p2", "IN", "UK", false),
            rec("p3", "IN", "AU", false),
            rec("p3", "IN", "UK", false),
            rec("q1", "AU", "IN", true),
        ];
        let src = CountryCode::new("IN").unwrap();
        let c = classify_source(&records, &src, Category::CorporateInformation, 3).unwrap();
        assert_eq!(c.counts(), (1, 1, 1));
        assert_eq!(c.webpages[0].verdict, Verdict::All);
        assert_eq!(c.webpages[2].verdict, Verdict::None);
    }

    #[test]
    fn missing_target_is_incomplete() {
        let records = vec![rec("p1", "IN", "AU", true)];
        let src = CountryCode::new("IN").unwrap();
        match classify_source(&records, &src, Category::CorporateInformation, 3).unwrap_err() {
            AnalysisError::IncompleteRecords {
                webpage_id,
                found,
                expected,
                ..
            } => {
                assert_eq!((webpage_id.as_str(), found, expected), ("p1", 1, 2));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn summary_sums_and_rounds() {
        let mk = |a, s, n| SourceClassification {
            source: CountryCode::new(&format!("S{a}{s}{n}")).unwrap(),
            category: Category::CorporateInformation,
            webpages: Vec::new(),
            n_all: a,
            n_some: s,
            n_none: n,
        };
        let rows = vec![mk(30, 20, 10), mk(50, 32, 18)];
        let s = summarize_category(&rows, Category::CorporateInformation);
        assert_eq!(s.tally.counts(), (80, 52, 28));
        assert_eq!(s.tally.total, 160);
        assert_eq!(s.tally.percentages(), (50, 32, 18));
        let none = summarize_category(&rows, Category::ProductInformation);
        assert_eq!(none.tally.total, 0);
    }
}
