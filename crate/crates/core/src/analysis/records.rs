use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::network::CountryCode;
use crate::pattern::Category;

pub const TSV_HEADER: [&str; 6] = [
    "brand",
    "category",
    "webpage_id",
    "source",
    "target",
    "outcome",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Propagated,
    NotPropagated,
}

impl Outcome {
    pub fn is_propagated(self) -> bool {
        self == Outcome::Propagated
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Propagated => "propagated",
            Outcome::NotPropagated => "not_propagated",
        })
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "propagated" | "yes" | "y" | "1" | "true" => Ok(Outcome::Propagated),
            "not_propagated" | "notpropagated" | "no" | "n" | "0" | "false" => {
                Ok(Outcome::NotPropagated)
            }
            other => Err(format!("unknown outcome {other:?}")),
        }
    }
}

/// A webpage is identified by its brand and id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WebpageKey {
    pub brand: String,
    pub webpage_id: String,
}

impl fmt::Display for WebpageKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.brand, self.webpage_id)
    }
}

/// One judgment of whether a webpage's content from `source` appears at `target`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub brand: String,
    pub category: Category,
    pub webpage_id: String,
    pub source: CountryCode,
    pub target: CountryCode,
    pub outcome: Outcome,
}

impl ComparisonRecord {
    pub fn webpage(&self) -> WebpageKey {
        WebpageKey {
            brand: self.brand.clone(),
            webpage_id: self.webpage_id.clone(),
        }
    }
}

/// A validated set of comparison records.
///
/// Validation rejects self-comparisons, repeated `(webpage, source, target)`
/// judgments, and `(s, t)` / `(t, s)` judgments of one webpage that disagree.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    records: Vec<ComparisonRecord>,
}

impl Dataset {
    pub fn new(records: Vec<ComparisonRecord>) -> Result<Self, AnalysisError> {
        let mut seen: BTreeMap<(Category, WebpageKey, CountryCode, CountryCode), Outcome> =
            BTreeMap::new();
        for rec in &records {
            if rec.source == rec.target {
                return Err(AnalysisError::SelfComparison {
                    webpage_id: rec.webpage_id.clone(),
                    site: rec.source.clone(),
                });
            }
            let key = (
                rec.category,
                rec.webpage(),
                rec.source.clone(),
                rec.target.clone(),
            );
            if seen.insert(key, rec.outcome).is_some() {
                return Err(AnalysisError::DuplicateRecord {
                    webpage_id: rec.webpage_id.clone(),
                    from: rec.source.clone(),
                    to: rec.target.clone(),
                });
            }
        }
        for ((category, page, s, t), outcome) in &seen {
            if s < t {
                if let Some(back) = seen.get(&(*category, page.clone(), t.clone(), s.clone())) {
                    if back != outcome {
                        return Err(AnalysisError::AsymmetricDataset {
                            webpage_id: page.webpage_id.clone(),
                            a: s.clone(),
                            b: t.clone(),
                        });
                    }
                }
            }
        }
        Ok(Self { records })
    }

    /// Reads tab-separated records. The header must match [`TSV_HEADER`].
    pub fn from_tsv<R: Read>(reader: R) -> Result<Self, AnalysisError> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .has_headers(true)
            .flexible(false)
            .from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| AnalysisError::Parse {
                line: 1,
                message: e.to_string(),
            })?
            .clone();
        let got: Vec<&str> = header.iter().map(str::trim).collect();
        if got != TSV_HEADER {
            return Err(AnalysisError::BadHeader(got.join("\t")));
        }
        let mut records = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| AnalysisError::Parse {
                line,
                message: e.to_string(),
            })?;
            let field = |idx: usize| row.get(idx).unwrap_or("").trim();
            let parse_err = |message: String| AnalysisError::Parse { line, message };
            records.push(ComparisonRecord {
                brand: field(0).to_string(),
                category: field(1)
                    .parse()
                    .map_err(|e: crate::pattern::UnknownCategory| parse_err(e.to_string()))?,
                webpage_id: field(2).to_string(),
                source: CountryCode::new(field(3)).map_err(|e| parse_err(e.to_string()))?,
                target: CountryCode::new(field(4)).map_err(|e| parse_err(e.to_string()))?,
                outcome: field(5).parse().map_err(parse_err)?,
            });
            if field(2).is_empty() {
                return Err(parse_err("empty webpage_id".into()));
            }
        }
        Self::new(records)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AnalysisError> {
        let file = std::fs::File::open(path)?;
        Self::from_tsv(std::io::BufReader::new(file))
    }

    pub fn to_tsv(&self) -> String {
        let mut out = TSV_HEADER.join("\t");
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                r.brand, r.category, r.webpage_id, r.source, r.target, r.outcome
            ));
        }
        out
    }

    pub fn records(&self) -> &[ComparisonRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Sites in order of first appearance, as source or target.
    pub fn sites(&self) -> Vec<CountryCode> {
        let mut out: Vec<CountryCode> = Vec::new();
        for r in &self.records {
            for c in [&r.source, &r.target] {
                if !out.contains(c) {
                    out.push(c.clone());
                }
            }
        }
        out
    }

    pub fn categories(&self) -> Vec<Category> {
        Category::ALL
            .into_iter()
            .filter(|c| self.records.iter().any(|r| r.category == *c))
            .collect()
    }

    pub fn of_category(&self, category: Category) -> impl Iterator<Item = &ComparisonRecord> {
        self.records.iter().filter(move |r| r.category == category)
    }
}
