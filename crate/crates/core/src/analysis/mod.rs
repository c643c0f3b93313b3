//! Propagation analysis over webpage comparison datasets.
//!
//! Two views are computed. The complete-graph view treats every site as a
//! source and classifies each of its webpages by how many other sites carry
//! the same content. The pairwise view counts, for every unordered site pair,
//! how many compared webpages were propagated between the two.

mod classify;
mod infer;
mod pairwise;
mod records;
mod report;

use thiserror::Error;

use crate::network::CountryCode;

pub use classify::{
    classify_source, summarize_category, CategorySummary, SourceClassification, Tally, Verdict,
    WebpageVerdict,
};
pub use infer::{
    infer_coupling, infer_scale, suggested_policy, CouplingLabel, ScaleLabel, Thresholds,
};
pub use pairwise::{
    build_pairwise, coupling_summary, CouplingRow, CumulativeRow, PairCell, PairwiseMatrix, YesNo,
};
pub use records::{ComparisonRecord, Dataset, Outcome, WebpageKey, TSV_HEADER};
pub use report::{analyze, AnalysisOptions, AnalysisReport, CategoryLabels, CompleteGraphSection};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("cannot read dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unexpected header {0:?}")]
    BadHeader(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("webpage {webpage_id}: {site} compared with itself")]
    SelfComparison {
        webpage_id: String,
        site: CountryCode,
    },
    #[error("webpage {webpage_id}: duplicate judgment {from} -> {to}")]
    DuplicateRecord {
        webpage_id: String,
        from: CountryCode,
        to: CountryCode,
    },
    #[error("webpage {webpage_id}: judgments {a} -> {b} and {b} -> {a} disagree")]
    AsymmetricDataset {
        webpage_id: String,
        a: CountryCode,
        b: CountryCode,
    },
    #[error(
        "webpage {webpage_id}: source {site} has {found} target judgments, expected {expected}"
    )]
    IncompleteRecords {
        webpage_id: String,
        site: CountryCode,
        found: usize,
        expected: usize,
    },
    #[error("site {0} is not in the site order")]
    UnknownSite(CountryCode),
    #[error("site order lists {0} more than once")]
    DuplicateSite(CountryCode),
    #[error("percentages {0:?} do not sum to 100 (within 1)")]
    InvalidPercentages(Vec<u32>),
}

/// `100 * count / total` rounded to the nearest integer, ties to even.
///
/// Returns 0 when `total` is 0.
pub fn rounded_percent(count: u64, total: u64) -> u32 {
    if total == 0 {
        return 0;
    }
    let scaled = 100 * u128::from(count);
    let total = u128::from(total);
    let q = scaled / total;
    let r = scaled % total;
    let rounded = match (2 * r).cmp(&total) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => q + (q & 1),
    };
    rounded as u32
}

#[cfg(test)]
mod tests {
    use super::rounded_percent;

    #[test]
    fn rounds_ties_to_even() {
        assert_eq!(rounded_percent(80, 160), 50);
        assert_eq!(rounded_percent(52, 160), 32);
        assert_eq!(rounded_percent(28, 160), 18);
        assert_eq!(rounded_percent(132, 480), 28);
        assert_eq!(rounded_percent(397, 560), 71);
        assert_eq!(rounded_percent(1, 3), 33);
        assert_eq!(rounded_percent(2, 3), 67);
        assert_eq!(rounded_percent(0, 0), 0);
    }
}
