use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{rounded_percent, AnalysisError, ComparisonRecord, WebpageKey};
use crate::network::CountryCode;
use crate::pattern::Category;

/// Propagated webpages out of those compared for one site pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PairCell {
    pub propagated: u64,
    pub total: u64,
}

/// Yes/no counts with integer percentages. Percentages are absent when
/// nothing was counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YesNo {
    pub yes: u64,
    pub no: u64,
    pub total: u64,
    pub yes_pct: Option<u32>,
    pub no_pct: Option<u32>,
}

impl YesNo {
    pub fn from_counts(yes: u64, no: u64) -> Self {
        let total = yes + no;
        let pct = |n| (total > 0).then(|| rounded_percent(n, total));
        Self {
            yes,
            no,
            total,
            yes_pct: pct(yes),
            no_pct: pct(no),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CumulativeRow {
    pub source: CountryCode,
    pub counts: YesNo,
}

/// Symmetric matrix of pair cells over a fixed site order.
///
/// `cumulative[k]` counts the pairs `(k, m)` with `m` after `k`, so every
/// unordered pair lands in exactly one row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseMatrix {
    pub category: Category,
    pub sites: Vec<CountryCode>,
    pub cells: Vec<Vec<Option<PairCell>>>,
    pub cumulative: Vec<CumulativeRow>,
    pub grand: YesNo,
}

impl PairwiseMatrix {
    fn index(&self, site: &CountryCode) -> Option<usize> {
        self.sites.iter().position(|s| s == site)
    }

    pub fn cell(&self, a: &CountryCode, b: &CountryCode) -> Option<PairCell> {
        let (i, j) = (self.index(a)?, self.index(b)?);
        self.cells[i][j]
    }

    pub fn cumulative_of(&self, site: &CountryCode) -> Option<&YesNo> {
        self.cumulative
            .iter()
            .find(|r| &r.source == site)
            .map(|r| &r.counts)
    }

    /// Sum of propagated counts across one full row of the matrix.
    pub fn row_sum(&self, site: &CountryCode) -> Option<u64> {
        let i = self.index(site)?;
        Some(self.cells[i].iter().flatten().map(|c| c.propagated).sum())
    }
}

/// Builds the pair matrix of `category` over `site_order`.
///
/// A webpage compared in both directions of a pair is counted once.
/// Sites in records but absent from `site_order` are an error.
pub fn build_pairwise<'a>(
    records: impl IntoIterator<Item = &'a ComparisonRecord>,
    category: Category,
    site_order: &[CountryCode],
) -> Result<PairwiseMatrix, AnalysisError> {
    let mut seen = BTreeSet::new();
    for s in site_order {
        if !seen.insert(s) {
            return Err(AnalysisError::DuplicateSite(s.clone()));
        }
    }
    let index = |c: &CountryCode| {
        site_order
            .iter()
            .position(|s| s == c)
            .ok_or_else(|| AnalysisError::UnknownSite(c.clone()))
    };

    let mut judged: BTreeMap<(usize, usize), BTreeMap<WebpageKey, bool>> = BTreeMap::new();
    for r in records {
        if r.category != category {
            continue;
        }
        let (a, b) = (index(&r.source)?, index(&r.target)?);
        let pair = (a.min(b), a.max(b));
        let yes = r.outcome.is_propagated();
        let pages = judged.entry(pair).or_default();
        match pages.get(&r.webpage()) {
            Some(prev) if *prev != yes => {
                return Err(AnalysisError::AsymmetricDataset {
                    webpage_id: r.webpage_id.clone(),
                    a: site_order[pair.0].clone(),
                    b: site_order[pair.1].clone(),
                })
            }
            Some(_) => {}
            None => {
                pages.insert(r.webpage(), yes);
            }
        }
    }

    let n = site_order.len();
    let mut cells = vec![vec![None; n]; n];
    for (i, row) in cells.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if i != j {
                *cell = Some(PairCell::default());
            }
        }
    }
    for ((i, j), pages) in &judged {
        let cell = PairCell {
            propagated: pages.values().filter(|y| **y).count() as u64,
            total: pages.len() as u64,
        };
        cells[*i][*j] = Some(cell);
        cells[*j][*i] = Some(cell);
    }

    let mut cumulative = Vec::with_capacity(n);
    let (mut grand_yes, mut grand_total) = (0, 0);
    for (k, source) in site_order.iter().enumerate() {
        let (mut yes, mut total) = (0, 0);
        for cell in cells[k][k + 1..].iter().flatten() {
            yes += cell.propagated;
            total += cell.total;
        }
        grand_yes += yes;
        grand_total += total;
        cumulative.push(CumulativeRow {
            source: source.clone(),
            counts: YesNo::from_counts(yes, total - yes),
        });
    }

    Ok(PairwiseMatrix {
        category,
        sites: site_order.to_vec(),
        cells,
        cumulative,
        grand: YesNo::from_counts(grand_yes, grand_total - grand_yes),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingRow {
    pub category: Category,
    pub counts: YesNo,
}

/// Grand totals per matrix, in input order.
pub fn coupling_summary<'a>(
    matrices: impl IntoIterator<Item = &'a PairwiseMatrix>,
) -> Vec<CouplingRow> {
    matrices
        .into_iter()
        .map(|m| CouplingRow {
            category: m.category,
            counts: m.grand,
        })
        .collect()
}
