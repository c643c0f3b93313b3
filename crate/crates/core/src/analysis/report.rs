use serde::{Deserialize, Serialize};

use super::{
    build_pairwise, classify_source, coupling_summary, infer_coupling, infer_scale,
    suggested_policy, summarize_category, AnalysisError, CategorySummary, CouplingLabel,
    CouplingRow, Dataset, PairwiseMatrix, ScaleLabel, SourceClassification, Tally, Thresholds,
    YesNo,
};
use crate::network::CountryCode;
use crate::pattern::{Category, ConsistencyLevel, SharingPattern};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub thresholds: Thresholds,
    /// Fixed order for triangular counting. Defaults to first appearance.
    pub site_order: Option<Vec<CountryCode>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompleteGraphSection {
    pub category: Category,
    pub sources: Vec<SourceClassification>,
    pub summary: CategorySummary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryLabels {
    pub category: Category,
    pub scale: Option<ScaleLabel>,
    pub coupling: Option<CouplingLabel>,
    pub suggested_pattern: Option<SharingPattern>,
    pub suggested_level: Option<ConsistencyLevel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub sites: Vec<CountryCode>,
    pub thresholds: Thresholds,
    pub complete_graph: Vec<CompleteGraphSection>,
    pub complete_graph_total: Tally,
    pub pairwise: Vec<PairwiseMatrix>,
    pub coupling: Vec<CouplingRow>,
    pub coupling_total: YesNo,
    pub labels: Vec<CategoryLabels>,
}

impl AnalysisReport {
    pub fn section(&self, category: Category) -> Option<&CompleteGraphSection> {
        self.complete_graph.iter().find(|s| s.category == category)
    }

    pub fn matrix(&self, category: Category) -> Option<&PairwiseMatrix> {
        self.pairwise.iter().find(|m| m.category == category)
    }

    pub fn labels_of(&self, category: Category) -> Option<&CategoryLabels> {
        self.labels.iter().find(|l| l.category == category)
    }
}

/// Runs both views. `complete` feeds the complete-graph view and, when
/// `pairs` is `None`, the pairwise view as well.
pub fn analyze(
    complete: &Dataset,
    pairs: Option<&Dataset>,
    opts: &AnalysisOptions,
) -> Result<AnalysisReport, AnalysisError> {
    let pairs = pairs.unwrap_or(complete);
    if complete.is_empty() || pairs.is_empty() {
        return Err(AnalysisError::EmptyDataset);
    }

    let complete_sites = complete.sites();
    let sites = match &opts.site_order {
        Some(order) => {
            if let Some(stray) = complete_sites.iter().find(|s| !order.contains(s)) {
                return Err(AnalysisError::UnknownSite(stray.clone()));
            }
            order.clone()
        }
        None => {
            let mut all = complete_sites.clone();
            for s in pairs.sites() {
                if !all.contains(&s) {
                    all.push(s);
                }
            }
            all
        }
    };

    let mut categories = complete.categories();
    for c in pairs.categories() {
        if !categories.contains(&c) {
            categories.push(c);
        }
    }
    categories.sort();

    let mut complete_graph = Vec::new();
    let mut pairwise = Vec::new();
    for &category in &categories {
        let records: Vec<_> = complete.of_category(category).collect();
        if !records.is_empty() {
            let mut sources = Vec::new();
            for site in &sites {
                if records.iter().any(|r| &r.source == site) {
                    sources.push(classify_source(
                        records.iter().copied(),
                        site,
                        category,
                        complete_sites.len(),
                    )?);
                }
            }
            let summary = summarize_category(&sources, category);
            complete_graph.push(CompleteGraphSection {
                category,
                sources,
                summary,
            });
        }
        pairwise.push(build_pairwise(
            pairs.of_category(category),
            category,
            &sites,
        )?);
    }

    let (a, s, n) = complete_graph.iter().fold((0, 0, 0), |(a, s, n), sec| {
        let (x, y, z) = sec.summary.tally.counts();
        (a + x, s + y, n + z)
    });
    let coupling = coupling_summary(&pairwise);
    let (yes, no) = coupling
        .iter()
        .fold((0, 0), |(y, n), r| (y + r.counts.yes, n + r.counts.no));

    let mut labels = Vec::new();
    for &category in &categories {
        let scale = match complete_graph.iter().find(|s| s.category == category) {
            Some(sec) => Some(infer_scale(&sec.summary.tally, &opts.thresholds)?),
            None => None,
        };
        let grand = coupling
            .iter()
            .find(|r| r.category == category)
            .map(|r| r.counts);
        let coupling_label = match grand.and_then(|g| g.yes_pct.zip(g.no_pct)) {
            Some((y, n)) => Some(infer_coupling(y, n, opts.thresholds.neutral)?),
            None => None,
        };
        let policy = scale
            .zip(coupling_label)
            .map(|(s, c)| suggested_policy(s, c));
        labels.push(CategoryLabels {
            category,
            scale,
            coupling: coupling_label,
            suggested_pattern: policy.map(|p| p.0),
            suggested_level: policy.map(|p| p.1),
        });
    }

    Ok(AnalysisReport {
        sites,
        thresholds: opts.thresholds,
        complete_graph,
        complete_graph_total: Tally::from_counts(a, s, n),
        pairwise,
        coupling,
        coupling_total: YesNo::from_counts(yes, no),
        labels,
    })
}

fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(String::len)
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                line.push_str(&format!("{cell:<w$}", w = widths[c]));
            } else {
                line.push_str(&format!("  {cell:>w$}", w = widths[c]));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn pct(p: Option<u32>) -> String {
    p.map_or_else(|| "-".to_string(), |p| p.to_string())
}

fn tally_row(label: &str, t: &Tally) -> Vec<String> {
    vec![
        label.to_string(),
        t.n_all.to_string(),
        t.n_some.to_string(),
        t.n_none.to_string(),
        t.total.to_string(),
        t.pct_all.to_string(),
        t.pct_some.to_string(),
        t.pct_none.to_string(),
    ]
}

fn yes_no_row(label: &str, c: &YesNo) -> Vec<String> {
    vec![
        label.to_string(),
        c.yes.to_string(),
        c.no.to_string(),
        c.total.to_string(),
        pct(c.yes_pct),
        pct(c.no_pct),
    ]
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

impl AnalysisReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let tally_head = ["", "all", "some", "none", "total", "all%", "some%", "none%"]
            .map(String::from)
            .to_vec();

        for sec in &self.complete_graph {
            out.push_str(&format!("complete graph: {}\n", sec.category));
            let mut rows = vec![tally_head.clone()];
            rows[0][0] = "source".into();
            for c in &sec.sources {
                rows.push(tally_row(
                    c.source.as_str(),
                    &Tally::from_counts(c.n_all, c.n_some, c.n_none),
                ));
            }
            rows.push(tally_row("total", &sec.summary.tally));
            out.push_str(&table(&rows));
            out.push('\n');
        }

        out.push_str("propagation cases\n");
        let mut rows = vec![tally_head.clone()];
        rows[0][0] = "category".into();
        for sec in &self.complete_graph {
            rows.push(tally_row(sec.category.as_str(), &sec.summary.tally));
        }
        rows.push(tally_row("total", &self.complete_graph_total));
        out.push_str(&table(&rows));
        out.push('\n');

        for m in &self.pairwise {
            out.push_str(&format!("website pairs: {}\n", m.category));
            let mut head = vec!["source".to_string()];
            head.extend(m.sites.iter().map(|s| s.to_string()));
            head.extend(["yes", "no", "total", "yes%", "no%"].map(String::from));
            let mut rows = vec![head];
            for (i, site) in m.sites.iter().enumerate() {
                let mut row = vec![site.to_string()];
                row.extend(
                    m.cells[i]
                        .iter()
                        .map(|c| c.map_or_else(|| "-".to_string(), |c| c.propagated.to_string())),
                );
                row.extend(yes_no_row("", &m.cumulative[i].counts).into_iter().skip(1));
                rows.push(row);
            }
            let mut total = vec!["total".to_string()];
            total.extend(m.sites.iter().map(|_| String::new()));
            total.extend(yes_no_row("", &m.grand).into_iter().skip(1));
            rows.push(total);
            out.push_str(&table(&rows));
            out.push('\n');
        }

        out.push_str("propagation occurrences\n");
        let mut rows = vec![["category", "yes", "no", "total", "yes%", "no%"]
            .map(String::from)
            .to_vec()];
        for r in &self.coupling {
            rows.push(yes_no_row(r.category.as_str(), &r.counts));
        }
        rows.push(yes_no_row("total", &self.coupling_total));
        out.push_str(&table(&rows));
        out.push('\n');

        out.push_str("labels\n");
        let mut rows = vec![["category", "scale", "coupling", "pattern", "level"]
            .map(String::from)
            .to_vec()];
        for l in &self.labels {
            rows.push(vec![
                l.category.to_string(),
                opt(l.scale),
                opt(l.coupling),
                opt(l.suggested_pattern.map(|p| p.as_str())),
                opt(l.suggested_level),
            ]);
        }
        out.push_str(&table(&rows));
        out
    }
}
