//! Inconsistency audit over replica state.
//!
//! For every component with a head revision, each replica in scope is
//! classified as up to date, missing (no entry), outdated (older revision) or
//! conflicting (head revision, different digest). Replicas outside the scope
//! are never reported.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{component_policy, Held, Revision, SyncState};
use crate::network::{ReplicaId, SiteNetwork};
use crate::pattern::{Catalog, ComponentId, ItemId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    Missing,
    Outdated,
    Conflicting,
}

impl FindingKind {
    pub const ALL: [FindingKind; 3] = [
        FindingKind::Missing,
        FindingKind::Outdated,
        FindingKind::Conflicting,
    ];
}

impl fmt::Display for FindingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FindingKind::Missing => "missing",
            FindingKind::Outdated => "outdated",
            FindingKind::Conflicting => "conflicting",
        })
    }
}

/// Where the divergence sits relative to the head revision's author.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LanguageRelation {
    /// Another language edition of the same site holds different content.
    WithinSite,
    /// The replica's language is also offered by the author's site.
    SharedLanguage,
    UnsharedLanguage,
}

impl fmt::Display for LanguageRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LanguageRelation::WithinSite => "within_site",
            LanguageRelation::SharedLanguage => "shared_language",
            LanguageRelation::UnsharedLanguage => "unshared_language",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Finding {
    pub item_id: ItemId,
    pub component_id: ComponentId,
    pub replica: ReplicaId,
    pub kind: FindingKind,
    pub language_relation: LanguageRelation,
    pub details: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InconsistencyReport {
    pub findings: Vec<Finding>,
}

impl InconsistencyReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.findings.len()
    }

    pub fn count(&self, kind: FindingKind) -> usize {
        self.findings.iter().filter(|f| f.kind == kind).count()
    }

    pub fn for_item<'a>(&'a self, item: &'a ItemId) -> impl Iterator<Item = &'a Finding> {
        self.findings.iter().filter(move |f| &f.item_id == item)
    }

    /// Plain-text rendering, one finding per line.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("findings: {}\n", self.findings.len()));
        for kind in FindingKind::ALL {
            out.push_str(&format!("  {kind}: {}\n", self.count(kind)));
        }
        if !self.findings.is_empty() {
            out.push('\n');
            out.push_str("item\tcomponent\treplica\tkind\trelation\tdetails\n");
        }
        for f in &self.findings {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                f.item_id, f.component_id, f.replica, f.kind, f.language_relation, f.details
            ));
        }
        out
    }
}

/// Audits every component that has been written at least once. Components
/// whose item is not in `catalog` are skipped.
pub fn audit(state: &SyncState, net: &SiteNetwork, catalog: &Catalog) -> InconsistencyReport {
    let empty = BTreeMap::new();
    let mut findings = Vec::new();
    for (key, head) in &state.heads {
        let Ok((scope, _)) = component_policy(net, catalog, key) else {
            continue;
        };
        let held = state.entries.get(key).unwrap_or(&empty);
        let is_current = |h: &Held| h.revision.counter == head.counter && h.digest == head.digest;

        for replica in scope.iter() {
            let entry = held.get(replica);
            let kind = match entry {
                None => FindingKind::Missing,
                Some(h) if h.revision.counter < head.counter => FindingKind::Outdated,
                Some(h) if h.digest != head.digest => FindingKind::Conflicting,
                Some(_) => continue,
            };

            let site_peers = held.iter().filter(|(r, _)| {
                r.country == replica.country && *r != replica && scope.contains(r)
            });
            let within_site = site_peers.clone().any(|(_, h)| is_current(h))
                || (kind == FindingKind::Conflicting
                    && site_peers.clone().any(|(_, h)| {
                        h.revision.counter == head.counter
                            && Some(&h.digest) != entry.map(|e| &e.digest)
                    }));
            let relation = if within_site {
                LanguageRelation::WithinSite
            } else if net
                .shared_languages(&replica.country, &head.author.country)
                .is_ok_and(|shared| shared.contains(&replica.language))
            {
                LanguageRelation::SharedLanguage
            } else {
                LanguageRelation::UnsharedLanguage
            };

            findings.push(Finding {
                item_id: key.item_id.clone(),
                component_id: key.component_id.clone(),
                replica: replica.clone(),
                kind,
                language_relation: relation,
                details: describe(kind, entry, head),
            });
        }
    }
    findings.sort();
    InconsistencyReport { findings }
}

fn describe(kind: FindingKind, entry: Option<&Held>, head: &Revision) -> String {
    match (kind, entry) {
        (FindingKind::Missing, _) | (_, None) => format!(
            "no copy of revision {} (authored at {})",
            head.counter, head.author
        ),
        (FindingKind::Outdated, Some(h)) => format!(
            "holds revision {}, head is revision {} (authored at {})",
            h.revision.counter, head.counter, head.author
        ),
        (FindingKind::Conflicting, Some(h)) => format!(
            "revision {} digest {} differs from {} (authored at {})",
            head.counter, h.digest, head.digest, head.author
        ),
    }
}
