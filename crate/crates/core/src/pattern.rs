//! Sharing patterns and the replica scopes they induce.
//!
//! A pattern applied at an origin site determines which `(site, language)`
//! replicas must carry a piece of content:
//!
//! * internationalisation: every language edition of every site;
//! * regionalisation: every language edition of every site in the origin's region;
//! * localisation: the origin's own language editions only.
//!
//! Content items are split into components, each with its own pattern, so
//! that a globally shared block and a local-only block on the same page are
//! tracked independently.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{CountryCode, NetworkError, ReplicaId, SiteNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharingPattern {
    #[serde(alias = "Internationalisation", alias = "internationalization")]
    Internationalisation,
    #[serde(alias = "Regionalisation", alias = "regionalization")]
    Regionalisation,
    #[serde(alias = "Localisation", alias = "localization")]
    Localisation,
}

impl SharingPattern {
    pub const ALL: [SharingPattern; 3] = [
        SharingPattern::Internationalisation,
        SharingPattern::Regionalisation,
        SharingPattern::Localisation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SharingPattern::Internationalisation => "internationalisation",
            SharingPattern::Regionalisation => "regionalisation",
            SharingPattern::Localisation => "localisation",
        }
    }
}

impl fmt::Display for SharingPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    #[serde(alias = "corporate", alias = "CorporateInformation")]
    CorporateInformation,
    #[serde(alias = "product", alias = "ProductInformation")]
    ProductInformation,
    #[serde(alias = "customer_support", alias = "CustomerSupportInformation")]
    CustomerSupportInformation,
}

impl Category {
    pub const ALL: [Category; 3] = [
        Category::CorporateInformation,
        Category::ProductInformation,
        Category::CustomerSupportInformation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::CorporateInformation => "corporate_information",
            Category::ProductInformation => "product_information",
            Category::CustomerSupportInformation => "customer_support_information",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown content category {0:?}")]
pub struct UnknownCategory(pub String);

impl FromStr for Category {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match key.as_str() {
            "corporate" | "corporateinformation" => Ok(Category::CorporateInformation),
            "product" | "productinformation" => Ok(Category::ProductInformation),
            "customersupport" | "customersupportinformation" | "support" => {
                Ok(Category::CustomerSupportInformation)
            }
            _ => Err(UnknownCategory(s.to_string())),
        }
    }
}

/// How urgently propagation tasks must be carried out. Ordered by priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyLevel {
    Strict,
    Bounded,
    Lazy,
}

impl fmt::Display for ConsistencyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConsistencyLevel::Strict => "strict",
            ConsistencyLevel::Bounded => "bounded",
            ConsistencyLevel::Lazy => "lazy",
        })
    }
}

/// Default pattern and consistency level for a content category.
pub fn default_policy(category: Category) -> (SharingPattern, ConsistencyLevel) {
    match category {
        Category::CorporateInformation => (
            SharingPattern::Internationalisation,
            ConsistencyLevel::Strict,
        ),
        Category::ProductInformation => {
            (SharingPattern::Regionalisation, ConsistencyLevel::Bounded)
        }
        Category::CustomerSupportInformation => {
            (SharingPattern::Localisation, ConsistencyLevel::Lazy)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub String);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComponentId(pub String);

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ItemId {
    fn from(s: &str) -> Self {
        ItemId(s.to_string())
    }
}

impl From<&str> for ComponentId {
    fn from(s: &str) -> Self {
        ComponentId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub component_id: ComponentId,
    /// Falls back to the category default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<SharingPattern>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistency: Option<ConsistencyLevel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentItem {
    pub item_id: ItemId,
    pub category: Category,
    pub origin: CountryCode,
    pub components: Vec<Component>,
    /// Item-wide consistency override; a component-level value wins over it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistency: Option<ConsistencyLevel>,
}

impl ContentItem {
    pub fn single(
        item_id: &str,
        category: Category,
        origin: CountryCode,
        pattern: SharingPattern,
    ) -> Self {
        Self {
            item_id: ItemId(item_id.to_string()),
            category,
            origin,
            components: vec![Component {
                component_id: ComponentId("main".into()),
                pattern: Some(pattern),
                consistency: None,
            }],
            consistency: None,
        }
    }

    pub fn component(&self, id: &ComponentId) -> Option<&Component> {
        self.components.iter().find(|c| &c.component_id == id)
    }

    pub fn pattern_of(&self, component: &Component) -> SharingPattern {
        component
            .pattern
            .unwrap_or_else(|| default_policy(self.category).0)
    }

    pub fn level_of(&self, component: &Component) -> ConsistencyLevel {
        component
            .consistency
            .or(self.consistency)
            .unwrap_or_else(|| default_policy(self.category).1)
    }
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read catalog: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed catalog: {0}")]
    Parse(String),
    #[error("item {0} appears more than once")]
    DuplicateItem(ItemId),
    #[error("item {0} has no components")]
    EmptyComponents(ItemId),
    #[error("item {item} repeats component {component}")]
    DuplicateComponent {
        item: ItemId,
        component: ComponentId,
    },
    #[error("item {item} has unknown origin {origin}")]
    UnknownOrigin { item: ItemId, origin: CountryCode },
}

/// Content items keyed by id, validated against one network.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Catalog {
    items: BTreeMap<ItemId, ContentItem>,
}

impl Catalog {
    pub fn new(items: Vec<ContentItem>, net: &SiteNetwork) -> Result<Self, CatalogError> {
        let mut out = BTreeMap::new();
        for item in items {
            if item.components.is_empty() {
                return Err(CatalogError::EmptyComponents(item.item_id));
            }
            let mut seen = BTreeSet::new();
            for c in &item.components {
                if !seen.insert(&c.component_id) {
                    return Err(CatalogError::DuplicateComponent {
                        item: item.item_id.clone(),
                        component: c.component_id.clone(),
                    });
                }
            }
            if !net.contains(&item.origin) {
                return Err(CatalogError::UnknownOrigin {
                    item: item.item_id,
                    origin: item.origin,
                });
            }
            if out.contains_key(&item.item_id) {
                return Err(CatalogError::DuplicateItem(item.item_id));
            }
            out.insert(item.item_id.clone(), item);
        }
        Ok(Self { items: out })
    }

    pub fn from_json(doc: &str, net: &SiteNetwork) -> Result<Self, CatalogError> {
        let items: Vec<ContentItem> =
            serde_json::from_str(doc).map_err(|e| CatalogError::Parse(e.to_string()))?;
        Self::new(items, net)
    }

    pub fn load(path: impl AsRef<Path>, net: &SiteNetwork) -> Result<Self, CatalogError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, net)
    }

    pub fn get(&self, id: &ItemId) -> Option<&ContentItem> {
        self.items.get(id)
    }

    pub fn items(&self) -> impl Iterator<Item = &ContentItem> {
        self.items.values()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// A set of replicas that must carry a piece of content.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
#[serde(transparent)]
pub struct Scope {
    pub replicas: BTreeSet<ReplicaId>,
}

impl Scope {
    pub fn contains(&self, replica: &ReplicaId) -> bool {
        self.replicas.contains(replica)
    }

    pub fn len(&self) -> usize {
        self.replicas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replicas.is_empty()
    }

    pub fn is_subset(&self, other: &Scope) -> bool {
        self.replicas.is_subset(&other.replicas)
    }

    pub fn union(&self, other: &Scope) -> Scope {
        Scope {
            replicas: self.replicas.union(&other.replicas).cloned().collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &ReplicaId> {
        self.replicas.iter()
    }
}

impl FromIterator<ReplicaId> for Scope {
    fn from_iter<T: IntoIterator<Item = ReplicaId>>(iter: T) -> Self {
        Scope {
            replicas: iter.into_iter().collect(),
        }
    }
}

pub fn scope_of_pattern(
    net: &SiteNetwork,
    origin: &CountryCode,
    pattern: SharingPattern,
) -> Result<Scope, NetworkError> {
    let replicas = match pattern {
        SharingPattern::Internationalisation => {
            net.site(origin)?;
            net.all_replicas()
        }
        SharingPattern::Localisation => net.replicas_of(origin)?,
        SharingPattern::Regionalisation => {
            let mut out = BTreeSet::new();
            for peer in net.region_peers(origin)? {
                out.extend(net.replicas_of(&peer)?);
            }
            out
        }
    };
    Ok(Scope { replicas })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ItemScope {
    pub components: BTreeMap<ComponentId, Scope>,
    pub union: Scope,
}

pub fn scope_of_item(net: &SiteNetwork, item: &ContentItem) -> Result<ItemScope, NetworkError> {
    let mut components = BTreeMap::new();
    let mut union = Scope::default();
    for c in &item.components {
        let scope = scope_of_pattern(net, &item.origin, item.pattern_of(c))?;
        union = union.union(&scope);
        components.insert(c.component_id.clone(), scope);
    }
    Ok(ItemScope { components, union })
}
