//! Scoped content propagation and consistency engine for multilingual,
//! multi-country site networks.
//!
//! * [`network`]: sites, languages and regions.
//! * [`pattern`]: sharing patterns, content catalog and replica scopes.
//! * [`sync`]: versioned replica state, propagation tasks and audits.
//! * [`analysis`]: propagation statistics from webpage comparison datasets.
//! * [`sim`]: deterministic workload simulation with latency and drop faults.

pub mod analysis;
pub mod json;
pub mod network;
pub mod pattern;
pub mod rng;
pub mod sim;
pub mod sync;

pub use network::{CountryCode, LanguageCode, RegionId, ReplicaId, SiteNetwork};
pub use pattern::{
    default_policy, scope_of_item, scope_of_pattern, Catalog, Category, ComponentId,
    ConsistencyLevel, ContentItem, ItemId, Scope, SharingPattern,
};
