//! Site network: country sites, their languages and region membership.
//!
//! A network is validated once at construction and is immutable afterwards.
//! Country codes are normalized to uppercase and language codes to lowercase.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Identifier of a country-specific site ("CA", "UK", "ME", ...).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountryCode(String);

/// Language token, compared case-insensitively ("en", "fr", "en-gb").
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LanguageCode(String);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionId(pub String);

fn valid_token(raw: &str, extra: &[char]) -> bool {
    !raw.is_empty()
        && raw
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || extra.contains(&c))
}

impl CountryCode {
    pub fn new(raw: &str) -> Result<Self, ValidationError> {
        let raw = raw.trim();
        // '-' is reserved as the replica separator.
        if !valid_token(raw, &[]) {
            return Err(ValidationError::InvalidIdentifier(raw.to_string()));
        }
        Ok(Self(raw.to_ascii_uppercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl LanguageCode {
    pub fn new(raw: &str) -> Result<Self, ValidationError> {
        let raw = raw.trim();
        if !valid_token(raw, &['-']) {
            return Err(ValidationError::InvalidIdentifier(raw.to_string()));
        }
        Ok(Self(raw.to_ascii_lowercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl RegionId {
    pub fn new(raw: impl Into<String>) -> Self {
        Self(raw.into())
    }
}

macro_rules! string_token {
    ($ty:ident) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl FromStr for $ty {
            type Err = ValidationError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::new(s)
            }
        }

        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.0)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let raw = String::deserialize(d)?;
                Self::new(&raw).map_err(serde::de::Error::custom)
            }
        }
    };
}

string_token!(CountryCode);
string_token!(LanguageCode);

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One language edition of one site. Rendered as `CA-fr`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReplicaId {
    pub country: CountryCode,
    pub language: LanguageCode,
}

impl ReplicaId {
    pub fn new(country: CountryCode, language: LanguageCode) -> Self {
        Self { country, language }
    }

    /// Parses the `"CA-fr"` form. The country part never contains `-`.
    pub fn parse(raw: &str) -> Result<Self, ValidationError> {
        let (country, language) = raw
            .split_once('-')
            .ok_or_else(|| ValidationError::InvalidIdentifier(raw.to_string()))?;
        Ok(Self {
            country: CountryCode::new(country)?,
            language: LanguageCode::new(language)?,
        })
    }
}

impl fmt::Display for ReplicaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.country, self.language)
    }
}

impl FromStr for ReplicaId {
    type Err = ValidationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl Serialize for ReplicaId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ReplicaId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        Self::parse(&raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountrySite {
    pub country: CountryCode,
    /// Ordered as configured, never empty, no duplicates.
    pub languages: Vec<LanguageCode>,
    pub region: RegionId,
}

impl CountrySite {
    pub fn offers(&self, language: &LanguageCode) -> bool {
        self.languages.contains(language)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValidationError {
    #[error("invalid identifier {0:?}")]
    InvalidIdentifier(String),
    #[error("network has no sites")]
    NoSites,
    #[error("duplicate country {0}")]
    DuplicateCountry(CountryCode),
    #[error("site {0} has no languages")]
    EmptyLanguages(CountryCode),
    #[error("site {country} lists language {language} twice")]
    DuplicateLanguage {
        country: CountryCode,
        language: LanguageCode,
    },
    #[error("region {0} has no members")]
    EmptyRegion(RegionId),
    #[error("region orphan: site {country} declares region {region}, which is not defined")]
    UndefinedRegion {
        country: CountryCode,
        region: RegionId,
    },
    #[error("region orphan: site {country} is not a member of any region")]
    UnassignedSite { country: CountryCode },
    #[error("region orphan: region {region} lists unknown country {country}")]
    UnknownRegionMember {
        region: RegionId,
        country: CountryCode,
    },
    #[error("region overlap: country {country} belongs to both {first} and {second}")]
    RegionOverlap {
        country: CountryCode,
        first: RegionId,
        second: RegionId,
    },
    #[error("site {country} declares region {declared} but the region map places it in {mapped}")]
    RegionMismatch {
        country: CountryCode,
        declared: RegionId,
        mapped: RegionId,
    },
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("cannot read network config: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed network config: {0}")]
    Parse(String),
    #[error("invalid network: {0}")]
    Validation(#[from] ValidationError),
    #[error("unknown country {0}")]
    UnknownCountry(CountryCode),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SiteDoc {
    country: String,
    languages: Vec<String>,
    region: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    sites: Vec<SiteDoc>,
    #[serde(default)]
    regions: Option<BTreeMap<String, Vec<String>>>,
}

/// Immutable description of an organization's country-specific sites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteNetwork {
    sites: BTreeMap<CountryCode, CountrySite>,
    order: Vec<CountryCode>,
    regions: BTreeMap<RegionId, BTreeSet<CountryCode>>,
}

impl SiteNetwork {
    /// Builds a network from sites; region membership is taken from each
    /// site's `region` field.
    pub fn new(sites: Vec<CountrySite>) -> Result<Self, ValidationError> {
        Self::with_regions(sites, None)
    }

    /// Builds a network, optionally checking the sites against an explicit
    /// region map that must partition the country set exactly.
    pub fn with_regions(
        sites: Vec<CountrySite>,
        regions: Option<BTreeMap<RegionId, Vec<CountryCode>>>,
    ) -> Result<Self, ValidationError> {
        if sites.is_empty() {
            return Err(ValidationError::NoSites);
        }
        let mut by_code = BTreeMap::new();
        let mut order = Vec::with_capacity(sites.len());
        for site in sites {
            if site.languages.is_empty() {
                return Err(ValidationError::EmptyLanguages(site.country));
            }
            let mut seen = BTreeSet::new();
            for lang in &site.languages {
                if !seen.insert(lang) {
                    return Err(ValidationError::DuplicateLanguage {
                        country: site.country.clone(),
                        language: lang.clone(),
                    });
                }
            }
            if by_code.contains_key(&site.country) {
                return Err(ValidationError::DuplicateCountry(site.country));
            }
            order.push(site.country.clone());
            by_code.insert(site.country.clone(), site);
        }

        let regions = match regions {
            None => {
                let mut derived: BTreeMap<RegionId, BTreeSet<CountryCode>> = BTreeMap::new();
                for site in by_code.values() {
                    derived
                        .entry(site.region.clone())
                        .or_default()
                        .insert(site.country.clone());
                }
                derived
            }
            Some(explicit) => {
                let mut owner: BTreeMap<CountryCode, RegionId> = BTreeMap::new();
                let mut out = BTreeMap::new();
                for (region, members) in explicit {
                    if members.is_empty() {
                        return Err(ValidationError::EmptyRegion(region));
                    }
                    let mut set = BTreeSet::new();
                    for country in members {
                        if !by_code.contains_key(&country) {
                            return Err(ValidationError::UnknownRegionMember { region, country });
                        }
                        if let Some(first) = owner.get(&country) {
                            if *first != region {
                                return Err(ValidationError::RegionOverlap {
                                    country,
                                    first: first.clone(),
                                    second: region,
                                });
                            }
                        }
                        owner.insert(country.clone(), region.clone());
                        set.insert(country);
                    }
                    out.insert(region, set);
                }
                for country in &order {
                    let site = &by_code[country];
                    match owner.get(country) {
                        None if out.contains_key(&site.region) => {
                            return Err(ValidationError::UnassignedSite {
                                country: country.clone(),
                            })
                        }
                        None => {
                            return Err(ValidationError::UndefinedRegion {
                                country: country.clone(),
                                region: site.region.clone(),
                            })
                        }
                        Some(mapped) if *mapped != site.region => {
                            return Err(ValidationError::RegionMismatch {
                                country: country.clone(),
                                declared: site.region.clone(),
                                mapped: mapped.clone(),
                            })
                        }
                        Some(_) => {}
                    }
                }
                out
            }
        };

        Ok(Self {
            sites: by_code,
            order,
            regions,
        })
    }

    pub fn from_json(doc: &str) -> Result<Self, NetworkError> {
        let doc: NetworkDoc =
            serde_json::from_str(doc).map_err(|e| NetworkError::Parse(e.to_string()))?;
        let mut sites = Vec::with_capacity(doc.sites.len());
        for s in doc.sites {
            let country = CountryCode::new(&s.country)?;
            let languages = s
                .languages
                .iter()
                .map(|l| LanguageCode::new(l))
                .collect::<Result<Vec<_>, _>>()?;
            sites.push(CountrySite {
                country,
                languages,
                region: RegionId::new(s.region),
            });
        }
        let regions = match doc.regions {
            None => None,
            Some(map) => {
                let mut out = BTreeMap::new();
                for (region, members) in map {
                    let members = members
                        .iter()
                        .map(|c| CountryCode::new(c))
                        .collect::<Result<Vec<_>, _>>()?;
                    out.insert(RegionId::new(region), members);
                }
                Some(out)
            }
        };
        Ok(Self::with_regions(sites, regions)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NetworkError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn site(&self, country: &CountryCode) -> Result<&CountrySite, NetworkError> {
        self.sites
            .get(country)
            .ok_or_else(|| NetworkError::UnknownCountry(country.clone()))
    }

    pub fn contains(&self, country: &CountryCode) -> bool {
        self.sites.contains_key(country)
    }

    /// Sites in configuration order.
    pub fn sites(&self) -> impl Iterator<Item = &CountrySite> {
        self.order.iter().map(move |c| &self.sites[c])
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn regions(&self) -> &BTreeMap<RegionId, BTreeSet<CountryCode>> {
        &self.regions
    }

    /// Union of all site languages.
    pub fn languages(&self) -> BTreeSet<LanguageCode> {
        self.sites
            .values()
            .flat_map(|s| s.languages.iter().cloned())
            .collect()
    }

    pub fn shared_languages(
        &self,
        a: &CountryCode,
        b: &CountryCode,
    ) -> Result<BTreeSet<LanguageCode>, NetworkError> {
        let a = self.site(a)?;
        let b = self.site(b)?;
        Ok(a.languages
            .iter()
            .filter(|l| b.offers(l))
            .cloned()
            .collect())
    }

    /// All sites in `country`'s region, including itself.
    pub fn region_peers(
        &self,
        country: &CountryCode,
    ) -> Result<BTreeSet<CountryCode>, NetworkError> {
        let site = self.site(country)?;
        Ok(self.regions[&site.region].clone())
    }

    pub fn replicas_of(&self, country: &CountryCode) -> Result<BTreeSet<ReplicaId>, NetworkError> {
        let site = self.site(country)?;
        Ok(site
            .languages
            .iter()
            .map(|l| ReplicaId::new(site.country.clone(), l.clone()))
            .collect())
    }

    pub fn all_replicas(&self) -> BTreeSet<ReplicaId> {
        self.sites
            .values()
            .flat_map(|s| {
                s.languages
                    .iter()
                    .map(move |l| ReplicaId::new(s.country.clone(), l.clone()))
            })
            .collect()
    }

    pub fn is_valid_replica(&self, replica: &ReplicaId) -> bool {
        self.sites
            .get(&replica.country)
            .is_some_and(|s| s.offers(&replica.language))
    }
}
