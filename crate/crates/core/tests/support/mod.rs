//! Random small instances and a brute-force reference model.
//!
//! The model keeps its own plain-string copy of the network and catalog,
//! numbers tasks itself and classifies every (item, component, replica)
//! triple by direct comparison. It shares no code with the engine beyond the
//! log record types it reads.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use glocalsync::rng::SimRng;
use glocalsync::sync::log::{AckRecord, LogRecord};
use glocalsync::sync::{Digest, TaskId, UpdateEvent};
use glocalsync::{Catalog, SiteNetwork};

const COUNTRIES: [&str; 4] = ["CA", "CHE", "IN", "UK"];
const LANGUAGES: [&str; 5] = ["de", "en", "fr", "hi", "np"];
const REGIONS: [&str; 3] = ["americas", "europe", "asia"];
const CATEGORIES: [&str; 3] = [
    "corporate_information",
    "product_information",
    "customer_support_information",
];
const PATTERNS: [&str; 3] = ["internationalisation", "regionalisation", "localisation"];

#[derive(Debug, Clone)]
pub struct RawSite {
    pub country: String,
    pub languages: Vec<String>,
    pub region: String,
}

#[derive(Debug, Clone)]
pub struct RawComponent {
    pub id: String,
    pub pattern: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RawItem {
    pub id: String,
    pub category: usize,
    pub origin: String,
    pub components: Vec<RawComponent>,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub sites: Vec<RawSite>,
    pub items: Vec<RawItem>,
    pub log: Vec<LogRecord>,
}

impl Instance {
    pub fn network_json(&self) -> String {
        let sites: Vec<serde_json::Value> = self
            .sites
            .iter()
            .map(|s| {
                serde_json::json!({
                    "country": s.country,
                    "languages": s.languages,
                    "region": s.region,
                })
            })
            .collect();
        serde_json::json!({ "sites": sites }).to_string()
    }

    pub fn catalog_json(&self) -> String {
        let items: Vec<serde_json::Value> = self
            .items
            .iter()
            .map(|it| {
                let comps: Vec<serde_json::Value> = it
                    .components
                    .iter()
                    .map(|c| match c.pattern {
                        Some(p) => {
                            serde_json::json!({"component_id": c.id, "pattern": PATTERNS[p]})
                        }
                        None => serde_json::json!({"component_id": c.id}),
                    })
                    .collect();
                serde_json::json!({
                    "item_id": it.id,
                    "category": CATEGORIES[it.category],
                    "origin": it.origin,
                    "components": comps,
                })
            })
            .collect();
        serde_json::Value::Array(items).to_string()
    }

    pub fn network(&self) -> SiteNetwork {
        SiteNetwork::from_json(&self.network_json()).expect("generated network is valid")
    }

    pub fn catalog(&self, net: &SiteNetwork) -> Catalog {
        Catalog::from_json(&self.catalog_json(), net).expect("generated catalog is valid")
    }
}

fn pick<'a, T>(rng: &mut SimRng, xs: &'a [T]) -> &'a T {
    &xs[rng.below(xs.len() as u64) as usize]
}

/// Up to 4 sites with 1 to 3 languages each.
pub fn random_sites(rng: &mut SimRng) -> Vec<RawSite> {
    let n = 1 + rng.below(4) as usize;
    let mut countries: Vec<&str> = COUNTRIES.to_vec();
    let mut sites = Vec::new();
    for _ in 0..n {
        let c = countries.remove(rng.below(countries.len() as u64) as usize);
        let mut pool: Vec<&str> = LANGUAGES.to_vec();
        let k = 1 + rng.below(3) as usize;
        let languages = (0..k)
            .map(|_| {
                pool.remove(rng.below(pool.len() as u64) as usize)
                    .to_string()
            })
            .collect();
        sites.push(RawSite {
            country: c.to_string(),
            languages,
            region: pick(rng, &REGIONS).to_string(),
        });
    }
    sites
}

pub fn random_items(rng: &mut SimRng, sites: &[RawSite]) -> Vec<RawItem> {
    let n = 1 + rng.below(3) as usize;
    (0..n)
        .map(|i| {
            let comps = 1 + rng.below(2) as usize;
            RawItem {
                id: format!("item{i}"),
                category: rng.below(3) as usize,
                origin: pick(rng, sites).country.clone(),
                components: (0..comps)
                    .map(|c| RawComponent {
                        id: format!("c{c}"),
                        pattern: if rng.chance(0.5) {
                            Some(rng.below(3) as usize)
                        } else {
                            None
                        },
                    })
                    .collect(),
            }
        })
        .collect()
}

/// A random instance whose log has at most `max_events` valid records.
pub fn random_instance(seed: u64, max_events: usize) -> Instance {
    let mut rng = SimRng::new(seed, 7);
    let sites = random_sites(&mut rng);
    let items = random_items(&mut rng, &sites);
    let mut model = Model::new(sites.clone(), items.clone());
    let events = 1 + rng.below(max_events as u64) as usize;
    let mut log = Vec::new();
    for _ in 0..events {
        let pending = model.pending();
        let rec = if pending.is_empty() || rng.chance(0.4) {
            model.random_update(&mut rng)
        } else {
            let task = pick(&mut rng, &pending).clone();
            let digest = if rng.chance(0.7) {
                task.digest.clone()
            } else {
                format!("local-{}", rng.below(3))
            };
            LogRecord::Ack(AckRecord {
                task_id: TaskId(task.id),
                digest: Digest(digest),
                logical_time: model.time + 1,
            })
        };
        model.apply(&rec).expect("generated records are valid");
        log.push(rec);
    }
    Instance { sites, items, log }
}

/// Random updates with matching acks mixed in; every task is acked at the end.
pub fn random_synced_instance(seed: u64, max_updates: usize) -> Instance {
    let mut rng = SimRng::new(seed, 8);
    let sites = random_sites(&mut rng);
    let items = random_items(&mut rng, &sites);
    let mut model = Model::new(sites.clone(), items.clone());
    let mut log = Vec::new();
    let updates = 1 + rng.below(max_updates as u64) as usize;
    let push = |model: &mut Model, rec: LogRecord, log: &mut Vec<LogRecord>| {
        model.apply(&rec).expect("generated records are valid");
        log.push(rec);
    };
    for _ in 0..updates {
        let rec = model.random_update(&mut rng);
        push(&mut model, rec, &mut log);
        for task in model.pending() {
            if rng.chance(0.3) {
                let rec = model.matching_ack(&task);
                push(&mut model, rec, &mut log);
            }
        }
    }
    for task in model.pending() {
        let rec = model.matching_ack(&task);
        push(&mut model, rec, &mut log);
    }
    Instance { sites, items, log }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pending,
    Acked,
    Superseded,
}

#[derive(Debug, Clone)]
pub struct ModelTask {
    pub id: u64,
    pub item: String,
    pub component: String,
    pub target: (String, String),
    pub counter: u64,
    pub digest: String,
    status: Status,
}

#[derive(Debug, Clone)]
struct Head {
    counter: u64,
    digest: String,
    author: (String, String),
}

/// One expected audit finding as plain strings.
pub type Expected = (String, String, String, String, String);
/// (item, component, (country, language)) to (revision, digest).
type Held = BTreeMap<(String, String, (String, String)), (u64, String)>;

#[derive(Debug, Clone)]
pub struct Model {
    sites: Vec<RawSite>,
    items: Vec<RawItem>,
    heads: BTreeMap<(String, String), Head>,
    held: Held,
    tasks: Vec<ModelTask>,
    pub time: u64,
}

impl Model {
    pub fn new(sites: Vec<RawSite>, items: Vec<RawItem>) -> Self {
        Self {
            sites,
            items,
            heads: BTreeMap::new(),
            held: BTreeMap::new(),
            tasks: Vec::new(),
            time: 0,
        }
    }

    fn site(&self, country: &str) -> &RawSite {
        self.sites.iter().find(|s| s.country == country).unwrap()
    }

    fn item(&self, id: &str) -> &RawItem {
        self.items.iter().find(|i| i.id == id).unwrap()
    }

    /// Pattern index after falling back to the category default.
    fn pattern(&self, item: &str, component: &str) -> usize {
        let it = self.item(item);
        let c = it.components.iter().find(|c| c.id == component).unwrap();
        c.pattern.unwrap_or(it.category)
    }

    pub fn scope(&self, item: &str, component: &str) -> BTreeSet<(String, String)> {
        let origin = self.site(&self.item(item).origin).clone();
        let pattern = self.pattern(item, component);
        self.sites
            .iter()
            .filter(|s| match pattern {
                0 => true,
                1 => s.region == origin.region,
                _ => s.country == origin.country,
            })
            .flat_map(|s| s.languages.iter().map(|l| (s.country.clone(), l.clone())))
            .collect()
    }

    pub fn pending(&self) -> Vec<ModelTask> {
        self.tasks
            .iter()
            .filter(|t| t.status == Status::Pending)
            .cloned()
            .collect()
    }

    fn random_update(&self, rng: &mut SimRng) -> LogRecord {
        let item = pick(rng, &self.items);
        let comp = pick(rng, &item.components);
        let scope: Vec<_> = self.scope(&item.id, &comp.id).into_iter().collect();
        let (country, lang) = pick(rng, &scope).clone();
        LogRecord::Update(UpdateEvent {
            event_id: format!("e{}", self.time + 1),
            item_id: item.id.as_str().into(),
            component_id: comp.id.as_str().into(),
            at: glocalsync::ReplicaId::parse(&format!("{country}-{lang}")).unwrap(),
            new_digest: Digest(format!("d{}", rng.below(4))),
            logical_time: self.time + 1,
        })
    }

    fn matching_ack(&self, task: &ModelTask) -> LogRecord {
        LogRecord::Ack(AckRecord {
            task_id: TaskId(task.id),
            digest: Digest(task.digest.clone()),
            logical_time: self.time + 1,
        })
    }

    pub fn apply(&mut self, rec: &LogRecord) -> Result<(), String> {
        match rec {
            LogRecord::Update(ev) => {
                if ev.logical_time <= self.time {
                    return Err("stale".into());
                }
                let (item, comp) = (ev.item_id.0.clone(), ev.component_id.0.clone());
                let at = (ev.at.country.to_string(), ev.at.language.to_string());
                let scope = self.scope(&item, &comp);
                if !scope.contains(&at) {
                    return Err("out of scope".into());
                }
                let counter = self
                    .heads
                    .get(&(item.clone(), comp.clone()))
                    .map_or(1, |h| h.counter + 1);
                for t in &mut self.tasks {
                    if t.status == Status::Pending && t.item == item && t.component == comp {
                        t.status = Status::Superseded;
                    }
                }
                let digest = ev.new_digest.0.clone();
                self.held.insert(
                    (item.clone(), comp.clone(), at.clone()),
                    (counter, digest.clone()),
                );
                for target in scope.iter().filter(|r| **r != at) {
                    let id = self.tasks.len() as u64 + 1;
                    self.tasks.push(ModelTask {
                        id,
                        item: item.clone(),
                        component: comp.clone(),
                        target: target.clone(),
                        counter,
                        digest: digest.clone(),
                        status: Status::Pending,
                    });
                }
                self.heads.insert(
                    (item, comp),
                    Head {
                        counter,
                        digest,
                        author: at,
                    },
                );
                self.time = ev.logical_time;
            }
            LogRecord::Ack(ack) => {
                if ack.logical_time <= self.time {
                    return Err("stale".into());
                }
                let idx = (ack.task_id.0 as usize)
                    .checked_sub(1)
                    .ok_or("unknown task")?;
                let task = self.tasks.get_mut(idx).ok_or("unknown task")?;
                if task.status != Status::Pending {
                    return Err("closed task".into());
                }
                task.status = Status::Acked;
                let key = (
                    task.item.clone(),
                    task.component.clone(),
                    task.target.clone(),
                );
                let value = (task.counter, ack.digest.0.clone());
                self.held.insert(key, value);
                self.time = ack.logical_time;
            }
        }
        Ok(())
    }

    /// Every finding, by enumerating all replicas of the network.
    pub fn findings(&self) -> BTreeSet<Expected> {
        let all: Vec<(String, String)> = self
            .sites
            .iter()
            .flat_map(|s| s.languages.iter().map(|l| (s.country.clone(), l.clone())))
            .collect();
        let mut out = BTreeSet::new();
        for ((item, comp), head) in &self.heads {
            let scope = self.scope(item, comp);
            let held =
                |r: &(String, String)| self.held.get(&(item.clone(), comp.clone(), r.clone()));
            let current = |r: &(String, String)| {
                held(r).is_some_and(|(c, d)| *c == head.counter && *d == head.digest)
            };
            for r in &all {
                if !scope.contains(r) {
                    continue;
                }
                let kind = match held(r) {
                    None => "missing",
                    Some((c, _)) if *c < head.counter => "outdated",
                    Some((_, d)) if *d != head.digest => "conflicting",
                    Some(_) => continue,
                };
                let peers: Vec<&(String, String)> = all
                    .iter()
                    .filter(|p| p.0 == r.0 && *p != r && scope.contains(*p))
                    .collect();
                let mine = held(r).map(|(_, d)| d.clone());
                let within = peers.iter().any(|p| current(p))
                    || (kind == "conflicting"
                        && peers.iter().any(|p| {
                            held(p).is_some_and(|(c, d)| {
                                *c == head.counter && Some(d) != mine.as_ref()
                            })
                        }));
                let relation = if within {
                    "within_site"
                } else if self.site(&head.author.0).languages.contains(&r.1) {
                    "shared_language"
                } else {
                    "unshared_language"
                };
                out.insert((
                    item.clone(),
                    comp.clone(),
                    format!("{}-{}", r.0, r.1),
                    kind.to_string(),
                    relation.to_string(),
                ));
            }
        }
        out
    }
}

/// Engine findings in the model's plain-string form.
pub fn engine_findings(report: &glocalsync::sync::InconsistencyReport) -> BTreeSet<Expected> {
    report
        .findings
        .iter()
        .map(|f| {
            (
                f.item_id.0.clone(),
                f.component_id.0.clone(),
                f.replica.to_string(),
                f.kind.to_string(),
                f.language_relation.to_string(),
            )
        })
        .collect()
}

/// Replays the instance through the engine and the model and returns any
/// disagreement as text.
pub fn compare_with_model(inst: &Instance) -> Result<(), String> {
    use glocalsync::sync::{audit, log::replay, SyncConfig};
    let net = inst.network();
    let catalog = inst.catalog(&net);
    let state =
        replay(&net, &catalog, SyncConfig::default(), &inst.log).map_err(|e| e.to_string())?;
    let mut model = Model::new(inst.sites.clone(), inst.items.clone());
    for rec in &inst.log {
        model.apply(rec)?;
    }
    let got = engine_findings(&audit(&state, &net, &catalog));
    let want = model.findings();
    if got == want {
        Ok(())
    } else {
        Err(format!(
            "engine only: {:?}; model only: {:?}",
            got.difference(&want).collect::<Vec<_>>(),
            want.difference(&got).collect::<Vec<_>>()
        ))
    }
}

/// Expected replicas for every (origin, pattern) on the five-site network in
/// `fixtures/five_site_network.json`.
pub const FIVE_SITE_SCOPES: [(&str, &str, &[&str]); 15] = [
    (
        "CA",
        "internationalisation",
        &[
            "CA-en", "CA-fr", "IN-en", "IN-hi", "NP-np", "UK-en", "US-en",
        ],
    ),
    ("CA", "regionalisation", &["CA-en", "CA-fr", "US-en"]),
    ("CA", "localisation", &["CA-en", "CA-fr"]),
    (
        "UK",
        "internationalisation",
        &[
            "CA-en", "CA-fr", "IN-en", "IN-hi", "NP-np", "UK-en", "US-en",
        ],
    ),
    ("UK", "regionalisation", &["UK-en"]),
    ("UK", "localisation", &["UK-en"]),
    (
        "US",
        "internationalisation",
        &[
            "CA-en", "CA-fr", "IN-en", "IN-hi", "NP-np", "UK-en", "US-en",
        ],
    ),
    ("US", "regionalisation", &["CA-en", "CA-fr", "US-en"]),
    ("US", "localisation", &["US-en"]),
    (
        "IN",
        "internationalisation",
        &[
            "CA-en", "CA-fr", "IN-en", "IN-hi", "NP-np", "UK-en", "US-en",
        ],
    ),
    ("IN", "regionalisation", &["IN-en", "IN-hi", "NP-np"]),
    ("IN", "localisation", &["IN-en", "IN-hi"]),
    (
        "NP",
        "internationalisation",
        &[
            "CA-en", "CA-fr", "IN-en", "IN-hi", "NP-np", "UK-en", "US-en",
        ],
    ),
    ("NP", "regionalisation", &["IN-en", "IN-hi", "NP-np"]),
    ("NP", "localisation", &["NP-np"]),
];

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

/// Mismatches between `scope_of_pattern` and [`FIVE_SITE_SCOPES`].
pub fn five_site_scope_mismatches() -> Vec<String> {
    let net = SiteNetwork::load(fixture("five_site_network.json")).unwrap();
    let mut bad = Vec::new();
    for (origin, pattern, want) in FIVE_SITE_SCOPES {
        let origin_code = glocalsync::CountryCode::new(origin).unwrap();
        let pattern_value: glocalsync::SharingPattern =
            serde_json::from_value(serde_json::Value::String(pattern.into())).unwrap();
        let got: Vec<String> = glocalsync::scope_of_pattern(&net, &origin_code, pattern_value)
            .unwrap()
            .iter()
            .map(|r| r.to_string())
            .collect();
        if got != want {
            bad.push(format!("{origin} {pattern}: got {got:?}, want {want:?}"));
        }
    }
    bad
}
