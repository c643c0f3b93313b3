//! Deterministic tick-based simulation of update workloads.
//!
//! Tick 0 publishes revision 1 of every component at its origin and copies it
//! everywhere in scope; it is not measured. Each tick `t` in `1..=horizon`
//! then runs, in order:
//!
//! 1. scripted updates for `t`, then one Bernoulli draw per catalog component
//!    (items and components in catalog order) with the category's rate; a hit
//!    writes at a uniformly drawn replica of the component's scope;
//! 2. every emitted task gets a delivery delay: 0 for strict, the configured
//!    delay for bounded and lazy;
//! 3. due deliveries are attempted in `(due, task id)` order; each attempt
//!    draws a drop, and dropped tasks are retried `retry_interval` ticks later
//!    (or lost when retries are off); superseded tasks are discarded;
//! 4. the state is audited and every open finding adds one unit to the window
//!    of its `(category, kind)`.
//!
//! Workload draws use stream 0 and fault draws stream 1 of the seeded
//! generator (see [`crate::rng`]), so disabling propagation leaves the update
//! sequence unchanged.
//!
//! Log records carry a global sequence number as logical time, one per
//! update or ack, independent of the tick.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{NetworkError, ReplicaId, SiteNetwork};
use crate::pattern::{
    scope_of_pattern, Catalog, CatalogError, Category, ComponentId, ConsistencyLevel, ItemId,
    SharingPattern,
};
use crate::rng::{SimRng, FAULT_STREAM, WORKLOAD_STREAM};
use crate::sync::log::{AckRecord, LogRecord};
use crate::sync::{
    audit, ComponentKey, Digest, FindingKind, PropagationTask, SyncConfig, SyncError, SyncState,
    TaskId, UpdateEvent,
};

pub const DEFAULT_RETRY_INTERVAL: u64 = 5;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid fault model: {0}")]
    InvalidFaultModel(String),
    #[error("invalid workload: {0}")]
    InvalidWorkload(String),
    #[error(transparent)]
    Sync(#[from] SyncError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid scenario: {0}")]
    Scenario(String),
}

/// A write forced at a given tick, applied before random updates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedUpdate {
    pub tick: u64,
    pub item_id: ItemId,
    pub component_id: ComponentId,
    pub at: ReplicaId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workload {
    pub seed: u64,
    pub horizon: u64,
    /// Per-tick update probability of each component, by category.
    /// Missing categories have rate 0.
    #[serde(default)]
    pub rates: BTreeMap<Category, f64>,
    #[serde(default)]
    pub scripted: Vec<ScriptedUpdate>,
}

impl Workload {
    pub fn rate(&self, category: Category) -> f64 {
        self.rates.get(&category).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.horizon == 0 {
            return Err(SimError::InvalidWorkload(
                "horizon must be at least 1".into(),
            ));
        }
        for (cat, rate) in &self.rates {
            if !rate.is_finite() || !(0.0..=1.0).contains(rate) {
                return Err(SimError::InvalidWorkload(format!(
                    "rate {rate} for {cat} is not a probability"
                )));
            }
        }
        if let Some(s) = self
            .scripted
            .iter()
            .find(|s| s.tick == 0 || s.tick > self.horizon)
        {
            return Err(SimError::InvalidWorkload(format!(
                "scripted update at tick {} is outside 1..={}",
                s.tick, self.horizon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Delay {
    Fixed { ticks: u64 },
    Uniform { min: u64, max: u64 },
}

impl Default for Delay {
    fn default() -> Self {
        Delay::Fixed { ticks: 0 }
    }
}

impl Delay {
    fn draw(self, rng: &mut SimRng) -> u64 {
        match self {
            Delay::Fixed { ticks } => ticks,
            Delay::Uniform { min, max } => rng.between(min, max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultModel {
    /// Must be a zero delay when given.
    pub strict: Delay,
    pub bounded: Delay,
    pub lazy: Delay,
    pub drop_probability: f64,
    pub retry: bool,
    pub retry_interval: u64,
}

impl Default for FaultModel {
    fn default() -> Self {
        Self {
            strict: Delay::default(),
            bounded: Delay::default(),
            lazy: Delay::default(),
            drop_probability: 0.0,
            retry: true,
            retry_interval: DEFAULT_RETRY_INTERVAL,
        }
    }
}

impl FaultModel {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.strict != (Delay::Fixed { ticks: 0 }) {
            return Err(SimError::InvalidFaultModel("strict delay must be 0".into()));
        }
        for (name, d) in [("bounded", self.bounded), ("lazy", self.lazy)] {
            if let Delay::Uniform { min, max } = d {
                if min > max {
                    return Err(SimError::InvalidFaultModel(format!(
                        "{name} delay has min {min} above max {max}"
                    )));
                }
            }
        }
        let p = self.drop_probability;
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(SimError::InvalidFaultModel(format!(
                "drop probability {p} is not in [0, 1]"
            )));
        }
        if self.retry && self.retry_interval == 0 {
            return Err(SimError::InvalidFaultModel(
                "retry interval must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn delay(&self, level: ConsistencyLevel) -> Delay {
        match level {
            ConsistencyLevel::Strict => Delay::Fixed { ticks: 0 },
            ConsistencyLevel::Bounded => self.bounded,
            ConsistencyLevel::Lazy => self.lazy,
        }
    }
}

/// Accumulated replica-ticks and the largest simultaneous count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WindowStats {
    pub window: u64,
    pub peak: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub category: Category,
    pub missing: WindowStats,
    pub outdated: WindowStats,
    pub conflicting: WindowStats,
    pub total_window: u64,
    pub open_at_horizon: u64,
    pub converged: bool,
}

impl CategoryMetrics {
    fn new(category: Category) -> Self {
        Self {
            category,
            missing: WindowStats::default(),
            outdated: WindowStats::default(),
            conflicting: WindowStats::default(),
            total_window: 0,
            open_at_horizon: 0,
            converged: true,
        }
    }

    pub fn kind(&self, kind: FindingKind) -> &WindowStats {
        match kind {
            FindingKind::Missing => &self.missing,
            FindingKind::Outdated => &self.outdated,
            FindingKind::Conflicting => &self.conflicting,
        }
    }

    fn kind_mut(&mut self, kind: FindingKind) -> &mut WindowStats {
        match kind {
            FindingKind::Missing => &mut self.missing,
            FindingKind::Outdated => &mut self.outdated,
            FindingKind::Conflicting => &mut self.conflicting,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternMetrics {
    pub pattern: SharingPattern,
    pub window: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationMetrics {
    pub seed: u64,
    pub horizon: u64,
    pub propagation: bool,
    pub updates: u64,
    pub tasks_emitted: u64,
    pub acks: u64,
    pub drops: u64,
    pub lost: u64,
    pub categories: Vec<CategoryMetrics>,
    pub patterns: Vec<PatternMetrics>,
    pub converged: bool,
}

impl SimulationMetrics {
    pub fn category(&self, category: Category) -> &CategoryMetrics {
        self.categories
            .iter()
            .find(|c| c.category == category)
            .expect("every category is reported")
    }

    pub fn total_window(&self) -> u64 {
        self.categories.iter().map(|c| c.total_window).sum()
    }

    pub fn render_text(&self) -> String {
        let mut out = format!(
            "seed {} horizon {} propagation {}\nupdates {} tasks {} acks {} drops {} lost {}\nconverged {}\n\n",
            self.seed,
            self.horizon,
            if self.propagation { "on" } else { "off" },
            self.updates,
            self.tasks_emitted,
            self.acks,
            self.drops,
            self.lost,
            self.converged
        );
        out.push_str("category\tmissing\toutdated\tconflicting\ttotal\tpeak\topen\tconverged\n");
        for c in &self.categories {
            let peak = c.missing.peak.max(c.outdated.peak).max(c.conflicting.peak);
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                c.category,
                c.missing.window,
                c.outdated.window,
                c.conflicting.window,
                c.total_window,
                peak,
                c.open_at_horizon,
                c.converged
            ));
        }
        out.push_str("\npattern\twindow\n");
        for p in &self.patterns {
            out.push_str(&format!("{}\t{}\n", p.pattern.as_str(), p.window));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub metrics: SimulationMetrics,
    pub state: SyncState,
    pub log: Vec<LogRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Delivery {
    due: u64,
    task_id: TaskId,
}

struct Engine<'a> {
    net: &'a SiteNetwork,
    catalog: &'a Catalog,
    faults: &'a FaultModel,
    propagate: bool,
    state: SyncState,
    log: Vec<LogRecord>,
    clock: u64,
    queue: Vec<Delivery>,
    metrics: SimulationMetrics,
}

impl<'a> Engine<'a> {
    fn tick_time(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    fn write(
        &mut self,
        key: &ComponentKey,
        at: &ReplicaId,
    ) -> Result<Vec<PropagationTask>, SimError> {
        let counter = self.state.head(key).map_or(1, |r| r.counter + 1);
        let time = self.tick_time();
        let ev = UpdateEvent {
            event_id: format!("u{time}"),
            item_id: key.item_id.clone(),
            component_id: key.component_id.clone(),
            at: at.clone(),
            new_digest: Digest(format!("{}/{}/r{counter}", key.item_id, key.component_id)),
            logical_time: time,
        };
        let tasks = self.state.apply_update(self.net, self.catalog, &ev)?;
        self.log.push(LogRecord::Update(ev));
        Ok(tasks)
    }

    fn ack(&mut self, task_id: TaskId) -> Result<(), SimError> {
        let digest = match self.state.pending_task(task_id) {
            Some(t) => t.to_revision.digest.clone(),
            None => return Ok(()),
        };
        let time = self.tick_time();
        self.state.advance_clock(time)?;
        self.state.ack_task(task_id, &digest)?;
        self.log.push(LogRecord::Ack(AckRecord {
            task_id,
            digest,
            logical_time: time,
        }));
        self.metrics.acks += 1;
        Ok(())
    }

    fn publish_initial(&mut self) -> Result<(), SimError> {
        let keys: Vec<(ComponentKey, ReplicaId)> = self
            .catalog
            .items()
            .flat_map(|item| {
                let site = self
                    .net
                    .site(&item.origin)
                    .expect("catalog origins are valid");
                let at = ReplicaId::new(item.origin.clone(), site.languages[0].clone());
                item.components.iter().map(move |c| {
                    (
                        ComponentKey::new(item.item_id.clone(), c.component_id.clone()),
                        at.clone(),
                    )
                })
            })
            .collect();
        for (key, at) in keys {
            for task in self.write(&key, &at)? {
                self.ack(task.task_id)?;
            }
        }
        self.metrics.acks = 0;
        Ok(())
    }

    fn schedule(&mut self, tasks: Vec<PropagationTask>, tick: u64, rng: &mut SimRng) {
        self.metrics.tasks_emitted += tasks.len() as u64;
        if !self.propagate {
            return;
        }
        for task in tasks {
            let delay = self.faults.delay(task.level).draw(rng);
            self.queue.push(Delivery {
                due: tick.saturating_add(delay),
                task_id: task.task_id,
            });
        }
    }

    fn deliver(&mut self, tick: u64, rng: &mut SimRng) -> Result<(), SimError> {
        self.queue.sort();
        let split = self.queue.partition_point(|d| d.due <= tick);
        let due: Vec<Delivery> = self.queue.drain(..split).collect();
        for d in due {
            if !self.state.is_pending(d.task_id) {
                continue;
            }
            if rng.chance(self.faults.drop_probability) {
                self.metrics.drops += 1;
                if self.faults.retry {
                    self.queue.push(Delivery {
                        due: tick + self.faults.retry_interval,
                        task_id: d.task_id,
                    });
                } else {
                    self.metrics.lost += 1;
                }
                continue;
            }
            self.ack(d.task_id)?;
        }
        Ok(())
    }

    fn measure(&mut self, last: bool) -> Result<(), SimError> {
        let report = audit(&self.state, self.net, self.catalog);
        let mut counts: BTreeMap<(Category, FindingKind), u64> = BTreeMap::new();
        let mut by_pattern: BTreeMap<SharingPattern, u64> = BTreeMap::new();
        for f in &report.findings {
            let item = self
                .catalog
                .get(&f.item_id)
                .expect("audited items are cataloged");
            let component = item
                .component(&f.component_id)
                .expect("audited components exist");
            *counts.entry((item.category, f.kind)).or_default() += 1;
            *by_pattern.entry(item.pattern_of(component)).or_default() += 1;
        }
        for cm in &mut self.metrics.categories {
            let mut open = 0;
            for kind in FindingKind::ALL {
                let n = counts.get(&(cm.category, kind)).copied().unwrap_or(0);
                let stats = cm.kind_mut(kind);
                stats.window += n;
                stats.peak = stats.peak.max(n);
                open += n;
            }
            cm.total_window += open;
            if last {
                cm.open_at_horizon = open;
                let pending = self.state.pending().any(|t| {
                    self.catalog
                        .get(&t.item_id)
                        .is_some_and(|i| i.category == cm.category)
                });
                cm.converged = open == 0 && !pending;
            }
        }
        for pm in &mut self.metrics.patterns {
            pm.window += by_pattern.get(&pm.pattern).copied().unwrap_or(0);
        }
        if last {
            self.metrics.converged = self.metrics.categories.iter().all(|c| c.converged);
        }
        Ok(())
    }
}

fn simulate(
    net: &SiteNetwork,
    catalog: &Catalog,
    workload: &Workload,
    faults: &FaultModel,
    propagate: bool,
) -> Result<SimulationOutput, SimError> {
    workload.validate()?;
    faults.validate()?;

    let mut components = Vec::new();
    for item in catalog.items() {
        for c in &item.components {
            let scope = scope_of_pattern(net, &item.origin, item.pattern_of(c))?;
            let replicas: Vec<ReplicaId> = scope.iter().cloned().collect();
            components.push((
                ComponentKey::new(item.item_id.clone(), c.component_id.clone()),
                item.category,
                replicas,
            ));
        }
    }

    let mut engine = Engine {
        net,
        catalog,
        faults,
        propagate,
        state: SyncState::new(SyncConfig::default()),
        log: Vec::new(),
        clock: 0,
        queue: Vec::new(),
        metrics: SimulationMetrics {
            seed: workload.seed,
            horizon: workload.horizon,
            propagation: propagate,
            updates: 0,
            tasks_emitted: 0,
            acks: 0,
            drops: 0,
            lost: 0,
            categories: Category::ALL
                .into_iter()
                .map(CategoryMetrics::new)
                .collect(),
            patterns: SharingPattern::ALL
                .into_iter()
                .map(|pattern| PatternMetrics { pattern, window: 0 })
                .collect(),
            converged: true,
        },
    };
    engine.publish_initial()?;

    let mut workload_rng = SimRng::new(workload.seed, WORKLOAD_STREAM);
    let mut fault_rng = SimRng::new(workload.seed, FAULT_STREAM);

    for tick in 1..=workload.horizon {
        let mut writes: Vec<(ComponentKey, ReplicaId)> = workload
            .scripted
            .iter()
            .filter(|s| s.tick == tick)
            .map(|s| {
                (
                    ComponentKey::new(s.item_id.clone(), s.component_id.clone()),
                    s.at.clone(),
                )
            })
            .collect();
        for (key, category, replicas) in &components {
            if workload_rng.chance(workload.rate(*category)) {
                let pick = workload_rng.below(replicas.len() as u64) as usize;
                writes.push((key.clone(), replicas[pick].clone()));
            }
        }
        for (key, at) in writes {
            let tasks = engine.write(&key, &at)?;
            engine.metrics.updates += 1;
            engine.schedule(tasks, tick, &mut fault_rng);
        }
        engine.deliver(tick, &mut fault_rng)?;
        engine.measure(tick == workload.horizon)?;
    }

    Ok(SimulationOutput {
        metrics: engine.metrics,
        state: engine.state,
        log: engine.log,
    })
}

/// Runs the workload with propagation under `faults`.
pub fn run(
    net: &SiteNetwork,
    catalog: &Catalog,
    workload: &Workload,
    faults: &FaultModel,
) -> Result<SimulationOutput, SimError> {
    simulate(net, catalog, workload, faults, true)
}

/// Runs the same workload with every propagation task left undelivered.
pub fn baseline_no_policy(
    net: &SiteNetwork,
    catalog: &Catalog,
    workload: &Workload,
) -> Result<SimulationMetrics, SimError> {
    Ok(run_baseline(net, catalog, workload)?.metrics)
}

/// [`baseline_no_policy`] with the final state and log.
pub fn run_baseline(
    net: &SiteNetwork,
    catalog: &Catalog,
    workload: &Workload,
) -> Result<SimulationOutput, SimError> {
    simulate(net, catalog, workload, &FaultModel::default(), false)
}

/// Scenario file contents. Paths are relative to the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub network: PathBuf,
    pub catalog: PathBuf,
    pub workload: Workload,
    #[serde(default)]
    pub faults: FaultModel,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub net: SiteNetwork,
    pub catalog: Catalog,
    pub workload: Workload,
    pub faults: FaultModel,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: ScenarioFile =
            serde_json::from_str(&text).map_err(|e| SimError::Scenario(e.to_string()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let net = SiteNetwork::load(base.join(&file.network))?;
        let catalog = Catalog::load(base.join(&file.catalog), &net)?;
        file.workload.validate()?;
        file.faults.validate()?;
        Ok(Self {
            net,
            catalog,
            workload: file.workload,
            faults: file.faults,
        })
    }

    pub fn run(&self) -> Result<SimulationOutput, SimError> {
        run(&self.net, &self.catalog, &self.workload, &self.faults)
    }

    pub fn run_baseline(&self) -> Result<SimulationOutput, SimError> {
        run_baseline(&self.net, &self.catalog, &self.workload)
    }
}
